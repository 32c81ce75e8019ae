fn main() {
    std::process::exit(dtn_cli::run(std::env::args_os()));
}
