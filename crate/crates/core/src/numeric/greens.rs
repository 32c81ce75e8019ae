use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::discrete::coefficients_at;
use super::dtn::edge_flux;
use super::solve::{GridFunction, StiffnessMatrix};
use super::strip::StripProblem;
use crate::error::{Error, Result};

/// `|⟨Δᴱu, v⟩ − ⟨∇u, ∇v⟩ − ∮⟨∇_ν u, v⟩|` with discrete quadrature.
///
/// `⟨Δᴱu, v⟩` sums the stiffness rows of the interior nodes (the trapezoid
/// rule without the boundary half-cells), `⟨∇u, ∇v⟩` is the full discrete
/// energy, and the boundary term uses one-sided normal derivatives on both
/// edges, with `ν` the outward normal. The identity holds in the continuum,
/// so the residual measures the first-order quadrature error.
pub fn greens_residual(problem: &StripProblem, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let expected = GridFunction::zeros(problem);
    if u.values.len() != expected.values.len() || v.values.len() != expected.values.len() {
        return Err(Error::Shape("grid functions do not match the problem".into()));
    }
    let (n, r, l, nt) = (problem.n(), problem.r(), problem.layer_size(), problem.normal_intervals());
    let k = StiffnessMatrix::assemble(problem)?;
    let ku = k.apply(&u.values);
    let lr = l * r;
    let pair = |range: std::ops::Range<usize>| -> Complex64 { range.map(|i| v.values[i].conj() * ku[i]).sum() };
    let laplacian = pair(lr..nt * lr);
    let energy = pair(0..(nt + 1) * lr);

    let cell = problem.tangential_spacing().powi(n as i32 - 1);
    let mut boundary = Complex64::new(0.0, 0.0);
    for (top, j, sign) in [(false, 0, 1.0), (true, nt, -1.0)] {
        let flux = edge_flux(problem, u, top)?;
        let t = if top { 1.0 } else { 0.0 };
        for a in 0..l {
            let c = coefficients_at(problem, &problem.node_position(a), t)?;
            let gnn = c.inverse_metric[n * n - 1];
            // √det g · g^{nj} D_j u = √det g · √g^{nn} · (unit-normal flux)
            let w = sign * cell * c.sqrt_det * gnn.sqrt();
            for p in 0..r {
                boundary += v.at(a, j)[p].conj() * flux[a * r + p] * w;
            }
        }
    }
    Ok((laplacian - energy - boundary).norm())
}

/// A smooth random field: a seeded sum of a few trigonometric modes in
/// `x′` times trigonometric profiles in `t`, with unit-size coefficients.
pub fn random_smooth_field(problem: &StripProblem, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, r) = (problem.n() - 1, problem.r());
    let modes: Vec<(Vec<f64>, f64, f64, Complex64, usize)> = (0..6)
        .map(|_| {
            let k = (0..m).map(|_| rng.random_range(-3i64..=3) as f64).collect();
            let freq = rng.random_range(0.5..3.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (k, freq, phase, amp, rng.random_range(0..r))
        })
        .collect();
    GridFunction::from_fn(problem, |x, t| {
        let mut out = vec![Complex64::new(0.0, 0.0); r];
        for (k, freq, phase, amp, c) in &modes {
            let kx: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
            out[*c] += amp * Complex64::from_polar(1.0, kx) * (freq * t + phase).cos();
        }
        out
    })
}
