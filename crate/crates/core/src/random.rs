//! Seeded random geometries and gauge transformations for tests and the CLI.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jet::{Jet, MatrixJet, MultiIndex, Truncation};
use crate::laplacian::BoundaryGeometry;

fn all_indices(dim: usize, trunc: Truncation) -> Vec<MultiIndex> {
    (0..=trunc.max_total_degree() as u32)
        .flat_map(|d| MultiIndex::all_of_degree(dim, d))
        .filter(|m| trunc.admits(m))
        .collect()
}

/// `g = δ + P`, `ω` skew-Hermitian coefficientwise; every coefficient of
/// `P` and `ω` is drawn uniformly from `[−amplitude, amplitude]`.
///
/// Positive definiteness of the constant term needs `amplitude · (n − 1) < 1`.
pub fn random_geometry(n: usize, r: usize, trunc: Truncation, amplitude: f64, seed: u64) -> BoundaryGeometry<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n - 1;
    let idx = all_indices(n, trunc);
    let draw = |rng: &mut ChaCha8Rng| rng.random_range(-amplitude..=amplitude);
    let mut metric = vec![Jet::zero(n, trunc); m * m];
    for k in 0..m {
        for l in k..m {
            let mut j = if k == l { Jet::one(n, trunc) } else { Jet::zero(n, trunc) };
            for mi in &idx {
                let v = j.coeff(mi) + Complex::new(draw(&mut rng), 0.0);
                j.set(*mi, v);
            }
            metric[k * m + l] = j.clone();
            metric[l * m + k] = j;
        }
    }
    let connection = (0..m)
        .map(|_| {
            let mut w = MatrixJet::zero(r, n, trunc);
            for i in 0..r {
                for jj in i..r {
                    let mut a = Jet::zero(n, trunc);
                    let mut b = Jet::zero(n, trunc);
                    for mi in &idx {
                        if i == jj {
                            a.set(*mi, Complex::new(0.0, draw(&mut rng)));
                        } else {
                            let z = Complex::new(draw(&mut rng), draw(&mut rng));
                            a.set(*mi, z);
                            b.set(*mi, -z.conj());
                        }
                    }
                    if i == jj {
                        w.set(i, i, a);
                    } else {
                        w.set(i, jj, a);
                        w.set(jj, i, b);
                    }
                }
            }
            w
        })
        .collect();
    BoundaryGeometry::new(n, r, metric, connection, true).expect("random geometry is valid for small amplitudes")
}

/// Jet of `exp(i c x¹) · Id` in the tangential variable `x¹`.
pub fn phase_gauge(n: usize, r: usize, trunc: Truncation, c: f64) -> MatrixJet<f64> {
    let mut j = Jet::zero(n, trunc.boundary());
    let mut fact = 1.0;
    for k in 0..=trunc.tangential_order().unwrap_or(0) as u32 {
        if k > 0 {
            fact *= f64::from(k);
        }
        let mut e = vec![0u32; n];
        e[0] = k;
        j.set(MultiIndex::new(&e), Complex::new(0.0, c).powu(k) / fact);
    }
    MatrixJet::scalar(r, &j)
}
