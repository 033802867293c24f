//! Inversion-network accuracy and size study over a `(N, eps)` grid.

use nalgebra::DMatrix;
use rand::Rng;

use super::{exponent_fits, Fit, StudyError, StudyReport};
use crate::calculus::{inversion_net, spectral_norm, ApproxSpec};

/// For every cell, draw random admissible symmetric matrices, measure the
/// worst spectral-norm error against a direct solve and the worst output
/// norm, and record sizes. Cell failures are recorded and skipped.
pub fn invnet_study(
    n_range: &[usize],
    eps_range: &[f64],
    delta: f64,
    samples: usize,
    rng: &mut impl Rng,
    seed: u64,
) -> Result<StudyReport, StudyError> {
    let mut report = StudyReport::new(
        "invnet",
        seed,
        &[
            "n", "eps", "delta", "terms", "stages", "size", "depth", "max_error", "max_norm",
            "norm_bound",
        ],
    );
    for &n in n_range {
        for &eps in eps_range {
            let spec = match ApproxSpec::new(eps, 1.0).and_then(|s| s.with_delta(delta)) {
                Ok(s) => s,
                Err(e) => {
                    report.failures.push(format!("cell N={n} eps={eps}: {e}"));
                    continue;
                }
            };
            let (net, cell) = match inversion_net(n, &spec) {
                Ok(v) => v,
                Err(e) => {
                    report.failures.push(format!("cell N={n} eps={eps}: {e}"));
                    continue;
                }
            };
            let mut max_error: f64 = 0.0;
            let mut max_norm: f64 = 0.0;
            for k in 0..samples {
                let a = random_admissible(n, delta, k, samples, rng);
                let exact = (DMatrix::identity(n, n) - &a)
                    .try_inverse()
                    .expect("Id - A is invertible for admissible A");
                let out = net
                    .realize(a.as_slice())
                    .expect("inversion net accepts vec(A)");
                let got = DMatrix::from_column_slice(n, n, &out);
                max_error = max_error.max(spectral_norm(&(exact - &got)));
                max_norm = max_norm.max(spectral_norm(&got));
            }
            report.rows.push(vec![
                n as f64,
                eps,
                delta,
                cell.terms as f64,
                cell.stages as f64,
                cell.size as f64,
                cell.depth as f64,
                max_error,
                max_norm,
                eps + 1.0 / delta,
            ]);
        }
    }

    // exponents of size growth: log size against log N and log |log eps|
    if report.rows.len() >= 4 {
        let (n_exp, eps_exp) = exponent_fits(&report.rows, 0, 1, 5)?;
        report.fits.push(Fit {
            name: "size_exponent_n".into(),
            value: n_exp,
        });
        report.fits.push(Fit {
            name: "size_exponent_logeps".into(),
            value: eps_exp,
        });
    }
    Ok(report)
}

/// Random symmetric matrix scaled into the admissible ball; a fixed share of
/// draws sits close to the boundary norm.
fn random_admissible(
    n: usize,
    delta: f64,
    k: usize,
    total: usize,
    rng: &mut impl Rng,
) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let sym = (&raw + raw.transpose()) * 0.5;
    let norm = spectral_norm(&sym).max(1e-12);
    let fraction = if k < total / 4 {
        0.999
    } else {
        rng.random_range(0.05..1.0)
    };
    sym * ((1.0 - delta) * fraction / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_grid_meets_error_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let report = invnet_study(&[1, 2], &[1e-1, 1e-2], 0.5, 10, &mut rng, 5).unwrap();
        assert!(report.failures.is_empty());
        for row in &report.rows {
            let eps = row[1];
            let max_error = row[7];
            let max_norm = row[8];
            let bound = row[9];
            assert!(max_error <= eps, "cell error {max_error} > {eps}");
            assert!(max_norm <= bound);
        }
    }
}
