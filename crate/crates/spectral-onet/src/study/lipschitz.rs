//! Lipschitz continuity of the data-to-solution map, probed with scaled
//! coefficient perturbations.

use super::{Fit, StudyError, StudyReport};
use crate::expr::Expr;
use crate::spectral::{error_norms, galerkin_solve, CoefficientField, ScalarEval};

/// For perturbation scales `t`, solve with coefficients `a + t eta` and
/// record `||u_{a + t eta} - u_a||_{H1} / (t ||eta||_inf)`. The fitted
/// quantity is the spread `max ratio / min ratio` across scales; a bounded
/// spread is the computable signature of Lipschitz dependence.
pub fn lipschitz_study(
    base: &Expr,
    eta: &Expr,
    bounds: (f64, f64),
    f: &ScalarEval,
    d: usize,
    p: usize,
    scales: &[f64],
    seed: u64,
) -> Result<StudyReport, StudyError> {
    let mut report = StudyReport::new("lipschitz", seed, &["t", "h1_difference", "ratio"]);
    let q = p + 1;
    // sup norm of the perturbation on a fine grid
    let mut eta_sup: f64 = 0.0;
    let steps = 512usize;
    for flat in 0..steps.pow(d.min(2) as u32) {
        let mut rest = flat;
        let mut x = vec![0.5; d];
        for xi in x.iter_mut().take(d.min(2)) {
            *xi = (rest % steps) as f64 / (steps - 1) as f64;
            rest /= steps;
        }
        eta_sup = eta_sup.max(eta.eval(&x).abs());
    }
    if eta_sup == 0.0 {
        return Err(StudyError::StudyFailed("perturbation vanishes".into()));
    }

    let coef = CoefficientField::scalar(d, base.clone(), bounds.0, bounds.1);
    let u_base = galerkin_solve(&coef, f, p, q)?;
    for &t in scales {
        // widen declared bounds by the perturbation reach
        let reach = t * eta_sup;
        let perturbed = Expr::add(vec![
            base.clone(),
            Expr::mul(vec![Expr::constant(t), eta.clone()]),
        ]);
        let coef_t =
            CoefficientField::scalar(d, perturbed, bounds.0 - reach, bounds.1 + reach);
        let u_t = galerkin_solve(&coef_t, f, p, q)?;
        let (_, h1) = error_norms(&u_base, &u_t, d, 2 * p + 8)?;
        report.rows.push(vec![t, h1, h1 / (t * eta_sup)]);
    }
    let ratios = report.column("ratio").unwrap();
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        report
            .failures
            .push("a perturbation produced no solution change".into());
    }
    report.fits.push(Fit {
        name: "ratio_spread".into(),
        value: max / min.max(1e-300),
    });
    report.fits.push(Fit {
        name: "max_ratio".into(),
        value: max,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_problem_ratio_spread_is_bounded() {
        let base = Expr::add(vec![Expr::constant(1.0), Expr::sin_mode(&[1], 0.5)]);
        let eta = Expr::cos_mode(&[1], 1.0);
        let u = Expr::sin_mode(&[1], 1.0);
        let coef = CoefficientField::scalar(1, base.clone(), 0.5, 1.5);
        let f = crate::spectral::manufactured_problem(&u, &coef).unwrap();
        let report = lipschitz_study(
            &base,
            &eta,
            (0.5, 1.5),
            &ScalarEval::Expr(f),
            1,
            8,
            &[1e-1, 1e-2, 1e-3, 1e-4],
            0,
        )
        .unwrap();
        let spread = report.fit("ratio_spread").unwrap();
        assert!(spread <= 2.0, "spread {spread}");
    }
}
