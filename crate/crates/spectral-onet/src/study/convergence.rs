//! Convergence studies and the calibration of the exponential-rate
//! constants used by target-accuracy builds.

use rand::Rng;

use super::{linear_fit, Fit, StudyError, StudyReport};
use crate::onet::Calibration;
use crate::problem::OnetProblem;
use crate::spectral::{
    assemble, error_norms, galerkin_solve, gauss_lobatto, spectrum_bounds, CoefficientField,
    ExprField, Field, PeriodicBasis, ScalarEval,
};

/// What the discrete solutions are compared against.
pub enum ErrorReference {
    /// A manufactured exact solution.
    Exact(ExprField),
    /// A much finer Galerkin solve (order `max(p) + 6`).
    SelfReference,
}

/// Rows `(p, q, n_b, n_q, l2_error, h1_error, lambda_min, lambda_max)` over
/// the order range with `q = p + 1`, plus the fitted rate
/// `log error = log C_g - b_g p`. A non-decreasing error sequence is
/// recorded as a failure in the report, not an error.
pub fn convergence_study(
    coef: &CoefficientField,
    f: &ScalarEval,
    reference: &ErrorReference,
    p_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<StudyReport, StudyError> {
    let d = coef.d;
    let mut report = StudyReport::new(
        "convergence",
        seed,
        &[
            "p",
            "q",
            "n_b",
            "n_q",
            "l2_error",
            "h1_error",
            "lambda_min",
            "lambda_max",
        ],
    );
    let p_max = *p_range.end();
    let reference_solution = match reference {
        ErrorReference::SelfReference => Some(galerkin_solve(coef, f, p_max + 6, p_max + 7)?),
        ErrorReference::Exact(_) => None,
    };
    let q_err = (2 * p_max + 8).min(64).max(24);

    for p in p_range.clone() {
        let q = p + 1;
        let basis = PeriodicBasis::new(d, p)?;
        let quad = gauss_lobatto(q, d)?;
        let sys = assemble(coef, &basis, &quad, f)?;
        let (lmin, lmax) = spectrum_bounds(&sys)?;
        let u = galerkin_solve(coef, f, p, q)?;
        let (l2, h1) = match reference {
            ErrorReference::Exact(exact) => error_norms(exact, &u, d, q_err)?,
            ErrorReference::SelfReference => {
                let r: &dyn Field = reference_solution.as_ref().unwrap();
                error_norms(r, &u, d, q_err)?
            }
        };
        report.rows.push(vec![
            p as f64,
            q as f64,
            basis.n_b() as f64,
            quad.n_q() as f64,
            l2,
            h1,
            lmin,
            lmax,
        ]);
    }

    let ps: Vec<f64> = report.column("p").unwrap();
    let h1s: Vec<f64> = report.column("h1_error").unwrap();
    if h1s.windows(2).any(|w| w[1] >= w[0]) {
        report
            .failures
            .push("h1 error is not strictly decreasing over the order range".to_string());
    }
    let logs: Vec<f64> = h1s.iter().map(|e| e.max(1e-300).ln()).collect();
    let fit = linear_fit(&ps, &logs)?;
    report.fits.push(Fit {
        name: "slope".into(),
        value: fit.slope,
    });
    report.fits.push(Fit {
        name: "intercept".into(),
        value: fit.intercept,
    });
    report.fits.push(Fit {
        name: "max_residual".into(),
        value: fit.max_residual,
    });
    report.fits.push(Fit {
        name: "range".into(),
        value: fit.range,
    });
    if fit.slope >= 0.0 {
        report
            .failures
            .push("fitted rate is not negative".to_string());
    }
    Ok(report)
}

/// Extract `(C_g, b_g)` from a successful convergence study.
pub fn calibrate(report: &StudyReport) -> Result<Calibration, StudyError> {
    if !report.failures.is_empty() {
        return Err(StudyError::StudyFailed(report.failures.join("; ")));
    }
    let slope = report
        .fit("slope")
        .ok_or_else(|| StudyError::StudyFailed("missing rate fit".into()))?;
    let intercept = report
        .fit("intercept")
        .ok_or_else(|| StudyError::StudyFailed("missing intercept".into()))?;
    if slope >= 0.0 {
        return Err(StudyError::StudyFailed(
            "fitted rate is not negative".into(),
        ));
    }
    Ok(Calibration {
        c_g: intercept.exp(),
        b_g: -slope,
    })
}

/// Pilot calibration against the worst member of a sampled coefficient
/// family, with errors measured against fine reference solves.
pub fn calibrate_family(
    problem: &OnetProblem,
    p_range: std::ops::RangeInclusive<usize>,
    samples: usize,
    rng: &mut impl Rng,
    seed: u64,
) -> Result<(Calibration, StudyReport), StudyError> {
    let d = problem.d;
    let f = problem.source_eval();
    let coefs = problem.family.sample_many(rng, samples);
    let p_max = *p_range.end();
    let references: Vec<_> = coefs
        .iter()
        .map(|c| galerkin_solve(c, &f, p_max + 6, p_max + 7))
        .collect::<Result<_, _>>()?;
    let q_err = (2 * p_max + 8).min(64).max(24);

    let mut report = StudyReport::new("convergence", seed, &["p", "q", "n_b", "n_q", "h1_error"]);
    for p in p_range {
        let q = p + 1;
        let mut worst: f64 = 0.0;
        for (coef, reference) in coefs.iter().zip(&references) {
            let u = galerkin_solve(coef, &f, p, q)?;
            let (_, h1) = error_norms(reference, &u, d, q_err)?;
            worst = worst.max(h1);
        }
        report.rows.push(vec![
            p as f64,
            q as f64,
            (p.pow(d as u32) - 1) as f64,
            (q.pow(d as u32)) as f64,
            worst,
        ]);
    }
    let ps = report.column("p").unwrap();
    let logs: Vec<f64> = report
        .column("h1_error")
        .unwrap()
        .iter()
        .map(|e| e.max(1e-300).ln())
        .collect();
    let fit = linear_fit(&ps, &logs)?;
    report.fits.push(Fit {
        name: "slope".into(),
        value: fit.slope,
    });
    report.fits.push(Fit {
        name: "intercept".into(),
        value: fit.intercept,
    });
    if fit.slope >= 0.0 {
        return Err(StudyError::StudyFailed(
            "family pilot: fitted rate is not negative".into(),
        ));
    }
    let calibration = Calibration {
        c_g: fit.intercept.exp(),
        b_g: -fit.slope,
    };
    Ok((calibration, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::spectral::manufactured_problem;

    #[test]
    fn model_problem_converges_exponentially() {
        let a = Expr::add(vec![Expr::constant(1.0), Expr::sin_mode(&[1], 0.5)]);
        let coef = CoefficientField::scalar(1, a, 0.5, 1.5);
        let u = Expr::sin_mode(&[1], 1.0);
        let f = manufactured_problem(&u, &coef).unwrap();
        let report = convergence_study(
            &coef,
            &ScalarEval::Expr(f),
            &ErrorReference::Exact(ExprField::new(u, 1)),
            4..=12,
            0,
        )
        .unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        let cal = calibrate(&report).unwrap();
        assert!(cal.b_g > 0.5, "rate {}", cal.b_g);
        // the fitted order for a modest target stays within desk scale
        assert!(cal.order_for(0.1) <= 12);
        assert!(cal.order_for(0.05) >= cal.order_for(0.1));
    }

    #[test]
    fn single_point_range_is_rejected() {
        let coef = CoefficientField::scalar(1, Expr::constant(1.0), 1.0, 1.0);
        let u = Expr::sin_mode(&[1], 1.0);
        let f = manufactured_problem(&u, &coef).unwrap();
        let err = convergence_study(
            &coef,
            &ScalarEval::Expr(f),
            &ErrorReference::Exact(ExprField::new(u, 1)),
            5..=5,
            0,
        );
        assert!(matches!(err, Err(StudyError::UnderdeterminedFit { .. })));
    }

    #[test]
    fn calibration_scales_with_prefactor() {
        let cal = Calibration { c_g: 1.0, b_g: 1.0 };
        let doubled = Calibration { c_g: 2.0, b_g: 1.0 };
        let p1 = cal.order_for(0.3);
        let p2 = doubled.order_for(0.3);
        assert!(p2 >= p1);
        assert!(p2 <= p1 + 2); // doubling C_g shifts the order by at most log 2 / b_g + 1
        // a unit target still yields a usable order
        assert!(cal.order_for(0.999) >= 2);
    }
}
