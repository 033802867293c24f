//! Manufactured sources: given an analytic periodic solution and a
//! closed-form coefficient, derive the matching source term symbolically.

use super::quadrature::gauss_lobatto;
use super::{CoefficientField, CoefficientKind, SpectralError};
use crate::expr::Expr;

/// Source `f = -div(a grad u)` (plus `c u` for the matrix+reaction kind),
/// computed in closed form. The prescribed solution must be periodic
/// (endpoint value and derivative mismatch below 1e-12) and the coefficient
/// expression-backed.
pub fn manufactured_problem(
    u: &Expr,
    coef: &CoefficientField,
) -> Result<Expr, SpectralError> {
    let d = coef.d;
    check_periodic(u, d)?;

    let grad_u = u.gradient(d);
    let mut terms: Vec<Expr> = Vec::new();
    match &coef.kind {
        CoefficientKind::Scalar(a) => {
            let a = a.as_expr().ok_or(SpectralError::NotExpressionBacked)?;
            // f = -sum_m d_m (a d_m u)
            for m in 0..d {
                let flux = Expr::mul(vec![a.clone(), grad_u[m].clone()]);
                terms.push(Expr::mul(vec![Expr::constant(-1.0), flux.diff(m)]));
            }
        }
        CoefficientKind::MatrixReaction {
            matrix, reaction, ..
        } => {
            for m in 0..d {
                let mut flux_terms = Vec::with_capacity(d);
                for n in 0..d {
                    let entry = matrix[m * d + n]
                        .as_expr()
                        .ok_or(SpectralError::NotExpressionBacked)?;
                    flux_terms.push(Expr::mul(vec![entry.clone(), grad_u[n].clone()]));
                }
                let flux = Expr::add(flux_terms);
                terms.push(Expr::mul(vec![Expr::constant(-1.0), flux.diff(m)]));
            }
            let c = reaction
                .as_expr()
                .ok_or(SpectralError::NotExpressionBacked)?;
            terms.push(Expr::mul(vec![c.clone(), u.clone()]));
        }
    }
    let f = Expr::add(terms);

    // pure diffusion sources integrate to zero; verify numerically
    if coef.is_scalar() {
        let rule = gauss_lobatto(24, d)?;
        let mean: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * f.eval(x))
            .sum();
        if mean.abs() > 1e-12 {
            return Err(SpectralError::SourceNotZeroMean { integral: mean });
        }
    }
    Ok(f)
}

/// Endpoint value and derivative match along every axis, sampled on the
/// opposing faces.
fn check_periodic(u: &Expr, d: usize) -> Result<(), SpectralError> {
    let grad = u.gradient(d);
    let samples = [0.0, 0.21, 0.5, 0.77, 0.93];
    let mut worst: f64 = 0.0;
    for axis in 0..d {
        let mut x0 = vec![0.0; d];
        let mut x1 = vec![0.0; d];
        for combo in 0..samples.len().pow(d.saturating_sub(1) as u32) {
            let mut rest = combo;
            for j in 0..d {
                if j == axis {
                    continue;
                }
                x0[j] = samples[rest % samples.len()];
                x1[j] = x0[j];
                rest /= samples.len();
            }
            x0[axis] = 0.0;
            x1[axis] = 1.0;
            worst = worst.max((u.eval(&x0) - u.eval(&x1)).abs());
            for g in &grad {
                worst = worst.max((g.eval(&x0) - g.eval(&x1)).abs());
            }
        }
    }
    if worst > 1e-12 {
        return Err(SpectralError::NonPeriodic { mismatch: worst });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_of_sine() {
        // a == 1, u = sin(2 pi x) -> f = 4 pi^2 sin(2 pi x)
        let coef = CoefficientField::scalar(1, Expr::constant(1.0), 1.0, 1.0);
        let u = Expr::sin_mode(&[1], 1.0);
        let f = manufactured_problem(&u, &coef).unwrap();
        for &x in &[0.1, 0.33, 0.8] {
            let want = 4.0 * PI * PI * (2.0 * PI * x).sin();
            assert!((f.eval(&[x]) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn variable_coefficient_weak_residual() {
        // a = 1 + 0.5 sin(2 pi x), u = sin(2 pi x): f = -(a u')'
        let a = Expr::add(vec![Expr::constant(1.0), Expr::sin_mode(&[1], 0.5)]);
        let coef = CoefficientField::scalar(1, a.clone(), 0.5, 1.5);
        let u = Expr::sin_mode(&[1], 1.0);
        let f = manufactured_problem(&u, &coef).unwrap();
        // check f = -a' u' - a u'' pointwise
        for &x in &[0.12, 0.48, 0.9] {
            let s = (2.0 * PI * x).sin();
            let c = (2.0 * PI * x).cos();
            let a_v = 1.0 + 0.5 * s;
            let a_p = PI * c;
            let u_p = 2.0 * PI * c;
            let u_pp = -4.0 * PI * PI * s;
            let want = -(a_p * u_p + a_v * u_pp);
            assert!((f.eval(&[x]) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn tensor_laplacian() {
        // d=2, u = sin(2 pi x1) sin(2 pi x2), a == 1 -> f = 8 pi^2 u
        let coef = CoefficientField::scalar(2, Expr::constant(1.0), 1.0, 1.0);
        let u = Expr::mul(vec![
            Expr::sin_mode(&[1, 0], 1.0),
            Expr::sin_mode(&[0, 1], 1.0),
        ]);
        let f = manufactured_problem(&u, &coef).unwrap();
        let x = [0.3, 0.7];
        let want = 8.0 * PI * PI * u.eval(&x);
        assert!((f.eval(&x) - want).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_periodic_solutions() {
        let coef = CoefficientField::scalar(1, Expr::constant(1.0), 1.0, 1.0);
        let u = Expr::coord(0); // x is not periodic
        assert!(matches!(
            manufactured_problem(&u, &coef),
            Err(SpectralError::NonPeriodic { .. })
        ));
    }

    #[test]
    fn reaction_term_added() {
        // A = Id, c = 1, u = sin(2 pi x): f = 4 pi^2 u + u
        let coef = CoefficientField::matrix_reaction(
            1,
            vec![super::super::ScalarEval::Expr(Expr::constant(1.0))],
            Expr::constant(1.0),
            1.0,
            1.0,
            1.0,
            1.0,
        );
        let u = Expr::sin_mode(&[1], 1.0);
        let f = manufactured_problem(&u, &coef).unwrap();
        let x = [0.4];
        let want = (4.0 * PI * PI + 1.0) * (2.0 * PI * 0.4).sin();
        assert!((f.eval(&x) - want).abs() < 1e-10);
    }
}
