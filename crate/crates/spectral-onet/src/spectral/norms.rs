//! L2 and H1 error norms by fine tensor quadrature.

use super::assemble::SolutionField;
use super::quadrature::gauss_lobatto;
use super::SpectralError;
use crate::expr::Expr;

/// Anything that can be evaluated together with its gradient.
pub trait Field {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl Field for SolutionField {
    fn value(&self, x: &[f64]) -> f64 {
        SolutionField::value(self, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        SolutionField::gradient(self, x)
    }
}

/// Closed-form field with symbolic gradient.
pub struct ExprField {
    value: Expr,
    gradient: Vec<Expr>,
}

impl ExprField {
    pub fn new(value: Expr, d: usize) -> Self {
        let gradient = value.gradient(d);
        ExprField { value, gradient }
    }
}

impl Field for ExprField {
    fn value(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient.iter().map(|g| g.eval(x)).collect()
    }
}

/// Field backed by plain closures.
pub struct FnField<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub value: V,
    pub gradient: G,
}

impl<V, G> Field for FnField<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// Quadrature approximations of `||u - v||_{L2}` and `||u - v||_{H1}` on the
/// unit cube, with `q_err` Gauss-Lobatto points per axis.
pub fn error_norms(
    u: &dyn Field,
    v: &dyn Field,
    d: usize,
    q_err: usize,
) -> Result<(f64, f64), SpectralError> {
    let rule = gauss_lobatto(q_err, d)?;
    let mut l2 = 0.0;
    let mut grad2 = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let dv = u.value(x) - v.value(x);
        l2 += w * dv * dv;
        let gu = u.gradient(x);
        let gv = v.gradient(x);
        for (a, b) in gu.iter().zip(&gv) {
            let dg = a - b;
            grad2 += w * dg * dg;
        }
    }
    Ok((l2.sqrt(), (l2 + grad2).sqrt()))
}

/// `||f||_{L2(Q)}` by fine quadrature.
pub fn l2_norm(f: &dyn Fn(&[f64]) -> f64, d: usize, q_err: usize) -> Result<f64, SpectralError> {
    let rule = gauss_lobatto(q_err, d)?;
    let mut total = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(x);
        total += w * v * v;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    struct Zero(usize);
    impl Field for Zero {
        fn value(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn gradient(&self, _: &[f64]) -> Vec<f64> {
            vec![0.0; self.0]
        }
    }

    #[test]
    fn self_comparison_vanishes() {
        let u = ExprField::new(Expr::sin_mode(&[1], 1.0), 1);
        let v = ExprField::new(Expr::sin_mode(&[1], 1.0), 1);
        let (l2, h1) = error_norms(&u, &v, 1, 32).unwrap();
        assert!(l2 <= 1e-13 && h1 <= 1e-13);
    }

    #[test]
    fn sine_against_zero_matches_closed_form() {
        // ||sin(2 pi x)||_{L2} = sqrt(1/2); H1 norm = sqrt(1/2 + 2 pi^2)
        let u = ExprField::new(Expr::sin_mode(&[1], 1.0), 1);
        let (l2, h1) = error_norms(&u, &Zero(1), 1, 48).unwrap();
        assert!((l2 - (0.5f64).sqrt()).abs() < 1e-12);
        assert!((h1 - (0.5 + 2.0 * PI * PI).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn norms_stable_under_refinement() {
        let u = ExprField::new(
            Expr::mul(vec![Expr::sin_mode(&[1], 1.0), Expr::cos_mode(&[2], 1.0)]),
            1,
        );
        let (l2_a, h1_a) = error_norms(&u, &Zero(1), 1, 48).unwrap();
        let (l2_b, h1_b) = error_norms(&u, &Zero(1), 1, 64).unwrap();
        assert!((l2_a - l2_b).abs() / l2_b < 1e-3);
        assert!((h1_a - h1_b).abs() / h1_b < 1e-3);
    }
}
