//! A small closed-form expression grammar: sums and products of constants,
//! coordinates, sines and cosines. Expressions evaluate anywhere, know their
//! own partial derivatives, and have a JSON form used by problem files.

use serde::{Deserialize, Serialize};

/// Closed-form scalar expression on points of `R^d`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Const(f64),
    /// Coordinate `x_i` (zero-based).
    Coord(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(i) => x[*i],
            Expr::Add(terms) => terms.iter().map(|t| t.eval(x)).sum(),
            Expr::Mul(factors) => factors.iter().map(|f| f.eval(x)).product(),
            Expr::Sin(e) => e.eval(x).sin(),
            Expr::Cos(e) => e.eval(x).cos(),
        }
    }

    /// Partial derivative with respect to `x_i`, as an expression.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Coord(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
            Expr::Add(terms) => Expr::Add(terms.iter().map(|t| t.diff(i)).collect()),
            Expr::Mul(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (k, fk) in factors.iter().enumerate() {
                    let mut prod = vec![fk.diff(i)];
                    for (j, fj) in factors.iter().enumerate() {
                        if j != k {
                            prod.push(fj.clone());
                        }
                    }
                    terms.push(Expr::Mul(prod));
                }
                Expr::Add(terms)
            }
            Expr::Sin(e) => Expr::Mul(vec![Expr::Cos(e.clone()), e.diff(i)]),
            Expr::Cos(e) => Expr::Mul(vec![
                Expr::Const(-1.0),
                Expr::Sin(e.clone()),
                e.diff(i),
            ]),
        }
    }

    pub fn gradient(&self, d: usize) -> Vec<Expr> {
        (0..d).map(|i| self.diff(i)).collect()
    }

    pub fn eval_gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.diff(i).eval(x)).collect()
    }

    // convenience constructors

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn coord(i: usize) -> Expr {
        Expr::Coord(i)
    }

    /// `amp * sin(2 pi k . x)` for an integer frequency vector `k`.
    pub fn sin_mode(k: &[i32], amp: f64) -> Expr {
        Expr::Mul(vec![Expr::Const(amp), Expr::Sin(Box::new(Self::phase(k)))])
    }

    /// `amp * cos(2 pi k . x)`.
    pub fn cos_mode(k: &[i32], amp: f64) -> Expr {
        Expr::Mul(vec![Expr::Const(amp), Expr::Cos(Box::new(Self::phase(k)))])
    }

    fn phase(k: &[i32]) -> Expr {
        let tau = 2.0 * std::f64::consts::PI;
        Expr::Add(
            k.iter()
                .enumerate()
                .filter(|(_, ki)| **ki != 0)
                .map(|(i, ki)| {
                    Expr::Mul(vec![Expr::Const(tau * *ki as f64), Expr::Coord(i)])
                })
                .collect(),
        )
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        Expr::Add(terms)
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        Expr::Mul(factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn evaluates_trig_sums() {
        // 1 + 0.5 sin(2 pi x)
        let a = Expr::add(vec![Expr::constant(1.0), Expr::sin_mode(&[1], 0.5)]);
        assert!((a.eval(&[0.25]) - 1.5).abs() < 1e-15);
        assert!((a.eval(&[0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn differentiates_products() {
        // d/dx [x * sin(2 pi x)] = sin(2 pi x) + 2 pi x cos(2 pi x)
        let e = Expr::mul(vec![Expr::coord(0), Expr::sin_mode(&[1], 1.0)]);
        let de = e.diff(0);
        for &x in &[0.1, 0.37, 0.9] {
            let want = (2.0 * PI * x).sin() + 2.0 * PI * x * (2.0 * PI * x).cos();
            assert!((de.eval(&[x]) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_tensor_mode() {
        let e = Expr::mul(vec![Expr::sin_mode(&[1, 0], 1.0), Expr::sin_mode(&[0, 1], 1.0)]);
        let g = e.eval_gradient(&[0.2, 0.7]);
        let want0 = 2.0 * PI * (2.0 * PI * 0.2).cos() * (2.0 * PI * 0.7).sin();
        let want1 = 2.0 * PI * (2.0 * PI * 0.2).sin() * (2.0 * PI * 0.7).cos();
        assert!((g[0] - want0).abs() < 1e-12);
        assert!((g[1] - want1).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let e = Expr::add(vec![Expr::constant(2.0), Expr::cos_mode(&[1], 1.0)]);
        let text = serde_json::to_string(&e).unwrap();
        let back: Expr = serde_json::from_str(&text).unwrap();
        assert_eq!(e, back);
    }
}
