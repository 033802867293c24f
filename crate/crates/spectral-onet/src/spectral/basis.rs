//! Periodized tensor-product Legendre basis of zero-mean periodic
//! polynomials.
//!
//! The 1-d members are `phi_0 = L_0`, `phi_{2i-1} = L_{2i}`,
//! `phi_{2i} = L_{2i+1} - L_1`; every member matches its endpoint values, and
//! all members except the constant have zero mean. Tensor products over
//! multi-indices in `{0, ..., p-1}^d`, with the all-zero index (the constant)
//! excluded, span the `p^d - 1`-dimensional space of zero-mean periodic
//! polynomials of coordinate degree at most `p`.

use super::legendre::{shifted_legendre, shifted_legendre_row};
use super::SpectralError;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBasis {
    pub d: usize,
    pub p: usize,
}

impl PeriodicBasis {
    pub fn new(d: usize, p: usize) -> Result<Self, SpectralError> {
        if p < 2 {
            return Err(SpectralError::BasisOrder { p });
        }
        if d == 0 || d > 3 {
            return Err(SpectralError::Dimension { d });
        }
        Ok(PeriodicBasis { d, p })
    }

    /// Dimension of the zero-mean space: `p^d - 1`.
    pub fn n_b(&self) -> usize {
        self.p.pow(self.d as u32) - 1
    }

    /// Dimension of the extended space with the constant appended: `p^d`.
    pub fn n_b_extended(&self) -> usize {
        self.p.pow(self.d as u32)
    }

    /// Decode flat index `i in 1..=n_b` into digits `(i_1, ..., i_d)` with
    /// `i = i_1 + p i_2 + ... + p^{d-1} i_d`.
    pub fn multi_index(&self, i: usize) -> Result<Vec<usize>, SpectralError> {
        if i < 1 || i > self.n_b() {
            return Err(SpectralError::IndexRange { i, n_b: self.n_b() });
        }
        let mut rest = i;
        let mut digits = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            digits.push(rest % self.p);
            rest /= self.p;
        }
        Ok(digits)
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .rev()
            .fold(0usize, |acc, &digit| acc * self.p + digit)
    }

    /// Value and gradient of basis member `i` (1-based flat index) at `x`.
    pub fn eval(&self, i: usize, x: &[f64]) -> Result<(f64, Vec<f64>), SpectralError> {
        let digits = self.multi_index(i)?;
        let mut vals = Vec::with_capacity(self.d);
        let mut ders = Vec::with_capacity(self.d);
        for (j, &digit) in digits.iter().enumerate() {
            let (v, dv) = phi_1d(digit, x[j]);
            vals.push(v);
            ders.push(dv);
        }
        let value: f64 = vals.iter().product();
        let mut grad = vec![0.0; self.d];
        for j in 0..self.d {
            let mut g = ders[j];
            for (k, v) in vals.iter().enumerate() {
                if k != j {
                    g *= v;
                }
            }
            grad[j] = g;
        }
        Ok((value, grad))
    }

    /// As `eval`, over the extended index set `1..=p^d` where the last index
    /// is the constant function.
    pub fn eval_extended(&self, i: usize, x: &[f64]) -> Result<(f64, Vec<f64>), SpectralError> {
        if i == self.n_b_extended() {
            return Ok((1.0, vec![0.0; self.d]));
        }
        self.eval(i, x)
    }

    /// Values and gradients of all members (`1..=n_b`, or the extended set)
    /// at one point, sharing the 1-d recurrence work.
    pub fn eval_all(&self, x: &[f64], extended: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
        // 1-d tables per axis: phi_1d value/derivative for digits 0..p-1
        let mut tab_v = Vec::with_capacity(self.d);
        let mut tab_d = Vec::with_capacity(self.d);
        for j in 0..self.d {
            let (vs, ds) = phi_1d_row(self.p, x[j]);
            tab_v.push(vs);
            tab_d.push(ds);
        }
        let count = if extended {
            self.n_b_extended()
        } else {
            self.n_b()
        };
        let mut values = Vec::with_capacity(count);
        let mut grads = Vec::with_capacity(count);
        for i in 1..=count {
            if extended && i == self.n_b_extended() {
                values.push(1.0);
                grads.push(vec![0.0; self.d]);
                continue;
            }
            let mut rest = i;
            let mut value = 1.0;
            let mut grad = vec![1.0; self.d];
            for j in 0..self.d {
                let digit = rest % self.p;
                rest /= self.p;
                value *= tab_v[j][digit];
                for (k, g) in grad.iter_mut().enumerate() {
                    *g *= if k == j {
                        tab_d[j][digit]
                    } else {
                        tab_v[j][digit]
                    };
                }
            }
            values.push(value);
            grads.push(grad);
        }
        (values, grads)
    }
}

/// 1-d periodized member: value and derivative of `phi^{1d}_j` at `x`.
pub fn phi_1d(j: usize, x: f64) -> (f64, f64) {
    if j == 0 {
        return (1.0, 0.0);
    }
    let (v, dv) = shifted_legendre(j + 1, x);
    if j % 2 == 1 {
        (v, dv)
    } else {
        // L_{j+1} - L_1 with L_1 = 2x - 1
        (v - (2.0 * x - 1.0), dv - 2.0)
    }
}

/// All 1-d members `phi^{1d}_0 .. phi^{1d}_{p-1}` at `x`.
fn phi_1d_row(p: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    // values of L_0..L_p and derivatives via one joint recurrence
    let t = 2.0 * x - 1.0;
    let lv = shifted_legendre_row(p, x);
    let mut ld = Vec::with_capacity(p + 1);
    ld.push(0.0);
    if p >= 1 {
        ld.push(2.0);
        for k in 1..p {
            let a = (2 * k + 1) as f64;
            let b = k as f64;
            let c = (k + 1) as f64;
            ld.push((a * (2.0 * lv[k] + t * ld[k]) - b * ld[k - 1]) / c);
        }
    }
    let mut vs = Vec::with_capacity(p);
    let mut ds = Vec::with_capacity(p);
    for j in 0..p {
        if j == 0 {
            vs.push(1.0);
            ds.push(0.0);
        } else if j % 2 == 1 {
            vs.push(lv[j + 1]);
            ds.push(ld[j + 1]);
        } else {
            vs.push(lv[j + 1] - t);
            ds.push(ld[j + 1] - 2.0);
        }
    }
    (vs, ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::quadrature::gauss_lobatto;

    #[test]
    fn periodic_trace_match() {
        // phi_1 = L_2 has phi_1(0) = phi_1(1) = 1
        let basis = PeriodicBasis::new(1, 3).unwrap();
        let (v0, _) = basis.eval(1, &[0.0]).unwrap();
        let (v1, _) = basis.eval(1, &[1.0]).unwrap();
        assert!((v0 - 1.0).abs() < 1e-14);
        assert!((v1 - 1.0).abs() < 1e-14);
        for j in 0..8 {
            let (a, _) = phi_1d(j, 0.0);
            let (b, _) = phi_1d(j, 1.0);
            assert!((a - b).abs() < 1e-12, "phi_1d {j} not periodic");
        }
    }

    #[test]
    fn zero_mean_by_quadrature() {
        let basis = PeriodicBasis::new(1, 3).unwrap();
        let rule = gauss_lobatto(5, 1).unwrap();
        let integral: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * basis.eval(2, x).unwrap().0)
            .sum();
        assert!(integral.abs() <= 1e-14);
    }

    #[test]
    fn tensor_values_are_products() {
        let basis = PeriodicBasis::new(2, 2).unwrap();
        assert_eq!(basis.n_b(), 3);
        let x = [0.25, 0.75];
        for i in 1..=3 {
            let digits = basis.multi_index(i).unwrap();
            let (v, _) = basis.eval(i, &x).unwrap();
            let want = phi_1d(digits[0], x[0]).0 * phi_1d(digits[1], x[1]).0;
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_and_multi_index_are_inverse() {
        let basis = PeriodicBasis::new(3, 4).unwrap();
        for i in 1..=basis.n_b() {
            let digits = basis.multi_index(i).unwrap();
            assert_eq!(basis.flat_index(&digits), i);
        }
        assert!(basis.multi_index(0).is_err());
        assert!(basis.multi_index(64).is_err());
    }

    #[test]
    fn eval_all_matches_eval() {
        let basis = PeriodicBasis::new(2, 3).unwrap();
        let x = [0.3, 0.62];
        let (values, grads) = basis.eval_all(&x, false);
        for i in 1..=basis.n_b() {
            let (v, g) = basis.eval(i, &x).unwrap();
            assert!((values[i - 1] - v).abs() < 1e-14);
            for j in 0..2 {
                assert!((grads[i - 1][j] - g[j]).abs() < 1e-12);
            }
        }
        let (values, grads) = basis.eval_all(&x, true);
        assert_eq!(values.len(), basis.n_b_extended());
        assert_eq!(*values.last().unwrap(), 1.0);
        assert_eq!(grads.last().unwrap(), &vec![0.0, 0.0]);
    }

    #[test]
    fn norm_identity_via_quadrature() {
        // ||L_i||^2 = 1/(2i+1), quadrature exact for q >= i + 2
        for i in 0..=10usize {
            let rule = gauss_lobatto(i + 2, 1).unwrap();
            let norm2: f64 = rule
                .nodes_1d
                .iter()
                .zip(&rule.weights_1d)
                .map(|(x, w)| {
                    let (v, _) = shifted_legendre(i, *x);
                    w * v * v
                })
                .sum();
            assert!(
                (norm2 - 1.0 / (2.0 * i as f64 + 1.0)).abs() < 1e-13,
                "i={i}"
            );
        }
    }
}
