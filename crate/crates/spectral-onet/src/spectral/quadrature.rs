//! Tensorized Gauss-Lobatto quadrature on the unit cube.

use super::legendre::legendre_p_d2;
use super::SpectralError;

/// Gauss-Lobatto rule on `[0,1]^d`: `q^d` nodes with positive weights
/// summing to one; the 1-d rule is exact for polynomials of degree
/// `<= 2q - 3`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub d: usize,
    pub q: usize,
    /// 1-d nodes in ascending order, including both endpoints.
    pub nodes_1d: Vec<f64>,
    pub weights_1d: Vec<f64>,
    /// Tensor nodes, length `q^d`, lexicographic in the 1-d index digits
    /// (first axis fastest).
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn n_q(&self) -> usize {
        self.nodes.len()
    }
}

/// Build the tensorized Gauss-Lobatto rule of order `q >= 2` in dimension `d`.
///
/// Interior 1-d nodes are the roots of `P'_{q-1}` on (-1, 1), found by Newton
/// iteration from Chebyshev-Lobatto initial guesses, then mapped to [0, 1].
pub fn gauss_lobatto(q: usize, d: usize) -> Result<QuadratureRule, SpectralError> {
    if q < 2 {
        return Err(SpectralError::QuadratureOrder { q, min: 2 });
    }
    let n = q - 1; // interior nodes are roots of P'_n
    let mut xs = Vec::with_capacity(q);
    xs.push(-1.0);
    for k in (1..=q.saturating_sub(2)).rev() {
        // Chebyshev-Lobatto guess, ordered ascending after the reversal
        let mut x = (std::f64::consts::PI * k as f64 / n as f64).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (_, dp, ddp) = legendre_p_d2(n, x);
            let step = dp / ddp;
            x -= step;
            if step.abs() < 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SpectralError::NewtonDiverged { q });
        }
        xs.push(x);
    }
    xs.push(1.0);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // weights 2 / (q (q-1) P_{q-1}(x)^2) on (-1, 1); halved by the map to (0, 1)
    let scale = 2.0 / (q * (q - 1)) as f64;
    let mut nodes_1d = Vec::with_capacity(q);
    let mut weights_1d = Vec::with_capacity(q);
    for &x in &xs {
        let (p, _, _) = legendre_p_d2(n, x);
        nodes_1d.push(0.5 * (x + 1.0));
        weights_1d.push(0.5 * scale / (p * p));
    }

    // tensorize, first axis fastest
    let n_q = q.pow(d as u32);
    let mut nodes = Vec::with_capacity(n_q);
    let mut weights = Vec::with_capacity(n_q);
    for flat in 0..n_q {
        let mut rest = flat;
        let mut point = Vec::with_capacity(d);
        let mut w = 1.0;
        for _ in 0..d {
            let digit = rest % q;
            rest /= q;
            point.push(nodes_1d[digit]);
            w *= weights_1d[digit];
        }
        nodes.push(point);
        weights.push(w);
    }
    Ok(QuadratureRule {
        d,
        q,
        nodes_1d,
        weights_1d,
        nodes,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        // trapezoid: nodes {0,1}, weights {1/2,1/2}; exact for degree <= 1
        let rule = gauss_lobatto(2, 1).unwrap();
        assert_eq!(rule.nodes_1d, vec![0.0, 1.0]);
        assert!((rule.weights_1d[0] - 0.5).abs() < 1e-15);
        assert!((rule.weights_1d[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule_is_simpson() {
        let rule = gauss_lobatto(3, 1).unwrap();
        assert!((rule.nodes_1d[1] - 0.5).abs() < 1e-15);
        assert!((rule.weights_1d[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((rule.weights_1d[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((rule.weights_1d[2] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn monomial_exactness_to_degree_2q_minus_3() {
        // int_0^1 x^k = 1/(k+1); check the hardest exact degree k = 2q-3
        for q in 2..=12 {
            let rule = gauss_lobatto(q, 1).unwrap();
            let k = 2 * q - 3;
            let approx: f64 = rule
                .nodes_1d
                .iter()
                .zip(&rule.weights_1d)
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!(
                (approx - exact).abs() < 1e-13,
                "q={q}: {approx} vs {exact}"
            );
        }
    }

    #[test]
    fn weights_sum_to_measure() {
        for (q, d) in [(4, 1), (5, 2), (3, 3)] {
            let rule = gauss_lobatto(q, d).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-13);
            assert_eq!(rule.n_q(), q.pow(d as u32));
            assert!(rule.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn rejects_order_one() {
        assert!(gauss_lobatto(1, 1).is_err());
    }
}
