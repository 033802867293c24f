//! Shifted Legendre polynomials on (0, 1), normalized with `L_i(1) = 1`.
//!
//! These are `L_i(x) = P_i(2x - 1)` for the classical Legendre polynomials
//! `P_i` on (-1, 1). They satisfy `int_0^1 L_i L_j = delta_ij / (2i + 1)`.

/// Value and first derivative of `L_i` at `x`, by the three-term recurrence
/// `(n+1) L_{n+1} = (2n+1)(2x-1) L_n - n L_{n-1}` and its differentiated form.
pub fn shifted_legendre(i: usize, x: f64) -> (f64, f64) {
    let t = 2.0 * x - 1.0;
    if i == 0 {
        return (1.0, 0.0);
    }
    let (mut v_prev, mut d_prev) = (1.0, 0.0);
    let (mut v, mut d) = (t, 2.0);
    for n in 1..i {
        let a = (2 * n + 1) as f64;
        let b = n as f64;
        let c = (n + 1) as f64;
        let v_next = (a * t * v - b * v_prev) / c;
        let d_next = (a * (2.0 * v + t * d) - b * d_prev) / c;
        v_prev = v;
        d_prev = d;
        v = v_next;
        d = d_next;
    }
    (v, d)
}

/// Values `L_0(x), ..., L_n(x)` in one sweep.
pub fn shifted_legendre_row(n: usize, x: f64) -> Vec<f64> {
    let t = 2.0 * x - 1.0;
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(t);
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * t * out[k] - k as f64 * out[k - 1]) / (k + 1) as f64;
        out.push(next);
    }
    out
}

/// Classical Legendre `P_n` on (-1, 1): value, first and second derivative.
/// The second derivative comes from the Legendre differential equation.
pub fn legendre_p_d2(n: usize, x: f64) -> (f64, f64, f64) {
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    let (mut v_prev, mut d_prev) = (1.0, 0.0);
    let (mut v, mut d) = (x, 1.0);
    for k in 1..n {
        let a = (2 * k + 1) as f64;
        let b = k as f64;
        let c = (k + 1) as f64;
        let v_next = (a * x * v - b * v_prev) / c;
        let d_next = (a * (v + x * d) - b * d_prev) / c;
        v_prev = v;
        d_prev = d;
        v = v_next;
        d = d_next;
    }
    let dd = if (1.0 - x * x).abs() > 1e-300 {
        (2.0 * x * d - (n * (n + 1)) as f64 * v) / (1.0 - x * x)
    } else {
        0.0
    };
    (v, d, dd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_closed_forms() {
        // L_0 = 1 everywhere
        for &x in &[0.0, 0.3, 1.0] {
            assert_eq!(shifted_legendre(0, x).0, 1.0);
        }
        // L_2 = 6x^2 - 6x + 1, so L_2(0.5) = -0.5
        let (v, d) = shifted_legendre(2, 0.5);
        assert!((v + 0.5).abs() < 1e-15);
        assert!(d.abs() < 1e-12); // L_2' = 12x - 6 vanishes at 1/2
        // L_3 = 20x^3 - 30x^2 + 12x - 1
        let x = 0.3f64;
        let want = 20.0 * x.powi(3) - 30.0 * x * x + 12.0 * x - 1.0;
        assert!((shifted_legendre(3, x).0 - want).abs() < 1e-14);
    }

    #[test]
    fn endpoint_normalization() {
        for i in 0..12 {
            assert!((shifted_legendre(i, 1.0).0 - 1.0).abs() < 1e-12);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert!((shifted_legendre(i, 0.0).0 - sign).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = 1e-6;
        for i in 1..10 {
            for &x in &[0.123, 0.5, 0.87] {
                let (_, d) = shifted_legendre(i, x);
                let fd =
                    (shifted_legendre(i, x + h).0 - shifted_legendre(i, x - h).0) / (2.0 * h);
                assert!((d - fd).abs() < 1e-6 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn row_matches_single_evaluations() {
        let row = shifted_legendre_row(8, 0.42);
        for (i, v) in row.iter().enumerate() {
            assert_eq!(*v, shifted_legendre(i, 0.42).0);
        }
    }
}
