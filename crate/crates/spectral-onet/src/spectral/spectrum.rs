//! Extreme generalized eigenvalues of the preconditioned system.

use nalgebra::DMatrix;

use super::assemble::DiscreteSystem;
use super::SpectralError;

/// Extreme eigenvalues of `A^a v = lambda A^1 v`, by symmetric reduction
/// `B^{-1/2} A B^{-1/2}` with `B^{-1/2}` from the eigendecomposition of the
/// reference matrix. Errors if the spectrum escapes the envelope implied by
/// the declared coefficient bounds (tolerance `1e-8 * upper bound`).
pub fn spectrum_bounds(sys: &DiscreteSystem) -> Result<(f64, f64), SpectralError> {
    let (lmin, lmax) = spectrum_of(&sys.stiffness, &sys.reference)?;
    let (lo, hi) = sys.envelope;
    let tol = 1e-8 * hi;
    if lmin < lo - tol || lmax > hi + tol {
        return Err(SpectralError::SpectrumEscape { lmin, lmax, lo, hi });
    }
    Ok((lmin, lmax))
}

/// Extreme eigenvalues of the pencil `(A, B)` for symmetric positive
/// definite `B`.
pub fn spectrum_of(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64), SpectralError> {
    let eig_b = b.clone().symmetric_eigen();
    for ev in eig_b.eigenvalues.iter() {
        if *ev <= 0.0 {
            return Err(SpectralError::NotCoercive);
        }
    }
    // B^{-1/2} = V diag(1/sqrt(lambda)) V^T
    let v = &eig_b.eigenvectors;
    let inv_sqrt = DMatrix::from_diagonal(&eig_b.eigenvalues.map(|x| 1.0 / x.sqrt()));
    let b_inv_half = v * inv_sqrt * v.transpose();
    let mut m = &b_inv_half * a * &b_inv_half;
    // symmetrize against roundoff
    let mt = m.transpose();
    m = (&m + &mt) * 0.5;
    let eig = m.symmetric_eigen();
    let lmin = eig.eigenvalues.min();
    let lmax = eig.eigenvalues.max();
    Ok((lmin, lmax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::spectral::{
        assemble, gauss_lobatto, CoefficientField, PeriodicBasis, ScalarEval,
    };

    fn system(a: Expr, a_min: f64, a_max: f64, p: usize) -> crate::spectral::DiscreteSystem {
        let coef = CoefficientField::scalar(1, a, a_min, a_max);
        let basis = PeriodicBasis::new(1, p).unwrap();
        let quad = gauss_lobatto(p + 1, 1).unwrap();
        let f = ScalarEval::Expr(Expr::sin_mode(&[1], 1.0));
        assemble(&coef, &basis, &quad, &f).unwrap()
    }

    #[test]
    fn unit_coefficient_spectrum_is_one() {
        let sys = system(Expr::constant(1.0), 1.0, 1.0, 5);
        let (lmin, lmax) = spectrum_bounds(&sys).unwrap();
        assert!((lmin - 1.0).abs() < 1e-12);
        assert!((lmax - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variable_coefficient_contained_in_bounds() {
        let a = Expr::add(vec![Expr::constant(1.0), Expr::sin_mode(&[1], 0.5)]);
        let sys = system(a, 0.5, 1.5, 6);
        let (lmin, lmax) = spectrum_bounds(&sys).unwrap();
        assert!(lmin >= 0.5 - 1e-8);
        assert!(lmax <= 1.5 + 1e-8);
        assert!(lmin < lmax);
    }

    #[test]
    fn reference_smallest_eigenvalue_scales_with_dimension() {
        // lambda_min(A^1) * n_b stays above a fixed positive constant
        let mut scaled = Vec::new();
        for p in 3..=12 {
            let sys = system(Expr::constant(1.0), 1.0, 1.0, p);
            let eig = sys.reference.clone().symmetric_eigen();
            let lmin = eig.eigenvalues.min();
            scaled.push(lmin * sys.n() as f64);
        }
        for s in &scaled {
            assert!(*s > 1.0, "scaled minimum {s} too small");
        }
    }
}
