//! Constructive ReLU approximations: scalar and matrix products, the
//! Neumann-series matrix inversion network, polynomial-basis emulation for
//! the trunk, and analytic-function emulation for parametric coefficients.

mod inversion;
mod poly;
mod product;

pub use inversion::{inversion_input_ok, inversion_net, spectral_norm, InversionReport};
pub use poly::{analytic_approx_net, chebyshev_coefficients, poly_basis_net, PolyBasisReport};
pub use product::{matmul_net, product_layer_net, product_net};

use thiserror::Error;

use crate::nn::NetError;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("accuracy epsilon={epsilon} must lie in (0, 1)")]
    EpsilonRange { epsilon: f64 },
    #[error("domain bound M={bound} must be positive")]
    BoundRange { bound: f64 },
    #[error("inversion margin delta={delta} must lie in (0, 1)")]
    DeltaRange { delta: f64 },
    #[error("target accuracy {target:.3e} not met (achieved {achieved:.3e}) after {attempts} refinements")]
    ApproxFailure {
        target: f64,
        achieved: f64,
        attempts: usize,
    },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

/// Accuracy/domain parameters of an approximation network.
#[derive(Debug, Clone, Copy)]
pub struct ApproxSpec {
    /// Target accuracy, in (0, 1).
    pub epsilon: f64,
    /// Radius of the admissible input domain.
    pub bound: f64,
    /// Inversion margin, in (0, 1); ignored by builders that do not invert.
    pub delta: f64,
}

impl ApproxSpec {
    pub fn new(epsilon: f64, bound: f64) -> Result<Self, ApproxError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ApproxError::EpsilonRange { epsilon });
        }
        if !(bound > 0.0) {
            return Err(ApproxError::BoundRange { bound });
        }
        Ok(ApproxSpec {
            epsilon,
            bound,
            delta: 0.5,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self, ApproxError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ApproxError::DeltaRange { delta });
        }
        self.delta = delta;
        Ok(self)
    }
}

/// Number of Neumann series terms needed for accuracy `epsilon` at margin
/// `delta`: `ceil(log(0.5 epsilon delta) / log(1 - delta))`.
pub fn m_terms(epsilon: f64, delta: f64) -> usize {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon in (0,1)");
    assert!(delta > 0.0 && delta < 1.0, "delta in (0,1)");
    let m = ((0.5 * epsilon * delta).ln() / (1.0 - delta).ln()).ceil();
    (m as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_terms_reference_values() {
        // direct evaluation of the ceiling formula:
        // log(0.025)/log(0.5) = 5.32 -> 6
        assert_eq!(m_terms(0.1, 0.5), 6);
        // log(0.0005)/log(0.9) = 72.1 -> 73
        assert_eq!(m_terms(0.01, 0.1), 73);
    }

    #[test]
    fn m_terms_is_one_for_large_delta() {
        // for delta >= 2/(2+eps) the first term already suffices
        for eps in [0.1, 0.5, 0.9] {
            let delta = 2.0 / (2.0 + eps) + 1e-9;
            assert_eq!(m_terms(eps, delta), 1);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ApproxSpec::new(0.5, 2.0).is_ok());
        assert!(ApproxSpec::new(1.5, 2.0).is_err());
        assert!(ApproxSpec::new(0.5, -1.0).is_err());
        assert!(ApproxSpec::new(0.5, 1.0).unwrap().with_delta(1.2).is_err());
    }
}
