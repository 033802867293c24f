//! Encoder, branch, and trunk construction for the coefficient-to-solution
//! map, including the parametric and reaction-diffusion variants.

mod branch;
mod build;
mod bundle;
mod parametric;
mod rd;

pub use branch::{
    branch_coeff_net, branch_coeff_net_at, branch_inversion_net, input_layer_net,
    preconditioned_input_net, BranchParts,
};
pub use build::{
    build_onet, eval_field, eval_field_parametric, eval_onet, resolve_plan, NetField, PlanSpec,
};
pub use bundle::{load_bundle, save_bundle};
pub use parametric::{build_parametric_onet, mode_matrix, ParametricFamily};
pub use rd::{build_rd_onet, rd_input_layer_net};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::ApproxError;
use crate::nn::{NetError, Network};
use crate::spectral::{CoefficientField, SpectralError};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("infeasible budget: {what} = {value:.3e} must lie in (0, 1); use a smaller target accuracy or explicit plan parameters")]
    InfeasibleBudget { what: &'static str, value: f64 },
    #[error("target accuracy requires calibration constants; run a pilot convergence study first")]
    MissingCalibration,
    #[error("coefficient family tail does not decay below {needed:.3e} within {modes} modes (best {best:.3e})")]
    FamilyDecay {
        needed: f64,
        best: f64,
        modes: usize,
    },
    #[error("encoder expects a {expected} coefficient")]
    EncoderKindMismatch { expected: &'static str },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("bundle i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bundle meta: {0}")]
    Meta(String),
}

/// Where and how the input function is sampled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Encoder {
    pub kind: EncoderKind,
    /// Sampling points; the count and ordering are identical to the
    /// quadrature rule used in assembly. Empty for the parametric kind.
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Scalar,
    ReactionDiffusion,
    /// Identity on the parameter vector.
    Parametric { d_p: usize },
}

impl Encoder {
    /// Point samples of the coefficient in encoder order: values for the
    /// scalar kind; all matrix blocks then all reaction values for the
    /// reaction-diffusion kind.
    pub fn encode(&self, coef: &CoefficientField) -> Result<Vec<f64>, BuildError> {
        match (&self.kind, &coef.kind) {
            (EncoderKind::Scalar, crate::spectral::CoefficientKind::Scalar(a)) => {
                Ok(self.points.iter().map(|x| a.eval(x)).collect())
            }
            (
                EncoderKind::ReactionDiffusion,
                crate::spectral::CoefficientKind::MatrixReaction {
                    matrix, reaction, ..
                },
            ) => {
                let d = coef.d;
                let mut out = Vec::with_capacity((d * d + 1) * self.points.len());
                for x in &self.points {
                    // vec(A(x)) column-major; the matrix is symmetric so the
                    // storage order of the entry expressions is immaterial
                    for col in 0..d {
                        for row in 0..d {
                            out.push(matrix[row * d + col].eval(x));
                        }
                    }
                }
                for x in &self.points {
                    out.push(reaction.eval(x));
                }
                Ok(out)
            }
            (EncoderKind::Scalar, _) => Err(BuildError::EncoderKindMismatch {
                expected: "scalar",
            }),
            (EncoderKind::ReactionDiffusion, _) => Err(BuildError::EncoderKindMismatch {
                expected: "matrix+reaction",
            }),
            (EncoderKind::Parametric { .. }, _) => Err(BuildError::EncoderKindMismatch {
                expected: "parameter vector",
            }),
        }
    }
}

/// Pilot-fitted convergence constants: `error ~ C_g exp(-b_g p)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Calibration {
    pub c_g: f64,
    pub b_g: f64,
}

impl Calibration {
    /// Smallest polynomial order whose fitted Galerkin error is below
    /// `eps/3`, plus one for margin.
    pub fn order_for(&self, eps: f64) -> usize {
        let p = (((eps / 3.0).ln().abs() + self.c_g.ln()) / self.b_g).ceil();
        (p.max(1.0) as usize) + 1
    }
}

/// Resolved discretization and error budgets of one build.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildPlan {
    pub target_eps: Option<f64>,
    pub d: usize,
    pub p: usize,
    pub q: usize,
    pub n_b: usize,
    pub n_q: usize,
    pub eps_b: f64,
    pub eps_u: Option<f64>,
    pub eps_g: Option<f64>,
    pub eps_inv: f64,
    pub alpha: f64,
    pub delta: f64,
    pub c_pol: f64,
    pub sup_u_estimate: Option<f64>,
    pub f_norm: f64,
    pub c_a_estimate: f64,
    pub calibration: Option<Calibration>,
}

/// Sizes, depths and measured constants of a finished build.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildReport {
    pub plan: BuildPlan,
    pub branch_size: usize,
    pub branch_depth: usize,
    pub trunk_size: usize,
    pub trunk_depth: usize,
    pub inversion_terms: usize,
    pub inversion_stages: usize,
    pub trunk_escalations: usize,
    pub trunk_h1_error: f64,
    /// Nonzero count of the exact input layer alone.
    pub input_layer_size: usize,
    /// Measured constant in `n_b <= C (1 + |log eps|^d)` when a target
    /// accuracy was given.
    pub n_b_constant: Option<f64>,
}

/// Encoder plus branch and trunk networks; evaluation is the inner product
/// of the branch output (once per coefficient) with the trunk output (per
/// point).
#[derive(Debug, Clone)]
pub struct OperatorNet {
    pub encoder: Encoder,
    pub branch: Network,
    pub trunk: Network,
    pub report: BuildReport,
}
