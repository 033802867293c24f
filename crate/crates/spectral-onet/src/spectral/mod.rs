//! Periodic spectral-Galerkin machinery: basis, quadrature, assembly with
//! numerical integration, reference solver, error norms, and spectrum
//! utilities.

mod assemble;
mod basis;
mod legendre;
mod manufactured;
mod norms;
mod quadrature;
mod spectrum;

pub use assemble::{assemble, galerkin_solve, reference_matrix, DiscreteSystem, SolutionField};
pub(crate) use assemble::tabulate;
pub use basis::{phi_1d, PeriodicBasis};
pub use legendre::{shifted_legendre, shifted_legendre_row};
pub use manufactured::manufactured_problem;
pub use norms::{error_norms, l2_norm, ExprField, Field, FnField};
pub use quadrature::{gauss_lobatto, QuadratureRule};
pub use spectrum::{spectrum_bounds, spectrum_of};

use std::sync::Arc;

use crate::expr::Expr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("quadrature order q={q} must be at least {min}")]
    QuadratureOrder { q: usize, min: usize },
    #[error("basis order p={p} must be at least 2")]
    BasisOrder { p: usize },
    #[error("dimension d={d} unsupported (1 <= d <= 3)")]
    Dimension { d: usize },
    #[error("Newton iteration for Gauss-Lobatto nodes of order {q} did not converge")]
    NewtonDiverged { q: usize },
    #[error("basis index {i} outside 1..={n_b}")]
    IndexRange { i: usize, n_b: usize },
    #[error("assembly requires q >= p+1 (got p={p}, q={q})")]
    QuadratureTooCoarse { p: usize, q: usize },
    #[error("source term has nonzero mean {integral:.3e}; zero mean required for pure diffusion")]
    SourceNotZeroMean { integral: f64 },
    #[error("stiffness matrix is numerically singular; coercivity violated")]
    NotCoercive,
    #[error("matrix coefficient is not symmetric (asymmetry {norm:.3e})")]
    NonSymmetricMatrix { norm: f64 },
    #[error("function is not periodic: endpoint mismatch {mismatch:.3e}")]
    NonPeriodic { mismatch: f64 },
    #[error("operation requires an expression-backed coefficient")]
    NotExpressionBacked,
    #[error(
        "spectrum [{lmin:.6}, {lmax:.6}] escapes declared coefficient bounds [{lo:.6}, {hi:.6}]"
    )]
    SpectrumEscape {
        lmin: f64,
        lmax: f64,
        lo: f64,
        hi: f64,
    },
    #[error("coefficient violates declared bounds: sampled value {found:.6} outside [{lo:.6}, {hi:.6}]")]
    CoefficientBounds { found: f64, lo: f64, hi: f64 },
}

/// A scalar-valued function of a point, either closed-form (differentiable
/// symbolically) or an opaque evaluator.
#[derive(Clone)]
pub enum ScalarEval {
    Expr(Expr),
    Fn(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl ScalarEval {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarEval::Expr(e) => e.eval(x),
            ScalarEval::Fn(f) => f(x),
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            ScalarEval::Expr(e) => Some(e),
            ScalarEval::Fn(_) => None,
        }
    }
}

impl std::fmt::Debug for ScalarEval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarEval::Expr(e) => write!(f, "Expr({e:?})"),
            ScalarEval::Fn(_) => write!(f, "Fn(..)"),
        }
    }
}

impl From<Expr> for ScalarEval {
    fn from(e: Expr) -> Self {
        ScalarEval::Expr(e)
    }
}

/// Diffusion coefficient data with declared ellipticity bounds.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub d: usize,
    pub a_min: f64,
    pub a_max: f64,
    /// Analyticity scale; declarative metadata only, never verified.
    pub analytic_tag: Option<f64>,
    pub kind: CoefficientKind,
}

#[derive(Debug, Clone)]
pub enum CoefficientKind {
    Scalar(ScalarEval),
    /// Symmetric matrix diffusion (entries row-major, length `d*d`) plus a
    /// scalar reaction term.
    MatrixReaction {
        matrix: Vec<ScalarEval>,
        reaction: ScalarEval,
        c_min: f64,
        c_max: f64,
    },
}

impl CoefficientField {
    pub fn scalar(d: usize, eval: impl Into<ScalarEval>, a_min: f64, a_max: f64) -> Self {
        CoefficientField {
            d,
            a_min,
            a_max,
            analytic_tag: None,
            kind: CoefficientKind::Scalar(eval.into()),
        }
    }

    pub fn matrix_reaction(
        d: usize,
        matrix: Vec<ScalarEval>,
        reaction: impl Into<ScalarEval>,
        a_min: f64,
        a_max: f64,
        c_min: f64,
        c_max: f64,
    ) -> Self {
        assert_eq!(matrix.len(), d * d, "matrix needs d*d entries");
        CoefficientField {
            d,
            a_min,
            a_max,
            analytic_tag: None,
            kind: CoefficientKind::MatrixReaction {
                matrix,
                reaction: reaction.into(),
                c_min,
                c_max,
            },
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.kind, CoefficientKind::Scalar(_))
    }

    pub fn scalar_value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            CoefficientKind::Scalar(a) => a.eval(x),
            CoefficientKind::MatrixReaction { .. } => {
                panic!("scalar_value on a matrix-valued coefficient")
            }
        }
    }

    /// Bounds of the Rayleigh quotient against the reference form: the
    /// declared coefficient bounds for the scalar kind; joined with the
    /// reaction bounds for the matrix+reaction kind.
    pub fn spectrum_envelope(&self) -> (f64, f64) {
        match &self.kind {
            CoefficientKind::Scalar(_) => (self.a_min, self.a_max),
            CoefficientKind::MatrixReaction { c_min, c_max, .. } => {
                (self.a_min.min(*c_min), self.a_max.max(*c_max))
            }
        }
    }

    /// Sample the coefficient on the quadrature grid plus random points and
    /// check the declared bounds (scalar: values; matrix: Rayleigh quotients
    /// along random directions; reaction: lower bound).
    pub fn validate_bounds(
        &self,
        quad: &QuadratureRule,
        rng: &mut impl rand::Rng,
        extra_points: usize,
    ) -> Result<(), SpectralError> {
        let mut points: Vec<Vec<f64>> = quad.nodes.clone();
        for _ in 0..extra_points {
            points.push((0..self.d).map(|_| rng.random::<f64>()).collect());
        }
        match &self.kind {
            CoefficientKind::Scalar(a) => {
                for x in &points {
                    let v = a.eval(x);
                    if v < self.a_min - 1e-12 || v > self.a_max + 1e-12 {
                        return Err(SpectralError::CoefficientBounds {
                            found: v,
                            lo: self.a_min,
                            hi: self.a_max,
                        });
                    }
                }
            }
            CoefficientKind::MatrixReaction {
                matrix,
                reaction,
                c_min,
                ..
            } => {
                for x in &points {
                    let m: Vec<f64> = matrix.iter().map(|e| e.eval(x)).collect();
                    for i in 0..self.d {
                        for j in (i + 1)..self.d {
                            let asym = (m[i * self.d + j] - m[j * self.d + i]).abs();
                            if asym > 1e-12 {
                                return Err(SpectralError::NonSymmetricMatrix { norm: asym });
                            }
                        }
                    }
                    // Rayleigh quotient along a few random directions
                    for _ in 0..4 {
                        let dir: Vec<f64> =
                            (0..self.d).map(|_| rng.random::<f64>() - 0.5).collect();
                        let norm2: f64 = dir.iter().map(|v| v * v).sum();
                        if norm2 < 1e-12 {
                            continue;
                        }
                        let mut quad_form = 0.0;
                        for i in 0..self.d {
                            for j in 0..self.d {
                                quad_form += dir[i] * m[i * self.d + j] * dir[j];
                            }
                        }
                        let rayleigh = quad_form / norm2;
                        if rayleigh < self.a_min - 1e-12 {
                            return Err(SpectralError::CoefficientBounds {
                                found: rayleigh,
                                lo: self.a_min,
                                hi: self.a_max,
                            });
                        }
                    }
                    let c = reaction.eval(x);
                    if c < c_min - 1e-12 {
                        return Err(SpectralError::CoefficientBounds {
                            found: c,
                            lo: *c_min,
                            hi: f64::INFINITY,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}
