//! Explicitly constructed operator networks for periodic second-order
//! elliptic PDEs, together with the spectral-Galerkin reference solver used
//! to verify them.
//!
//! The crate has five parts:
//!
//! - [`nn`]: the data model and exact composition algebra of sparse
//!   feed-forward ReLU networks.
//! - [`calculus`]: constructive ReLU approximations — products, matrix
//!   products, Neumann-series matrix inversion, polynomial-basis and
//!   analytic-function emulation.
//! - [`spectral`]: periodic tensor-product Legendre basis, Gauss-Lobatto
//!   quadrature, Galerkin assembly with numerical integration, and the
//!   reference solver.
//! - [`onet`]: encoder/branch/trunk construction for the
//!   coefficient-to-solution map, with parametric and reaction-diffusion
//!   variants.
//! - [`study`]: convergence, inversion-accuracy, size-scaling and Lipschitz
//!   studies with CSV/JSON/SVG reports.
//!
//! Everything is built by formula — no training anywhere.

pub mod calculus;
pub mod expr;
pub mod nn;
pub mod onet;
pub mod problem;
pub mod spectral;
pub mod study;
