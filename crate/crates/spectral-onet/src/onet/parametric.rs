//! Finitely-parametric diffusion: a compact parameter box, mode functions
//! with parameter-dependent coefficients, and a branch that composes the
//! plain coefficient branch with a network emulating the parameter-to-sample
//! map.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::branch::{alpha_of, branch_pipeline, input_layer_net};
use super::{BuildError, BuildPlan, BuildReport, Calibration, Encoder, EncoderKind, OperatorNet};
use crate::calculus::{analytic_approx_net, poly_basis_net};
use crate::nn::{affine_net, sparse_concat};
use crate::spectral::{
    error_norms, galerkin_solve, gauss_lobatto, l2_norm, CoefficientField, PeriodicBasis,
    QuadratureRule, ScalarEval,
};

/// A parametric coefficient `a(y)(x) = sum_i a_i(y) psi_i(x)` on a box `P`.
#[derive(Clone)]
pub struct ParametricFamily {
    /// Spatial dimension.
    pub d: usize,
    /// Parameter box bounds.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Spatial modes `psi_i`.
    pub modes: Vec<ScalarEval>,
    /// Parameter coefficients `a_i : P -> R`.
    pub coef_fns: Vec<ScalarEval>,
    /// Uniform lower bound of the full coefficient.
    pub a_min: f64,
    /// Sup bound of the modes.
    pub a_psi: f64,
}

impl ParametricFamily {
    pub fn d_p(&self) -> usize {
        self.lo.len()
    }

    /// Coefficient value with the first `n_p` modes.
    pub fn truncated(&self, y: &[f64], x: &[f64], n_p: usize) -> f64 {
        (0..n_p)
            .map(|i| self.coef_fns[i].eval(y) * self.modes[i].eval(x))
            .sum()
    }

    pub fn full(&self, y: &[f64], x: &[f64]) -> f64 {
        self.truncated(y, x, self.modes.len())
    }

    /// Coefficient field at a fixed parameter (full expansion).
    pub fn at(&self, y: &[f64], a_min: f64, a_max: f64) -> CoefficientField {
        let family = self.clone();
        let y = y.to_vec();
        CoefficientField::scalar(
            self.d,
            ScalarEval::Fn(Arc::new(move |x: &[f64]| family.full(&y, x))),
            a_min,
            a_max,
        )
    }
}

/// Mode matrix `V[i][k] = psi_k(x_i)` over the encoder points.
pub fn mode_matrix(family: &ParametricFamily, quad: &QuadratureRule, n_p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(quad.n_q(), n_p, |i, k| family.modes[k].eval(&quad.nodes[i]))
}

/// Construct the parametric operator network at target accuracy `eps`.
///
/// The mode count is the smallest one whose measured tail is below
/// `min(eps / (3 L), a_min / 2)` for the measured Lipschitz surrogate `L`;
/// the parameter-to-coefficient functions are emulated by an analytic
/// approximation network, mapped to sample values through the mode matrix,
/// and composed with the plain branch built at `eps / 3`.
pub fn build_parametric_onet(
    family: &ParametricFamily,
    f: &ScalarEval,
    eps: f64,
    calibration: Calibration,
    rng: &mut impl Rng,
) -> Result<OperatorNet, BuildError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BuildError::InfeasibleBudget {
            what: "eps",
            value: eps,
        });
    }
    let d = family.d;
    let d_p = family.d_p();

    // parameter and spatial test grids
    let y_grid = parameter_grid(family, 9);
    let x_grid: Vec<Vec<f64>> = match d {
        1 => (0..=64).map(|i| vec![i as f64 / 64.0]).collect(),
        _ => gauss_lobatto(9, d)?.nodes,
    };

    // Lipschitz surrogate of the data-to-solution map, measured by finite
    // differences of Galerkin solutions around the center parameter
    let lip = measured_lipschitz(family, f, &y_grid, calibration, eps)?;

    // mode count: smallest measured tail below the consistency threshold
    let needed = (eps / (3.0 * lip)).min(family.a_min / 2.0);
    let tails: Vec<f64> = (1..=family.modes.len())
        .map(|n_p| {
            let mut worst: f64 = 0.0;
            for y in &y_grid {
                for x in &x_grid {
                    worst = worst.max((family.full(y, x) - family.truncated(y, x, n_p)).abs());
                }
            }
            worst
        })
        .collect();
    let n_p = match tails.iter().position(|t| *t <= needed) {
        Some(idx) => idx + 1,
        None => {
            return Err(BuildError::FamilyDecay {
                needed,
                best: tails.last().copied().unwrap_or(f64::INFINITY),
                modes: family.modes.len(),
            })
        }
    };

    // bounds of the truncated coefficient over the test grids, with margin
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in &y_grid {
        for x in &x_grid {
            let v = family.truncated(y, x, n_p);
            t_min = t_min.min(v);
            t_max = t_max.max(v);
        }
    }
    let margin = 0.05 * (t_max - t_min).max(0.1 * family.a_min);
    let a_lo = (t_min - margin).max(family.a_min / 2.0);
    let a_hi = t_max + margin;
    if t_min < family.a_min / 2.0 {
        return Err(BuildError::FamilyDecay {
            needed: family.a_min / 2.0,
            best: t_min,
            modes: n_p,
        });
    }

    // inner discretization at eps/3
    let inner_eps = eps / 3.0;
    let p = calibration.order_for(inner_eps);
    let q = p + 1;
    let basis = PeriodicBasis::new(d, p)?;
    let quad = gauss_lobatto(q, d)?;
    let n_b = basis.n_b();

    // coefficient-function emulation at the consistency budget
    let eps_p = (eps / (3.0 * lip)).min(family.a_min / 4.0) / (n_p as f64 * family.a_psi);
    let (coef_net, _coef_report) = analytic_approx_net(
        &family.coef_fns[..n_p],
        &family.lo,
        &family.hi,
        eps_p.min(0.5),
    )?;

    // sample map: V (n_q x n_p) applied to the emulated coefficients
    let v = mode_matrix(family, &quad, n_p);
    let mut w = Vec::new();
    for c in 0..n_p {
        for r in 0..quad.n_q() {
            let val = v[(r, c)];
            if val != 0.0 {
                w.push((r as u32, c as u32, val));
            }
        }
    }
    let v_net = affine_net(quad.n_q(), n_p, w, vec![0.0; quad.n_q()])?;
    let sample_net = sparse_concat(&v_net, &coef_net)?;

    // inner budgets, as in the plain build
    let c_pol = 4.0 * (d as f64).sqrt();
    let nf = n_b as f64;
    let eps_u = inner_eps
        / (3.0 * (1.0 + c_pol * c_pol * nf.powf(4.0 / d as f64)).sqrt() * nf.sqrt());
    if !(eps_u > 0.0 && eps_u < 1.0) {
        return Err(BuildError::InfeasibleBudget {
            what: "eps_u",
            value: eps_u,
        });
    }
    let mut sup_u: f64 = 0.0;
    for y in sampled_parameters(family, rng, 5) {
        let coef = family.at(&y, a_lo, a_hi);
        let u = galerkin_solve(&coef, f, p, q)?;
        sup_u = sup_u.max(l2_norm(&|x: &[f64]| u.value(x), d, q + 6)?);
    }
    let sup_u = 1.2 * sup_u;
    let eps_b = inner_eps / (3.0 * nf * (2.0 + sup_u));

    let a1 = crate::spectral::reference_matrix(&basis, &quad, false);
    let lambda_min = a1.symmetric_eigen().eigenvalues.min();
    let c_a = 1.0 / (lambda_min * nf);
    let f_norm = l2_norm(&|x: &[f64]| f.eval(x), d, q + 6)?;
    let eps_inv = (eps_u / (f_norm.max(1e-12) * nf.powf(1.5) * c_a)).min(0.999);

    let input = input_layer_net(&basis, &quad, alpha_of((a_lo, a_hi)))?;
    let inner_parts = branch_pipeline(&basis, &quad, false, input, (a_lo, a_hi), f, eps_inv)?;
    let branch = sparse_concat(&inner_parts.net, &sample_net)?;

    let (trunk, trunk_report) = poly_basis_net(p, d, eps_b)?;

    let plan = BuildPlan {
        target_eps: Some(eps),
        d,
        p,
        q,
        n_b,
        n_q: quad.n_q(),
        eps_b,
        eps_u: Some(eps_u),
        eps_g: Some(inner_eps / 3.0),
        eps_inv,
        alpha: inner_parts.alpha,
        delta: inner_parts.delta,
        c_pol,
        sup_u_estimate: Some(sup_u),
        f_norm,
        c_a_estimate: c_a,
        calibration: Some(calibration),
    };
    let report = BuildReport {
        branch_size: branch.size(),
        branch_depth: branch.depth(),
        trunk_size: trunk.size(),
        trunk_depth: trunk.depth(),
        inversion_terms: inner_parts.inversion.terms,
        inversion_stages: inner_parts.inversion.stages,
        trunk_escalations: trunk_report.escalations,
        trunk_h1_error: trunk_report.h1_error,
        input_layer_size: inner_parts.input_layer_size,
        n_b_constant: None,
        plan,
    };
    Ok(OperatorNet {
        encoder: Encoder {
            kind: EncoderKind::Parametric { d_p },
            points: quad.nodes.clone(),
        },
        branch,
        trunk,
        report,
    })
}

/// Max finite-difference ratio of solution change to coefficient change,
/// the computable surrogate of the Lipschitz constant.
fn measured_lipschitz(
    family: &ParametricFamily,
    f: &ScalarEval,
    y_grid: &[Vec<f64>],
    calibration: Calibration,
    eps: f64,
) -> Result<f64, BuildError> {
    let d = family.d;
    let p = calibration.order_for((eps / 3.0).min(0.1)).min(10);
    let q = p + 1;
    let center = &y_grid[y_grid.len() / 2];
    let base_field = family.at(center, family.a_min / 2.0, f64::INFINITY);
    let base = galerkin_solve(&base_field, f, p, q)?;
    let mut worst: f64 = 1e-6;
    for other in [&y_grid[0], &y_grid[y_grid.len() - 1]] {
        // coefficient perturbation magnitude
        let mut da: f64 = 0.0;
        let steps = 33;
        for i in 0..=steps {
            let x = vec![i as f64 / steps as f64; d];
            da = da.max((family.full(other, &x) - family.full(center, &x)).abs());
        }
        if da < 1e-10 {
            continue;
        }
        let other_field = family.at(other, family.a_min / 2.0, f64::INFINITY);
        let sol = galerkin_solve(&other_field, f, p, q)?;
        let (_, h1) = error_norms(&base, &sol, d, 2 * p + 8)?;
        worst = worst.max(h1 / da);
    }
    Ok(worst.max(1.0))
}

fn parameter_grid(family: &ParametricFamily, per_axis: usize) -> Vec<Vec<f64>> {
    let d_p = family.d_p();
    let total = per_axis.pow(d_p as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut y = Vec::with_capacity(d_p);
        for j in 0..d_p {
            let i = rest % per_axis;
            rest /= per_axis;
            y.push(family.lo[j] + (family.hi[j] - family.lo[j]) * i as f64 / (per_axis - 1) as f64);
        }
        out.push(y);
    }
    out
}

fn sampled_parameters(
    family: &ParametricFamily,
    rng: &mut impl Rng,
    count: usize,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            family
                .lo
                .iter()
                .zip(&family.hi)
                .map(|(l, h)| rng.random_range(*l..=*h))
                .collect()
        })
        .collect()
}
