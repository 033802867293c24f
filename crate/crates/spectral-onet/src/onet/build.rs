//! End-to-end operator-network assembly and evaluation.

use rand::Rng;

use super::branch::{branch_coeff_net, branch_coeff_net_at, BranchParts};
use super::{BuildError, BuildPlan, BuildReport, Calibration, Encoder, EncoderKind, OperatorNet};
use crate::calculus::poly_basis_net;
use crate::nn::{net_gradient, Network};
use crate::problem::OnetProblem;
use crate::spectral::{galerkin_solve, gauss_lobatto, l2_norm, Field, PeriodicBasis};

/// How to fix the discretization and budgets.
#[derive(Debug, Clone)]
pub enum PlanSpec {
    /// Fully explicit parameters.
    Explicit {
        p: usize,
        q: usize,
        eps_inv: f64,
        eps_b: f64,
    },
    /// A target accuracy, resolved through pilot calibration constants.
    Target { eps: f64, calibration: Calibration },
}

/// Resolve a plan: discretization orders and the error budget split.
pub fn resolve_plan(problem: &OnetProblem, spec: &PlanSpec) -> Result<BuildPlan, BuildError> {
    let d = problem.d;
    let (a_min, a_max) = problem.bounds();
    let alpha = 1.0 / (a_min + a_max);
    let delta = alpha * a_min;
    match spec {
        PlanSpec::Explicit { p, q, eps_inv, eps_b } => {
            let n_b = p.pow(d as u32) - 1;
            Ok(BuildPlan {
                target_eps: None,
                d,
                p: *p,
                q: *q,
                n_b,
                n_q: q.pow(d as u32),
                eps_b: *eps_b,
                eps_u: None,
                eps_g: None,
                eps_inv: *eps_inv,
                alpha,
                delta,
                c_pol: 4.0 * (d as f64).sqrt(),
                sup_u_estimate: None,
                f_norm: 0.0,
                c_a_estimate: 0.0,
                calibration: None,
            })
        }
        PlanSpec::Target { eps, calibration } => {
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(BuildError::InfeasibleBudget {
                    what: "eps",
                    value: *eps,
                });
            }
            let p = calibration.order_for(*eps);
            let q = p + 1;
            let n_b = p.pow(d as u32) - 1;
            let c_pol = 4.0 * (d as f64).sqrt();
            let nf = n_b as f64;
            let eps_u =
                eps / (3.0 * (1.0 + c_pol * c_pol * nf.powf(4.0 / d as f64)).sqrt() * nf.sqrt());
            if !(eps_u > 0.0 && eps_u < 1.0) {
                return Err(BuildError::InfeasibleBudget {
                    what: "eps_u",
                    value: eps_u,
                });
            }
            Ok(BuildPlan {
                target_eps: Some(*eps),
                d,
                p,
                q,
                n_b,
                n_q: q.pow(d as u32),
                eps_b: f64::NAN, // filled once sup ||u|| is estimated
                eps_u: Some(eps_u),
                eps_g: Some(eps / 3.0),
                eps_inv: 0.0, // derived inside the branch builder
                alpha,
                delta,
                c_pol,
                sup_u_estimate: None,
                f_norm: 0.0,
                c_a_estimate: 0.0,
                calibration: Some(*calibration),
            })
        }
    }
}

/// Construct the operator network: Gauss-Lobatto encoder, coefficient head
/// branch, polynomial-basis trunk.
pub fn build_onet(
    problem: &OnetProblem,
    spec: &PlanSpec,
    rng: &mut impl Rng,
) -> Result<OperatorNet, BuildError> {
    let mut plan = resolve_plan(problem, spec)?;
    let d = problem.d;
    let basis = PeriodicBasis::new(d, plan.p)?;
    let quad = gauss_lobatto(plan.q, d)?;
    let f = problem.source_eval();

    // budget for the trunk: the L2 magnitude of solutions enters the split;
    // the true supremum over the family is not computable, so estimate it
    // from a sample and keep a slack factor
    if let Some(eps) = plan.target_eps {
        let sample = problem.family.sample_many(rng, 8);
        let mut sup_u: f64 = 0.0;
        for coef in &sample {
            let u = galerkin_solve(coef, &f, plan.p, plan.q)?;
            let norm = l2_norm(&|x: &[f64]| u.value(x), d, plan.q + 6)?;
            sup_u = sup_u.max(norm);
        }
        let sup_u = 1.2 * sup_u;
        plan.sup_u_estimate = Some(sup_u);
        plan.eps_b = eps / (3.0 * plan.n_b as f64 * (2.0 + sup_u));
        if !(plan.eps_b > 0.0 && plan.eps_b < 1.0) {
            return Err(BuildError::InfeasibleBudget {
                what: "eps_b",
                value: plan.eps_b,
            });
        }
    }

    // branch
    let parts: BranchParts = match plan.eps_u {
        Some(eps_u) => branch_coeff_net(&basis, &quad, problem.bounds(), &f, eps_u)?,
        None => branch_coeff_net_at(&basis, &quad, problem.bounds(), &f, plan.eps_inv)?,
    };
    plan.eps_inv = parts.eps_inv;
    plan.f_norm = parts.f_norm;
    plan.c_a_estimate = parts.c_a_estimate;
    plan.alpha = parts.alpha;
    plan.delta = parts.delta;

    // trunk
    let (trunk, trunk_report) = poly_basis_net(plan.p, d, plan.eps_b)?;

    let n_b_constant = plan.target_eps.map(|eps| {
        plan.n_b as f64 / (1.0 + eps.ln().abs().powi(d as i32))
    });
    let report = BuildReport {
        branch_size: parts.net.size(),
        branch_depth: parts.net.depth(),
        trunk_size: trunk.size(),
        trunk_depth: trunk.depth(),
        inversion_terms: parts.inversion.terms,
        inversion_stages: parts.inversion.stages,
        trunk_escalations: trunk_report.escalations,
        trunk_h1_error: trunk_report.h1_error,
        input_layer_size: parts.input_layer_size,
        n_b_constant,
        plan,
    };
    Ok(OperatorNet {
        encoder: Encoder {
            kind: EncoderKind::Scalar,
            points: quad.nodes.clone(),
        },
        branch: parts.net,
        trunk,
        report,
    })
}

/// A coefficient's solution surrogate: the cached branch output paired with
/// the trunk. Evaluation is the inner product; the gradient combines the
/// cached vector with the trunk's exact Jacobian.
pub struct NetField<'a> {
    pub trunk: &'a Network,
    pub branch_vec: Vec<f64>,
}

impl Field for NetField<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let t = self.trunk.realize(x).expect("trunk accepts points of Q");
        t.iter().zip(&self.branch_vec).map(|(a, b)| a * b).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let jac = net_gradient(self.trunk, x).expect("trunk accepts points of Q");
        let d = jac.ncols();
        let mut out = vec![0.0; d];
        for (i, b) in self.branch_vec.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += b * jac[(i, j)];
            }
        }
        out
    }
}

/// Evaluate the branch once for a coefficient and return the resulting
/// solution field.
pub fn eval_field<'a>(
    onet: &'a OperatorNet,
    coef: &crate::spectral::CoefficientField,
) -> Result<NetField<'a>, BuildError> {
    let encoded = onet.encoder.encode(coef)?;
    let branch_vec = onet.branch.realize(&encoded)?;
    Ok(NetField {
        trunk: &onet.trunk,
        branch_vec,
    })
}

/// Single-point evaluation (branch pass per call; prefer `eval_field` when
/// evaluating many points).
pub fn eval_onet(
    onet: &OperatorNet,
    coef: &crate::spectral::CoefficientField,
    x: &[f64],
) -> Result<f64, BuildError> {
    Ok(eval_field(onet, coef)?.value(x))
}

/// Branch pass for the parametric kind, where the encoder is the identity
/// on the parameter vector.
pub fn eval_field_parametric<'a>(
    onet: &'a OperatorNet,
    y: &[f64],
) -> Result<NetField<'a>, BuildError> {
    match onet.encoder.kind {
        EncoderKind::Parametric { .. } => {}
        _ => {
            return Err(BuildError::EncoderKindMismatch {
                expected: "parameter vector",
            })
        }
    }
    let branch_vec = onet.branch.realize(y)?;
    Ok(NetField {
        trunk: &onet.trunk,
        branch_vec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::error_norms;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn explicit_build_matches_galerkin_solution() {
        let problem = OnetProblem::model_1d();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = PlanSpec::Explicit {
            p: 4,
            q: 5,
            eps_inv: 1e-3,
            eps_b: 1e-3,
        };
        let onet = build_onet(&problem, &spec, &mut rng).unwrap();
        let coef = problem.family.sample(&mut rng);
        let f = problem.source_eval();
        let reference = galerkin_solve(&coef, &f, 4, 5).unwrap();
        let field = eval_field(&onet, &coef).unwrap();
        let (_, h1) = error_norms(&reference, &field, 1, 48).unwrap();
        assert!(h1 <= 5e-2, "H1 gap to the Galerkin solution: {h1}");
    }

    #[test]
    fn zero_branch_vector_gives_zero_field() {
        let problem = OnetProblem::model_1d();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = PlanSpec::Explicit {
            p: 3,
            q: 4,
            eps_inv: 1e-2,
            eps_b: 1e-2,
        };
        let onet = build_onet(&problem, &spec, &mut rng).unwrap();
        let field = NetField {
            trunk: &onet.trunk,
            branch_vec: vec![0.0; onet.trunk.output_dim()],
        };
        assert_eq!(field.value(&[0.4]), 0.0);
        // doubling the cached branch vector doubles the field
        let coef = problem.family.sample(&mut rng);
        let base = eval_field(&onet, &coef).unwrap();
        let doubled = NetField {
            trunk: &onet.trunk,
            branch_vec: base.branch_vec.iter().map(|v| 2.0 * v).collect(),
        };
        let x = [0.27];
        assert!((doubled.value(&x) - 2.0 * base.value(&x)).abs() < 1e-12);
    }
}
