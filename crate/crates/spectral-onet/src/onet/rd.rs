//! Anisotropic diffusion-reaction variant: the input layer consumes matrix
//! samples and reaction samples over the extended basis (constant mode
//! appended), and the trunk gains an exact constant output.

use rand::Rng;

use super::branch::{alpha_of, branch_pipeline};
use super::build::PlanSpec;
use super::{BuildError, BuildPlan, BuildReport, Encoder, EncoderKind, OperatorNet};
use crate::calculus::poly_basis_net;
use crate::nn::{affine_net, parallelize, Network};
use crate::spectral::{
    galerkin_solve, gauss_lobatto, l2_norm, tabulate, CoefficientField, CoefficientKind,
    PeriodicBasis, QuadratureRule, SpectralError,
};

/// One-layer net matricizing to `-alpha` times the diffusion-reaction
/// bilinear form over the extended basis: per node, a block of
/// gradient-product tensors for the matrix samples followed by mass blocks
/// for the reaction samples. Size is at most `(d^2 + 1) n~_b^2 n_q`.
pub fn rd_input_layer_net(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    alpha: f64,
) -> Result<Network, BuildError> {
    if quad.q < basis.p + 1 {
        return Err(SpectralError::QuadratureTooCoarse {
            p: basis.p,
            q: quad.q,
        }
        .into());
    }
    let n = basis.n_b_extended();
    let d = basis.d;
    let n_q = quad.n_q();
    let tables = tabulate(basis, quad, true);
    let mut trips = Vec::new();
    for (k, w) in quad.weights.iter().enumerate() {
        let g = &tables.grads[k];
        let v = &tables.values[k];
        // matrix block of node k: column k d^2 + (n d + m) holds
        // -alpha w_k d_n phi_j d_m phi_i at row (j n + i)
        for j in 0..n {
            for i in 0..n {
                let row = (j * n + i) as u32;
                for nn in 0..d {
                    for mm in 0..d {
                        let val = -alpha * w * g[j][nn] * g[i][mm];
                        if val != 0.0 {
                            let col = (k * d * d + nn * d + mm) as u32;
                            trips.push((row, col, val));
                        }
                    }
                }
                // mass block: column d^2 n_q + k
                let mass = -alpha * w * v[i] * v[j];
                if mass != 0.0 {
                    trips.push((row, (d * d * n_q + k) as u32, mass));
                }
            }
        }
    }
    Ok(affine_net(
        n * n,
        (d * d + 1) * n_q,
        trips,
        vec![0.0; n * n],
    )?)
}

/// Construct the diffusion-reaction operator network for one coefficient
/// class (declared bounds drive the inversion margin). The downstream
/// pipeline is identical to the scalar build with the diffusion-reaction
/// stiffness in place of `A^a`.
pub fn build_rd_onet(
    coef: &CoefficientField,
    f: &crate::spectral::ScalarEval,
    spec: &PlanSpec,
    rng: &mut impl Rng,
) -> Result<OperatorNet, BuildError> {
    let CoefficientKind::MatrixReaction { matrix, .. } = &coef.kind else {
        return Err(BuildError::EncoderKindMismatch {
            expected: "matrix+reaction",
        });
    };
    let d = coef.d;
    // reject asymmetric matrix samples up front
    for _ in 0..32 {
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        for i in 0..d {
            for j in (i + 1)..d {
                let a_ij = matrix[i * d + j].eval(&x);
                let a_ji = matrix[j * d + i].eval(&x);
                if (a_ij - a_ji).abs() > 1e-12 {
                    return Err(SpectralError::NonSymmetricMatrix {
                        norm: (a_ij - a_ji).abs(),
                    }
                    .into());
                }
            }
        }
    }
    let envelope = coef.spectrum_envelope();
    let mut plan = resolve_rd_plan(d, envelope, spec)?;
    let basis = PeriodicBasis::new(d, plan.p)?;
    let quad = gauss_lobatto(plan.q, d)?;
    let n = basis.n_b_extended();

    // trunk budget from the target split, or explicit
    if let Some(eps) = plan.target_eps {
        let u = galerkin_solve(coef, f, plan.p, plan.q)?;
        let sup_u = 1.2 * l2_norm(&|x: &[f64]| u.value(x), d, plan.q + 6)?;
        plan.sup_u_estimate = Some(sup_u);
        plan.eps_b = eps / (3.0 * n as f64 * (2.0 + sup_u));
        if !(plan.eps_b > 0.0 && plan.eps_b < 1.0) {
            return Err(BuildError::InfeasibleBudget {
                what: "eps_b",
                value: plan.eps_b,
            });
        }
    }

    let input = rd_input_layer_net(&basis, &quad, alpha_of(envelope))?;
    debug_assert!(input.size() <= (d * d + 1) * n * n * quad.n_q());
    let eps_inv = match plan.eps_u {
        Some(eps_u) => {
            let a1 = crate::spectral::reference_matrix(&basis, &quad, true);
            let lambda_min = a1.symmetric_eigen().eigenvalues.min();
            let c_a = 1.0 / (lambda_min * n as f64);
            let f_norm = l2_norm(&|x: &[f64]| f.eval(x), d, plan.q + 6)?;
            (eps_u / (f_norm.max(1e-12) * (n as f64).powf(1.5) * c_a)).min(0.999)
        }
        None => plan.eps_inv,
    };
    let parts = branch_pipeline(&basis, &quad, true, input, envelope, f, eps_inv)?;
    plan.eps_inv = parts.eps_inv;
    plan.f_norm = parts.f_norm;
    plan.c_a_estimate = parts.c_a_estimate;
    plan.alpha = parts.alpha;
    plan.delta = parts.delta;

    // trunk: basis members plus an exact constant output
    let (poly, trunk_report) = poly_basis_net(plan.p, d, plan.eps_b)?;
    let constant = affine_net(1, d, Vec::new(), vec![1.0])?;
    let trunk = parallelize(&[poly, constant], true)?;

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
        n_b_constant: None,
        plan,
    };
    Ok(OperatorNet {
        encoder: Encoder {
            kind: EncoderKind::ReactionDiffusion,
            points: quad.nodes.clone(),
        },
        branch: parts.net,
        trunk,
        report,
    })
}

fn resolve_rd_plan(
    d: usize,
    envelope: (f64, f64),
    spec: &PlanSpec,
) -> Result<BuildPlan, BuildError> {
    let alpha = alpha_of(envelope);
    let delta = alpha * envelope.0;
    match spec {
        PlanSpec::Explicit { p, q, eps_inv, eps_b } => Ok(BuildPlan {
            target_eps: None,
            d,
            p: *p,
            q: *q,
            n_b: p.pow(d as u32),
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
        }),
        PlanSpec::Target { eps, calibration } => {
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(BuildError::InfeasibleBudget {
                    what: "eps",
                    value: *eps,
                });
            }
            let p = calibration.order_for(*eps);
            let q = p + 1;
            let n = p.pow(d as u32); // extended dimension
            let c_pol = 4.0 * (d as f64).sqrt();
            let nf = n as f64;
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
                n_b: n,
                n_q: q.pow(d as u32),
                eps_b: f64::NAN,
                eps_u: Some(eps_u),
                eps_g: Some(eps / 3.0),
                eps_inv: 0.0,
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
