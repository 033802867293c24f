//! Branch construction: the exact input layer mapping coefficient samples to
//! the assembled stiffness, its preconditioned variant, the inversion stage,
//! and the solution-coefficient head.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::BuildError;
use crate::calculus::{inversion_net, ApproxSpec, InversionReport};
use crate::nn::{affine_net, concat, sparse_concat, Network};
use crate::spectral::{
    gauss_lobatto, l2_norm, reference_matrix, tabulate, PeriodicBasis, QuadratureRule,
    ScalarEval, SpectralError,
};

/// One-layer net whose matricized realization at the encoded coefficient
/// equals `-alpha A^a` exactly: column `k` holds
/// `-alpha w_k vec(grad phi_i . grad phi_j at x_k)`.
pub fn input_layer_net(
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
    let n_b = basis.n_b();
    let d = basis.d;
    let tables = tabulate(basis, quad, false);
    let mut trips = Vec::new();
    for (k, w) in quad.weights.iter().enumerate() {
        let g = &tables.grads[k];
        for j in 0..n_b {
            for i in 0..n_b {
                let dot: f64 = (0..d).map(|m| g[i][m] * g[j][m]).sum();
                let v = -alpha * w * dot;
                if v != 0.0 {
                    trips.push(((j * n_b + i) as u32, k as u32, v));
                }
            }
        }
    }
    Ok(affine_net(
        n_b * n_b,
        quad.n_q(),
        trips,
        vec![0.0; n_b * n_b],
    )?)
}

/// Two-layer net matricizing to `Id - alpha (A^1)^{-1} A^a`: an affine layer
/// `(Id kron (A^1)^{-1}, vec(Id))` sparsely concatenated onto the input
/// layer.
pub fn preconditioned_input_net(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    alpha: f64,
    a1_inv: &DMatrix<f64>,
) -> Result<Network, BuildError> {
    let input = input_layer_net(basis, quad, alpha)?;
    let outer = kron_identity_affine(a1_inv, true)?;
    Ok(sparse_concat(&outer, &input)?)
}

/// Affine net `x -> (Id kron B) x [+ vec(Id)]` for square `B`.
fn kron_identity_affine(b: &DMatrix<f64>, add_identity_bias: bool) -> Result<Network, BuildError> {
    let n = b.nrows();
    let mut trips = Vec::with_capacity(n * n * n);
    for blk in 0..n {
        let off = (blk * n) as u32;
        for c in 0..n {
            for r in 0..n {
                let v = b[(r, c)];
                if v != 0.0 {
                    trips.push((off + r as u32, off + c as u32, v));
                }
            }
        }
    }
    let mut bias = vec![0.0; n * n];
    if add_identity_bias {
        for i in 0..n {
            bias[i * n + i] = 1.0;
        }
    }
    Ok(affine_net(n * n, n * n, trips, bias)?)
}

/// Everything the branch pipeline derives from the discretization; shared by
/// the plain, parametric and reaction-diffusion builders.
pub struct BranchParts {
    pub net: Network,
    pub inversion: InversionReport,
    pub alpha: f64,
    pub delta: f64,
    pub eps_inv: f64,
    pub f_norm: f64,
    pub c_a_estimate: f64,
    /// Nonzero count of the exact input layer alone.
    pub input_layer_size: usize,
}

/// Inversion pipeline on top of an arbitrary exact input layer: scale by
/// `alpha Id` after inverting the preconditioned matrix.
fn inversion_over_input(
    n: usize,
    input_layer: &Network,
    a1: DMatrix<f64>,
    envelope: (f64, f64),
    eps_inv: f64,
) -> Result<(Network, InversionReport, f64, f64), BuildError> {
    if !(eps_inv > 0.0) {
        return Err(BuildError::InfeasibleBudget {
            what: "eps_inv",
            value: eps_inv,
        });
    }
    let (lo, hi) = envelope;
    let alpha = 1.0 / (lo + hi);
    let delta = alpha * lo;
    let a1_inv = Cholesky::new(a1).ok_or(SpectralError::NotCoercive)?.inverse();
    let pre = sparse_concat(&kron_identity_affine(&a1_inv, true)?, input_layer)?;

    // the inner network inverts at relaxed accuracy eps_inv / alpha; the
    // closing affine alpha Id scales the error back down
    let inner_eps = (eps_inv / alpha).min(0.999);
    let spec = ApproxSpec::new(inner_eps, 1.0)?.with_delta(delta)?;
    let (inv, report) = inversion_net(n, &spec)?;

    let composed = sparse_concat(&inv, &pre)?;
    let mut w = Vec::with_capacity(n * n);
    for i in 0..(n * n) {
        w.push((i as u32, i as u32, alpha));
    }
    let scale = affine_net(n * n, n * n, w, vec![0.0; n * n])?;
    let net = concat(&scale, &composed)?;
    Ok((net, report, alpha, delta))
}

/// Network matricizing to an approximation of `((A^1)^{-1} A^a)^{-1}` with
/// spectral-norm error below `eps_inv` over coefficients within the declared
/// bounds: `alpha Id` composed with the inversion network composed with the
/// preconditioned input layer.
pub fn branch_inversion_net(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    bounds: (f64, f64),
    eps_inv: f64,
) -> Result<(Network, InversionReport, f64, f64), BuildError> {
    let input = input_layer_net(basis, quad, alpha_of(bounds))?;
    let a1 = reference_matrix(basis, quad, false);
    inversion_over_input(basis.n_b(), &input, a1, bounds, eps_inv)
}

pub(crate) fn alpha_of(bounds: (f64, f64)) -> f64 {
    1.0 / (bounds.0 + bounds.1)
}

/// Full branch over an arbitrary input layer: head `(c~_f^T kron Id)` on the
/// inversion pipeline.
pub(crate) fn branch_pipeline(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    extended: bool,
    input_layer: Network,
    envelope: (f64, f64),
    f: &ScalarEval,
    eps_inv: f64,
) -> Result<BranchParts, BuildError> {
    let n = if extended {
        basis.n_b_extended()
    } else {
        basis.n_b()
    };
    let d = basis.d;
    let input_layer_size = input_layer.size();

    // load vector on the finer rule, preconditioned by the reference inverse
    let fine = gauss_lobatto(quad.q + 4, d)?;
    let tables = tabulate(basis, &fine, extended);
    let mut rhs = DVector::<f64>::zeros(n);
    for (k, x) in fine.nodes.iter().enumerate() {
        let wf = fine.weights[k] * f.eval(x);
        for i in 0..n {
            rhs[i] += wf * tables.values[k][i];
        }
    }
    let a1 = reference_matrix(basis, quad, extended);
    let lambda_min = a1.clone().symmetric_eigen().eigenvalues.min();
    if lambda_min <= 0.0 {
        return Err(SpectralError::NotCoercive.into());
    }
    let c_a_estimate = 1.0 / (lambda_min * n as f64);
    let chol = Cholesky::new(a1.clone()).ok_or(SpectralError::NotCoercive)?;
    let rhs_tilde = chol.solve(&rhs);
    let f_norm = l2_norm(&|x: &[f64]| f.eval(x), d, quad.q + 6)?;

    let (inv_net, inversion, alpha, delta) =
        inversion_over_input(n, &input_layer, a1, envelope, eps_inv)?;

    // (c~_f^T kron Id): row i picks sum_j c~_j X_{ij}
    let mut w = Vec::with_capacity(n * n);
    for j in 0..n {
        let c = rhs_tilde[j];
        if c != 0.0 {
            for i in 0..n {
                w.push((i as u32, (j * n + i) as u32, c));
            }
        }
    }
    let head = affine_net(n, n * n, w, vec![0.0; n])?;
    let net = sparse_concat(&head, &inv_net)?;

    Ok(BranchParts {
        net,
        inversion,
        alpha,
        delta,
        eps_inv,
        f_norm,
        c_a_estimate,
        input_layer_size,
    })
}

/// Branch head approximating `a -> c_u = (A^a)^{-1} c_f`, with the interior
/// budget `eps_inv = eps_u / (||f|| n_b^{3/2} C_A)` and `C_A` measured from
/// the smallest reference eigenvalue.
pub fn branch_coeff_net(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    bounds: (f64, f64),
    f: &ScalarEval,
    eps_u: f64,
) -> Result<BranchParts, BuildError> {
    if !(eps_u > 0.0 && eps_u < 1.0) {
        return Err(BuildError::InfeasibleBudget {
            what: "eps_u",
            value: eps_u,
        });
    }
    let n_b = basis.n_b();
    let a1 = reference_matrix(basis, quad, false);
    let lambda_min = a1.symmetric_eigen().eigenvalues.min();
    if lambda_min <= 0.0 {
        return Err(SpectralError::NotCoercive.into());
    }
    let c_a_estimate = 1.0 / (lambda_min * n_b as f64);
    let f_norm = l2_norm(&|x: &[f64]| f.eval(x), basis.d, quad.q + 6)?;
    let eps_inv =
        (eps_u / (f_norm.max(1e-12) * (n_b as f64).powf(1.5) * c_a_estimate)).min(0.999);
    branch_coeff_net_at(basis, quad, bounds, f, eps_inv)
}

/// As `branch_coeff_net`, but with the interior inversion accuracy given
/// explicitly.
pub fn branch_coeff_net_at(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    bounds: (f64, f64),
    f: &ScalarEval,
    eps_inv: f64,
) -> Result<BranchParts, BuildError> {
    let input = input_layer_net(basis, quad, alpha_of(bounds))?;
    branch_pipeline(basis, quad, false, input, bounds, f, eps_inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::spectral::{assemble, CoefficientField};

    fn matricize(v: &[f64], n: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(n, n, v)
    }

    #[test]
    fn input_layer_reproduces_unit_stiffness() {
        // d=1, p=3, q=4, a == 1, alpha = 1: matricized output = -diag(12, 20)
        let basis = PeriodicBasis::new(1, 3).unwrap();
        let quad = gauss_lobatto(4, 1).unwrap();
        let net = input_layer_net(&basis, &quad, 1.0).unwrap();
        let ones = vec![1.0; quad.n_q()];
        let out = net.realize(&ones).unwrap();
        let m = matricize(&out, 2);
        assert!((m[(0, 0)] + 12.0).abs() < 1e-12);
        assert!((m[(1, 1)] + 20.0).abs() < 1e-12);
        assert!(m[(0, 1)].abs() < 1e-12);
        assert!(net.size() <= basis.n_b().pow(2) * quad.n_q());
    }

    #[test]
    fn input_layer_is_linear_in_the_coefficient() {
        let basis = PeriodicBasis::new(1, 4).unwrap();
        let quad = gauss_lobatto(5, 1).unwrap();
        let net = input_layer_net(&basis, &quad, 0.7).unwrap();
        let zeros = vec![0.0; quad.n_q()];
        let out = net.realize(&zeros).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn input_layer_matches_assembly() {
        let basis = PeriodicBasis::new(1, 4).unwrap();
        let quad = gauss_lobatto(5, 1).unwrap();
        let alpha = 0.5;
        let net = input_layer_net(&basis, &quad, alpha).unwrap();
        let a_expr = Expr::add(vec![Expr::constant(1.0), Expr::sin_mode(&[1], 0.5)]);
        let coef = CoefficientField::scalar(1, a_expr.clone(), 0.5, 1.5);
        let f = ScalarEval::Expr(Expr::sin_mode(&[1], 1.0));
        let sys = assemble(&coef, &basis, &quad, &f).unwrap();
        let samples: Vec<f64> = quad.nodes.iter().map(|x| a_expr.eval(x)).collect();
        let out = net.realize(&samples).unwrap();
        let got = matricize(&out, basis.n_b());
        let want = sys.stiffness.clone() * (-alpha);
        let scale = sys.stiffness.amax().max(1.0);
        assert!((got - want).amax() <= 1e-12 * scale);
    }

    #[test]
    fn preconditioned_net_unit_coefficient() {
        // a == 1: output matricizes to (1 - alpha) Id
        let basis = PeriodicBasis::new(1, 4).unwrap();
        let quad = gauss_lobatto(5, 1).unwrap();
        let alpha = 0.4;
        let a1 = reference_matrix(&basis, &quad, false);
        let a1_inv = Cholesky::new(a1).unwrap().inverse();
        let net = preconditioned_input_net(&basis, &quad, alpha, &a1_inv).unwrap();
        assert_eq!(net.depth(), 2);
        let ones = vec![1.0; quad.n_q()];
        let out = net.realize(&ones).unwrap();
        let m = matricize(&out, basis.n_b());
        let want = DMatrix::<f64>::identity(basis.n_b(), basis.n_b()) * (1.0 - alpha);
        assert!((m - want).amax() <= 1e-11);
    }

    #[test]
    fn inversion_branch_on_unit_coefficient_is_identity() {
        let basis = PeriodicBasis::new(1, 4).unwrap();
        let quad = gauss_lobatto(5, 1).unwrap();
        let eps = 1e-2;
        let (net, _, _, _) = branch_inversion_net(&basis, &quad, (0.5, 1.5), eps).unwrap();
        let ones = vec![1.0; quad.n_q()];
        let out = net.realize(&ones).unwrap();
        let m = matricize(&out, basis.n_b());
        let id = DMatrix::<f64>::identity(basis.n_b(), basis.n_b());
        let err = crate::calculus::spectral_norm(&(m - id));
        assert!(err <= eps, "error {err}");
    }

    #[test]
    fn coeff_branch_reproduces_inverse_times_load() {
        // a == 1, p=3: A = diag(12,20), c_f = (1/5, 0) for f = L_2,
        // c_u = (1/60, 0)
        let basis = PeriodicBasis::new(1, 3).unwrap();
        let quad = gauss_lobatto(4, 1).unwrap();
        let f = ScalarEval::Fn(std::sync::Arc::new(|x: &[f64]| {
            crate::spectral::shifted_legendre(2, x[0]).0
        }));
        let eps_u = 1e-3;
        let parts = branch_coeff_net(&basis, &quad, (0.5, 1.5), &f, eps_u).unwrap();
        let ones = vec![1.0; quad.n_q()];
        let out = parts.net.realize(&ones).unwrap();
        assert!((out[0] - 1.0 / 60.0).abs() <= eps_u, "{}", out[0]);
        assert!(out[1].abs() <= eps_u);
    }
}
