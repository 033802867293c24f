//! Approximate matrix inversion `vec(A) -> vec((Id - A)^{-1})` for
//! `||A||_2 <= 1 - delta`, by emulating the partial Neumann product
//!
//! ```text
//! (Id - A)^{-1} ~ prod_{k=0}^{s-1} (Id + A^{2^k}) = sum_{j < 2^s} A^j
//! ```
//!
//! with approximate matrix products. Truncating after `2^s >= m(eps, delta)`
//! terms leaves a series tail below `eps/2`; the network error budget of the
//! remaining `eps/2` is split uniformly over the per-stage products with the
//! worst-case norm amplification `1/delta^2` priced in.

use nalgebra::DMatrix;

use super::product::product_layer_net;
use super::{m_terms, ApproxError, ApproxSpec};
use crate::nn::{affine_net, concat, Network};

/// Measured structure of a built inversion network, together with the
/// theoretical bound shapes it is compared against (constants calibrated
/// empirically, only the shape is asserted).
#[derive(Debug, Clone)]
pub struct InversionReport {
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub terms: usize,
    pub stages: usize,
    pub depth: usize,
    pub size: usize,
    /// `(1 + log m)(log(1/eps) + log m + log N)`
    pub depth_shape: f64,
    /// `m (1 + log^2 m) N^3 (log(1/eps) + log m + log N)`
    pub size_shape: f64,
}

/// Validation helper: does `A` satisfy the admissibility hypothesis
/// `||A||_2 <= 1 - delta`? The builder itself cannot see the norm.
pub fn inversion_input_ok(a: &DMatrix<f64>, delta: f64) -> bool {
    spectral_norm(a) <= 1.0 - delta
}

/// Matrix 2-norm via the symmetric eigenvalues of `A^T A`.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    eig.eigenvalues.max().max(0.0).sqrt()
}

/// Build the inversion network for `N x N` inputs at accuracy
/// `spec.epsilon` and margin `spec.delta`.
///
/// For admissible inputs the matricized output is within `spec.epsilon` of
/// `(Id - A)^{-1}` in the spectral norm and its norm stays below
/// `spec.epsilon + 1/delta`. Accuracies of 1/4 and above are accepted (the
/// guarantee degrades gracefully), mirroring how the construction is used
/// with relaxed interior budgets.
pub fn inversion_net(n: usize, spec: &ApproxSpec) -> Result<(Network, InversionReport), ApproxError> {
    let eps = spec.epsilon;
    let delta = spec.delta;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ApproxError::EpsilonRange { epsilon: eps });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ApproxError::DeltaRange { delta });
    }
    let nn = n * n;
    let terms = m_terms(eps, delta);
    let stages = usize::BITS as usize - (terms - 1).leading_zeros() as usize; // ceil(log2)
    let stages = if terms == 1 { 0 } else { stages.max(1) };

    let net = if stages == 0 {
        // one Neumann term: the constant Id already meets the tolerance
        affine_net(nn, nn, Vec::new(), vec_identity(n))?
    } else {
        // Per-product budget for the eps/2 network share. Entrywise matmul
        // errors reach the spectral norm through a factor n^2; stage errors
        // compound through the partial-product norms (bounded via delta) and
        // across stages, priced as delta / (64 stages^2).
        let eps_entry =
            eps * delta / (64.0 * (stages * stages) as f64 * (n * n) as f64);
        let bound = 2.0 / delta;

        // init: state (vec(P), vec(S)) = (vec(Id + A), vec(A))
        let mut w_init = Vec::with_capacity(2 * nn);
        let mut b_init = vec_identity(n);
        b_init.extend(std::iter::repeat_n(0.0, nn));
        for i in 0..nn {
            w_init.push((i as u32, i as u32, 1.0));
            w_init.push(((nn + i) as u32, i as u32, 1.0));
        }
        let mut net = affine_net(2 * nn, nn, w_init, b_init)?;

        for stage in 1..stages {
            // S <- S^2
            net = concat(&square_stage(n, bound, eps_entry)?, &net)?;
            // P <- P + P S (last stage does not need to carry S)
            let keep_s = stage + 1 < stages;
            net = concat(&multiply_stage(n, bound, eps_entry, keep_s)?, &net)?;
        }
        if stages == 1 {
            // single factor: output P = Id + A directly
            let mut w_sel = Vec::with_capacity(nn);
            for i in 0..nn {
                w_sel.push((i as u32, i as u32, 1.0));
            }
            net = concat(&affine_net(nn, 2 * nn, w_sel, vec![0.0; nn])?, &net)?;
        }
        net
    };

    let depth = net.depth();
    let size = net.size();
    let log_m = (terms as f64).ln().max(0.0);
    let log_eps = (1.0 / eps).ln();
    let log_n = (n as f64).ln().max(1.0);
    let report = InversionReport {
        n,
        epsilon: eps,
        delta,
        terms,
        stages,
        depth,
        size,
        depth_shape: (1.0 + log_m) * (log_eps + log_m + log_n),
        size_shape: terms as f64
            * (1.0 + log_m * log_m)
            * (n as f64).powi(3)
            * (log_eps + log_m + log_n),
    };
    Ok((net, report))
}

fn vec_identity(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}

/// Stage mapping state `(vec(P), vec(S))` to `(vec(P), vec(S^2))`.
fn square_stage(n: usize, bound: f64, eps: f64) -> Result<Network, ApproxError> {
    let nn = n * n;
    let keep: Vec<usize> = (0..nn).collect();
    let mut pairs = Vec::with_capacity(nn * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                pairs.push((nn + j * n + i, nn + k * n + j)); // S_ij S_jk
            }
        }
    }
    let products = product_layer_net(2 * nn, &keep, &pairs, bound, eps)?;
    // combine: pass P, sum products into vec(S^2)
    let mut w = Vec::with_capacity(nn + pairs.len());
    for i in 0..nn {
        w.push((i as u32, i as u32, 1.0));
    }
    for out in 0..nn {
        for j in 0..n {
            w.push(((nn + out) as u32, (nn + out * n + j) as u32, 1.0));
        }
    }
    let combine = affine_net(2 * nn, nn + pairs.len(), w, vec![0.0; 2 * nn])?;
    Ok(concat(&combine, &products)?)
}

/// Stage mapping `(vec(P), vec(S))` to `(vec(P + P S), vec(S))`, optionally
/// dropping the `S` carry on the final stage.
fn multiply_stage(
    n: usize,
    bound: f64,
    eps: f64,
    keep_s: bool,
) -> Result<Network, ApproxError> {
    let nn = n * n;
    let keep: Vec<usize> = (0..2 * nn).collect();
    let mut pairs = Vec::with_capacity(nn * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                pairs.push((j * n + i, nn + k * n + j)); // P_ij S_jk
            }
        }
    }
    let products = product_layer_net(2 * nn, &keep, &pairs, bound, eps)?;
    let out_dim = if keep_s { 2 * nn } else { nn };
    let mut w = Vec::new();
    for out in 0..nn {
        w.push((out as u32, out as u32, 1.0)); // P
        for j in 0..n {
            w.push((out as u32, (2 * nn + out * n + j) as u32, 1.0)); // + (P S)
        }
    }
    if keep_s {
        for i in 0..nn {
            w.push(((nn + i) as u32, (nn + i) as u32, 1.0));
        }
    }
    let combine = affine_net(out_dim, 2 * nn + pairs.len(), w, vec![0.0; out_dim])?;
    Ok(concat(&combine, &products)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_zero_inverts_to_one() {
        let spec = ApproxSpec::new(1e-3, 1.0).unwrap().with_delta(0.5).unwrap();
        let (net, _) = inversion_net(1, &spec).unwrap();
        let got = net.realize(&[0.0]).unwrap()[0];
        assert!((got - 1.0).abs() <= 1e-3, "got {got}");
    }

    #[test]
    fn scalar_geometric_series() {
        // (1 - 0.5)^{-1} = 2
        let spec = ApproxSpec::new(1e-3, 1.0).unwrap().with_delta(0.5).unwrap();
        let (net, report) = inversion_net(1, &spec).unwrap();
        let got = net.realize(&[0.5]).unwrap()[0];
        assert!((got - 2.0).abs() <= 1e-3, "got {got}");
        assert!(report.terms >= 4);
        assert_eq!(report.size, net.size());
    }

    #[test]
    fn single_term_budget_returns_identity() {
        // with delta >= 2/(2+eps) one Neumann term suffices: output is Id
        let spec = ApproxSpec::new(0.9, 1.0).unwrap().with_delta(0.95).unwrap();
        let (net, report) = inversion_net(2, &spec).unwrap();
        assert_eq!(report.stages, 0);
        let out = net.realize(&[0.01, 0.0, 0.0, 0.01]).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn small_symmetric_matrices_against_direct_solve() {
        use nalgebra::DMatrix;
        let n = 3;
        let delta = 0.4;
        let eps = 1e-2;
        let spec = ApproxSpec::new(eps, 1.0).unwrap().with_delta(delta).unwrap();
        let (net, _) = inversion_net(n, &spec).unwrap();
        let mut seed = 99u64;
        let mut rnd = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..20 {
            let raw = DMatrix::from_fn(n, n, |_, _| rnd());
            let sym = (&raw + raw.transpose()) * 0.5;
            let norm = spectral_norm(&sym);
            let a = sym * ((1.0 - delta) * 0.9 / norm);
            assert!(inversion_input_ok(&a, delta));
            let exact = (DMatrix::identity(n, n) - &a)
                .try_inverse()
                .expect("Id - A invertible");
            let out = net.realize(a.as_slice()).unwrap();
            let got = DMatrix::from_column_slice(n, n, &out);
            let err = spectral_norm(&(exact - &got));
            assert!(err <= eps, "error {err} > {eps}");
            assert!(spectral_norm(&got) <= eps + 1.0 / delta);
        }
    }
}
