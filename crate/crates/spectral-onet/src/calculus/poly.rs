//! Emulation of polynomial bases and analytic functions.
//!
//! Three-term recurrences (Legendre for the trunk basis, Chebyshev for
//! analytic interpolation) are unrolled into chains of product networks with
//! exact affine recombination; tensor products across axes are formed by
//! further product rounds. Internal product accuracies start from a budgeted
//! guess and are halved until the a-posteriori verification meets the target,
//! since the constants in the underlying approximation results are not
//! explicit.

use super::product::product_layer_net;
use super::ApproxError;
use crate::nn::{affine_net, concat, net_gradient, parallelize, Network};
use crate::spectral::{gauss_lobatto, PeriodicBasis, ScalarEval};

const MAX_ESCALATIONS: usize = 40;

/// Measured structure of a trunk basis network.
#[derive(Debug, Clone)]
pub struct PolyBasisReport {
    pub p: usize,
    pub d: usize,
    pub n_b: usize,
    pub target: f64,
    pub h1_error: f64,
    pub sup_error: f64,
    pub escalations: usize,
    pub size: usize,
    pub depth: usize,
    /// `n_b^{2/d} + n_b^{1/d} |log eps| + n_b (1 + log n_b + |log eps|)`
    pub size_shape: f64,
}

/// Chain producing `v_1, ..., v_k` of a three-term recurrence
/// `v_{n+1} = alpha_n (t v_n) + beta_n v_{n-1}` with `v_0 = 1`, `v_1 = t`,
/// `t = scale * x + shift`. Each `t * v_n` is a product network with
/// per-product accuracy `eps_prod` on values bounded by `bound`.
fn recurrence_chain(
    scale: f64,
    shift: f64,
    coeffs: &[(f64, f64)],
    bound: f64,
    eps_prod: f64,
) -> Result<Network, ApproxError> {
    let mut net = affine_net(1, 1, vec![(0, 0, scale)], vec![shift])?;
    // state after step n: (v_1 = t, v_2, ..., v_{n+1})
    for (n, &(alpha, beta)) in coeffs.iter().enumerate() {
        let n = n + 1; // recurrence index
        let width = n; // current state width
        let keep: Vec<usize> = (0..width).collect();
        let pairs = [(0usize, width - 1)]; // t * v_n
        let products = product_layer_net(width, &keep, &pairs, bound, eps_prod)?;
        let mut w = Vec::new();
        for i in 0..width {
            w.push((i as u32, i as u32, 1.0));
        }
        // v_{n+1} = alpha * prod + beta * v_{n-1}
        w.push((width as u32, width as u32, alpha));
        let mut bias = vec![0.0; width + 1];
        if n == 1 {
            bias[width] = beta; // v_0 = 1
        } else {
            w.push((width as u32, (n - 2) as u32, beta));
        }
        let combine = affine_net(width + 1, width + 1, w, bias)?;
        net = concat(&concat(&combine, &products)?, &net)?;
    }
    Ok(net)
}

/// Tensor-product rounds: from per-axis value blocks (axis-major, `radix - 1`
/// values per axis for digits `1..radix`) to all partial products indexed by
/// nonzero flat multi-indices `1..radix^d` with the first axis least
/// significant. A value with digit 0 contributes the constant factor one and
/// is skipped.
fn tensor_partials(
    inner: Network,
    d_axes: usize,
    radix: usize,
    eps_prod: f64,
) -> Result<Network, ApproxError> {
    let r = radix;
    let per_axis = r - 1;
    let mut net = inner;
    for a in 2..=d_axes {
        let p_sz = r.pow(a as u32 - 1) - 1;
        let rest_sz = (d_axes - a) * per_axis;
        let in_width = p_sz + per_axis + rest_sz;
        debug_assert_eq!(net.output_dim(), in_width);
        let keep: Vec<usize> = (0..in_width).collect();
        let mut pairs = Vec::with_capacity(p_sz * per_axis);
        for t in 1..r {
            for m in 1..=p_sz {
                pairs.push((m - 1, p_sz + t - 1));
            }
        }
        // values of a-fold products are bounded by 2^a with slack
        let bound = 1.5 * (2.0f64).powi(a as i32);
        let products = product_layer_net(in_width, &keep, &pairs, bound, eps_prod)?;
        let out_parts = r.pow(a as u32) - 1;
        let mut w = Vec::with_capacity(out_parts + rest_sz);
        for m_new in 1..=out_parts {
            let t = m_new / r.pow(a as u32 - 1);
            let m = m_new % r.pow(a as u32 - 1);
            let src = if t == 0 {
                m - 1
            } else if m == 0 {
                p_sz + t - 1
            } else {
                in_width + (t - 1) * p_sz + (m - 1)
            };
            w.push(((m_new - 1) as u32, src as u32, 1.0));
        }
        for k in 0..rest_sz {
            w.push(((out_parts + k) as u32, (p_sz + per_axis + k) as u32, 1.0));
        }
        let reorder = affine_net(
            out_parts + rest_sz,
            in_width + pairs.len(),
            w,
            vec![0.0; out_parts + rest_sz],
        )?;
        net = concat(&concat(&reorder, &products)?, &net)?;
    }
    Ok(net)
}

/// Build the chain + emission for the periodized Legendre members of one
/// axis: input `x` (scalar), output `phi^{1d}_1(x), ..., phi^{1d}_{p-1}(x)`.
fn phi_axis_chain(p: usize, eps_prod: f64) -> Result<Network, ApproxError> {
    // Legendre recurrence up to degree p
    let coeffs: Vec<(f64, f64)> = (1..p)
        .map(|n| {
            let nf = n as f64;
            ((2.0 * nf + 1.0) / (nf + 1.0), -nf / (nf + 1.0))
        })
        .collect();
    let chain = recurrence_chain(2.0, -1.0, &coeffs, 2.0, eps_prod)?;
    // state: (v_1 = L_1, v_2 = L_2, ..., v_p = L_p)
    let mut w = Vec::new();
    for j in 1..p {
        let row = (j - 1) as u32;
        w.push((row, j as u32, 1.0)); // L_{j+1} at slot j
        if j % 2 == 0 {
            w.push((row, 0, -1.0)); // minus L_1 for even members
        }
    }
    let emit = affine_net(p - 1, p, w, vec![0.0; p - 1])?;
    Ok(concat(&emit, &chain)?)
}

fn build_poly_basis(p: usize, d: usize, eps_prod: f64) -> Result<Network, ApproxError> {
    let chain = phi_axis_chain(p, eps_prod)?;
    let axes = if d == 1 {
        chain
    } else {
        let mut per_axis = Vec::with_capacity(d);
        for j in 0..d {
            let select = affine_net(1, d, vec![(0, j as u32, 1.0)], vec![0.0])?;
            per_axis.push(concat(&chain, &select)?);
        }
        parallelize(&per_axis, true)?
    };
    tensor_partials(axes, d, p, eps_prod)
}

/// Trunk network: `d` inputs, `p^d - 1` outputs approximating the periodized
/// basis members in `H^1(Q)` (and uniformly) to `eps_b`, verified a
/// posteriori on a fine grid with the exact piecewise-linear Jacobian. The
/// internal product accuracy is escalated until the target holds.
pub fn poly_basis_net(
    p: usize,
    d: usize,
    eps_b: f64,
) -> Result<(Network, PolyBasisReport), ApproxError> {
    assert!(p >= 2 && (1..=3).contains(&d));
    assert!(eps_b > 0.0 && eps_b < 1.0);
    let basis = PeriodicBasis::new(d, p)?;
    let n_b = basis.n_b();
    // initial budget: one product per recurrence step and tensor round,
    // amplified by at most the gradient scale of the members
    let grad_bound = 2.0 * ((p + 1) * (p + 1)) as f64 * (2.0f64).powi(d as i32);
    let mut eps_prod = eps_b / (3.0 * (p * d) as f64 * grad_bound);
    let q_err = (2 * p + 6).max(match d {
        1 => 64,
        2 => 24,
        _ => 8,
    });
    let rule = gauss_lobatto(q_err, d)?;

    let mut escalations = 0;
    loop {
        let net = build_poly_basis(p, d, eps_prod)?;
        let (h1, sup) = measure_basis_error(&net, &basis, &rule)?;
        if h1 <= eps_b && sup <= eps_b {
            let nf = n_b as f64;
            let le = eps_b.ln().abs();
            let report = PolyBasisReport {
                p,
                d,
                n_b,
                target: eps_b,
                h1_error: h1,
                sup_error: sup,
                escalations,
                size: net.size(),
                depth: net.depth(),
                size_shape: nf.powf(2.0 / d as f64)
                    + nf.powf(1.0 / d as f64) * le
                    + nf * (1.0 + nf.ln() + le),
            };
            return Ok((net, report));
        }
        escalations += 1;
        if escalations > MAX_ESCALATIONS {
            return Err(ApproxError::ApproxFailure {
                target: eps_b,
                achieved: h1.max(sup),
                attempts: escalations,
            });
        }
        eps_prod *= 0.5;
    }
}

/// Worst per-member H1 error and sup error of the net against the basis.
fn measure_basis_error(
    net: &Network,
    basis: &PeriodicBasis,
    rule: &crate::spectral::QuadratureRule,
) -> Result<(f64, f64), ApproxError> {
    let n_b = basis.n_b();
    let mut l2 = vec![0.0; n_b];
    let mut grad2 = vec![0.0; n_b];
    let mut sup: f64 = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let got = net.realize(x)?;
        let jac = net_gradient(net, x)?;
        let (values, grads) = basis.eval_all(x, false);
        for i in 0..n_b {
            let dv = values[i] - got[i];
            sup = sup.max(dv.abs());
            l2[i] += w * dv * dv;
            for j in 0..basis.d {
                let dg = grads[i][j] - jac[(i, j)];
                grad2[i] += w * dg * dg;
            }
        }
    }
    let h1 = (0..n_b)
        .map(|i| (l2[i] + grad2[i]).sqrt())
        .fold(0.0f64, f64::max);
    Ok((h1, sup))
}

/// Chebyshev coefficients of the interpolant through the extrema nodes
/// `cos(pi j / n)`, by the discrete cosine transform.
pub fn chebyshev_coefficients(values_at_nodes: &[f64]) -> Vec<f64> {
    let n = values_at_nodes.len() - 1;
    let mut coeffs = vec![0.0; n + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, v) in values_at_nodes.iter().enumerate() {
            let term = v * (std::f64::consts::PI * (k * j) as f64 / n as f64).cos();
            acc += if j == 0 || j == n { 0.5 * term } else { term };
        }
        let norm = if k == 0 || k == n {
            n as f64
        } else {
            n as f64 / 2.0
        };
        *c = acc / norm;
    }
    coeffs
}

/// Measured structure of an analytic-approximation network.
#[derive(Debug, Clone)]
pub struct AnalyticReport {
    pub degree: usize,
    pub sup_error: f64,
    pub escalations: usize,
    pub size: usize,
    pub depth: usize,
}

/// Network emulating `funcs` on the box `[lo, hi]^{d_p}` to uniform accuracy
/// `eps`: Chebyshev interpolation of adaptively doubled degree, then product
/// networks for the basis terms, verified against the functions on a dense
/// sample and escalated until the target holds.
pub fn analytic_approx_net(
    funcs: &[ScalarEval],
    lo: &[f64],
    hi: &[f64],
    eps: f64,
) -> Result<(Network, AnalyticReport), ApproxError> {
    assert!(!funcs.is_empty());
    assert_eq!(lo.len(), hi.len());
    assert!(eps > 0.0 && eps < 1.0);
    let d_p = lo.len();

    // sample grid for validation
    let per_axis = match d_p {
        1 => 4001,
        2 => 101,
        _ => 23,
    };
    let grid = sample_grid(lo, hi, per_axis);

    // adapt the interpolation degree until the interpolant is within eps/2
    let mut degree = 4usize;
    let coeff_tensors = loop {
        let tensors: Vec<Vec<f64>> = funcs
            .iter()
            .map(|f| tensor_chebyshev(f, lo, hi, d_p, degree))
            .collect();
        let mut worst: f64 = 0.0;
        for y in &grid {
            let t_tab = t_table(y, lo, hi, d_p, degree);
            for (f, c) in funcs.iter().zip(&tensors) {
                let approx = eval_tensor(c, &t_tab, d_p, degree);
                worst = worst.max((f.eval(y) - approx).abs());
            }
        }
        if worst <= 0.5 * eps {
            break tensors;
        }
        degree *= 2;
        if degree > 256 {
            return Err(ApproxError::ApproxFailure {
                target: 0.5 * eps,
                achieved: worst,
                attempts: 7,
            });
        }
    };

    // coefficient magnitude drives the product budget
    let coeff_sum: f64 = coeff_tensors
        .iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(1.0f64, f64::max);
    let mut eps_prod = eps / (4.0 * (degree + 1) as f64 * d_p as f64 * coeff_sum);
    let mut escalations = 0;
    loop {
        let net = build_cheb_net(&coeff_tensors, lo, hi, d_p, degree, eps_prod)?;
        let mut worst: f64 = 0.0;
        for y in &grid {
            let got = net.realize(y)?;
            for (i, f) in funcs.iter().enumerate() {
                worst = worst.max((f.eval(y) - got[i]).abs());
            }
        }
        if worst <= eps {
            let report = AnalyticReport {
                degree,
                sup_error: worst,
                escalations,
                size: net.size(),
                depth: net.depth(),
            };
            return Ok((net, report));
        }
        escalations += 1;
        if escalations > MAX_ESCALATIONS {
            return Err(ApproxError::ApproxFailure {
                target: eps,
                achieved: worst,
                attempts: escalations,
            });
        }
        eps_prod *= 0.5;
    }
}

fn sample_grid(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    let total = per_axis.pow(d as u32);
    let mut grid = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut y = Vec::with_capacity(d);
        for j in 0..d {
            let i = rest % per_axis;
            rest /= per_axis;
            y.push(lo[j] + (hi[j] - lo[j]) * i as f64 / (per_axis - 1) as f64);
        }
        grid.push(y);
    }
    grid
}

/// Tensor Chebyshev coefficients of `f` on the box, degree `n` per axis.
fn tensor_chebyshev(f: &ScalarEval, lo: &[f64], hi: &[f64], d_p: usize, n: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let total = (n + 1).pow(d_p as u32);
    let mut values = vec![0.0; total];
    let mut y = vec![0.0; d_p];
    for (flat, value) in values.iter_mut().enumerate() {
        let mut rest = flat;
        for j in 0..d_p {
            let idx = rest % (n + 1);
            rest /= n + 1;
            y[j] = lo[j] + (hi[j] - lo[j]) * (nodes[idx] + 1.0) / 2.0;
        }
        *value = f.eval(&y);
    }
    // separable DCT along each axis
    let stride_of = |axis: usize| (n + 1).pow(axis as u32);
    let mut work = values;
    for axis in 0..d_p {
        let stride = stride_of(axis);
        let mut out = vec![0.0; total];
        for base in 0..total {
            if (base / stride) % (n + 1) != 0 {
                continue;
            }
            let line: Vec<f64> = (0..=n).map(|j| work[base + j * stride]).collect();
            let coeffs = chebyshev_coefficients(&line);
            for (j, c) in coeffs.iter().enumerate() {
                out[base + j * stride] = *c;
            }
        }
        work = out;
    }
    work
}

/// Per-axis Chebyshev values `T_0..T_n` at a point.
fn t_table(y: &[f64], lo: &[f64], hi: &[f64], d_p: usize, n: usize) -> Vec<Vec<f64>> {
    let mut tab = Vec::with_capacity(d_p);
    for j in 0..d_p {
        let t = (2.0 * y[j] - lo[j] - hi[j]) / (hi[j] - lo[j]);
        let mut row = Vec::with_capacity(n + 1);
        row.push(1.0);
        row.push(t);
        for k in 1..n {
            let next = 2.0 * t * row[k] - row[k - 1];
            row.push(next);
        }
        tab.push(row);
    }
    tab
}

fn eval_tensor(coeffs: &[f64], t_tab: &[Vec<f64>], d_p: usize, n: usize) -> f64 {
    let mut acc = 0.0;
    for (flat, c) in coeffs.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let mut rest = flat;
        let mut term = *c;
        for t_row in t_tab.iter().take(d_p) {
            let k = rest % (n + 1);
            rest /= n + 1;
            term *= t_row[k];
        }
        acc += term;
    }
    acc
}

fn build_cheb_net(
    coeff_tensors: &[Vec<f64>],
    lo: &[f64],
    hi: &[f64],
    d_p: usize,
    n: usize,
    eps_prod: f64,
) -> Result<Network, ApproxError> {
    // chain per axis emitting T_1..T_n
    let coeffs: Vec<(f64, f64)> = (1..n).map(|_| (2.0, -1.0)).collect();
    let axes = if d_p == 1 {
        let scale = 2.0 / (hi[0] - lo[0]);
        let shift = -(lo[0] + hi[0]) / (hi[0] - lo[0]);
        recurrence_chain(scale, shift, &coeffs, 2.0, eps_prod)?
    } else {
        let mut per_axis = Vec::with_capacity(d_p);
        for j in 0..d_p {
            let scale = 2.0 / (hi[j] - lo[j]);
            let shift = -(lo[j] + hi[j]) / (hi[j] - lo[j]);
            let select = affine_net(1, d_p, vec![(0, j as u32, 1.0)], vec![0.0])?;
            let chain = recurrence_chain(scale, shift, &coeffs, 2.0, eps_prod)?;
            per_axis.push(concat(&chain, &select)?);
        }
        parallelize(&per_axis, true)?
    };
    let partials = tensor_partials(axes, d_p, n + 1, eps_prod)?;
    // final affine: per function, coefficients over the nonzero multi-indices
    let n_parts = (n + 1).pow(d_p as u32) - 1;
    let mut w = Vec::new();
    let mut bias = Vec::with_capacity(coeff_tensors.len());
    for (row, tensor) in coeff_tensors.iter().enumerate() {
        bias.push(tensor[0]);
        for m in 1..=n_parts {
            if tensor[m] != 0.0 {
                w.push((row as u32, (m - 1) as u32, tensor[m]));
            }
        }
    }
    let combine = affine_net(coeff_tensors.len(), n_parts, w, bias)?;
    Ok(concat(&combine, &partials)?)
}
