//! Approximate multiplication by ReLU networks.
//!
//! The square is emulated on [0, 1] by the piecewise-linear interpolant
//! `f_m(z)` built from m composed hat functions; the product follows from the
//! polarization `xy = ((x+y)^2 - x^2 - y^2) / 2` applied to `|x+y|/(2M)`,
//! `|x|/(2M)`, `|y|/(2M)`. When one factor is exactly zero, two of the three
//! square chains receive bit-identical inputs and the third is zero; the
//! output layer is ordered so that their contributions cancel pairwise, which
//! makes the product exactly zero on the axes, not just small.

use super::{ApproxError, ApproxSpec};
use crate::nn::{affine_net, concat, Layer, NetError, Network};

/// Interpolation levels for product error `eps` at domain bound `M`: the
/// interpolant satisfies `|f_m(z) - z^2| <= 4^{-m}/4`, and the polarization
/// scales the worst case to `(3/2) M^2 4^{-m}`.
fn square_levels(eps: f64, bound: f64) -> usize {
    let needed = (1.5 * bound * bound / eps).ln() / (4.0f64).ln();
    (needed.ceil() as isize).max(1) as usize
}

/// Network computing `x[keep]` exactly together with approximate products
/// `x[a] * x[b]` for each pair, all sharing one ReLU pipeline of uniform
/// depth.
///
/// Kept channels ride through as `relu(x) - relu(-x)`. Every product is
/// within `eps` of the exact product for inputs bounded by `bound`, and is
/// exactly zero whenever one of its factors is zero.
pub fn product_layer_net(
    input_dim: usize,
    keep: &[usize],
    pairs: &[(usize, usize)],
    bound: f64,
    eps: f64,
) -> Result<Network, NetError> {
    assert!(bound > 0.0 && eps > 0.0);
    let m = square_levels(eps, bound);
    let n_keep = keep.len();
    let n_pair = pairs.len();
    let out_dim = n_keep + n_pair;
    let inv2m = 0.5 / bound;

    // layer 1: kept channels split as (relu(x), relu(-x)); per pair the
    // positive/negative halves of (x+y)/(2M), x/(2M), y/(2M)
    let width1 = 2 * n_keep + 6 * n_pair;
    let mut w1 = Vec::new();
    let b1 = vec![0.0; width1];
    for (i, &k) in keep.iter().enumerate() {
        w1.push(((2 * i) as u32, k as u32, 1.0));
        w1.push(((2 * i + 1) as u32, k as u32, -1.0));
    }
    let pair_base = 2 * n_keep;
    for (pi, &(a, b)) in pairs.iter().enumerate() {
        let base = (pair_base + 6 * pi) as u32;
        w1.push((base, a as u32, inv2m));
        w1.push((base, b as u32, inv2m));
        w1.push((base + 1, a as u32, -inv2m));
        w1.push((base + 1, b as u32, -inv2m));
        w1.push((base + 2, a as u32, inv2m));
        w1.push((base + 3, a as u32, -inv2m));
        w1.push((base + 4, b as u32, inv2m));
        w1.push((base + 5, b as u32, -inv2m));
    }
    let mut layers = vec![Layer::new(width1, input_dim, w1, b1)?];

    // Chain layers. Per pair, three square chains with four units each,
    // laid out unit-type-major so chains of one type sit in adjacent
    // columns: [a1 a2 a3 | b1 b2 b3 | c1 c2 c3 | F1 F2 F3]. The adjacency
    // makes the output-layer accumulation cancel chain against chain
    // exactly in the zero-factor cases.
    //
    // Chain recurrence (g_0 = z, F_0 = z):
    //   a_j = relu(g_{j-1}), b_j = relu(g_{j-1} - 1/2), c_j = relu(g_{j-1} - 1)
    //   F_j = relu(F_{j-1} - g_{j-1}/4^{j-1})
    // with g_j = 2 a_j - 4 b_j + 2 c_j formed in the consuming layer. All
    // carried quantities are nonnegative, so the ReLUs are pass-through.
    let chain_width = 2 * n_keep + 12 * n_pair;
    let unit = |pi: usize, ty: usize, ch: usize| (2 * n_keep + 12 * pi + 3 * ty + ch) as u32;
    for level in 1..=m {
        let mut w = Vec::new();
        let mut bias = vec![0.0; chain_width];
        for i in 0..n_keep {
            w.push(((2 * i) as u32, (2 * i) as u32, 1.0));
            w.push(((2 * i + 1) as u32, (2 * i + 1) as u32, 1.0));
        }
        for pi in 0..n_pair {
            for ch in 0..3usize {
                let (a_dst, b_dst, c_dst, f_dst) = (
                    unit(pi, 0, ch),
                    unit(pi, 1, ch),
                    unit(pi, 2, ch),
                    unit(pi, 3, ch),
                );
                if level == 1 {
                    // inputs: the two halves of this chain from layer 1
                    let src = (pair_base + 6 * pi + 2 * ch) as u32;
                    for (dst, shift) in
                        [(a_dst, 0.0), (b_dst, -0.5), (c_dst, -1.0), (f_dst, 0.0)]
                    {
                        w.push((dst, src, 1.0));
                        w.push((dst, src + 1, 1.0));
                        bias[dst as usize] = shift;
                    }
                } else {
                    let (a_src, b_src, c_src, f_src) = (a_dst, b_dst, c_dst, f_dst);
                    let scale = 0.25f64.powi(level as i32 - 1);
                    for (dst, shift) in [(a_dst, 0.0), (b_dst, -0.5), (c_dst, -1.0)] {
                        w.push((dst, a_src, 2.0));
                        w.push((dst, b_src, -4.0));
                        w.push((dst, c_src, 2.0));
                        bias[dst as usize] = shift;
                    }
                    w.push((f_dst, f_src, 1.0));
                    w.push((f_dst, a_src, -2.0 * scale));
                    w.push((f_dst, b_src, 4.0 * scale));
                    w.push((f_dst, c_src, -2.0 * scale));
                }
            }
        }
        let prev_width = if level == 1 { width1 } else { chain_width };
        layers.push(Layer::new(chain_width, prev_width, w, bias)?);
    }

    // Output layer: kept channels recombine as u+ - u-; products as
    // 2 M^2 (F_m^(1) - F_m^(2) - F_m^(3)) with F_m = F - g_m / 4^m expanded
    // into the unit-type groups.
    let mut wf = Vec::new();
    let bf = vec![0.0; out_dim];
    for i in 0..n_keep {
        wf.push((i as u32, (2 * i) as u32, 1.0));
        wf.push((i as u32, (2 * i + 1) as u32, -1.0));
    }
    let two_m2 = 2.0 * bound * bound;
    let scale = 0.25f64.powi(m as i32);
    for pi in 0..n_pair {
        let row = (n_keep + pi) as u32;
        for (ch, sign) in [(0usize, 1.0), (1, -1.0), (2, -1.0)] {
            wf.push((row, unit(pi, 0, ch), -sign * two_m2 * 2.0 * scale));
            wf.push((row, unit(pi, 1, ch), sign * two_m2 * 4.0 * scale));
            wf.push((row, unit(pi, 2, ch), -sign * two_m2 * 2.0 * scale));
            wf.push((row, unit(pi, 3, ch), sign * two_m2));
        }
    }
    layers.push(Layer::new(out_dim, chain_width, wf, bf)?);
    Network::new(input_dim, layers)
}

/// Two-input product network: `|realize((x, y)) - x y| <= eps` for
/// `|x|, |y| <= M`, exactly zero when a factor is zero. Size and depth grow
/// as `O(log(1/eps) + log M)`.
pub fn product_net(spec: &ApproxSpec) -> Result<Network, ApproxError> {
    if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) {
        return Err(ApproxError::EpsilonRange {
            epsilon: spec.epsilon,
        });
    }
    if spec.bound < 1.0 {
        return Err(ApproxError::BoundRange { bound: spec.bound });
    }
    Ok(product_layer_net(
        2,
        &[],
        &[(0, 1)],
        spec.bound,
        spec.epsilon,
    )?)
}

/// Matrix-product network on `(vec(B), vec(C))` with `B` of shape `n x m`
/// and `C` of shape `m x l` (column-major vectorization): the output
/// approximates `vec(B C)` with entrywise error `<= spec.epsilon` for
/// entries bounded by `spec.bound`. Built from `n*l*m` parallel product
/// chains and a summing layer.
pub fn matmul_net(
    n: usize,
    m: usize,
    l: usize,
    spec: &ApproxSpec,
) -> Result<Network, ApproxError> {
    let input_dim = n * m + m * l;
    let mut pairs = Vec::with_capacity(n * l * m);
    for k in 0..l {
        for i in 0..n {
            for j in 0..m {
                let b_idx = j * n + i; // B_ij, column-major
                let c_idx = n * m + k * m + j; // C_jk
                pairs.push((b_idx, c_idx));
            }
        }
    }
    let per_product = spec.epsilon / m as f64;
    let products = product_layer_net(input_dim, &[], &pairs, spec.bound, per_product)?;
    let mut wsum = Vec::with_capacity(pairs.len());
    for out in 0..(n * l) {
        for j in 0..m {
            wsum.push((out as u32, (out * m + j) as u32, 1.0));
        }
    }
    let sum = affine_net(n * l, pairs.len(), wsum, vec![0.0; n * l])?;
    Ok(concat(&sum, &products)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_vanishes_with_zero_factor() {
        let spec = ApproxSpec::new(1e-4, 4.0).unwrap();
        let net = product_net(&spec).unwrap();
        assert_eq!(net.realize(&[0.0, 7.0]).unwrap()[0], 0.0);
        assert_eq!(net.realize(&[3.0, 0.0]).unwrap()[0], 0.0);
        assert_eq!(net.realize(&[0.0, -2.5]).unwrap()[0], 0.0);
        assert_eq!(net.realize(&[-3.9, 0.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn product_accuracy_at_reference_point() {
        let spec = ApproxSpec::new(1e-6, 4.0).unwrap();
        let net = product_net(&spec).unwrap();
        let got = net.realize(&[2.0, 3.0]).unwrap()[0];
        assert!((got - 6.0).abs() <= 1e-6, "got {got}");
    }

    #[test]
    fn product_sup_error_on_grid() {
        let spec = ApproxSpec::new(1e-5, 2.0).unwrap();
        let net = product_net(&spec).unwrap();
        let mut worst: f64 = 0.0;
        let steps = 60;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = -2.0 + 4.0 * i as f64 / steps as f64;
                let y = -2.0 + 4.0 * j as f64 / steps as f64;
                let got = net.realize(&[x, y]).unwrap()[0];
                worst = worst.max((got - x * y).abs());
            }
        }
        assert!(worst <= 1e-5, "sup error {worst}");
    }

    #[test]
    fn product_depth_grows_logarithmically() {
        let d1 = product_net(&ApproxSpec::new(1e-2, 1.0).unwrap())
            .unwrap()
            .depth();
        let d2 = product_net(&ApproxSpec::new(1e-8, 1.0).unwrap())
            .unwrap()
            .depth();
        assert!(d2 > d1);
        assert!(d2 <= d1 + 12);
    }

    #[test]
    fn keep_channels_are_exact() {
        let net = product_layer_net(3, &[0, 2], &[(0, 1)], 2.0, 1e-6).unwrap();
        let out = net.realize(&[-1.5, 0.5, 0.25]).unwrap();
        assert_eq!(out[0], -1.5);
        assert_eq!(out[1], 0.25);
        assert!((out[2] - (-0.75)).abs() <= 1e-6);
    }

    #[test]
    fn matmul_identity_times_random() {
        let spec = ApproxSpec::new(1e-6, 2.0).unwrap();
        let net = matmul_net(2, 2, 2, &spec).unwrap();
        let b = [1.0, 0.0, 0.0, 1.0]; // Id2, column-major
        let c = [0.3, -0.7, 1.2, 0.9];
        let mut input = Vec::new();
        input.extend_from_slice(&b);
        input.extend_from_slice(&c);
        let out = net.realize(&input).unwrap();
        for (got, want) in out.iter().zip(&c) {
            assert!((got - want).abs() <= 2e-6);
        }
    }

    #[test]
    fn matmul_zero_factor_is_exact_zero() {
        let spec = ApproxSpec::new(1e-4, 2.0).unwrap();
        let net = matmul_net(2, 2, 2, &spec).unwrap();
        let mut input = vec![0.0; 4];
        input.extend_from_slice(&[0.5, -1.0, 0.25, 2.0]);
        let out = net.realize(&input).unwrap();
        assert!(out.iter().all(|v| *v == 0.0), "{out:?}");
    }

    #[test]
    fn matmul_operator_norm_error() {
        use nalgebra::DMatrix;
        let n = 3;
        let spec = ApproxSpec::new(1e-5, 2.0).unwrap();
        let net = matmul_net(n, n, n, &spec).unwrap();
        let mut seed = 1234u64;
        let mut rnd = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..5 {
            let b = DMatrix::from_fn(n, n, |_, _| rnd() * 1.5);
            let c = DMatrix::from_fn(n, n, |_, _| rnd() * 1.5);
            let mut input: Vec<f64> = b.as_slice().to_vec();
            input.extend_from_slice(c.as_slice());
            let out = net.realize(&input).unwrap();
            let got = DMatrix::from_column_slice(n, n, &out);
            let err = (&b * &c - got).norm(); // Frobenius dominates the 2-norm
            assert!(err <= 1e-5 * (n as f64) * (n as f64).sqrt());
        }
    }
}
