//! Composition calculus: concatenation, sparse concatenation with an exact
//! identity interface, parallelization, and elementary affine/identity nets.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{Layer, NetError, Network};

/// Single-layer net realizing `x -> M x + b` exactly, from triplets.
pub fn affine_net(
    rows: usize,
    cols: usize,
    weights: Vec<(u32, u32, f64)>,
    bias: Vec<f64>,
) -> Result<Network, NetError> {
    Network::new(cols, vec![Layer::new(rows, cols, weights, bias)?])
}

/// Single-layer net realizing `x -> M x + b` from dense inputs. Zero entries
/// of `M` and `b` are not stored.
pub fn affine_net_dense(m: &DMatrix<f64>, b: &DVector<f64>) -> Network {
    let mut trips = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != 0.0 {
                trips.push((r as u32, c as u32, v));
            }
        }
    }
    affine_net(m.nrows(), m.ncols(), trips, b.as_slice().to_vec())
        .expect("dense affine dimensions are consistent by construction")
}

/// Exact identity map of the requested depth.
///
/// Depth 1 is a bare affine layer. Deeper identities split each channel into
/// `relu(x) - relu(-x)` so that negative values survive the hidden ReLUs.
pub fn identity_net(dim: usize, depth: usize) -> Result<Network, NetError> {
    assert!(depth >= 1, "identity depth must be at least 1");
    let eye = |n: usize| -> Vec<(u32, u32, f64)> {
        (0..n).map(|i| (i as u32, i as u32, 1.0)).collect()
    };
    if depth == 1 {
        return affine_net(dim, dim, eye(dim), vec![0.0; dim]);
    }
    let mut split = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        split.push((i as u32, i as u32, 1.0));
        split.push(((dim + i) as u32, i as u32, -1.0));
    }
    let mut layers = vec![Layer::new(2 * dim, dim, split, vec![0.0; 2 * dim])?];
    for _ in 0..depth.saturating_sub(2) {
        layers.push(Layer::new(
            2 * dim,
            2 * dim,
            eye(2 * dim),
            vec![0.0; 2 * dim],
        )?);
    }
    let mut merge = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        merge.push((i as u32, i as u32, 1.0));
        merge.push((i as u32, (dim + i) as u32, -1.0));
    }
    layers.push(Layer::new(dim, 2 * dim, merge, vec![0.0; dim])?);
    Network::new(dim, layers)
}

/// Sparse product C = A * B where both factors are triplet layers.
fn sparse_matmul(
    a: &[(u32, u32, f64)],
    b: &[(u32, u32, f64)],
    b_rows: usize,
) -> Vec<(u32, u32, f64)> {
    // index B by row
    let mut b_by_row: Vec<Vec<(u32, f64)>> = vec![Vec::new(); b_rows];
    for &(r, c, v) in b {
        b_by_row[r as usize].push((c, v));
    }
    let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
    for &(r, k, va) in a {
        for &(c, vb) in &b_by_row[k as usize] {
            *acc.entry((r, c)).or_insert(0.0) += va * vb;
        }
    }
    acc.into_iter().map(|((r, c), v)| (r, c, v)).collect()
}

/// y = A x for a triplet matrix A and a dense vector x.
fn sparse_matvec(a: &[(u32, u32, f64)], rows: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; rows];
    for &(r, c, v) in a {
        y[r as usize] += v * x[c as usize];
    }
    y
}

/// Concatenation: realizes `outer . inner` with `depth(outer) + depth(inner) - 1`
/// layers by fusing the interface into a single affine map
/// `(A1_outer * A_last_inner, A1_outer * b_last_inner + b1_outer)`.
pub fn concat(outer: &Network, inner: &Network) -> Result<Network, NetError> {
    if inner.output_dim() != outer.input_dim() {
        return Err(NetError::ComposeShape {
            outer_in: outer.input_dim(),
            inner_out: inner.output_dim(),
        });
    }
    let inner_last = inner.layers().last().expect("networks have layers");
    let outer_first = &outer.layers()[0];
    let fused_w = sparse_matmul(outer_first.weights(), inner_last.weights(), inner_last.rows());
    let mut fused_b = sparse_matvec(outer_first.weights(), outer_first.rows(), inner_last.bias());
    for (bi, bo) in fused_b.iter_mut().zip(outer_first.bias()) {
        *bi += bo;
    }
    let mut layers: Vec<Layer> = inner.layers()[..inner.depth() - 1].to_vec();
    layers.push(Layer::new(
        outer_first.rows(),
        inner_last.cols(),
        fused_w,
        fused_b,
    )?);
    layers.extend_from_slice(&outer.layers()[1..]);
    Network::new(inner.input_dim(), layers)
}

/// Sparse concatenation: realizes `outer . inner` exactly with
/// `depth(outer) + depth(inner)` layers and
/// `size <= 2 size(outer) + 2 size(inner)`.
///
/// The interface duplicates the inner output as `(relu(y), relu(-y))` and the
/// outer first layer consumes the difference, so signed intermediate values
/// pass through exactly.
pub fn sparse_concat(outer: &Network, inner: &Network) -> Result<Network, NetError> {
    if inner.output_dim() != outer.input_dim() {
        return Err(NetError::ComposeShape {
            outer_in: outer.input_dim(),
            inner_out: inner.output_dim(),
        });
    }
    let d = inner.output_dim();
    let inner_last = inner.layers().last().expect("networks have layers");

    // inner last layer, duplicated with signs: [A; -A], [b; -b]
    let mut dup_w = Vec::with_capacity(2 * inner_last.weights().len());
    for &(r, c, v) in inner_last.weights() {
        dup_w.push((r, c, v));
        dup_w.push((r + d as u32, c, -v));
    }
    let mut dup_b = inner_last.bias().to_vec();
    dup_b.extend(inner_last.bias().iter().map(|b| -b));

    // outer first layer on the split channels: A1 [Id | -Id]
    let outer_first = &outer.layers()[0];
    let mut split_w = Vec::with_capacity(2 * outer_first.weights().len());
    for &(r, c, v) in outer_first.weights() {
        split_w.push((r, c, v));
        split_w.push((r, c + d as u32, -v));
    }

    let mut layers: Vec<Layer> = inner.layers()[..inner.depth() - 1].to_vec();
    layers.push(Layer::new(2 * d, inner_last.cols(), dup_w, dup_b)?);
    layers.push(Layer::new(
        outer_first.rows(),
        2 * d,
        split_w,
        outer_first.bias().to_vec(),
    )?);
    layers.extend_from_slice(&outer.layers()[1..]);
    Network::new(inner.input_dim(), layers)
}

/// Place networks side by side. With `share_input` all members read the same
/// input vector (equal input dimensions required); otherwise inputs are
/// stacked in order. Members of smaller depth are padded with exact identity
/// layers so all branches have equal depth.
pub fn parallelize(nets: &[Network], share_input: bool) -> Result<Network, NetError> {
    if nets.is_empty() {
        return Err(NetError::EmptyParallel);
    }
    if share_input {
        for n in nets {
            if n.input_dim() != nets[0].input_dim() {
                return Err(NetError::SharedInput {
                    a: nets[0].input_dim(),
                    b: n.input_dim(),
                });
            }
        }
    }
    let max_depth = nets.iter().map(Network::depth).max().unwrap();
    // sparse concatenation with a depth-k identity adds exactly k layers
    let padded: Vec<Network> = nets
        .iter()
        .map(|n| {
            let pad = max_depth - n.depth();
            if pad == 0 {
                Ok(n.clone())
            } else {
                sparse_concat(&identity_net(n.output_dim(), pad)?, n)
            }
        })
        .collect::<Result<_, _>>()?;

    let input_dim = if share_input {
        padded[0].input_dim()
    } else {
        padded.iter().map(Network::input_dim).sum()
    };
    let mut layers = Vec::with_capacity(max_depth);
    for l in 0..max_depth {
        let mut rows = 0usize;
        let mut cols = 0usize;
        let mut trips: Vec<(u32, u32, f64)> = Vec::new();
        let mut bias: Vec<f64> = Vec::new();
        for net in &padded {
            let layer = &net.layers()[l];
            let col_off = if l == 0 && share_input { 0 } else { cols };
            for &(r, c, v) in layer.weights() {
                trips.push(((rows + r as usize) as u32, (col_off + c as usize) as u32, v));
            }
            bias.extend_from_slice(layer.bias());
            rows += layer.rows();
            cols = col_off + layer.cols();
        }
        let total_cols = if l == 0 { input_dim } else { cols };
        layers.push(Layer::new(rows, total_cols, trips, bias)?);
    }
    Network::new(input_dim, layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn affine_pair() -> (Network, Network) {
        let m1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]);
        let b1 = DVector::from_vec(vec![0.25, -0.5]);
        let m2 = DMatrix::from_row_slice(2, 3, &[2.0, 0.0, 1.0, -1.0, 3.0, 0.0]);
        let b2 = DVector::from_vec(vec![1.0, -2.0]);
        (affine_net_dense(&m1, &b1), affine_net_dense(&m2, &b2))
    }

    #[test]
    fn concat_composes_affine_maps() {
        // concat(affine(M1,b1), affine(M2,b2)) realizes x -> M1 M2 x + M1 b2 + b1
        let (f, g) = affine_pair();
        let fg = concat(&f, &g).unwrap();
        assert_eq!(fg.depth(), 1);
        let x = [0.3, -1.2, 2.0];
        let want = f.realize(&g.realize(&x).unwrap()).unwrap();
        let got = fg.realize(&x).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn concat_depth_is_additive_minus_one() {
        let d3 = identity_net(2, 3).unwrap();
        let d2 = identity_net(2, 2).unwrap();
        assert_eq!(concat(&d3, &d2).unwrap().depth(), 4);
    }

    #[test]
    fn sparse_concat_preserves_negative_interface_values() {
        // inner output -3 must survive the interface
        let inner = affine_net(1, 1, vec![(0, 0, 1.0)], vec![-3.0]).unwrap();
        let outer = identity_net(1, 1).unwrap();
        let net = sparse_concat(&outer, &inner).unwrap();
        assert_eq!(net.realize(&[0.0]).unwrap(), vec![-3.0]);
        assert_eq!(net.depth(), 2);
    }

    #[test]
    fn sparse_concat_size_bound() {
        let id = identity_net(3, 2).unwrap();
        let net = sparse_concat(&id, &id).unwrap();
        assert_eq!(net.depth(), 4);
        for v in [[1.0, -2.0, 0.5], [-1e3, 3.0, 0.0]] {
            assert_eq!(net.realize(&v).unwrap(), v.to_vec());
        }
        assert!(net.size() <= 2 * id.size() + 2 * id.size());
    }

    #[test]
    fn parallelize_stacks_outputs() {
        let (f, g) = affine_pair();
        let x = [0.1, 0.2];
        let f_out = f.realize(&x).unwrap();
        let both = parallelize(&[f.clone(), f.clone()], true).unwrap();
        let got = both.realize(&x).unwrap();
        assert_eq!(&got[..2], &f_out[..]);
        assert_eq!(&got[2..], &f_out[..]);
        drop(g);
    }

    #[test]
    fn parallelize_pads_depths() {
        let shallow = identity_net(1, 1).unwrap();
        let deep = identity_net(1, 3).unwrap();
        let par = parallelize(&[shallow, deep], false).unwrap();
        assert_eq!(par.depth(), 3);
        let got = par.realize(&[2.0, -5.0]).unwrap();
        assert_eq!(got, vec![2.0, -5.0]);
    }

    #[test]
    fn parallelize_rejects_empty() {
        assert!(matches!(parallelize(&[], true), Err(NetError::EmptyParallel)));
    }

    #[test]
    fn affine_of_identity_is_identity() {
        let net = affine_net_dense(&DMatrix::identity(3, 3), &DVector::zeros(3));
        let x = [4.0, -2.0, 0.0];
        assert_eq!(net.realize(&x).unwrap(), x.to_vec());
    }
}
