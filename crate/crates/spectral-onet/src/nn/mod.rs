//! Feed-forward ReLU networks with sparse weights.
//!
//! A network is a sequence of affine layers `(A_l, b_l)`; the realization
//! applies ReLU between layers and leaves the last layer affine:
//!
//! ```text
//! x_0 = x,   x_l = relu(A_l x_{l-1} + b_l)  for l < L,   x_L = A_L x_{L-1} + b_L.
//! ```
//!
//! Weights are stored as coordinate triplets so that `size` (the number of
//! stored nonzero weight and bias entries) is exact bookkeeping, not an
//! estimate. Networks are immutable after construction and realization is a
//! pure function, so shared read-only use across threads is safe.

mod compose;
mod gradient;
mod serialize;

pub use compose::{
    affine_net, affine_net_dense, concat, identity_net, parallelize, sparse_concat,
};
pub use gradient::net_gradient;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("input length {got} does not match network input dimension {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("layer {layer}: weight has {cols} columns but previous layer width is {prev}")]
    LayerChain { layer: usize, cols: usize, prev: usize },
    #[error("outer network expects {outer_in} inputs but inner network produces {inner_out}")]
    ComposeShape { outer_in: usize, inner_out: usize },
    #[error("cannot parallelize an empty collection of networks")]
    EmptyParallel,
    #[error("shared-input parallelization requires equal input dimensions (found {a} and {b})")]
    SharedInput { a: usize, b: usize },
    #[error("bias length {got} does not match {rows} rows")]
    BiasLength { rows: usize, got: usize },
    #[error("weight entry ({r}, {c}) outside a {rows}x{cols} layer")]
    EntryRange {
        r: usize,
        c: usize,
        rows: usize,
        cols: usize,
    },
    #[error("network must have at least one layer")]
    NoLayers,
    #[error("invalid network JSON: {0}")]
    Json(String),
}

/// One affine layer `x -> A x + b` with sparse `A` and dense `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    /// (row, col, value) triplets, coalesced, zero entries dropped,
    /// sorted by (row, col).
    weights: Vec<(u32, u32, f64)>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<(u32, u32, f64)>,
        bias: Vec<f64>,
    ) -> Result<Self, NetError> {
        if bias.len() != rows {
            return Err(NetError::BiasLength {
                rows,
                got: bias.len(),
            });
        }
        for &(r, c, _) in &weights {
            if r as usize >= rows || c as usize >= cols {
                return Err(NetError::EntryRange {
                    r: r as usize,
                    c: c as usize,
                    rows,
                    cols,
                });
            }
        }
        let mut weights = weights;
        coalesce(&mut weights);
        Ok(Layer {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[(u32, u32, f64)] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Nonzero weight and bias entries of this layer.
    pub fn size(&self) -> usize {
        self.weights.len() + self.bias.iter().filter(|b| **b != 0.0).count()
    }

    /// y = A x + b.
    fn apply(&self, x: &[f64], y: &mut Vec<f64>) {
        y.clear();
        y.extend_from_slice(&self.bias);
        for &(r, c, v) in &self.weights {
            y[r as usize] += v * x[c as usize];
        }
    }
}

/// Sum duplicate (row, col) entries, drop exact zeros, sort by (row, col).
fn coalesce(trips: &mut Vec<(u32, u32, f64)>) {
    trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let mut out: Vec<(u32, u32, f64)> = Vec::with_capacity(trips.len());
    for &(r, c, v) in trips.iter() {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|&(_, _, v)| v != 0.0);
    *trips = out;
}

/// A feed-forward ReLU network: affine layers with ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::NoLayers);
        }
        let mut prev = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.cols != prev {
                return Err(NetError::LayerChain {
                    layer: i,
                    cols: layer.cols,
                    prev,
                });
            }
            prev = layer.rows;
        }
        Ok(Network { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.rows).unwrap_or(self.input_dim)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total count of stored nonzero weight and bias entries.
    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::size).sum()
    }

    /// Widest layer, input included.
    pub fn max_width(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.rows)
            .chain(std::iter::once(self.input_dim))
            .max()
            .unwrap_or(0)
    }

    /// Forward pass. ReLU is applied after every layer except the last.
    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::InputShape {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if l < last {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Realization at a single scalar input (convenience for 1-d nets).
    pub fn realize1(&self, x: f64) -> Result<Vec<f64>, NetError> {
        self.realize(&[x])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::compose::{affine_net_dense, identity_net};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn single_affine_layer() {
        // (A=[[2]], b=[3]) on x=[1] -> [5]; last layer has no activation
        let net = Network::new(
            1,
            vec![Layer::new(1, 1, vec![(0, 0, 2.0)], vec![3.0]).unwrap()],
        )
        .unwrap();
        assert_eq!(net.realize(&[1.0]).unwrap(), vec![5.0]);
        assert_eq!(net.realize(&[-4.0]).unwrap(), vec![-5.0]);
    }

    #[test]
    fn relu_clamps_hidden_layer() {
        // ((A=[[1]], b=[-1]), (A=[[1]], b=[0])) on x=[0.5] -> [0]
        let net = Network::new(
            1,
            vec![
                Layer::new(1, 1, vec![(0, 0, 1.0)], vec![-1.0]).unwrap(),
                Layer::new(1, 1, vec![(0, 0, 1.0)], vec![0.0]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(net.realize(&[0.5]).unwrap(), vec![0.0]);
        assert_eq!(net.realize(&[3.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn identity_passes_signed_values() {
        let id = identity_net(3, 2).unwrap();
        assert_eq!(id.realize(&[-1.0, 0.0, 2.0]).unwrap(), vec![-1.0, 0.0, 2.0]);
        let id5 = identity_net(2, 5).unwrap();
        assert_eq!(id5.realize(&[1.0, -1.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(id5.depth(), 5);
    }

    #[test]
    fn size_counts_stored_nonzeros() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = DVector::from_vec(vec![0.0, 3.0]);
        let net = affine_net_dense(&m, &b);
        assert_eq!(net.size(), 3); // nnz(M) + nnz(b)
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let net = Network::new(
            1,
            vec![Layer::new(1, 1, vec![(0, 0, 1.0)], vec![0.0]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            net.realize(&[1.0, 2.0]),
            Err(NetError::InputShape { .. })
        ));
        let bad = Network::new(
            2,
            vec![Layer::new(1, 1, vec![(0, 0, 1.0)], vec![0.0]).unwrap()],
        );
        assert!(matches!(bad, Err(NetError::LayerChain { .. })));
    }

    #[test]
    fn coalesce_sums_duplicates_and_drops_zeros() {
        let layer = Layer::new(
            1,
            1,
            vec![(0, 0, 1.0), (0, 0, 2.0), (0, 0, -3.0)],
            vec![1.0],
        )
        .unwrap();
        assert!(layer.weights().is_empty());
        assert_eq!(layer.size(), 1);
    }
}
