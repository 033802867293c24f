//! Exact Jacobian of the piecewise-linear realization.

use nalgebra::DMatrix;

use super::{NetError, Network};

/// Jacobian of `realize` at `x`, computed by forward propagation of the
/// chain rule through the active ReLU pattern. At a breakpoint the
/// convention `relu'(0) = 0` applies; away from breakpoints this equals the
/// classical derivative.
pub fn net_gradient(net: &Network, x: &[f64]) -> Result<DMatrix<f64>, NetError> {
    if x.len() != net.input_dim() {
        return Err(NetError::InputShape {
            expected: net.input_dim(),
            got: x.len(),
        });
    }
    let d = net.input_dim();
    let mut cur = x.to_vec();
    let mut jac = DMatrix::<f64>::identity(d, d);
    let last = net.depth() - 1;
    for (l, layer) in net.layers().iter().enumerate() {
        let mut next = layer.bias().to_vec();
        let mut jac_next = DMatrix::<f64>::zeros(layer.rows(), d);
        for &(r, c, v) in layer.weights() {
            next[r as usize] += v * cur[c as usize];
            for k in 0..d {
                jac_next[(r as usize, k)] += v * jac[(c as usize, k)];
            }
        }
        if l < last {
            for (r, value) in next.iter_mut().enumerate() {
                if *value <= 0.0 {
                    if *value < 0.0 {
                        *value = 0.0;
                    }
                    jac_next.row_mut(r).fill(0.0);
                }
            }
        }
        cur = next;
        jac = jac_next;
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::compose::{affine_net, affine_net_dense};
    use crate::nn::{Layer, Network};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn affine_jacobian_is_the_matrix() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, 1.0]);
        let net = affine_net_dense(&m, &DVector::from_vec(vec![1.0, 2.0]));
        let j = net_gradient(&net, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(j, m);
    }

    #[test]
    fn relu_derivative_sign() {
        // 1-d net rho(x): gradient 0 at x=-1, 1 at x=+1
        let net = Network::new(
            1,
            vec![
                Layer::new(1, 1, vec![(0, 0, 1.0)], vec![0.0]).unwrap(),
                Layer::new(1, 1, vec![(0, 0, 1.0)], vec![0.0]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(net_gradient(&net, &[-1.0]).unwrap()[(0, 0)], 0.0);
        assert_eq!(net_gradient(&net, &[1.0]).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn matches_value_slope_on_affine_piece() {
        let net = affine_net(1, 1, vec![(0, 0, 3.0)], vec![-1.0]).unwrap();
        let j = net_gradient(&net, &[0.7]).unwrap();
        assert_eq!(j[(0, 0)], 3.0);
    }
}
