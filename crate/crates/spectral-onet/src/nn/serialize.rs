//! JSON serialization of networks.
//!
//! The document carries `input_dim` and a list of layers, each with `rows`,
//! `cols`, `weights` as (row, col, value) triplets and `bias` as a dense
//! array. Round-trips are bit-exact for finite doubles.

use serde::{Deserialize, Serialize};

use super::{Layer, NetError, Network};

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    rows: usize,
    cols: usize,
    weights: Vec<(u32, u32, f64)>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    input_dim: usize,
    layers: Vec<LayerDoc>,
}

impl Network {
    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            input_dim: self.input_dim(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerDoc {
                    rows: l.rows(),
                    cols: l.cols(),
                    weights: l.weights().to_vec(),
                    bias: l.bias().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("network serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        let doc: NetworkDoc =
            serde_json::from_str(text).map_err(|e| NetError::Json(e.to_string()))?;
        let layers = doc
            .layers
            .into_iter()
            .map(|l| Layer::new(l.rows, l.cols, l.weights, l.bias))
            .collect::<Result<Vec<_>, _>>()?;
        Network::new(doc.input_dim, layers)
    }
}

#[cfg(test)]
mod tests {
    use crate::nn::compose::affine_net;
    use crate::nn::Network;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = affine_net(
            2,
            2,
            vec![
                (0, 0, 0.1 + 0.2),
                (0, 1, -1.0 / 3.0),
                (1, 0, f64::MIN_POSITIVE),
                (1, 1, 1e300),
            ],
            vec![std::f64::consts::PI, -0.0],
        )
        .unwrap();
        let back = Network::from_json(&net.to_json()).unwrap();
        for (a, b) in net.layers()[0].weights().iter().zip(back.layers()[0].weights()) {
            assert_eq!(a.2.to_bits(), b.2.to_bits());
        }
        for (a, b) in net.layers()[0].bias().iter().zip(back.layers()[0].bias()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn malformed_json_is_rejected() {
        assert!(Network::from_json("{\"input_dim\": 2}").is_err());
    }
}
