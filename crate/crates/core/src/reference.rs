//! Plaintext evaluation of a network over `Z_p` with exactly the semantics of
//! the secure protocol; the ground truth for every end-to-end test.

use crate::conv::{conv2d_reference, Filters};
use crate::linalg::WeightMatrix;
use crate::protocol::{Layer, Network, ProtocolError};

fn signed(v: u64, p: u64) -> i64 {
    if v > p / 2 {
        v as i64 - p as i64
    } else {
        v as i64
    }
}

/// Output of every layer.
pub fn evaluate_trace(net: &Network, input: &[u64]) -> Result<Vec<Vec<u64>>, ProtocolError> {
    let shapes = net.shapes()?;
    if !net.has_weights() {
        return Err(ProtocolError::Network("network has no weights".into()));
    }
    if input.len() != net.input.len() {
        return Err(ProtocolError::Network(format!(
            "input has {} values, expected {}",
            input.len(),
            net.input.len()
        )));
    }
    let p = net.modulus;
    let mut x: Vec<u64> = input.iter().map(|v| v % p).collect();
    let mut shape = net.input;
    let mut trace = Vec::with_capacity(net.layers.len());
    for (layer, &next) in net.layers.iter().zip(&shapes) {
        x = match layer {
            Layer::Fc {
                n_i,
                n_o,
                weights,
                bias,
            } => {
                let mut w = WeightMatrix::new(*n_o, *n_i, weights.clone().expect("checked"))
                    .map_err(|e| ProtocolError::Network(e.to_string()))?;
                w.bias = bias.clone();
                w.apply(&x, p)
            }
            Layer::Conv {
                spec,
                weights,
                bias,
            } => {
                let f = Filters {
                    spec: *spec,
                    data: weights.clone().expect("checked"),
                    bias: bias.clone(),
                };
                conv2d_reference(&f, &x, p)
            }
            Layer::Relu { shift } => x
                .iter()
                .map(|&v| (signed(v, p).max(0) >> shift) as u64)
                .collect(),
            Layer::Square => x
                .iter()
                .map(|&v| ((v as u128 * v as u128) % p as u128) as u64)
                .collect(),
            Layer::MaxPool => {
                let mut out = Vec::with_capacity(next.len());
                for c in 0..next.c {
                    for y in 0..next.h {
                        for xx in 0..next.w {
                            let at = |dy: usize, dx: usize| {
                                x[(c * shape.h + 2 * y + dy) * shape.w + 2 * xx + dx]
                            };
                            let m = [at(0, 0), at(0, 1), at(1, 0), at(1, 1)]
                                .into_iter()
                                .max_by_key(|&v| signed(v, p))
                                .unwrap();
                            out.push(m);
                        }
                    }
                }
                out
            }
        };
        shape = next;
        trace.push(x.clone());
    }
    Ok(trace)
}

/// Final output (logits as residues mod `p`).
pub fn evaluate(net: &Network, input: &[u64]) -> Result<Vec<u64>, ProtocolError> {
    Ok(evaluate_trace(net, input)?
        .pop()
        .expect("non-empty network"))
}
