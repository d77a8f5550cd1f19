//! Garbled circuits for the non-linear layers: circuit construction,
//! half-gates garbling and oblivious transfer of input labels.

mod circuit;
mod garble;
mod ot;

pub use circuit::*;
pub use garble::{decode, evaluate, garble, GarbledCircuit, InputLabels, Label, GC_HEADER_LEN};
pub use ot::{ot_transfer, OtReceiver, OtSender, POINT_LEN};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GcError {
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("malformed garbled circuit: {0}")]
    Malformed(String),
    #[error("oblivious transfer: {0}")]
    Ot(String),
    #[error("block: {0}")]
    Block(String),
}

/// Garble an activation block and evaluate it locally with the given share
/// values (both parties simulated); returns the client's `c_y`.
pub fn run_block(
    spec: &BlockSpec,
    s_x: &[u64],
    s_y: &[u64],
    c_x: &[u64],
    rng: &mut impl rand::RngCore,
) -> Result<Vec<u64>, GcError> {
    let c = spec.build()?;
    let l = spec.bits();
    let (gc, labels) = garble(&c, rng);
    let bits: Vec<bool> = [to_bits(s_x, l), to_bits(s_y, l), to_bits(c_x, l)].concat();
    if bits.len() != c.input_len() {
        return Err(GcError::InputLength {
            expected: c.input_len(),
            got: bits.len(),
        });
    }
    let client_start = c.input_len() - c.inputs[2].wires.len();
    let mut inputs: Vec<Label> = bits[..client_start]
        .iter()
        .enumerate()
        .map(|(i, &b)| labels.label(i, b))
        .collect();
    let pairs: Vec<[Label; 2]> = (client_start..bits.len()).map(|i| labels.pair(i)).collect();
    inputs.extend(ot_transfer(&pairs, &bits[client_start..], rng)?);
    let out = evaluate(&c, &gc, &inputs)?;
    Ok(from_bits(&decode(&gc, &out), l))
}
