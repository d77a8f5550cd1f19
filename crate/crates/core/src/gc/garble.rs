//! Free-XOR + point-and-permute + half-gates garbling with a fixed-key AES
//! hash.

use std::sync::OnceLock;

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128;
use rand::RngCore;

use super::circuit::{Circuit, Gate};
use super::GcError;

pub type Label = u128;

const MAGIC: u32 = u32::from_le_bytes(*b"GCv1");
/// magic u32, AND count u32, output count u32.
pub const GC_HEADER_LEN: usize = 12;

fn cipher() -> &'static Aes128 {
    static C: OnceLock<Aes128> = OnceLock::new();
    C.get_or_init(|| Aes128::new(&[0x5a; 16].into()))
}

/// `π(K) ⊕ K` with `K = 2·x ⊕ tweak` (doubling in GF(2^128)).
#[inline]
fn hash(x: Label, tweak: u64) -> Label {
    let dbl = (x << 1) ^ if x >> 127 == 1 { 0x87 } else { 0 };
    let k = dbl ^ tweak as u128;
    let mut block = k.to_le_bytes().into();
    cipher().encrypt_block(&mut block);
    u128::from_le_bytes(block.into()) ^ k
}

#[inline]
fn lsb(x: Label) -> bool {
    x & 1 == 1
}

#[inline]
fn sel(b: bool, x: Label) -> Label {
    if b {
        x
    } else {
        0
    }
}

/// Garbled tables (two rows per AND gate) and output decoding bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledCircuit {
    pub tables: Vec<[Label; 2]>,
    pub decode: Vec<bool>,
}

impl GarbledCircuit {
    pub fn size_bytes(&self) -> usize {
        GC_HEADER_LEN + 32 * self.tables.len() + self.decode.len().div_ceil(8)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.size_bytes());
        out.extend(MAGIC.to_le_bytes());
        out.extend((self.tables.len() as u32).to_le_bytes());
        out.extend((self.decode.len() as u32).to_le_bytes());
        for [a, b] in &self.tables {
            out.extend(a.to_le_bytes());
            out.extend(b.to_le_bytes());
        }
        let mut bits = vec![0u8; self.decode.len().div_ceil(8)];
        for (i, &d) in self.decode.iter().enumerate() {
            bits[i / 8] |= (d as u8) << (i % 8);
        }
        out.extend(bits);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, GcError> {
        let word = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        if b.len() < GC_HEADER_LEN || word(0) != MAGIC {
            return Err(GcError::Malformed("bad garbled circuit header".into()));
        }
        let (ands, outs) = (word(4) as usize, word(8) as usize);
        let need = GC_HEADER_LEN + 32 * ands + outs.div_ceil(8);
        if b.len() != need {
            return Err(GcError::Malformed(format!(
                "garbled circuit has {} bytes, expected {need}",
                b.len()
            )));
        }
        let lab = |i: usize| u128::from_le_bytes(b[i..i + 16].try_into().unwrap());
        let tables = (0..ands)
            .map(|k| {
                [
                    lab(GC_HEADER_LEN + 32 * k),
                    lab(GC_HEADER_LEN + 32 * k + 16),
                ]
            })
            .collect();
        let off = GC_HEADER_LEN + 32 * ands;
        let decode = (0..outs)
            .map(|i| b[off + i / 8] >> (i % 8) & 1 == 1)
            .collect();
        Ok(Self { tables, decode })
    }
}

/// Garbler secrets: the zero-labels of all input wires and the global offset.
#[derive(Clone, Debug)]
pub struct InputLabels {
    pub delta: Label,
    pub zero: Vec<Label>,
}

impl InputLabels {
    pub fn label(&self, wire: usize, bit: bool) -> Label {
        self.zero[wire] ^ sel(bit, self.delta)
    }

    /// Both labels of an input wire (for oblivious transfer).
    pub fn pair(&self, wire: usize) -> [Label; 2] {
        [self.zero[wire], self.zero[wire] ^ self.delta]
    }
}

/// Garble `c`. Deterministic in the rng.
pub fn garble(c: &Circuit, rng: &mut impl RngCore) -> (GarbledCircuit, InputLabels) {
    let mut draw = || ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
    let delta = draw() | 1;
    let mut w = vec![0 as Label; c.n_wires as usize];
    let n_in = c.input_len();
    for x in w.iter_mut().take(n_in) {
        *x = draw();
    }
    let mut tables = Vec::with_capacity(c.and_count());
    for g in &c.gates {
        match *g {
            Gate::Xor(a, b, o) => w[o.0 as usize] = w[a.0 as usize] ^ w[b.0 as usize],
            Gate::Not(a, o) => w[o.0 as usize] = w[a.0 as usize] ^ delta,
            Gate::And(a, b, o) => {
                let (a0, b0) = (w[a.0 as usize], w[b.0 as usize]);
                let (a1, b1) = (a0 ^ delta, b0 ^ delta);
                let (pa, pb) = (lsb(a0), lsb(b0));
                let j = 2 * tables.len() as u64;
                let (ha0, ha1, hb0, hb1) =
                    (hash(a0, j), hash(a1, j), hash(b0, j + 1), hash(b1, j + 1));
                let tg = ha0 ^ ha1 ^ sel(pb, delta);
                let wg0 = ha0 ^ sel(pa, tg);
                let te = hb0 ^ hb1 ^ a0;
                let we0 = hb0 ^ sel(pb, te ^ a0);
                w[o.0 as usize] = wg0 ^ we0;
                tables.push([tg, te]);
            }
        }
    }
    let decode = c.outputs.iter().map(|o| lsb(w[o.0 as usize])).collect();
    (
        GarbledCircuit { tables, decode },
        InputLabels {
            delta,
            zero: w[..n_in].to_vec(),
        },
    )
}

/// Evaluate with one label per input wire (group order); returns output labels.
pub fn evaluate(c: &Circuit, gc: &GarbledCircuit, inputs: &[Label]) -> Result<Vec<Label>, GcError> {
    if inputs.len() != c.input_len() {
        return Err(GcError::InputLength {
            expected: c.input_len(),
            got: inputs.len(),
        });
    }
    if gc.tables.len() != c.and_count() || gc.decode.len() != c.outputs.len() {
        return Err(GcError::Malformed(format!(
            "{} tables / {} decode bits for a circuit with {} ANDs / {} outputs",
            gc.tables.len(),
            gc.decode.len(),
            c.and_count(),
            c.outputs.len()
        )));
    }
    let mut w = vec![0 as Label; c.n_wires as usize];
    w[..inputs.len()].copy_from_slice(inputs);
    let mut k = 0usize;
    for g in &c.gates {
        match *g {
            Gate::Xor(a, b, o) => w[o.0 as usize] = w[a.0 as usize] ^ w[b.0 as usize],
            Gate::Not(a, o) => w[o.0 as usize] = w[a.0 as usize],
            Gate::And(a, b, o) => {
                let (la, lb) = (w[a.0 as usize], w[b.0 as usize]);
                let [tg, te] = gc.tables[k];
                let j = 2 * k as u64;
                let wg = hash(la, j) ^ sel(lsb(la), tg);
                let we = hash(lb, j + 1) ^ sel(lsb(lb), te ^ la);
                w[o.0 as usize] = wg ^ we;
                k += 1;
            }
        }
    }
    Ok(c.outputs.iter().map(|o| w[o.0 as usize]).collect())
}

pub fn decode(gc: &GarbledCircuit, labels: &[Label]) -> Vec<bool> {
    labels
        .iter()
        .zip(&gc.decode)
        .map(|(&l, &d)| lsb(l) ^ d)
        .collect()
}
