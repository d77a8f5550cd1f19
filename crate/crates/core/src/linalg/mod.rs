//! Plaintext-matrix × encrypted-vector products.
//!
//! The input vector `v` (length `n_i`, a power of two) is encrypted
//! replicated: slot `s` holds `v[s mod n_i]`. Every algorithm is described
//! by one or more *packs*: a set of input rotations (phase 1, hoisted off a
//! single decomposition), one plaintext per rotation, and a list of
//! rotate-and-sum shifts applied to the accumulated product (phase 2).
//! The plaintext entries are obtained by simulating the permutation group
//! on slot indices, so they automatically respect the half-rotation
//! structure `C_{n/2} × C_2`.

mod exec;

use std::fmt;

use rand::{Rng, RngCore};

use crate::pahe::{GroupElem, OpCount, PaheError};

pub use exec::{hide_garbage, matvec, PreparedMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("bad dimensions: {0}")]
    Dimension(String),
    #[error("slot layout check failed: {0}")]
    Layout(String),
    #[error("expected {expected} input window ciphertexts, got {got}")]
    Input { expected: usize, got: usize },
    #[error(transparent)]
    Pahe(#[from] PaheError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Naive,
    OutputPacked,
    InputPacked,
    Diagonal,
    Hybrid,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Self::Naive,
        Self::OutputPacked,
        Self::InputPacked,
        Self::Diagonal,
        Self::Hybrid,
    ];

    /// Default plaintext window: 20 bits for the naive family, 10 otherwise.
    pub fn default_w_pt(self) -> u32 {
        match self {
            Self::Naive | Self::OutputPacked | Self::InputPacked => 20,
            Self::Diagonal | Self::Hybrid => 10,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Naive => "naive",
            Self::OutputPacked => "output_packed",
            Self::InputPacked => "input_packed",
            Self::Diagonal => "diagonal",
            Self::Hybrid => "hybrid",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// Row-major `n_o × n_i` matrix over `Z_p` with an optional bias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    pub n_o: usize,
    pub n_i: usize,
    pub data: Vec<u64>,
    pub bias: Option<Vec<u64>>,
}

impl WeightMatrix {
    pub fn new(n_o: usize, n_i: usize, data: Vec<u64>) -> Result<Self, LinalgError> {
        if data.len() != n_o * n_i || n_o == 0 || n_i == 0 {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {n_o}x{n_i} matrix",
                data.len()
            )));
        }
        Ok(Self {
            n_o,
            n_i,
            data,
            bias: None,
        })
    }

    pub fn with_bias(mut self, bias: Vec<u64>) -> Result<Self, LinalgError> {
        if bias.len() != self.n_o {
            return Err(LinalgError::Dimension(format!(
                "bias has {} entries, expected {}",
                bias.len(),
                self.n_o
            )));
        }
        self.bias = Some(bias);
        Ok(self)
    }

    pub fn zeros(n_o: usize, n_i: usize) -> Self {
        Self {
            n_o,
            n_i,
            data: vec![0; n_o * n_i],
            bias: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn random(n_o: usize, n_i: usize, p: u64, rng: &mut impl RngCore) -> Self {
        Self {
            n_o,
            n_i,
            data: (0..n_o * n_i).map(|_| rng.gen_range(0..p)).collect(),
            bias: None,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.data[row * self.n_i + col]
    }

    /// Zero-pad both dimensions to the next power of two.
    pub fn padded(&self) -> Self {
        let (no, ni) = (self.n_o.next_power_of_two(), self.n_i.next_power_of_two());
        let mut m = Self::zeros(no, ni);
        for r in 0..self.n_o {
            m.data[r * ni..r * ni + self.n_i]
                .copy_from_slice(&self.data[r * self.n_i..(r + 1) * self.n_i]);
        }
        m.bias = self.bias.as_ref().map(|b| {
            let mut b = b.clone();
            b.resize(no, 0);
            b
        });
        m
    }

    /// `W·v + b mod p`.
    pub fn apply(&self, v: &[u64], p: u64) -> Vec<u64> {
        (0..self.n_o)
            .map(|r| {
                let mut acc = self.bias.as_ref().map_or(0, |b| b[r] as u128);
                for (c, &x) in v.iter().enumerate().take(self.n_i) {
                    acc += self.get(r, c) as u128 * x as u128;
                }
                (acc % p as u128) as u64
            })
            .collect()
    }
}

/// One group of plaintexts sharing an accumulator.
/// `(row, col)` of a weight matrix entry.
pub type Entry = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pack {
    /// Phase-1 input permutations, one plaintext each.
    pub inputs: Vec<GroupElem>,
    /// Phase-2 rotate-and-sum permutations, applied in order.
    pub shifts: Vec<GroupElem>,
    /// `(output row, slot)` defined by this pack.
    pub outputs: Vec<(usize, usize)>,
}

/// Shape-only description of a product: which permutations are applied
/// to which ciphertexts and where each output lands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatVecPlan {
    pub algorithm: Algorithm,
    pub n: usize,
    pub n_i: usize,
    pub n_o: usize,
    pub w_pt: u32,
    pub packs: Vec<Pack>,
}

/// Closed-form operation counts plus the number of output ciphertexts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MatVecCount {
    pub ops: OpCount,
    pub output_cts: u64,
}

fn log2(x: usize) -> u64 {
    x.trailing_zeros() as u64
}

/// Realise a shift of `a` slots (`a ≤ n/2`); `n/2` is the row swap.
fn shift_elem(n: usize, a: usize) -> GroupElem {
    if a == n / 2 {
        GroupElem::swap_rows()
    } else {
        GroupElem::rotation(n, a)
    }
}

fn rotate_and_sum(n: usize, from: usize, to: usize) -> Vec<GroupElem> {
    let mut v = Vec::new();
    let mut a = from;
    while a < to {
        v.push(shift_elem(n, a));
        a *= 2;
    }
    v
}

impl MatVecPlan {
    pub fn new(
        algorithm: Algorithm,
        n: usize,
        n_i: usize,
        n_o: usize,
        w_pt: u32,
    ) -> Result<Self, LinalgError> {
        if !n.is_power_of_two() || n < 4 {
            return Err(LinalgError::Dimension(format!(
                "ring degree {n} is not a power of two >= 4"
            )));
        }
        for (name, d) in [("n_i", n_i), ("n_o", n_o)] {
            if d == 0 || !d.is_power_of_two() {
                return Err(LinalgError::Dimension(format!(
                    "{name} = {d} is not a power of two"
                )));
            }
            if d > n {
                return Err(LinalgError::Dimension(format!(
                    "{name} = {d} exceeds the slot count {n}"
                )));
            }
        }
        let packs = match algorithm {
            Algorithm::Naive | Algorithm::OutputPacked => (0..n_o)
                .map(|o| Pack {
                    inputs: vec![GroupElem::IDENTITY],
                    shifts: rotate_and_sum(n, 1, n_i),
                    outputs: vec![(o, 0)],
                })
                .collect(),
            Algorithm::InputPacked => {
                let c = n / n_i;
                (0..n_o.div_ceil(c))
                    .map(|j| Pack {
                        inputs: vec![GroupElem::IDENTITY],
                        shifts: rotate_and_sum(n, 1, n_i),
                        outputs: (0..c)
                            .filter(|b| j * c + b < n_o)
                            .map(|b| (j * c + b, b * n_i))
                            .collect(),
                    })
                    .collect()
            }
            Algorithm::Diagonal => {
                let inputs = if n_i == n {
                    GroupElem::all(n)
                } else {
                    (0..n_i).map(|k| GroupElem::rotation(n, k)).collect()
                };
                vec![Pack {
                    inputs,
                    shifts: vec![],
                    outputs: (0..n_o).map(|o| (o, o)).collect(),
                }]
            }
            Algorithm::Hybrid => {
                if n_o > n_i {
                    return Err(LinalgError::Dimension(format!(
                        "hybrid needs n_o <= n_i, got {n_o} > {n_i}"
                    )));
                }
                let m = (n_o * n_i / n).max(1);
                let outputs = (0..n_o).map(|o| (o, (o / m) * n_i + o % m)).collect();
                vec![Pack {
                    inputs: GroupElem::all(n)[..m].to_vec(),
                    shifts: rotate_and_sum(n, m, n_i),
                    outputs,
                }]
            }
        };
        let plan = Self {
            algorithm,
            n,
            n_i,
            n_o,
            w_pt,
            packs,
        };
        plan.check_layout()?;
        Ok(plan)
    }

    pub fn with_default_window(
        algorithm: Algorithm,
        n: usize,
        n_i: usize,
        n_o: usize,
    ) -> Result<Self, LinalgError> {
        Self::new(algorithm, n, n_i, n_o, algorithm.default_w_pt())
    }

    /// Hoisted input rotations are used (one decomposition per input).
    pub fn hoisted(&self) -> bool {
        matches!(self.algorithm, Algorithm::Diagonal | Algorithm::Hybrid)
    }

    /// For every input permutation `k` of `pack` and every slot: the
    /// `(row, col)` entry of `W` that multiplies that slot, if any.
    pub fn pack_entries(&self, pack: &Pack) -> Result<Vec<Vec<Option<Entry>>>, LinalgError> {
        let n = self.n;
        let mut owner: Vec<Option<u32>> = vec![None; n];
        for &(o, s) in &pack.outputs {
            let mut set = vec![s];
            for a in pack.shifts.iter().rev() {
                let extra: Vec<usize> = set.iter().map(|&x| a.src_slot(n, x)).collect();
                set.extend(extra);
            }
            for x in set {
                if owner[x].replace(o as u32).is_some() {
                    return Err(LinalgError::Layout(format!("slot {x} feeds two outputs")));
                }
            }
        }
        Ok(pack
            .inputs
            .iter()
            .map(|g| {
                (0..n)
                    .map(|x| owner[x].map(|o| (o, (g.src_slot(n, x) % self.n_i) as u32)))
                    .collect()
            })
            .collect())
    }

    /// Every output row must see every input column exactly once.
    fn check_layout(&self) -> Result<(), LinalgError> {
        let mut seen = vec![0u8; self.n_o * self.n_i];
        for pack in &self.packs {
            for entries in self.pack_entries(pack)? {
                for (o, c) in entries.into_iter().flatten() {
                    let cell = &mut seen[o as usize * self.n_i + c as usize];
                    *cell = cell.saturating_add(1);
                }
            }
        }
        match seen.iter().position(|&c| c != 1) {
            None => Ok(()),
            Some(i) => Err(LinalgError::Layout(format!(
                "entry ({}, {}) covered {} times",
                i / self.n_i,
                i % self.n_i,
                seen[i]
            ))),
        }
    }

    /// Plaintext slot vectors, one per input permutation of each pack.
    pub fn encode(&self, w: &WeightMatrix) -> Result<EncodedMatrix, LinalgError> {
        self.check_matrix(w)?;
        let mut slots = Vec::new();
        for pack in &self.packs {
            for entries in self.pack_entries(pack)? {
                slots.push(
                    entries
                        .into_iter()
                        .map(|e| e.map_or(0, |(o, c)| w.get(o as usize, c as usize)))
                        .collect(),
                );
            }
        }
        Ok(EncodedMatrix {
            plan: self.clone(),
            slots,
        })
    }

    fn check_matrix(&self, w: &WeightMatrix) -> Result<(), LinalgError> {
        if w.n_o != self.n_o || w.n_i != self.n_i {
            return Err(LinalgError::Dimension(format!(
                "matrix is {}x{}, plan is {}x{}",
                w.n_o, w.n_i, self.n_o, self.n_i
            )));
        }
        Ok(())
    }

    /// Every permutation the product needs a key for.
    pub fn required_elems(&self) -> Vec<GroupElem> {
        let mut v: Vec<GroupElem> = self
            .packs
            .iter()
            .flat_map(|p| p.inputs.iter().chain(&p.shifts).copied())
            .chain(self.packing_elems())
            .collect();
        v.retain(|e| !e.is_identity());
        v.sort();
        v.dedup();
        v
    }

    /// Output-packed only: moves slot 0 to slot `i`.
    pub(crate) fn packing_elem(&self, i: usize) -> GroupElem {
        let h = self.n / 2;
        GroupElem::new(self.n, (h - i % h) % h, i >= h)
    }

    fn packing_elems(&self) -> Vec<GroupElem> {
        if self.algorithm == Algorithm::OutputPacked {
            (0..self.n_o).map(|i| self.packing_elem(i)).collect()
        } else {
            vec![]
        }
    }

    /// Slot vector of the encrypted input: `v` zero-padded to `n_i`, then
    /// repeated across all slots.
    pub fn input_slots(&self, v: &[u64]) -> Vec<u64> {
        assert!(v.len() <= self.n_i, "input longer than n_i");
        (0..self.n)
            .map(|s| v.get(s % self.n_i).copied().unwrap_or(0))
            .collect()
    }

    pub fn output_cts(&self) -> usize {
        match self.algorithm {
            Algorithm::Naive | Algorithm::InputPacked => self.packs.len(),
            _ => 1,
        }
    }

    /// `(ciphertext, slot)` of each output row.
    pub fn output_layout(&self) -> Vec<(usize, usize)> {
        let mut v = vec![(0, 0); self.n_o];
        match self.algorithm {
            Algorithm::OutputPacked => {
                for (i, x) in v.iter_mut().enumerate() {
                    *x = (0, i);
                }
            }
            Algorithm::Diagonal | Algorithm::Hybrid => {
                for &(o, s) in &self.packs[0].outputs {
                    v[o] = (0, s);
                }
            }
            Algorithm::Naive | Algorithm::InputPacked => {
                for (j, pack) in self.packs.iter().enumerate() {
                    for &(o, s) in &pack.outputs {
                        v[o] = (j, s);
                    }
                }
            }
        }
        v
    }

    /// Read the result out of decrypted output slot vectors.
    pub fn decode_output(&self, decrypted: &[Vec<u64>]) -> Vec<u64> {
        self.output_layout()
            .into_iter()
            .map(|(c, s)| decrypted[c][s])
            .collect()
    }

    /// Uniform values on every slot that does not carry a result.
    pub fn garbage_mask(&self, p: u64, rng: &mut impl RngCore) -> Vec<Vec<u64>> {
        let mut masks: Vec<Vec<u64>> = (0..self.output_cts())
            .map(|_| (0..self.n).map(|_| rng.gen_range(0..p)).collect())
            .collect();
        for (c, s) in self.output_layout() {
            masks[c][s] = 0;
        }
        masks
    }

    /// Closed-form counts; the executor's instrumented counts equal these.
    pub fn count_ops(&self) -> MatVecCount {
        count_ops(self.algorithm, self.n, self.n_i, self.n_o)
    }
}

/// Operation counts by algorithm. `decomp` includes the decomposition
/// inside every non-hoisted permutation. For the hybrid method with
/// `n_o·n_i < n` a single input rotation class is used, giving
/// `log2(n_i)` output rotations.
pub fn count_ops(algorithm: Algorithm, n: usize, n_i: usize, n_o: usize) -> MatVecCount {
    let (no, li) = (n_o as u64, log2(n_i));
    let (perm_hoisted, perm, scmult, add, decomp, out) = match algorithm {
        Algorithm::Naive => (0, no * li, no, no * li, no * li, no),
        Algorithm::OutputPacked => (
            0,
            no * li + no - 1,
            2 * no,
            no * li + no,
            no * li + no - 1,
            1,
        ),
        Algorithm::InputPacked => {
            let packs = (n_o * n_i).div_ceil(n) as u64;
            (0, packs * li, packs, packs * li, packs * li, packs)
        }
        Algorithm::Diagonal => (n_i as u64 - 1, 0, n_i as u64, n_i as u64, 1, 1),
        Algorithm::Hybrid => {
            let m = (n_o * n_i / n).max(1);
            let out_rot = log2(n_i / m);
            (
                m as u64 - 1,
                out_rot,
                m as u64,
                m as u64 + out_rot,
                1 + out_rot,
                1,
            )
        }
    };
    MatVecCount {
        ops: OpCount {
            perm_hoisted,
            perm,
            decomp,
            scmult,
            add,
        },
        output_cts: out,
    }
}

/// The noise column of the comparison table: growth from a fresh `eta0`
/// given the multiplicative factor `eta_mult` and additive `eta_rot`.
pub fn table_noise(
    algorithm: Algorithm,
    n_i: usize,
    n_o: usize,
    eta0: f64,
    eta_mult: f64,
    eta_rot: f64,
) -> f64 {
    let (ni, no) = (n_i as f64, n_o as f64);
    let naive = eta0 * eta_mult * ni + eta_rot * (ni - 1.0);
    match algorithm {
        Algorithm::Naive | Algorithm::InputPacked => naive,
        Algorithm::OutputPacked => naive * eta_mult * no + eta_rot * (no - 1.0),
        Algorithm::Diagonal => (eta0 + eta_rot) * eta_mult * ni,
        Algorithm::Hybrid => (eta0 + eta_rot) * eta_mult * ni + eta_rot * (ni / no - 1.0),
    }
}

/// Slot vectors of an encoded matrix (before windowing), with the plan
/// that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMatrix {
    pub plan: MatVecPlan,
    pub slots: Vec<Vec<u64>>,
}

impl EncodedMatrix {
    /// Recover `W` from the plaintexts.
    pub fn decode(&self) -> Result<WeightMatrix, LinalgError> {
        let plan = &self.plan;
        let mut w = WeightMatrix::zeros(plan.n_o, plan.n_i);
        let mut it = self.slots.iter();
        for pack in &plan.packs {
            for entries in plan.pack_entries(pack)? {
                let pt = it
                    .next()
                    .ok_or_else(|| LinalgError::Layout("too few plaintexts".into()))?;
                for (x, e) in entries.into_iter().enumerate() {
                    if let Some((o, c)) = e {
                        w.data[o as usize * plan.n_i + c as usize] = pt[x];
                    }
                }
            }
        }
        Ok(w)
    }
}
