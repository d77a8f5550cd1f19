//! Backend-agnostic evaluation interface used by the linear-algebra and
//! convolution kernels. [`HeEvaluator`] runs the real scheme;
//! [`CountingEvaluator`] only counts operations, which lets the cost of
//! large layers be computed without touching any ciphertext.
//!
//! An input "bundle" is the list of window ciphertexts `[2^(w_pt·k)·u]`
//! of one vector. Rotating a bundle rotates every window but counts as
//! one logical operation.

use std::sync::atomic::{AtomicU64, Ordering};

use super::context::{Ciphertext, PlaintextWindows, RingContext};
use super::keys::{Hoisted, KeySet};
use super::noise::NoiseEstimate;
use super::{GroupElem, PaheError};
use crate::modarith::Reducer;

/// Snapshot of operation counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OpCount {
    /// Automorphisms applied to an already decomposed ciphertext.
    pub perm_hoisted: u64,
    /// Full permutations (each includes its own decomposition).
    pub perm: u64,
    /// Decompositions, including those inside full permutations.
    pub decomp: u64,
    pub scmult: u64,
    pub add: u64,
}

impl OpCount {
    /// All permutations, hoisted or not.
    pub fn perms(&self) -> u64 {
        self.perm_hoisted + self.perm
    }
}

impl std::ops::Add for OpCount {
    type Output = OpCount;
    fn add(self, o: OpCount) -> OpCount {
        OpCount {
            perm_hoisted: self.perm_hoisted + o.perm_hoisted,
            perm: self.perm + o.perm,
            decomp: self.decomp + o.decomp,
            scmult: self.scmult + o.scmult,
            add: self.add + o.add,
        }
    }
}

impl std::ops::Sub for OpCount {
    type Output = OpCount;
    fn sub(self, o: OpCount) -> OpCount {
        OpCount {
            perm_hoisted: self.perm_hoisted - o.perm_hoisted,
            perm: self.perm - o.perm,
            decomp: self.decomp - o.decomp,
            scmult: self.scmult - o.scmult,
            add: self.add - o.add,
        }
    }
}

#[derive(Debug, Default)]
pub struct OpCounter {
    perm_hoisted: AtomicU64,
    perm: AtomicU64,
    decomp: AtomicU64,
    scmult: AtomicU64,
    add: AtomicU64,
}

impl OpCounter {
    pub fn snapshot(&self) -> OpCount {
        OpCount {
            perm_hoisted: self.perm_hoisted.load(Ordering::Relaxed),
            perm: self.perm.load(Ordering::Relaxed),
            decomp: self.decomp.load(Ordering::Relaxed),
            scmult: self.scmult.load(Ordering::Relaxed),
            add: self.add.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        for c in [
            &self.perm_hoisted,
            &self.perm,
            &self.decomp,
            &self.scmult,
            &self.add,
        ] {
            c.store(0, Ordering::Relaxed);
        }
    }

    fn bump(c: &AtomicU64) {
        c.fetch_add(1, Ordering::Relaxed);
    }
}

pub trait Evaluator: Sync {
    type Ct: Clone + Send + Sync;
    type Hoisted: Send + Sync;
    type Pt: Send + Sync;

    fn n(&self) -> usize;
    fn counter(&self) -> &OpCounter;

    /// Encode a slot vector; the closure is not called by counting backends.
    fn encode(&self, w_pt: u32, slots: impl FnOnce() -> Vec<u64>) -> Self::Pt;
    /// Decompose every window of a bundle for hoisted permutations.
    fn decomp(&self, bundle: &[Self::Ct]) -> Self::Hoisted;
    /// Permute a decomposed bundle.
    fn auto(&self, h: &Self::Hoisted, elem: GroupElem) -> Result<Vec<Self::Ct>, PaheError>;
    /// Decompose-and-permute a single ciphertext.
    fn perm(&self, ct: &Self::Ct, elem: GroupElem) -> Result<Self::Ct, PaheError>;
    /// `Σ_k bundle[k] ∘ v_k`.
    fn scmult(&self, bundle: &[Self::Ct], pt: &Self::Pt) -> Result<Self::Ct, PaheError>;
    fn add(&self, a: &Self::Ct, b: &Self::Ct) -> Self::Ct;
    /// Addition of independent products (same cost as [`add`](Self::add)).
    fn accumulate(&self, a: &Self::Ct, b: &Self::Ct) -> Self::Ct;
    /// Plaintext addition; used for masking and not counted.
    fn add_plain(&self, a: &Self::Ct, slots: impl FnOnce() -> Vec<u64>) -> Self::Ct;
    fn noise(&self, ct: &Self::Ct) -> NoiseEstimate;
    /// Accumulator seed: an encryption of zero with no noise.
    fn zero(&self) -> Self::Ct;

    fn count(&self) -> OpCount {
        self.counter().snapshot()
    }

    /// Sum of products accumulated into `acc` (or started fresh).
    fn mac(
        &self,
        acc: Option<Self::Ct>,
        bundle: &[Self::Ct],
        pt: &Self::Pt,
    ) -> Result<Self::Ct, PaheError> {
        let prod = self.scmult(bundle, pt)?;
        Ok(match acc {
            Some(a) => self.accumulate(&a, &prod),
            None => prod,
        })
    }
}

/// Real evaluator over a ring context and a set of permutation keys.
pub struct HeEvaluator<'a, Q: Reducer = crate::modarith::ModulusQ> {
    pub ctx: &'a RingContext<Q>,
    pub keys: &'a KeySet,
    counter: OpCounter,
}

impl<'a, Q: Reducer> HeEvaluator<'a, Q> {
    pub fn new(ctx: &'a RingContext<Q>, keys: &'a KeySet) -> Self {
        Self {
            ctx,
            keys,
            counter: OpCounter::default(),
        }
    }
}

impl<Q: Reducer> Evaluator for HeEvaluator<'_, Q> {
    type Ct = Ciphertext;
    type Hoisted = Vec<Hoisted>;
    type Pt = PlaintextWindows;

    fn n(&self) -> usize {
        self.ctx.n()
    }

    fn counter(&self) -> &OpCounter {
        &self.counter
    }

    fn encode(&self, w_pt: u32, slots: impl FnOnce() -> Vec<u64>) -> PlaintextWindows {
        self.ctx.encode_windows(&slots(), w_pt)
    }

    fn decomp(&self, bundle: &[Ciphertext]) -> Vec<Hoisted> {
        OpCounter::bump(&self.counter.decomp);
        bundle
            .iter()
            .map(|c| self.ctx.perm_decomp(c, self.keys.w_relin))
            .collect()
    }

    fn auto(&self, h: &Vec<Hoisted>, elem: GroupElem) -> Result<Vec<Ciphertext>, PaheError> {
        if elem.is_identity() {
            return Ok(h.iter().map(|x| x.ct.clone()).collect());
        }
        let key = self.keys.get(elem)?;
        OpCounter::bump(&self.counter.perm_hoisted);
        h.iter().map(|x| self.ctx.perm_auto(x, key)).collect()
    }

    fn perm(&self, ct: &Ciphertext, elem: GroupElem) -> Result<Ciphertext, PaheError> {
        if elem.is_identity() {
            return Ok(ct.clone());
        }
        OpCounter::bump(&self.counter.perm);
        OpCounter::bump(&self.counter.decomp);
        self.ctx.perm(ct, elem, self.keys)
    }

    fn scmult(
        &self,
        bundle: &[Ciphertext],
        pt: &PlaintextWindows,
    ) -> Result<Ciphertext, PaheError> {
        OpCounter::bump(&self.counter.scmult);
        self.ctx.scmult(bundle, pt)
    }

    fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        OpCounter::bump(&self.counter.add);
        self.ctx.add(a, b)
    }

    fn accumulate(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        OpCounter::bump(&self.counter.add);
        self.ctx.accumulate(a, b)
    }

    fn add_plain(&self, a: &Ciphertext, slots: impl FnOnce() -> Vec<u64>) -> Ciphertext {
        self.ctx.add_plain(a, &slots())
    }

    fn noise(&self, ct: &Ciphertext) -> NoiseEstimate {
        ct.noise
    }

    fn zero(&self) -> Ciphertext {
        self.ctx.zero()
    }
}

/// Counts operations and propagates noise estimates without any
/// ciphertext arithmetic. Plaintext window norms are taken as the worst
/// case `2^(w_pt-1)` (the top window may reach `p/2^(w_pt·(K-1))`).
pub struct CountingEvaluator {
    pub n: usize,
    pub p_bits: u32,
    pub w_relin: u32,
    pub model: super::NoiseModel,
    counter: OpCounter,
}

/// Windows and their worst-case norms.
#[derive(Clone, Debug)]
pub struct CountedPt(pub Vec<u64>);

impl CountingEvaluator {
    pub fn new<Q: Reducer>(ctx: &RingContext<Q>, w_relin: u32) -> Self {
        Self {
            n: ctx.n(),
            p_bits: ctx.params.plain_bits(),
            w_relin,
            model: ctx.noise,
            counter: OpCounter::default(),
        }
    }
}

impl Evaluator for CountingEvaluator {
    type Ct = NoiseEstimate;
    type Hoisted = Vec<NoiseEstimate>;
    type Pt = CountedPt;

    fn n(&self) -> usize {
        self.n
    }

    fn counter(&self) -> &OpCounter {
        &self.counter
    }

    fn encode(&self, w_pt: u32, _slots: impl FnOnce() -> Vec<u64>) -> CountedPt {
        let k = self.p_bits.div_ceil(w_pt);
        let mut norms = vec![1u64 << (w_pt - 1); k as usize];
        let top_bits = self.p_bits - w_pt * (k - 1);
        norms[k as usize - 1] = (1u64 << top_bits.saturating_sub(1)).max(1) + 1;
        CountedPt(norms)
    }

    fn decomp(&self, bundle: &[NoiseEstimate]) -> Vec<NoiseEstimate> {
        OpCounter::bump(&self.counter.decomp);
        bundle.to_vec()
    }

    fn auto(
        &self,
        h: &Vec<NoiseEstimate>,
        elem: GroupElem,
    ) -> Result<Vec<NoiseEstimate>, PaheError> {
        if elem.is_identity() {
            return Ok(h.clone());
        }
        OpCounter::bump(&self.counter.perm_hoisted);
        Ok(h.iter()
            .map(|&e| self.model.perm(e, self.w_relin))
            .collect())
    }

    fn perm(&self, ct: &NoiseEstimate, elem: GroupElem) -> Result<NoiseEstimate, PaheError> {
        if elem.is_identity() {
            return Ok(*ct);
        }
        OpCounter::bump(&self.counter.perm);
        OpCounter::bump(&self.counter.decomp);
        Ok(self.model.perm(*ct, self.w_relin))
    }

    fn scmult(&self, bundle: &[NoiseEstimate], pt: &CountedPt) -> Result<NoiseEstimate, PaheError> {
        if bundle.is_empty() || (pt.0.len() > 1 && bundle.len() < pt.0.len()) {
            return Err(PaheError::MissingWindowCiphertexts {
                needed: pt.0.len(),
                got: bundle.len(),
            });
        }
        OpCounter::bump(&self.counter.scmult);
        Ok(self
            .model
            .scmult(bundle.iter().copied().zip(pt.0.iter().copied())))
    }

    fn add(&self, a: &NoiseEstimate, b: &NoiseEstimate) -> NoiseEstimate {
        OpCounter::bump(&self.counter.add);
        self.model.add(*a, *b)
    }

    fn accumulate(&self, a: &NoiseEstimate, b: &NoiseEstimate) -> NoiseEstimate {
        OpCounter::bump(&self.counter.add);
        self.model.accumulate(*a, *b)
    }

    fn add_plain(&self, a: &NoiseEstimate, _slots: impl FnOnce() -> Vec<u64>) -> NoiseEstimate {
        self.model.add_plain(*a)
    }

    fn noise(&self, ct: &NoiseEstimate) -> NoiseEstimate {
        *ct
    }

    fn zero(&self) -> NoiseEstimate {
        NoiseEstimate::ZERO
    }
}
