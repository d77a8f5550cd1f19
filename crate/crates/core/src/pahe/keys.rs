//! Slot permutations by key switching, split into a decomposition step
//! (one inverse transform plus `D` forward transforms, shared by every
//! permutation of the same ciphertext) and a cheap automorphism step
//! (gathers and `D` multiply-accumulates in the evaluation domain).

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::context::{Ciphertext, RingContext, SecretKey};
use super::noise::digit_count;
use super::{GroupElem, PaheError};
use crate::modarith::Reducer;
use crate::par;

/// Key-switching key from `σ(s)` back to `s` for one group element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationKey {
    pub elem: GroupElem,
    pub w_relin: u32,
    /// `b_i = -a_i·s + e_i + 2^(w·i)·σ(s)`, evaluation domain.
    pub b: Vec<Vec<u64>>,
    pub a: Vec<Vec<u64>>,
    /// Evaluation-domain gather for `σ`.
    pub(crate) map: Vec<u32>,
}

impl PermutationKey {
    pub fn generate<Q: Reducer>(
        ctx: &RingContext<Q>,
        sk: &SecretKey,
        elem: GroupElem,
        w_relin: u32,
        rng: &mut impl RngCore,
    ) -> Self {
        let n = ctx.n();
        let q = ctx.q;
        let map = ctx.automorphism_map(elem);
        let sigma_s: Vec<u64> = map.iter().map(|&i| sk.ntt[i as usize]).collect();
        let d = digit_count(w_relin);
        let mut b = Vec::with_capacity(d);
        let mut a = Vec::with_capacity(d);
        for i in 0..d {
            let factor = q.pow(2, w_relin as u64 * i as u64);
            let ai = ctx.uniform_poly(rng);
            let ei = ctx.noisy_ntt(None, rng);
            let bi = (0..n)
                .map(|j| {
                    let t = q.sub(ei[j], q.mul(ai[j], sk.ntt[j]));
                    q.add(t, q.mul(factor, sigma_s[j]))
                })
                .collect();
            b.push(bi);
            a.push(ai);
        }
        Self {
            elem,
            w_relin,
            b,
            a,
            map,
        }
    }

    pub fn digits(&self) -> usize {
        self.b.len()
    }

    pub fn size_bytes(&self) -> usize {
        2 * self.digits() * self.map.len() * 8
    }
}

/// Permutation keys indexed by group element, all of one digit width.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeySet {
    pub w_relin: u32,
    keys: BTreeMap<GroupElem, PermutationKey>,
}

impl KeySet {
    pub fn empty(w_relin: u32) -> Self {
        Self {
            w_relin,
            keys: BTreeMap::new(),
        }
    }

    /// Keys for every non-identity element of `elems`. Each key draws from its
    /// own stream seeded by `rng`, so the result does not depend on the thread
    /// count.
    pub fn generate<Q: Reducer>(
        ctx: &RingContext<Q>,
        sk: &SecretKey,
        elems: impl IntoIterator<Item = GroupElem>,
        w_relin: u32,
        rng: &mut impl RngCore,
    ) -> Self {
        let mut set = Self::empty(w_relin);
        set.extend(ctx, sk, elems, rng);
        set
    }

    pub fn extend<Q: Reducer>(
        &mut self,
        ctx: &RingContext<Q>,
        sk: &SecretKey,
        elems: impl IntoIterator<Item = GroupElem>,
        rng: &mut impl RngCore,
    ) {
        let mut todo: Vec<(GroupElem, [u8; 32])> = Vec::new();
        for e in elems {
            if e.is_identity() || self.keys.contains_key(&e) || todo.iter().any(|(x, _)| *x == e) {
                continue;
            }
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            todo.push((e, seed));
        }
        let w = self.w_relin;
        let made = par::map(&todo, |(e, seed)| {
            PermutationKey::generate(ctx, sk, *e, w, &mut ChaCha20Rng::from_seed(*seed))
        });
        for k in made {
            self.keys.insert(k.elem, k);
        }
    }

    pub fn insert(&mut self, key: PermutationKey) -> Result<(), PaheError> {
        if key.w_relin != self.w_relin {
            return Err(PaheError::ParamMismatch(format!(
                "key digit width {} != {}",
                key.w_relin, self.w_relin
            )));
        }
        self.keys.insert(key.elem, key);
        Ok(())
    }

    pub fn get(&self, elem: GroupElem) -> Result<&PermutationKey, PaheError> {
        self.keys.get(&elem).ok_or(PaheError::MissingKey(elem))
    }

    pub fn contains(&self, elem: GroupElem) -> bool {
        elem.is_identity() || self.keys.contains_key(&elem)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn elems(&self) -> impl Iterator<Item = GroupElem> + '_ {
        self.keys.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PermutationKey> {
        self.keys.values()
    }

    pub fn size_bytes(&self) -> usize {
        self.keys.values().map(|k| k.size_bytes()).sum()
    }
}

/// A ciphertext with its `c1` decomposed into balanced digits, ready for
/// any number of automorphisms.
#[derive(Debug, Clone)]
pub struct Hoisted {
    pub ct: Ciphertext,
    pub w_relin: u32,
    /// Digits of `c1`, evaluation domain.
    pub digits: Vec<Vec<u64>>,
}

impl<Q: Reducer> RingContext<Q> {
    /// Decompose `c1` into `ceil(60 / w_relin)` balanced digits.
    pub fn perm_decomp(&self, ct: &Ciphertext, w_relin: u32) -> Hoisted {
        let n = self.n();
        let d = digit_count(w_relin);
        let mut c1 = ct.c1.clone();
        self.ntt_q.inverse_inplace(&mut c1);
        let base = 1i64 << w_relin;
        let half = base / 2;
        let mut digits = vec![vec![0u64; n]; d];
        let qv = self.q.value();
        for (j, &c) in c1.iter().enumerate() {
            let mut x = self.q.center(c) as i128;
            for (i, dig) in digits.iter_mut().enumerate() {
                let r = if i + 1 == d {
                    x as i64
                } else {
                    let r = (x as i64 + half).rem_euclid(base) - half;
                    x = (x - r as i128) >> w_relin;
                    r
                };
                dig[j] = if r >= 0 { r as u64 } else { qv - (-r) as u64 };
            }
        }
        for dig in digits.iter_mut() {
            self.ntt_q.forward_inplace(dig);
        }
        Hoisted {
            ct: ct.clone(),
            w_relin,
            digits,
        }
    }

    /// Apply the automorphism of `key` to a decomposed ciphertext.
    pub fn perm_auto(&self, h: &Hoisted, key: &PermutationKey) -> Result<Ciphertext, PaheError> {
        if key.w_relin != h.w_relin {
            return Err(PaheError::ParamMismatch(format!(
                "key digit width {} != decomposition width {}",
                key.w_relin, h.w_relin
            )));
        }
        let n = self.n();
        let mut c0 = vec![0u64; n];
        let mut c1 = vec![0u64; n];
        for j in 0..n {
            let src = key.map[j] as usize;
            let mut acc0 = h.ct.c0[src] as u128;
            let mut acc1 = 0u128;
            for (i, dig) in h.digits.iter().enumerate() {
                let x = dig[src] as u128;
                acc0 += x * key.b[i][j] as u128;
                acc1 += x * key.a[i][j] as u128;
            }
            c0[j] = self.q.reduce_wide(acc0);
            c1[j] = self.q.reduce_wide(acc1);
        }
        Ok(Ciphertext {
            c0,
            c1,
            noise: self.noise.perm(h.ct.noise, h.w_relin),
        })
    }

    /// Permutation by `elem`; the identity is free.
    pub fn perm_hoisted(
        &self,
        h: &Hoisted,
        elem: GroupElem,
        keys: &KeySet,
    ) -> Result<Ciphertext, PaheError> {
        if elem.is_identity() {
            return Ok(h.ct.clone());
        }
        self.perm_auto(h, keys.get(elem)?)
    }

    /// Decompose and permute in one go.
    pub fn perm(
        &self,
        ct: &Ciphertext,
        elem: GroupElem,
        keys: &KeySet,
    ) -> Result<Ciphertext, PaheError> {
        if elem.is_identity() {
            return Ok(ct.clone());
        }
        let key = keys.get(elem)?;
        self.perm_auto(&self.perm_decomp(ct, keys.w_relin), key)
    }
}
