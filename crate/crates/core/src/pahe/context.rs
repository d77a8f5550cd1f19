use std::sync::Arc;

use rand::{Rng, RngCore};

use super::noise::{NoiseEstimate, NoiseModel, TAIL};
use super::sampler::GaussianSampler;
use super::{GroupElem, PaheError};
use crate::modarith::{ModulusP, ModulusQ, NaiveModulus, NttTables, Reducer, RingParams};

/// Length-`n` slot vector over `Z_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaintextVector {
    pub slots: Vec<u64>,
}

impl PlaintextVector {
    pub fn new(slots: Vec<u64>) -> Self {
        Self { slots }
    }

    pub fn zeros(n: usize) -> Self {
        Self { slots: vec![0; n] }
    }
}

impl From<Vec<u64>> for PlaintextVector {
    fn from(slots: Vec<u64>) -> Self {
        Self { slots }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    /// Ternary coefficients.
    pub coeffs: Vec<i8>,
    /// `s` in the evaluation domain mod q.
    pub(crate) ntt: Vec<u64>,
}

/// `(c0, c1)` in the evaluation domain; decrypts as `c0 + c1·s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext {
    pub c0: Vec<u64>,
    pub c1: Vec<u64>,
    pub noise: NoiseEstimate,
}

impl Ciphertext {
    pub fn noise_bits(&self) -> f64 {
        self.noise.bits()
    }
}

/// `v = Σ_k 2^(w_pt·k)·v_k` with balanced coefficient digits `v_k`, each
/// stored in the evaluation domain mod q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaintextWindows {
    pub w_pt: u32,
    pub chunks: Vec<Vec<u64>>,
    /// Infinity norm of each digit polynomial.
    pub norms: Vec<u64>,
}

impl PlaintextWindows {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.norms.iter().all(|&x| x == 0)
    }
}

/// Ring, transforms, slot layout and noise model for one parameter set.
/// `Q` selects the ciphertext-modulus backend (fast by default).
#[derive(Debug, Clone)]
pub struct RingContext<Q: Reducer = ModulusQ> {
    pub params: RingParams,
    pub(crate) q: Q,
    pub(crate) ntt_q: Arc<NttTables<Q>>,
    pub(crate) ntt_p: Arc<NttTables<ModulusP>>,
    /// Slot index -> evaluation index of the mod-p transform.
    slot_index: Vec<u32>,
    scale: u64,
    pub noise: NoiseModel,
    pub(crate) sampler: GaussianSampler,
}

impl RingContext<ModulusQ> {
    pub fn new(params: RingParams) -> Result<Self, PaheError> {
        Self::with_backend(params, params.q)
    }
}

impl RingContext<NaiveModulus> {
    /// Same scheme with every mod-q reduction done by hardware division.
    pub fn naive(params: RingParams) -> Result<Self, PaheError> {
        Self::with_backend(params, NaiveModulus::from(params.q))
    }
}

impl<Q: Reducer> RingContext<Q> {
    pub fn with_backend(params: RingParams, q: Q) -> Result<Self, PaheError> {
        if q.value() != params.q.value() {
            return Err(PaheError::ParamMismatch(
                "backend modulus differs from params.q".into(),
            ));
        }
        let n = params.n;
        let ntt_q = NttTables::cached(q, n)?;
        let ntt_p = NttTables::cached(params.p, n)?;
        let two_n = 2 * n;
        let mut slot_index = vec![0u32; n];
        let mut e = 1usize;
        for j in 0..n / 2 {
            slot_index[j] = ntt_p.index_of_exponent(e) as u32;
            slot_index[n / 2 + j] = ntt_p.index_of_exponent(two_n - e) as u32;
            e = e * 3 % two_n;
        }
        let noise = NoiseModel {
            n,
            sigma: params.sigma,
            r_abs: params.r.unsigned_abs() as f64,
            line_bits: params.correctness_line_bits(),
        };
        Ok(Self {
            params,
            q,
            ntt_q,
            ntt_p,
            slot_index,
            scale: params.scale(),
            noise,
            sampler: GaussianSampler::new(params.sigma, TAIL),
        })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn p(&self) -> u64 {
        self.params.p.value()
    }

    pub fn q_reducer(&self) -> &Q {
        &self.q
    }

    pub fn ntt_q(&self) -> &NttTables<Q> {
        &self.ntt_q
    }

    pub fn ntt_p(&self) -> &NttTables<ModulusP> {
        &self.ntt_p
    }

    /// Plaintext windows needed to cover `Z_p` with `w_pt`-bit digits.
    pub fn window_count(&self, w_pt: u32) -> usize {
        (self.params.plain_bits() as usize).div_ceil(w_pt as usize)
    }

    // ---- plaintext encoding ----

    /// Slot vector -> coefficients mod p.
    pub fn slots_to_coeffs(&self, slots: &[u64]) -> Vec<u64> {
        let mut a = vec![0u64; self.n()];
        for (s, &v) in slots.iter().enumerate() {
            a[self.slot_index[s] as usize] = v;
        }
        self.ntt_p.inverse_inplace(&mut a);
        a
    }

    /// Coefficients mod p -> slot vector.
    pub fn coeffs_to_slots(&self, coeffs: &[u64]) -> Vec<u64> {
        let mut a = coeffs.to_vec();
        self.ntt_p.forward_inplace(&mut a);
        self.slot_index.iter().map(|&i| a[i as usize]).collect()
    }

    fn lift_signed(&self, x: i64) -> u64 {
        if x >= 0 {
            x as u64
        } else {
            self.q.value() - (-x) as u64
        }
    }

    /// Balanced `w_pt`-bit decomposition of the plaintext polynomial.
    pub fn encode_windows(&self, slots: &[u64], w_pt: u32) -> PlaintextWindows {
        assert_eq!(slots.len(), self.n(), "plaintext length");
        assert!((1..=32).contains(&w_pt), "window width {w_pt}");
        let k_count = self.window_count(w_pt);
        let coeffs = self.slots_to_coeffs(slots);
        let p = &self.params.p;
        let base = 1i64 << w_pt;
        let half = base / 2;
        let mut digits = vec![vec![0i64; self.n()]; k_count];
        for (i, &c) in coeffs.iter().enumerate() {
            let mut x = p.center(c);
            for (k, d) in digits.iter_mut().enumerate() {
                if k + 1 == k_count {
                    d[i] = x;
                } else {
                    let r = (x + half).rem_euclid(base) - half;
                    d[i] = r;
                    x = (x - r) >> w_pt;
                }
            }
        }
        let mut norms = Vec::with_capacity(k_count);
        let chunks = digits
            .into_iter()
            .map(|d| {
                norms.push(d.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0));
                let mut a: Vec<u64> = d.into_iter().map(|x| self.lift_signed(x)).collect();
                self.ntt_q.forward_inplace(&mut a);
                a
            })
            .collect();
        PlaintextWindows {
            w_pt,
            chunks,
            norms,
        }
    }

    // ---- keys and encryption ----

    pub fn keygen(&self, rng: &mut impl RngCore) -> SecretKey {
        let coeffs: Vec<i8> = (0..self.n()).map(|_| rng.gen_range(-1i8..=1)).collect();
        let mut ntt: Vec<u64> = coeffs.iter().map(|&c| self.lift_signed(c as i64)).collect();
        self.ntt_q.forward_inplace(&mut ntt);
        SecretKey { coeffs, ntt }
    }

    pub(crate) fn uniform_poly(&self, rng: &mut impl RngCore) -> Vec<u64> {
        let q = self.q.value();
        (0..self.n()).map(|_| rng.gen_range(0..q)).collect()
    }

    /// Gaussian polynomial plus `extra` (coefficient domain), returned in the
    /// evaluation domain.
    pub(crate) fn noisy_ntt(&self, extra: Option<&[u64]>, rng: &mut impl RngCore) -> Vec<u64> {
        let mut e: Vec<u64> = (0..self.n())
            .map(|_| self.lift_signed(self.sampler.sample(rng)))
            .collect();
        if let Some(x) = extra {
            for (a, b) in e.iter_mut().zip(x) {
                *a = self.q.add(*a, *b);
            }
        }
        self.ntt_q.forward_inplace(&mut e);
        e
    }

    /// `round(q/p)·m` in the coefficient domain.
    fn scaled_message(&self, slots: &[u64]) -> Vec<u64> {
        let m = self.slots_to_coeffs(slots);
        m.iter().map(|&c| self.q.mul(c, self.scale)).collect()
    }

    /// Encrypt under `sk` with `c1 = a` uniform, `c0 = -a·s + Δm + e`.
    pub fn encrypt(
        &self,
        sk: &SecretKey,
        pt: &PlaintextVector,
        rng: &mut impl RngCore,
    ) -> Ciphertext {
        assert_eq!(pt.slots.len(), self.n(), "plaintext length");
        let msg = self.scaled_message(&pt.slots);
        let body = self.noisy_ntt(Some(&msg), rng);
        let a = self.uniform_poly(rng);
        let c0 = body
            .iter()
            .zip(&a)
            .zip(&sk.ntt)
            .map(|((b, a), s)| self.q.sub(*b, self.q.mul(*a, *s)))
            .collect();
        Ciphertext {
            c0,
            c1: a,
            noise: self.noise.fresh(),
        }
    }

    /// Encryptions of `2^(w_pt·k)·u` for every window `k`.
    pub fn encrypt_windows(
        &self,
        sk: &SecretKey,
        pt: &PlaintextVector,
        w_pt: u32,
        rng: &mut impl RngCore,
    ) -> Vec<Ciphertext> {
        let p = &self.params.p;
        (0..self.window_count(w_pt))
            .map(|k| {
                let factor = p.pow(2, w_pt as u64 * k as u64);
                let scaled: Vec<u64> = pt.slots.iter().map(|&x| p.mul(x, factor)).collect();
                self.encrypt(sk, &PlaintextVector::new(scaled), rng)
            })
            .collect()
    }

    fn phase(&self, sk: &SecretKey, ct: &Ciphertext) -> Vec<u64> {
        let mut x: Vec<u64> = ct
            .c0
            .iter()
            .zip(&ct.c1)
            .zip(&sk.ntt)
            .map(|((a, b), s)| self.q.add(*a, self.q.mul(*b, *s)))
            .collect();
        self.ntt_q.inverse_inplace(&mut x);
        x
    }

    pub fn decrypt(&self, sk: &SecretKey, ct: &Ciphertext) -> PlaintextVector {
        self.decrypt_with_noise(sk, ct).0
    }

    /// Decryption plus the measured noise `log2 max|x - Δ·m|` (needs the key).
    pub fn decrypt_with_noise(&self, sk: &SecretKey, ct: &Ciphertext) -> (PlaintextVector, f64) {
        let x = self.phase(sk, ct);
        let (p, q) = (self.p() as u128, self.q.value() as u128);
        let mut worst = 0u64;
        let coeffs: Vec<u64> = x
            .iter()
            .map(|&xi| {
                let m = ((p * xi as u128 + q / 2) / q % p) as u64;
                let e = self.q.center(self.q.sub(xi, self.q.mul(m, self.scale)));
                worst = worst.max(e.unsigned_abs());
                m
            })
            .collect();
        (
            PlaintextVector::new(self.coeffs_to_slots(&coeffs)),
            (worst.max(1) as f64).log2(),
        )
    }

    // ---- homomorphic operations ----

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        self.add_with(a, b, self.noise.add(a.noise, b.noise))
    }

    /// Sum of independent products; same ciphertext as [`add`](Self::add),
    /// noise combined in quadrature.
    pub fn accumulate(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        self.add_with(a, b, self.noise.accumulate(a.noise, b.noise))
    }

    fn add_with(&self, a: &Ciphertext, b: &Ciphertext, noise: NoiseEstimate) -> Ciphertext {
        let c0 =
            a.c0.iter()
                .zip(&b.c0)
                .map(|(x, y)| self.q.add(*x, *y))
                .collect();
        let c1 =
            a.c1.iter()
                .zip(&b.c1)
                .map(|(x, y)| self.q.add(*x, *y))
                .collect();
        Ciphertext { c0, c1, noise }
    }

    pub fn add_assign(&self, acc: &mut Ciphertext, b: &Ciphertext) {
        for (x, y) in acc.c0.iter_mut().zip(&b.c0) {
            *x = self.q.add(*x, *y);
        }
        for (x, y) in acc.c1.iter_mut().zip(&b.c1) {
            *x = self.q.add(*x, *y);
        }
        acc.noise = self.noise.add(acc.noise, b.noise);
    }

    /// Add a plaintext slot vector (no key needed).
    pub fn add_plain(&self, a: &Ciphertext, slots: &[u64]) -> Ciphertext {
        let mut msg = self.scaled_message(slots);
        self.ntt_q.forward_inplace(&mut msg);
        let c0 =
            a.c0.iter()
                .zip(&msg)
                .map(|(x, y)| self.q.add(*x, *y))
                .collect();
        Ciphertext {
            c0,
            c1: a.c1.clone(),
            noise: self.noise.add_plain(a.noise),
        }
    }

    /// `Σ_k cts[k] ∘ v_k`. `cts[k]` must encrypt `2^(w_pt·k)·u`; a single
    /// ciphertext suffices when `w` has one window.
    pub fn scmult(
        &self,
        cts: &[Ciphertext],
        w: &PlaintextWindows,
    ) -> Result<Ciphertext, PaheError> {
        if cts.is_empty() || (w.len() > 1 && cts.len() < w.len()) {
            return Err(PaheError::MissingWindowCiphertexts {
                needed: w.len(),
                got: cts.len(),
            });
        }
        let n = self.n();
        let mut acc0 = vec![0u128; n];
        let mut acc1 = vec![0u128; n];
        for (ct, chunk) in cts
            .iter()
            .zip(&w.chunks)
            .zip(&w.norms)
            .filter(|(_, &nrm)| nrm != 0)
            .map(|(x, _)| x)
        {
            for i in 0..n {
                acc0[i] += ct.c0[i] as u128 * chunk[i] as u128;
                acc1[i] += ct.c1[i] as u128 * chunk[i] as u128;
            }
        }
        let c0 = acc0.into_iter().map(|x| self.q.reduce_wide(x)).collect();
        let c1 = acc1.into_iter().map(|x| self.q.reduce_wide(x)).collect();
        let noise = self
            .noise
            .scmult(cts.iter().map(|c| c.noise).zip(w.norms.iter().copied()));
        Ok(Ciphertext { c0, c1, noise })
    }

    /// Encryption of zero with zero noise estimate, as an accumulator seed.
    pub fn zero(&self) -> Ciphertext {
        Ciphertext {
            c0: vec![0; self.n()],
            c1: vec![0; self.n()],
            noise: NoiseEstimate::ZERO,
        }
    }

    /// Add uniform noise in `[-B, B]` so the estimate lands at `target_bits`.
    /// This statistically hides the computation-dependent noise before a
    /// ciphertext is returned to the key holder.
    pub fn flood(
        &self,
        ct: &Ciphertext,
        target_bits: f64,
        rng: &mut impl RngCore,
    ) -> Result<Ciphertext, PaheError> {
        let room = 2f64.powf(target_bits) - ct.noise.bound();
        if room < 1.0 {
            return Err(PaheError::NoiseBudgetExceeded {
                bits: ct.noise_bits(),
                limit: target_bits,
            });
        }
        let b = room.floor() as u64;
        let mut e: Vec<u64> = (0..self.n())
            .map(|_| {
                let x = rng.gen_range(0..=2 * b) as i64 - b as i64;
                self.lift_signed(x)
            })
            .collect();
        self.ntt_q.forward_inplace(&mut e);
        let c0 = ct
            .c0
            .iter()
            .zip(&e)
            .map(|(x, y)| self.q.add(*x, *y))
            .collect();
        Ok(Ciphertext {
            c0,
            c1: ct.c1.clone(),
            noise: NoiseEstimate {
                std: ct.noise.std,
                hard: ct.noise.hard + b as f64,
            },
        })
    }

    /// Evaluation-domain gather realising `X -> X^g`.
    pub fn automorphism_map(&self, elem: GroupElem) -> Vec<u32> {
        let n = self.n();
        let g = elem.galois(n);
        (0..n)
            .map(|j| {
                self.ntt_q
                    .index_of_exponent(self.ntt_q.exponent(j) * g % (2 * n)) as u32
            })
            .collect()
    }
}
