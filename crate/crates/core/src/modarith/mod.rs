//! Modular arithmetic, negacyclic NTT and ring parameters.

mod ntt;
mod prime;
mod reduce;

pub use ntt::{bit_reverse, negacyclic_schoolbook, LengthMismatch, NttTables};
pub use prime::{
    find_prime_pair, find_q_for_p, is_prime, min_delta_for, signed_residue, PrimePair, PrimeSearch,
    QCandidate,
};
pub use reduce::{ModulusP, ModulusQ, NaiveModulus, Reducer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("prime search exhausted after {examined} candidates")]
    SearchExhausted { examined: u64 },
}

/// Standard deviation of the fresh encryption noise.
pub const DEFAULT_SIGMA: f64 = 4.0;

/// `delta` of the 60-bit ciphertext modulus paired with `p = 307201`.
const STANDARD_DELTA: u64 = 4096 * 63549 - 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    /// Cyclotomic order, a power of two.
    pub m: usize,
    /// Ring degree and slot count, `m / 2`.
    pub n: usize,
    pub q: ModulusQ,
    pub p: ModulusP,
    pub sigma: f64,
    /// `q - round(q/p)·p`.
    pub r: i64,
}

impl RingParams {
    pub fn new(m: usize, q: ModulusQ, p: ModulusP, sigma: f64) -> Result<Self, ParamError> {
        if m < 8 || !m.is_power_of_two() {
            return Err(ParamError::Invalid(format!(
                "m = {m} is not a power of two >= 8"
            )));
        }
        let mu = m as u64;
        if q.value() % mu != 1 || p.value() % mu != 1 {
            return Err(ParamError::Invalid(format!(
                "q and p must both be 1 mod {m}"
            )));
        }
        if q.value() == p.value() {
            return Err(ParamError::Invalid("q and p must be coprime".into()));
        }
        let r = signed_residue(&p, &q);
        Ok(Self {
            m,
            n: m / 2,
            q,
            p,
            sigma,
            r,
        })
    }

    /// `n = 2048`, `p = 307201`, `q = 2^60 - 2^12·63549 + 1`.
    pub fn standard() -> Self {
        let q = ModulusQ::from_delta(STANDARD_DELTA).expect("standard q is prime");
        let p = ModulusP::new(307201).expect("standard p is prime");
        Self::new(4096, q, p, DEFAULT_SIGMA).expect("standard parameters are valid")
    }

    /// Small ring (`n = 64`) with a 17-bit plaintext prime, for fast tests.
    pub fn toy() -> Self {
        Self::searched(128, 16)
    }

    /// `n = 8` with `p = 17`, small enough for exhaustive checks.
    pub fn tiny() -> Self {
        let p = ModulusP::new(17).expect("17 is prime");
        let c = find_q_for_p(17, 16, 2).expect("a 60-bit q exists for p = 17");
        Self::new(16, c.q, p, DEFAULT_SIGMA).expect("tiny parameters are valid")
    }

    /// Parameters from the prime search at cyclotomic order `m`.
    pub fn searched(m: usize, log_p: u32) -> Self {
        let pair = PrimeSearch::new(log_p, m as u64, 2)
            .run_unchecked()
            .expect("prime search succeeds");
        Self::new(m, pair.q, pair.p, DEFAULT_SIGMA).expect("searched parameters are valid")
    }

    /// `round(q/p)`, the plaintext scale.
    pub fn scale(&self) -> u64 {
        let (p, q) = (self.p.value() as u128, self.q.value() as u128);
        ((2 * q + p) / (2 * p)) as u64
    }

    /// `log2(q / (2p))`: decryption is correct while the noise stays below.
    pub fn correctness_line_bits(&self) -> f64 {
        (self.q.value() as f64 / (2.0 * self.p.value() as f64)).log2()
    }

    pub fn plain_bits(&self) -> u32 {
        self.p.bits()
    }

    /// Bits of `q`; always 60 for accepted moduli.
    pub fn cipher_bits(&self) -> u32 {
        64 - self.q.value().leading_zeros()
    }
}
