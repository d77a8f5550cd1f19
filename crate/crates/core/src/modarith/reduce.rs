//! Word-sized modular reduction.
//!
//! Three reducers share the [`Reducer`] interface so the NTT and the
//! ciphertext arithmetic can be instantiated with either the fast or the
//! schoolbook backend:
//!
//! * [`ModulusQ`] — pseudo-Mersenne `q = 2^60 - delta`, reduced by folding
//!   the bits above position 60 back in with a multiply by `delta`.
//! * [`ModulusP`] — Barrett reduction for plaintext moduli below 2^32.
//! * [`NaiveModulus`] — 128-bit `%`, the reference the others are checked
//!   against.

use super::prime::is_prime;
use super::ParamError;

const LOW60: u64 = (1u64 << 60) - 1;
const LOW60_WIDE: u128 = LOW60 as u128;

pub trait Reducer: Copy + Send + Sync + std::fmt::Debug + 'static {
    /// Whether the NTT may use precomputed-quotient twiddles with lazy
    /// reduction (needs `16m <= 2^64`). The schoolbook backend opts out.
    const LAZY_NTT: bool = true;

    fn value(&self) -> u64;

    /// `x mod m` for any 64-bit `x`.
    fn reduce(&self, x: u64) -> u64;

    /// `x mod m` for any 128-bit `x`.
    fn reduce_wide(&self, x: u128) -> u64;

    /// Product of two reduced operands.
    #[inline(always)]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_wide(a as u128 * b as u128)
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        s.min(s.wrapping_sub(self.value()))
    }

    #[inline(always)]
    fn sub(&self, a: u64, b: u64) -> u64 {
        let d = a.wrapping_sub(b);
        d.min(d.wrapping_add(self.value()))
    }

    #[inline(always)]
    fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value() - a
        }
    }

    fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.value();
        base = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse by Fermat; the modulus must be prime.
    fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.value() - 2)
    }

    /// Lift a signed integer into `[0, m)`.
    #[allow(clippy::wrong_self_convention)]
    fn from_i64(&self, x: i64) -> u64 {
        let m = self.value() as i128;
        (x as i128).rem_euclid(m) as u64
    }

    /// Centered representative in `(-m/2, m/2]`.
    #[inline(always)]
    fn center(&self, x: u64) -> i64 {
        let m = self.value();
        if x > m / 2 {
            x as i64 - m as i64
        } else {
            x as i64
        }
    }
}

/// Pseudo-Mersenne ciphertext modulus `q = 2^60 - delta` with `delta < sqrt(q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModulusQ {
    q: u64,
    delta: u64,
}

impl ModulusQ {
    pub fn new(q: u64) -> Result<Self, ParamError> {
        if !(1 << 59..1 << 60).contains(&q) {
            return Err(ParamError::Invalid(format!(
                "q = {q} is not a 60-bit modulus below 2^60"
            )));
        }
        let delta = (1u64 << 60) - q;
        if (delta as u128) * (delta as u128) >= q as u128 {
            return Err(ParamError::Invalid(format!(
                "delta = {delta} is not below sqrt(q)"
            )));
        }
        if !is_prime(q) {
            return Err(ParamError::Invalid(format!("q = {q} is not prime")));
        }
        Ok(Self { q, delta })
    }

    pub fn from_delta(delta: u64) -> Result<Self, ParamError> {
        if delta == 0 || delta >= 1 << 59 {
            return Err(ParamError::Invalid(format!("delta = {delta} out of range")));
        }
        Self::new((1u64 << 60) - delta)
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    /// Reduction of a product of two reduced operands (`x < 2^120`): two
    /// folds bring it under 2^62, the final one into `[0, q)`.
    #[inline(always)]
    fn reduce_product(&self, x: u128) -> u64 {
        let d = self.delta as u128;
        let t = (x & LOW60_WIDE) + (x >> 60) * d;
        let t = (t & LOW60_WIDE) + (t >> 60) * d;
        self.reduce(t as u64)
    }
}

impl Reducer for ModulusQ {
    #[inline(always)]
    fn value(&self) -> u64 {
        self.q
    }

    /// `x = hi·2^60 + lo ≡ hi·delta + lo`; with `hi < 16` and `delta < 2^30`
    /// the fold is below `2q`, so one conditional subtraction finishes.
    #[inline(always)]
    fn reduce(&self, x: u64) -> u64 {
        let r = (x & LOW60) + (x >> 60) * self.delta;
        r.min(r.wrapping_sub(self.q))
    }

    #[inline(always)]
    fn reduce_wide(&self, x: u128) -> u64 {
        if x >> 120 == 0 {
            return self.reduce_product(x);
        }
        let d = self.delta as u128;
        let t = (x & LOW60_WIDE) + (x >> 60) * d;
        self.reduce_product(t)
    }

    #[inline(always)]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_product(a as u128 * b as u128)
    }
}

/// Plaintext modulus with a precomputed Barrett constant `floor(2^64 / p)`.
///
/// The high-multiply formulation is exact for every 64-bit input as long as
/// `p < 2^32`, which covers all plaintext moduli the prime search returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModulusP {
    p: u64,
    barrett: u64,
    /// `2^64 mod p`, for folding the high word of 128-bit inputs.
    r64: u64,
}

impl ModulusP {
    pub fn new(p: u64) -> Result<Self, ParamError> {
        if !(3..1 << 32).contains(&p) {
            return Err(ParamError::Invalid(format!("p = {p} must be in [3, 2^32)")));
        }
        if !is_prime(p) {
            return Err(ParamError::Invalid(format!("p = {p} is not prime")));
        }
        let barrett = (u128::from(u64::MAX) + 1) / p as u128;
        let r64 = ((u128::from(u64::MAX) + 1) % p as u128) as u64;
        Ok(Self {
            p,
            barrett: barrett as u64,
            r64,
        })
    }

    /// Number of bits needed to write any residue, `ceil(log2 p)` for prime p.
    pub fn bits(&self) -> u32 {
        64 - (self.p - 1).leading_zeros()
    }
}

impl Reducer for ModulusP {
    #[inline(always)]
    fn value(&self) -> u64 {
        self.p
    }

    #[inline(always)]
    fn reduce(&self, x: u64) -> u64 {
        let quot = ((x as u128 * self.barrett as u128) >> 64) as u64;
        let r = x - quot * self.p;
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }

    #[inline(always)]
    fn reduce_wide(&self, x: u128) -> u64 {
        let lo = self.reduce(x as u64);
        let hi = (x >> 64) as u64;
        if hi == 0 {
            return lo;
        }
        let hi = self.reduce(self.reduce(hi) * self.r64);
        self.add(lo, hi)
    }
}

/// Reference backend: every reduction is a hardware division.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NaiveModulus {
    m: u64,
}

impl NaiveModulus {
    pub fn new(m: u64) -> Self {
        assert!(m > 1, "modulus must exceed 1");
        Self { m }
    }
}

impl Reducer for NaiveModulus {
    const LAZY_NTT: bool = false;

    #[inline(always)]
    fn value(&self) -> u64 {
        self.m
    }

    #[inline(always)]
    fn reduce(&self, x: u64) -> u64 {
        x % self.m
    }

    #[inline(always)]
    fn reduce_wide(&self, x: u128) -> u64 {
        (x % self.m as u128) as u64
    }
}

impl From<ModulusQ> for NaiveModulus {
    fn from(q: ModulusQ) -> Self {
        NaiveModulus::new(q.value())
    }
}

impl From<ModulusP> for NaiveModulus {
    fn from(p: ModulusP) -> Self {
        NaiveModulus::new(p.value())
    }
}
