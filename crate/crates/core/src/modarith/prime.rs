//! Primality testing and the reduction-friendly prime-pair search.
//!
//! We want a plaintext prime `p` and a ciphertext prime `q = 2^60 - delta`
//! such that both are `1 mod m` (negacyclic NTTs exist for both), `delta`
//! is below `sqrt(q)` (pseudo-Mersenne folding works) and `q mod p` is a
//! tiny signed residue `r` (the scaled plaintext `floor(q/p)·p` misses `q`
//! by `|r|`, keeping scalar-multiplication noise low).
//!
//! `q ≡ 1 (mod m)` and `2^60 ≡ 0 (mod m)` force `delta ≡ -1 (mod m)`;
//! `q ≡ r (mod p)` forces `delta ≡ 2^60 - r (mod p)`. CRT gives the smallest
//! admissible `delta` per `(p, r)` directly, so only `p` is sieved.

use super::reduce::{ModulusP, ModulusQ, Reducer};
use super::ParamError;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin; the first twelve prime bases are a proven
/// witness set for every `n < 3.3·10^24`, which covers all of `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A `q` candidate for a fixed `p` and residue `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QCandidate {
    pub q: ModulusQ,
    pub r: i64,
}

fn isqrt(x: u64) -> u64 {
    let mut s = (x as f64).sqrt() as u64;
    while (s as u128) * (s as u128) > x as u128 {
        s -= 1;
    }
    while ((s + 1) as u128) * ((s + 1) as u128) <= x as u128 {
        s += 1;
    }
    s
}

/// Smallest `delta` giving a prime `q = 2^60 - delta` with `q ≡ 1 (mod m)`,
/// `q ≡ r (mod p)` and `delta² < q`.
pub fn min_delta_for(p: u64, m: u64, r: i64) -> Option<u64> {
    let two60 = 1u64 << 60;
    let target = (two60 as i128 - r as i128 + 1).rem_euclid(p as i128) as u64;
    let m_inv = pow_mod(m % p, p - 2, p);
    let mut t = mul_mod(target, m_inv, p);
    if t == 0 {
        t = p;
    }
    let step = m.checked_mul(p)?;
    let mut delta = (m as u128 * t as u128 - 1) as u64;
    let limit = isqrt(two60);
    while delta <= limit {
        let q = two60 - delta;
        if (delta as u128) * (delta as u128) < q as u128 && is_prime(q) {
            return Some(delta);
        }
        delta = delta.checked_add(step)?;
    }
    None
}

/// Best `q` for a given `p`: the smallest `|r|` first, then the smallest
/// `delta` among the `±|r|` candidates.
pub fn find_q_for_p(p: u64, m: u64, r_bound: u32) -> Option<QCandidate> {
    (1..=r_bound as i64).find_map(|a| best_at_level(p, m, a))
}

fn best_at_level(p: u64, m: u64, a: i64) -> Option<QCandidate> {
    [a, -a]
        .into_iter()
        .filter_map(|r| min_delta_for(p, m, r).map(|d| (d, r)))
        .min()
        .map(|(delta, r)| QCandidate {
            q: ModulusQ::from_delta(delta).expect("search only yields valid q"),
            r,
        })
}

/// Search configuration; [`find_prime_pair`] uses the default budget.
#[derive(Debug, Clone, Copy)]
pub struct PrimeSearch {
    pub log_p: u32,
    pub m: u64,
    pub r_bound: u32,
    /// Maximum number of prime `p` candidates examined, over all residue levels.
    pub max_candidates: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct PrimePair {
    pub p: ModulusP,
    pub q: ModulusQ,
    pub r: i64,
    pub candidates_examined: u64,
}

impl PrimeSearch {
    pub fn new(log_p: u32, m: u64, r_bound: u32) -> Self {
        Self {
            log_p,
            m,
            r_bound,
            max_candidates: 1 << 22,
        }
    }

    /// Residue levels `|r| = 1, 2, …, r_bound` are tried in turn; within a
    /// level, primes `p ≡ 1 (mod m)` with `floor(log2 p) = log_p` are scanned
    /// upward and the first `p` admitting a `q` wins.
    pub fn run(&self) -> Result<PrimePair, ParamError> {
        if !(16..=30).contains(&self.log_p) {
            return Err(ParamError::Invalid(format!(
                "log_p = {} outside [16, 30]",
                self.log_p
            )));
        }
        self.run_unchecked()
    }

    /// As [`run`](Self::run) without the `[16, 30]` range restriction on
    /// `log_p`; used for small test rings.
    pub fn run_unchecked(&self) -> Result<PrimePair, ParamError> {
        if self.m < 8 || !self.m.is_power_of_two() {
            return Err(ParamError::Invalid(format!(
                "m = {} is not a power of two >= 8",
                self.m
            )));
        }
        if self.r_bound == 0 {
            return Err(ParamError::Invalid("r_bound must be positive".into()));
        }
        let lo = 1u64 << self.log_p;
        let hi = lo << 1;
        let mut examined = 0u64;
        for a in 1..=self.r_bound as i64 {
            let mut p = lo + (self.m + 1 - lo % self.m) % self.m;
            while p < hi {
                if is_prime(p) {
                    examined += 1;
                    if examined > self.max_candidates {
                        return Err(ParamError::SearchExhausted {
                            examined: examined - 1,
                        });
                    }
                    if let Some(c) = best_at_level(p, self.m, a) {
                        return Ok(PrimePair {
                            p: ModulusP::new(p)?,
                            q: c.q,
                            r: c.r,
                            candidates_examined: examined,
                        });
                    }
                }
                p += self.m;
            }
        }
        Err(ParamError::SearchExhausted { examined })
    }
}

/// Reduction-friendly `(p, q)` with `floor(log2 p) = log_p_target`.
pub fn find_prime_pair(
    log_p_target: u32,
    m: u64,
    r_bound: u32,
) -> Result<(ModulusP, ModulusQ), ParamError> {
    let pair = PrimeSearch::new(log_p_target, m, r_bound).run()?;
    Ok((pair.p, pair.q))
}

/// Signed residue `r = q - round(q/p)·p`.
pub fn signed_residue(p: &ModulusP, q: &ModulusQ) -> i64 {
    let (p, q) = (p.value() as i128, q.value() as i128);
    let scale = (2 * q + p) / (2 * p);
    (q - scale * p) as i64
}
