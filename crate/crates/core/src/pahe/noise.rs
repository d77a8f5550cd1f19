//! Noise bookkeeping.
//!
//! An estimate carries a standard deviation for the (approximately
//! Gaussian) part of the noise and a hard bound for the part that is
//! bounded but not Gaussian: residue wrap-arounds and flooding. The
//! reported bound is `TAIL·std + hard`.
//!
//! Rules:
//! * `add` is linear in `std`. Rotate-and-sum adds a ciphertext to a
//!   permutation of itself, and coefficient 0 is fixed by every
//!   automorphism, so the two noise terms can coincide there.
//! * `accumulate` combines independent products in quadrature; it is used
//!   for sums of scalar products against different plaintexts.
//! * multiplication by a plaintext window `v` scales by `‖v‖∞·√n`.
//! * a permutation adds `σ·√(n·D)·2^(w_relin-1)` for `D` key digits.

use std::fmt;

/// Tail factor between the tracked standard deviation and the reported bound.
pub const TAIL: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseEstimate {
    pub std: f64,
    pub hard: f64,
}

impl NoiseEstimate {
    pub const ZERO: NoiseEstimate = NoiseEstimate {
        std: 0.0,
        hard: 0.0,
    };

    pub fn bound(&self) -> f64 {
        TAIL * self.std + self.hard
    }

    pub fn bits(&self) -> f64 {
        self.bound().max(1.0).log2()
    }
}

impl fmt::Display for NoiseEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1} bits", self.bits())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub n: usize,
    pub sigma: f64,
    /// `|q - round(q/p)·p|`: cost of one plaintext wrap-around.
    pub r_abs: f64,
    pub line_bits: f64,
}

impl NoiseModel {
    pub fn fresh(&self) -> NoiseEstimate {
        NoiseEstimate {
            std: self.sigma,
            hard: 0.0,
        }
    }

    /// `η_mult` for a plaintext polynomial of infinity norm `norm`.
    pub fn eta_mult(&self, norm: u64) -> f64 {
        norm as f64 * (self.n as f64).sqrt()
    }

    /// Standard deviation added by one key switch.
    pub fn eta_rot(&self, w_relin: u32) -> f64 {
        let digits = digit_count(w_relin) as f64;
        self.sigma * (self.n as f64 * digits).sqrt() * 2f64.powi(w_relin as i32 - 1)
    }

    pub fn add(&self, a: NoiseEstimate, b: NoiseEstimate) -> NoiseEstimate {
        NoiseEstimate {
            std: a.std + b.std,
            hard: a.hard + b.hard + self.r_abs,
        }
    }

    pub fn accumulate(&self, a: NoiseEstimate, b: NoiseEstimate) -> NoiseEstimate {
        NoiseEstimate {
            std: a.std.hypot(b.std),
            hard: a.hard + b.hard + self.r_abs,
        }
    }

    pub fn add_plain(&self, a: NoiseEstimate) -> NoiseEstimate {
        NoiseEstimate {
            std: a.std,
            hard: a.hard + self.r_abs,
        }
    }

    /// `Σ_k [u_k]·v_k` for window ciphertext estimates paired with window norms.
    /// The second variance term is the scaled-message wrap `r·floor(m·v/p)`.
    pub fn scmult(&self, windows: impl IntoIterator<Item = (NoiseEstimate, u64)>) -> NoiseEstimate {
        let (mut var, mut hard) = (0.0f64, 0.0f64);
        for (est, norm) in windows {
            if norm == 0 {
                continue;
            }
            let eta = self.eta_mult(norm);
            var += (est.std * eta).powi(2) + (self.r_abs * eta).powi(2) / 3.0;
            hard += est.hard * norm as f64 * self.n as f64;
        }
        NoiseEstimate {
            std: var.sqrt(),
            hard,
        }
    }

    pub fn perm(&self, a: NoiseEstimate, w_relin: u32) -> NoiseEstimate {
        NoiseEstimate {
            std: a.std + self.eta_rot(w_relin),
            hard: a.hard,
        }
    }

    pub fn below_line(&self, a: NoiseEstimate) -> bool {
        a.bits() < self.line_bits
    }
}

/// Digits per key switch: `ceil(60 / w_relin)`.
pub fn digit_count(w_relin: u32) -> usize {
    60_usize.div_ceil(w_relin as usize)
}
