//! Negacyclic number-theoretic transform over `Z_m[X]/(X^n + 1)`.
//!
//! Forward: Cooley–Tukey, coefficients in natural order, evaluations out in
//! bit-reversed order. Output index `i` holds `a(psi^(2·brv(i) + 1))` for the
//! primitive 2n-th root `psi`. Inverse: Gentleman–Sande, the exact mirror.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::reduce::Reducer;
use super::ParamError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("length mismatch: expected {expected} coefficients, got {got}")]
pub struct LengthMismatch {
    pub expected: usize,
    pub got: usize,
}

#[derive(Debug, Clone)]
pub struct NttTables<R: Reducer> {
    n: usize,
    log_n: u32,
    modulus: R,
    psi: u64,
    psi_brv: Vec<u64>,
    psi_inv_brv: Vec<u64>,
    n_inv: u64,
    brv: Vec<u32>,
    /// `floor(w·2^64 / m)` for each twiddle (empty unless lazy).
    psi_brv_q: Vec<u64>,
    psi_inv_brv_q: Vec<u64>,
    n_inv_q: u64,
}

#[inline(always)]
fn shoup_quot(w: u64, m: u64) -> u64 {
    (((w as u128) << 64) / m as u128) as u64
}

/// `y·w mod m` in `[0, 2m)` for any 64-bit `y`, given `wq = shoup_quot(w, m)`.
#[inline(always)]
fn shoup_mul(y: u64, w: u64, wq: u64, m: u64) -> u64 {
    let q = ((y as u128 * wq as u128) >> 64) as u64;
    y.wrapping_mul(w).wrapping_sub(q.wrapping_mul(m))
}

#[inline(always)]
fn csub(x: u64, m: u64) -> u64 {
    x.min(x.wrapping_sub(m))
}

pub fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    x.reverse_bits() >> (usize::BITS - bits)
}

/// Smallest `g` whose `(m-1)/2`-th power is `-1`, raised to `(m-1)/2n`.
/// A non-residue generates the full 2-power part of `Z_m^*`, so the result
/// has order exactly `2n`.
fn primitive_root<R: Reducer>(modulus: &R, n: usize) -> Result<u64, ParamError> {
    let m = modulus.value();
    let two_n = 2 * n as u64;
    if !(m - 1).is_multiple_of(two_n) {
        return Err(ParamError::Invalid(format!(
            "modulus {m} is not 1 mod {two_n}"
        )));
    }
    for g in 2..m.min(1 << 20) {
        if modulus.pow(g, (m - 1) / 2) != m - 1 {
            continue;
        }
        let psi = modulus.pow(g, (m - 1) / two_n);
        if modulus.pow(psi, n as u64) == m - 1 {
            return Ok(psi);
        }
    }
    Err(ParamError::Invalid(format!(
        "no primitive {two_n}-th root of unity mod {m}"
    )))
}

impl<R: Reducer> NttTables<R> {
    pub fn new(modulus: R, n: usize) -> Result<Self, ParamError> {
        if n < 2 || !n.is_power_of_two() {
            return Err(ParamError::Invalid(format!(
                "ring degree {n} is not a power of two"
            )));
        }
        let log_n = n.trailing_zeros();
        let psi = primitive_root(&modulus, n)?;
        let psi_inv = modulus.inv(psi);
        let brv: Vec<u32> = (0..n).map(|i| bit_reverse(i, log_n) as u32).collect();
        let mut psi_brv = vec![0u64; n];
        let mut psi_inv_brv = vec![0u64; n];
        let (mut pw, mut pw_inv) = (1u64, 1u64);
        for i in 0..n {
            psi_brv[brv[i] as usize] = pw;
            psi_inv_brv[brv[i] as usize] = pw_inv;
            pw = modulus.mul(pw, psi);
            pw_inv = modulus.mul(pw_inv, psi_inv);
        }
        let n_inv = modulus.inv(n as u64 % modulus.value());
        let m = modulus.value();
        let lazy = R::LAZY_NTT && m < 1 << 60;
        let quots = |v: &[u64]| {
            if lazy {
                v.iter().map(|&w| shoup_quot(w, m)).collect()
            } else {
                Vec::new()
            }
        };
        let (psi_brv_q, psi_inv_brv_q) = (quots(&psi_brv), quots(&psi_inv_brv));
        let n_inv_q = if lazy { shoup_quot(n_inv, m) } else { 0 };
        Ok(Self {
            n,
            log_n,
            modulus,
            psi,
            psi_brv,
            psi_inv_brv,
            n_inv,
            brv,
            psi_brv_q,
            psi_inv_brv_q,
            n_inv_q,
        })
    }

    /// Shared tables, built once per `(reducer type, modulus, n)`.
    pub fn cached(modulus: R, n: usize) -> Result<Arc<Self>, ParamError> {
        type Cache = Mutex<HashMap<(TypeId, u64, usize), Arc<dyn Any + Send + Sync>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (TypeId::of::<R>(), modulus.value(), n);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().unwrap().get(&key) {
            if let Ok(t) = hit.clone().downcast::<Self>() {
                return Ok(t);
            }
        }
        let tables = Arc::new(Self::new(modulus, n)?);
        cache.lock().unwrap().insert(key, tables.clone());
        Ok(tables)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &R {
        &self.modulus
    }

    pub fn root(&self) -> u64 {
        self.psi
    }

    pub fn bit_reversal(&self) -> &[u32] {
        &self.brv
    }

    /// Exponent `e` (odd, mod 2n) such that evaluation slot `i` holds `a(psi^e)`.
    pub fn exponent(&self, i: usize) -> usize {
        2 * self.brv[i] as usize + 1
    }

    /// Evaluation index holding `a(psi^e)` for odd `e`.
    pub fn index_of_exponent(&self, e: usize) -> usize {
        debug_assert!(e % 2 == 1);
        bit_reverse((e % (2 * self.n)) / 2, self.log_n)
    }

    pub fn forward(&self, a: &mut [u64]) -> Result<(), LengthMismatch> {
        self.check(a.len())?;
        self.forward_inplace(a);
        Ok(())
    }

    pub fn inverse(&self, a: &mut [u64]) -> Result<(), LengthMismatch> {
        self.check(a.len())?;
        self.inverse_inplace(a);
        Ok(())
    }

    fn check(&self, len: usize) -> Result<(), LengthMismatch> {
        if len != self.n {
            return Err(LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    pub fn forward_inplace(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        if !self.psi_brv_q.is_empty() {
            return self.forward_lazy(a);
        }
        let md = &self.modulus;
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for i in 0..m {
                let s = self.psi_brv[m + i];
                let (lo, hi) = a[2 * i * t..2 * (i + 1) * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = md.mul(*y, s);
                    *x = md.add(u, v);
                    *y = md.sub(u, v);
                }
            }
            m <<= 1;
        }
    }

    pub fn inverse_inplace(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        if !self.psi_inv_brv_q.is_empty() {
            return self.inverse_lazy(a);
        }
        let md = &self.modulus;
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            for i in 0..h {
                let s = self.psi_inv_brv[h + i];
                let (lo, hi) = a[2 * i * t..2 * (i + 1) * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = *y;
                    *x = md.add(u, v);
                    *y = md.mul(md.sub(u, v), s);
                }
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = md.mul(*x, self.n_inv);
        }
    }
}

impl<R: Reducer> NttTables<R> {
    fn forward_lazy(&self, a: &mut [u64]) {
        let (w, wq, m) = (&self.psi_brv[..], &self.psi_brv_q[..], self.modulus.value());
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::is_x86_feature_detected as has;
            if has!("avx512f") && has!("avx512dq") && has!("avx512vl") {
                // SAFETY: the features were just detected.
                return unsafe { lazy::forward_avx512(a, w, wq, m) };
            }
            if has!("avx2") {
                // SAFETY: as above.
                return unsafe { lazy::forward_avx2(a, w, wq, m) };
            }
        }
        lazy::forward(a, w, wq, m)
    }

    fn inverse_lazy(&self, a: &mut [u64]) {
        let (w, wq, m) = (
            &self.psi_inv_brv[..],
            &self.psi_inv_brv_q[..],
            self.modulus.value(),
        );
        let scale = (self.n_inv, self.n_inv_q);
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::is_x86_feature_detected as has;
            if has!("avx512f") && has!("avx512dq") && has!("avx512vl") {
                // SAFETY: the features were just detected.
                return unsafe { lazy::inverse_avx512(a, w, wq, scale, m) };
            }
            if has!("avx2") {
                // SAFETY: as above.
                return unsafe { lazy::inverse_avx2(a, w, wq, scale, m) };
            }
        }
        lazy::inverse(a, w, wq, scale, m)
    }
}

/// Precomputed-quotient butterflies. The loops are written so the compiler
/// vectorises them; the AVX2 and AVX-512 copies are the same code compiled
/// with the features enabled and picked at run time.
mod lazy {
    use super::{csub, shoup_mul};

    // Bounds are tracked by hand (all values stay below 16m <= 2^64), so the
    // arithmetic is written wrapping to keep overflow checks out of the loops.

    /// `[0, 16m) -> [0, 2m)`, with `ms = (8m, 4m, 2m)`.
    #[inline(always)]
    fn fold16(x: u64, (m8, m4, m2): (u64, u64, u64)) -> u64 {
        csub(csub(csub(x, m8), m4), m2)
    }

    /// Harvey's butterfly without per-layer correction: a layer adds at most
    /// `2m` to the bound, so the inputs are only folded back below `2m` when
    /// the next layer could leave `[0, 16m)`.
    #[inline(always)]
    pub(super) fn forward(a: &mut [u64], psi: &[u64], psi_q: &[u64], m: u64) {
        let n = a.len();
        let two_m = m.wrapping_mul(2);
        let ms = (m.wrapping_mul(8), m.wrapping_mul(4), two_m);
        let mut bound = 1;
        let mut t = n;
        let mut k = 1;
        while k < n {
            t >>= 1;
            let fold = bound + 2 > 16;
            let tw = psi[k..2 * k].iter().zip(&psi_q[k..2 * k]);
            for (block, (&w, &wq)) in a.chunks_exact_mut(2 * t).zip(tw) {
                let (lo, hi) = block.split_at_mut(t);
                if fold {
                    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                        let u = fold16(*x, ms);
                        let v = shoup_mul(*y, w, wq, m);
                        *x = u.wrapping_add(v);
                        *y = u.wrapping_add(two_m).wrapping_sub(v);
                    }
                } else {
                    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                        let u = *x;
                        let v = shoup_mul(*y, w, wq, m);
                        *x = u.wrapping_add(v);
                        *y = u.wrapping_add(two_m).wrapping_sub(v);
                    }
                }
            }
            bound = if fold { 4 } else { bound + 2 };
            k <<= 1;
        }
        for x in a.iter_mut() {
            *x = csub(fold16(*x, ms), m);
        }
    }

    /// Gentleman–Sande mirror with values in `[0, 2m)`.
    #[inline(always)]
    pub(super) fn inverse(a: &mut [u64], psi: &[u64], psi_q: &[u64], (s, sq): (u64, u64), m: u64) {
        let two_m = 2 * m;
        let n = a.len();
        // First layer: adjacent pairs, written flat so it vectorises.
        let tw = psi[n / 2..].iter().zip(&psi_q[n / 2..]);
        for (pair, (&w, &wq)) in a.chunks_exact_mut(2).zip(tw) {
            let (u, v) = (pair[0], pair[1]);
            pair[0] = csub(u.wrapping_add(v), two_m);
            pair[1] = shoup_mul(u.wrapping_add(two_m).wrapping_sub(v), w, wq, m);
        }
        let mut t = 2;
        let mut k = n / 2;
        while k > 1 {
            let h = k >> 1;
            let tw = psi[h..k].iter().zip(&psi_q[h..k]);
            for (block, (&w, &wq)) in a.chunks_exact_mut(2 * t).zip(tw) {
                let (lo, hi) = block.split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = csub(u.wrapping_add(v), two_m);
                    *y = shoup_mul(u.wrapping_add(two_m).wrapping_sub(v), w, wq, m);
                }
            }
            t <<= 1;
            k = h;
        }
        for x in a.iter_mut() {
            *x = csub(shoup_mul(*x, s, sq, m), m);
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn forward_avx2(a: &mut [u64], psi: &[u64], psi_q: &[u64], m: u64) {
        forward(a, psi, psi_q, m)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn inverse_avx2(
        a: &mut [u64],
        psi: &[u64],
        psi_q: &[u64],
        scale: (u64, u64),
        m: u64,
    ) {
        inverse(a, psi, psi_q, scale, m)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f,avx512dq,avx512vl")]
    pub(super) unsafe fn forward_avx512(a: &mut [u64], psi: &[u64], psi_q: &[u64], m: u64) {
        forward(a, psi, psi_q, m)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f,avx512dq,avx512vl")]
    pub(super) unsafe fn inverse_avx512(
        a: &mut [u64],
        psi: &[u64],
        psi_q: &[u64],
        scale: (u64, u64),
        m: u64,
    ) {
        inverse(a, psi, psi_q, scale, m)
    }
}

/// `a·b mod (X^n + 1, m)` by the quadratic schoolbook formula; test oracle.
pub fn negacyclic_schoolbook<R: Reducer>(modulus: &R, a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len();
    assert_eq!(n, b.len());
    let mut out = vec![0u64; n];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let prod = modulus.mul(x, y);
            let k = i + j;
            if k < n {
                out[k] = modulus.add(out[k], prod);
            } else {
                out[k - n] = modulus.sub(out[k - n], prod);
            }
        }
    }
    out
}
