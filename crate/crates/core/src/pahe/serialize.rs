//! Little-endian byte layouts for ciphertexts and permutation keys
//! (see `docs/wire.md`).
//!
//! Common 32-byte header:
//! `magic u32 | version u16 | kind u16 | n u32 | reserved u32 | q u64 | p u64`.

use super::context::{Ciphertext, RingContext};
use super::keys::PermutationKey;
use super::noise::digit_count;
use super::{GroupElem, PaheError};
use crate::modarith::Reducer;

pub const MAGIC: u32 = u32::from_le_bytes(*b"PAHE");
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum ObjectKind {
    Ciphertext = 1,
    PermutationKey = 2,
}

/// Serialized ciphertext size: header plus two polynomials.
pub fn ciphertext_len(n: usize) -> usize {
    HEADER_LEN + ciphertext_payload_len(n)
}

/// Coefficient bytes only: `2·n·8`.
pub fn ciphertext_payload_len(n: usize) -> usize {
    2 * n * 8
}

fn header<Q: Reducer>(ctx: &RingContext<Q>, kind: ObjectKind, out: &mut Vec<u8>) {
    out.extend_from_slice(&MAGIC.to_le_bytes());
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(kind as u16).to_le_bytes());
    out.extend_from_slice(&(ctx.n() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&ctx.params.q.value().to_le_bytes());
    out.extend_from_slice(&ctx.p().to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], PaheError> {
        if self.buf.len() < k {
            return Err(PaheError::Deserialize(format!(
                "truncated: need {k} more bytes, have {}",
                self.buf.len()
            )));
        }
        let (a, b) = self.buf.split_at(k);
        self.buf = b;
        Ok(a)
    }

    fn u16(&mut self) -> Result<u16, PaheError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, PaheError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PaheError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn poly(&mut self, n: usize, q: u64) -> Result<Vec<u64>, PaheError> {
        let raw = self.take(n * 8)?;
        raw.chunks_exact(8)
            .map(|c| {
                let x = u64::from_le_bytes(c.try_into().unwrap());
                if x >= q {
                    Err(PaheError::Deserialize(format!(
                        "coefficient {x} not reduced mod q"
                    )))
                } else {
                    Ok(x)
                }
            })
            .collect()
    }

    fn header<Q: Reducer>(
        &mut self,
        ctx: &RingContext<Q>,
        kind: ObjectKind,
    ) -> Result<(), PaheError> {
        if self.u32()? != MAGIC {
            return Err(PaheError::Deserialize("bad magic".into()));
        }
        let v = self.u16()?;
        if v != VERSION {
            return Err(PaheError::Deserialize(format!("unsupported version {v}")));
        }
        let k = self.u16()?;
        if k != kind as u16 {
            return Err(PaheError::Deserialize(format!(
                "expected object kind {}, got {k}",
                kind as u16
            )));
        }
        let n = self.u32()? as usize;
        let _reserved = self.u32()?;
        let q = self.u64()?;
        let p = self.u64()?;
        if n != ctx.n() || q != ctx.params.q.value() || p != ctx.p() {
            return Err(PaheError::ParamMismatch(format!(
                "object has n={n}, q={q}, p={p}"
            )));
        }
        Ok(())
    }

    fn finish(&self) -> Result<(), PaheError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(PaheError::Deserialize(format!(
                "{} trailing bytes",
                self.buf.len()
            )))
        }
    }
}

impl<Q: Reducer> RingContext<Q> {
    pub fn serialize_ciphertext(&self, ct: &Ciphertext) -> Vec<u8> {
        let mut out = Vec::with_capacity(ciphertext_len(self.n()));
        header(self, ObjectKind::Ciphertext, &mut out);
        for x in ct.c0.iter().chain(&ct.c1) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    /// The noise estimate is not transmitted; the receiver treats the
    /// ciphertext as fresh.
    pub fn deserialize_ciphertext(&self, bytes: &[u8]) -> Result<Ciphertext, PaheError> {
        let mut r = Reader { buf: bytes };
        r.header(self, ObjectKind::Ciphertext)?;
        let q = self.params.q.value();
        let c0 = r.poly(self.n(), q)?;
        let c1 = r.poly(self.n(), q)?;
        r.finish()?;
        Ok(Ciphertext {
            c0,
            c1,
            noise: self.noise.fresh(),
        })
    }

    /// Header, then `rot u32 | swap u8 | w_relin u8 | digits u16`, then
    /// `b_0, a_0, b_1, a_1, …`.
    pub fn serialize_key(&self, key: &PermutationKey) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 + key.size_bytes());
        header(self, ObjectKind::PermutationKey, &mut out);
        out.extend_from_slice(&(key.elem.rot as u32).to_le_bytes());
        out.push(key.elem.swap as u8);
        out.push(key.w_relin as u8);
        out.extend_from_slice(&(key.digits() as u16).to_le_bytes());
        for (b, a) in key.b.iter().zip(&key.a) {
            for x in b.iter().chain(a) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn deserialize_key(&self, bytes: &[u8]) -> Result<PermutationKey, PaheError> {
        let mut r = Reader { buf: bytes };
        r.header(self, ObjectKind::PermutationKey)?;
        let rot = r.u32()? as usize;
        let swap = match r.take(1)?[0] {
            0 => false,
            1 => true,
            x => return Err(PaheError::Deserialize(format!("bad swap flag {x}"))),
        };
        let w_relin = r.take(1)?[0] as u32;
        let digits = r.u16()? as usize;
        if !(1..=60).contains(&w_relin) || digits != digit_count(w_relin) {
            return Err(PaheError::Deserialize(format!(
                "inconsistent key digits: w_relin={w_relin}, digits={digits}"
            )));
        }
        if rot >= self.n() / 2 {
            return Err(PaheError::UnsupportedPermutation(format!(
                "rotation {rot} out of range"
            )));
        }
        let q = self.params.q.value();
        let mut b = Vec::with_capacity(digits);
        let mut a = Vec::with_capacity(digits);
        for _ in 0..digits {
            b.push(r.poly(self.n(), q)?);
            a.push(r.poly(self.n(), q)?);
        }
        r.finish()?;
        let elem = GroupElem::new(self.n(), rot, swap);
        Ok(PermutationKey {
            elem,
            w_relin,
            b,
            a,
            map: self.automorphism_map(elem),
        })
    }
}
