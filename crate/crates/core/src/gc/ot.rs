//! Semi-honest 1-out-of-2 oblivious transfer of wire labels
//! (Chou–Orlandi "simplest OT" over Ristretto, SHA-256 key derivation).
//!
//! One round trip: the sender publishes `A = a·G`; for choice `c` the
//! receiver sends `B = b·G + c·A`; the sender encrypts `m_0` under
//! `H(a·B)` and `m_1` under `H(a·(B − A))`; the receiver can only derive
//! `H(b·A)`.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::garble::Label;
use super::GcError;
use crate::par;

pub const POINT_LEN: usize = 32;

fn random_scalar(rng: &mut impl RngCore) -> Scalar {
    let mut wide = [0u8; 64];
    rng.fill_bytes(&mut wide);
    Scalar::from_bytes_mod_order_wide(&wide)
}

fn decode_point(b: &[u8]) -> Result<RistrettoPoint, GcError> {
    CompressedRistretto::from_slice(b)
        .ok()
        .and_then(|c| c.decompress())
        .ok_or_else(|| GcError::Ot("invalid group element".into()))
}

fn kdf(p: &RistrettoPoint, index: usize) -> Label {
    let mut h = Sha256::new();
    h.update(b"ot-key");
    h.update((index as u64).to_le_bytes());
    h.update(p.compress().as_bytes());
    u128::from_le_bytes(h.finalize()[..16].try_into().unwrap())
}

pub struct OtSender {
    a: Scalar,
    big_a: RistrettoPoint,
}

impl OtSender {
    /// Returns the sender state and its first message.
    pub fn new(rng: &mut impl RngCore) -> (Self, [u8; POINT_LEN]) {
        let a = random_scalar(rng);
        let big_a = a * RISTRETTO_BASEPOINT_POINT;
        (Self { a, big_a }, big_a.compress().to_bytes())
    }

    /// Encrypt both labels of every wire against the receiver's points.
    pub fn respond(
        &self,
        receiver_msg: &[[u8; POINT_LEN]],
        pairs: &[[Label; 2]],
    ) -> Result<Vec<[Label; 2]>, GcError> {
        if receiver_msg.len() != pairs.len() {
            return Err(GcError::Ot(format!(
                "{} choices for {} label pairs",
                receiver_msg.len(),
                pairs.len()
            )));
        }
        par::map_range(pairs.len(), |i| {
            let big_b = decode_point(&receiver_msg[i])?;
            let [m0, m1] = pairs[i];
            let k0 = kdf(&(self.a * big_b), i);
            let k1 = kdf(&(self.a * (big_b - self.big_a)), i);
            Ok([m0 ^ k0, m1 ^ k1])
        })
        .into_iter()
        .collect()
    }
}

pub struct OtReceiver {
    big_a: RistrettoPoint,
    choices: Vec<bool>,
    b: Vec<Scalar>,
}

impl OtReceiver {
    /// Commit to the choice bits; returns the state and the message for the sender.
    pub fn new(
        sender_msg: &[u8; POINT_LEN],
        choices: &[bool],
        rng: &mut impl RngCore,
    ) -> Result<(Self, Vec<[u8; POINT_LEN]>), GcError> {
        let big_a = decode_point(sender_msg)?;
        let b: Vec<Scalar> = choices.iter().map(|_| random_scalar(rng)).collect();
        let msg = par::map_range(b.len(), |i| {
            let p = b[i] * RISTRETTO_BASEPOINT_POINT;
            (if choices[i] { p + big_a } else { p })
                .compress()
                .to_bytes()
        });
        Ok((
            Self {
                big_a,
                choices: choices.to_vec(),
                b,
            },
            msg,
        ))
    }

    /// Decrypt the chosen label of every wire.
    pub fn finish(&self, sender_msg: &[[Label; 2]]) -> Result<Vec<Label>, GcError> {
        if sender_msg.len() != self.choices.len() {
            return Err(GcError::Ot(format!(
                "{} ciphertexts for {} choices",
                sender_msg.len(),
                self.choices.len()
            )));
        }
        Ok(par::map_range(sender_msg.len(), |i| {
            sender_msg[i][self.choices[i] as usize] ^ kdf(&(self.b[i] * self.big_a), i)
        }))
    }
}

/// Run both sides in memory.
pub fn ot_transfer(
    pairs: &[[Label; 2]],
    choices: &[bool],
    rng: &mut impl RngCore,
) -> Result<Vec<Label>, GcError> {
    let (sender, a) = OtSender::new(rng);
    let (receiver, bs) = OtReceiver::new(&a, choices, rng)?;
    receiver.finish(&sender.respond(&bs, pairs)?)
}
