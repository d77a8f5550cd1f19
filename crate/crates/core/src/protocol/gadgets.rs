//! Conversions between encrypted values and additive shares, and the
//! share-level square.
//!
//! Sign convention: the server draws a uniform mask `r`, the client learns
//! `x + r` and the server keeps `-r`, so `client + server = x`.

use rand::{Rng, RngCore};

use super::{Party, ProtocolError, ShareVector};
use crate::modarith::Reducer;
use crate::pahe::{Ciphertext, PlaintextVector, RingContext, SecretKey};

/// Target noise after flooding: one bit below the correctness line.
pub fn flood_target<Q: Reducer>(ctx: &RingContext<Q>, margin_bits: f64) -> f64 {
    ctx.noise.line_bits - margin_bits
}

pub fn uniform(p: u64, len: usize, rng: &mut impl RngCore) -> Vec<u64> {
    (0..len).map(|_| rng.gen_range(0..p)).collect()
}

pub fn neg(v: &[u64], p: u64) -> Vec<u64> {
    v.iter().map(|&x| (p - x % p) % p).collect()
}

/// `v·2^(w_pt·k) mod p` for window `k`.
pub fn scale_to_window(v: &[u64], p: u64, w_pt: u32, k: usize) -> Vec<u64> {
    let f = modpow2(w_pt as u64 * k as u64, p);
    v.iter()
        .map(|&x| ((x as u128 * f as u128) % p as u128) as u64)
        .collect()
}

fn modpow2(e: u64, p: u64) -> u64 {
    let (mut r, mut b, mut e) = (1u128, 2u128 % p as u128, e);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u128;
        }
        b = b * b % p as u128;
        e >>= 1;
    }
    r as u64
}

/// Server side: mask every slot with fresh uniform values and flood the
/// noise. Returns the ciphertext for the client and the server's share of
/// every slot.
pub fn mask<Q: Reducer>(
    ctx: &RingContext<Q>,
    ct: &Ciphertext,
    target_bits: f64,
    rng: &mut impl RngCore,
) -> Result<(Ciphertext, Vec<u64>), ProtocolError> {
    let r = uniform(ctx.p(), ctx.n(), rng);
    let masked = ctx.flood(&ctx.add_plain(ct, &r), target_bits, rng)?;
    Ok((masked, neg(&r, ctx.p())))
}

/// Server side: add the server's share to a windowed encryption of the
/// client's share, giving a windowed encryption of the value itself.
pub fn add_share<Q: Reducer>(
    ctx: &RingContext<Q>,
    windows: &[Ciphertext],
    share_slots: &[u64],
    w_pt: u32,
) -> Vec<Ciphertext> {
    windows
        .iter()
        .enumerate()
        .map(|(k, ct)| ctx.add_plain(ct, &scale_to_window(share_slots, ctx.p(), w_pt, k)))
        .collect()
}

/// Turn an encryption of `x` (all slots) into shares; both roles in memory.
pub fn ct_to_shares<Q: Reducer>(
    ctx: &RingContext<Q>,
    sk: &SecretKey,
    ct: &Ciphertext,
    target_bits: f64,
    rng: &mut impl RngCore,
) -> Result<(ShareVector, ShareVector), ProtocolError> {
    let (masked, server) = mask(ctx, ct, target_bits, rng)?;
    let client = ctx.decrypt(sk, &masked).slots;
    Ok((
        ShareVector::new(Party::Client, ctx.p(), client),
        ShareVector::new(Party::Server, ctx.p(), server),
    ))
}

/// Turn shares back into a fresh encryption: the client encrypts its share,
/// the server adds its own.
pub fn shares_to_ct<Q: Reducer>(
    ctx: &RingContext<Q>,
    sk: &SecretKey,
    client: &ShareVector,
    server: &ShareVector,
    rng: &mut impl RngCore,
) -> Ciphertext {
    let pad = |v: &[u64]| {
        let mut v = v.to_vec();
        v.resize(ctx.n(), 0);
        v
    };
    let ct = ctx.encrypt(sk, &PlaintextVector::new(pad(&client.values)), rng);
    ctx.add_plain(&ct, &pad(&server.values))
}

/// Server half of the square: from a windowed encryption of the client
/// share `c` and the server share `s`, return `Enc(2cs + s² + t)` (flooded)
/// and the new server share `-t`.
pub fn square_server<Q: Reducer>(
    ctx: &RingContext<Q>,
    windows: &[Ciphertext],
    s: &[u64],
    w_pt: u32,
    target_bits: f64,
    rng: &mut impl RngCore,
) -> Result<(Ciphertext, Vec<u64>), ProtocolError> {
    let p = ctx.p();
    let mut s = s.to_vec();
    s.resize(ctx.n(), 0);
    let two_s: Vec<u64> = s.iter().map(|&v| 2 * v % p).collect();
    let prod = ctx.scmult(windows, &ctx.encode_windows(&two_s, w_pt))?;
    let t = uniform(p, ctx.n(), rng);
    let plain: Vec<u64> = s
        .iter()
        .zip(&t)
        .map(|(&v, &t)| ((v as u128 * v as u128 + t as u128) % p as u128) as u64)
        .collect();
    let out = ctx.flood(&ctx.add_plain(&prod, &plain), target_bits, rng)?;
    Ok((out, neg(&t, p)))
}

/// Client half: `c' = c² + d` where `d` is the decrypted server reply.
pub fn square_client(c: &[u64], d: &[u64], p: u64) -> Vec<u64> {
    c.iter()
        .zip(d)
        .map(|(&c, &d)| ((c as u128 * c as u128 + d as u128) % p as u128) as u64)
        .collect()
}

/// Both halves of the square in memory (at most `n` values).
pub fn square_shares<Q: Reducer>(
    ctx: &RingContext<Q>,
    sk: &SecretKey,
    client: &ShareVector,
    server: &ShareVector,
    w_pt: u32,
    target_bits: f64,
    rng: &mut impl RngCore,
) -> Result<(ShareVector, ShareVector), ProtocolError> {
    let p = ctx.p();
    let len = client.len();
    let mut c = client.values.clone();
    c.resize(ctx.n(), 0);
    let windows = ctx.encrypt_windows(sk, &PlaintextVector::new(c), w_pt, rng);
    let (reply, s_new) = square_server(ctx, &windows, &server.values, w_pt, target_bits, rng)?;
    let d = ctx.decrypt(sk, &reply).slots;
    Ok((
        ShareVector::new(
            Party::Client,
            p,
            square_client(&client.values, &d[..len], p),
        ),
        ShareVector::new(Party::Server, p, s_new[..len].to_vec()),
    ))
}
