//! The two protocol roles over a [`Channel`], plus an in-process runner.
//!
//! Offline: `Hello` (C→S), `Architecture` (S→C), `Keys` (C→S), `Garbled`
//! (S→C). Online, per step: linear and square steps exchange one
//! `Ciphertexts` message each way, garbled steps one `OtChoice` /
//! `OtResponse` pair. A network ending in a non-linear layer finishes with
//! the server's `Shares`.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::gadgets::{self, add_share, flood_target, neg, square_client, square_server};
use super::plan::{Compiled, Step, SQUARE_W_PT};
use super::wire::{pipe, Reader, Writer};
use super::{
    Channel, Direction, Layer, MsgType, Network, Party, Phase, ProtocolError, Transcript,
    FORMAT_VERSION,
};
use crate::conv::{conv2d, hide_periphery, Filters, PreparedConv};
use crate::gc::{
    decode, evaluate, from_bits, garble, to_bits, Circuit, GarbledCircuit, InputLabels, Label,
    OtReceiver, OtSender, POINT_LEN,
};
use crate::linalg::{hide_garbage, matvec, PreparedMatrix, WeightMatrix};
use crate::modarith::{Reducer, RingParams};
use crate::pahe::{
    Ciphertext, HeEvaluator, KeySet, PlaintextVector, PlaintextWindows, RingContext,
};

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub params: RingParams,
    /// Key-switching digit width requested by the client.
    pub w_relin: u32,
    /// Flood returned ciphertexts to this many bits below the correctness line.
    pub flood_margin_bits: f64,
    /// Deterministic randomness for tests; `None` draws from the OS.
    pub seed: Option<u64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            params: RingParams::standard(),
            w_relin: 6,
            flood_margin_bits: 1.0,
            seed: None,
        }
    }
}

impl SessionConfig {
    fn rng(&self, stream: u64) -> ChaCha20Rng {
        match self.seed {
            Some(s) => {
                let mut r = ChaCha20Rng::seed_from_u64(s);
                r.set_stream(stream);
                r
            }
            None => ChaCha20Rng::from_entropy(),
        }
    }
}

/// Noise of one returned ciphertext, in bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub step: usize,
    pub ct: usize,
    pub bits: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ServerReport {
    pub transcript: Transcript,
    /// Estimates before flooding.
    pub computed: Vec<NoiseRecord>,
    /// Estimates of what was sent.
    pub sent: Vec<NoiseRecord>,
    pub line_bits: f64,
    pub steps: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct ClientReport {
    pub output: Vec<u64>,
    pub transcript: Transcript,
    /// Noise measured on decryption.
    pub measured: Vec<NoiseRecord>,
    pub line_bits: f64,
    pub keys: usize,
}

#[derive(Serialize, Deserialize)]
struct Hello {
    version: u32,
    n: usize,
    p: u64,
    q: u64,
    w_relin: u32,
}

fn send_cts<S: Read + Write>(
    ch: &mut Channel<S>,
    ctx: &RingContext,
    cts: &[Ciphertext],
) -> Result<(), ProtocolError> {
    let mut w = Writer::default();
    w.u32(cts.len() as u32);
    for c in cts {
        w.raw(&ctx.serialize_ciphertext(c));
    }
    ch.send(MsgType::Ciphertexts, &w.0, cts.len() as u32)
}

fn recv_cts<S: Read + Write>(
    ch: &mut Channel<S>,
    ctx: &RingContext,
    expect: usize,
) -> Result<Vec<Ciphertext>, ProtocolError> {
    let body = ch.recv(MsgType::Ciphertexts)?;
    let mut r = Reader(&body);
    let count = r.u32()? as usize;
    if count != expect {
        return Err(ProtocolError::Wire(format!(
            "expected {expect} ciphertexts, got {count}"
        )));
    }
    let len = crate::pahe::ciphertext_len(ctx.n());
    let cts = (0..count)
        .map(|_| Ok(ctx.deserialize_ciphertext(r.take(len)?)?))
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    r.finish()?;
    Ok(cts)
}

fn pad(v: &[u64], n: usize) -> Vec<u64> {
    let mut v = v.to_vec();
    v.resize(n, 0);
    v
}

fn check_hello(h: &Hello, ctx: &RingContext) -> Result<(), ProtocolError> {
    if h.version != FORMAT_VERSION {
        return Err(ProtocolError::Version {
            ours: FORMAT_VERSION as u16,
            theirs: h.version as u16,
        });
    }
    if (h.n, h.p, h.q) != (ctx.n(), ctx.p(), ctx.params.q.value()) {
        return Err(ProtocolError::Wire(format!(
            "peer uses n={}, p={}, q={}",
            h.n, h.p, h.q
        )));
    }
    Ok(())
}

enum Prep {
    Fc(PreparedMatrix<PlaintextWindows>),
    Conv(PreparedConv<PlaintextWindows>),
    Act {
        labels: InputLabels,
        ot: OtSender,
        s_y: Vec<u64>,
    },
    Square,
}

/// Run the server role. Errors are reported to the peer before returning.
pub fn serve<S: Read + Write>(
    net: &Network,
    stream: S,
    cfg: &SessionConfig,
) -> Result<ServerReport, ProtocolError> {
    let mut ch = Channel::new(stream);
    let mut report = ServerReport::default();
    let res = serve_inner(net, &mut ch, cfg, &mut report);
    if let Err(e) = &res {
        if !matches!(e, ProtocolError::Remote(_) | ProtocolError::Io(_)) {
            ch.send_error(&e.to_string());
        }
    }
    report.transcript = ch.transcript;
    res.map(|_| report)
}

fn serve_inner<S: Read + Write>(
    net: &Network,
    ch: &mut Channel<S>,
    cfg: &SessionConfig,
    report: &mut ServerReport,
) -> Result<(), ProtocolError> {
    let mut rng = cfg.rng(1);
    let ctx = RingContext::new(cfg.params)?;
    let p = ctx.p();
    let n = ctx.n();
    if net.modulus != p {
        return Err(ProtocolError::Network(format!(
            "network is over Z_{} but the ring uses p = {p}",
            net.modulus
        )));
    }
    if !net.has_weights() {
        return Err(ProtocolError::Network(
            "server network has no weights".into(),
        ));
    }
    let compiled = Compiled::new(net, n)?;
    report.line_bits = ctx.noise.line_bits;
    report.steps = compiled.steps.iter().map(|s| s.name()).collect();
    let target = flood_target(&ctx, cfg.flood_margin_bits);

    // ---- offline ----
    let hello: Hello = serde_json::from_slice(&ch.recv(MsgType::Hello)?)
        .map_err(|e| ProtocolError::Wire(format!("hello: {e}")))?;
    check_hello(&hello, &ctx)?;
    ch.send(
        MsgType::Architecture,
        net.architecture().to_json().as_bytes(),
        0,
    )?;

    let body = ch.recv(MsgType::Keys)?;
    let mut r = Reader(&body);
    let mut keys = KeySet::empty(hello.w_relin);
    for _ in 0..r.u32()? {
        keys.insert(ctx.deserialize_key(r.blob()?)?)?;
    }
    r.finish()?;
    if let Some(e) = compiled
        .required_elems()
        .into_iter()
        .find(|e| !keys.contains(*e))
    {
        return Err(ProtocolError::Pahe(crate::pahe::PaheError::MissingKey(e)));
    }
    let ev = HeEvaluator::new(&ctx, &keys);

    let mut preps = Vec::with_capacity(compiled.steps.len());
    let mut garbled = Writer::default();
    garbled.u32(compiled.act_steps() as u32);
    for step in &compiled.steps {
        preps.push(match step {
            Step::Fc {
                layer,
                plan,
                n_i,
                n_o,
            } => {
                let Layer::Fc { weights, bias, .. } = &net.layers[*layer] else {
                    unreachable!()
                };
                let mut w = WeightMatrix::new(*n_o, *n_i, weights.clone().expect("checked"))?;
                w.bias = bias.clone();
                Prep::Fc(PreparedMatrix::new(&ev, plan, Some(&w.padded()))?)
            }
            Step::Conv { layer, plan } => {
                let Layer::Conv {
                    spec,
                    weights,
                    bias,
                } = &net.layers[*layer]
                else {
                    unreachable!()
                };
                let f = Filters {
                    spec: *spec,
                    data: weights.clone().expect("checked"),
                    bias: bias.clone(),
                };
                Prep::Conv(PreparedConv::new(&ev, plan, Some(&f), true)?)
            }
            Step::Act { block, .. } => {
                let circuit = block.build()?;
                let (gc, labels) = garble(&circuit, &mut rng);
                let (ot, a) = OtSender::new(&mut rng);
                garbled.blob(&gc.to_bytes()).raw(&a);
                Prep::Act {
                    labels,
                    ot,
                    s_y: gadgets::uniform(p, block.count, &mut rng),
                }
            }
            Step::Square { .. } => Prep::Square,
        });
    }
    ch.send(MsgType::Garbled, &garbled.0, 0)?;

    // ---- online ----
    ch.phase = Phase::Online;
    let mut s = vec![0u64; compiled.input_len];
    let last = compiled.steps.len() - 1;
    for (i, (step, prep)) in compiled.steps.iter().zip(&preps).enumerate() {
        // Mask (or, on the final layer, hide non-result slots), flood, send.
        let mut finish =
            |outs: Vec<Ciphertext>,
             hide: &mut dyn FnMut(&[Ciphertext], &mut ChaCha20Rng) -> Vec<Ciphertext>,
             ch: &mut Channel<S>,
             rng: &mut ChaCha20Rng|
             -> Result<Vec<Vec<u64>>, ProtocolError> {
                let mut sent = Vec::with_capacity(outs.len());
                let mut shares = Vec::new();
                for (j, ct) in outs.iter().enumerate() {
                    report.computed.push(NoiseRecord {
                        step: i,
                        ct: j,
                        bits: ct.noise_bits(),
                    });
                }
                if i == last {
                    for ct in hide(&outs, rng) {
                        sent.push(ctx.flood(&ct, target, rng)?);
                    }
                } else {
                    for ct in &outs {
                        let (m, sh) = gadgets::mask(&ctx, ct, target, rng)?;
                        sent.push(m);
                        shares.push(sh);
                    }
                }
                for (j, ct) in sent.iter().enumerate() {
                    report.sent.push(NoiseRecord {
                        step: i,
                        ct: j,
                        bits: ct.noise_bits(),
                    });
                }
                send_cts(ch, &ctx, &sent)?;
                Ok(shares)
            };
        match (step, prep) {
            (Step::Fc { plan, n_o, .. }, Prep::Fc(m)) => {
                let k = ctx.window_count(plan.w_pt);
                let win = recv_cts(ch, &ctx, k)?;
                let bundle = add_share(&ctx, &win, &plan.input_slots(&s), plan.w_pt);
                let outs = matvec(&ev, m, &bundle)?;
                let shares = finish(
                    outs,
                    &mut |o, r| hide_garbage(&ev, plan, o, p, r),
                    ch,
                    &mut rng,
                )?;
                if i != last {
                    s = plan.decode_output(&shares)[..*n_o].to_vec();
                }
            }
            (Step::Conv { plan, .. }, Prep::Conv(m)) => {
                let k = ctx.window_count(plan.w_pt);
                let win = recv_cts(ch, &ctx, k * plan.geom.in_cts())?;
                let bundles: Vec<Vec<Ciphertext>> = win
                    .chunks(k)
                    .zip(plan.input_slots(&s))
                    .map(|(w, sl)| add_share(&ctx, w, &sl, plan.w_pt))
                    .collect();
                let outs = conv2d(&ev, m, &bundles)?;
                let shares = finish(
                    outs,
                    &mut |o, r| hide_periphery(&ev, plan, o, p, r),
                    ch,
                    &mut rng,
                )?;
                if i != last {
                    s = plan.decode_output(&shares);
                }
            }
            (Step::Square { len, .. }, Prep::Square) => {
                let k = ctx.window_count(SQUARE_W_PT);
                let chunks = len.div_ceil(n);
                let win = recv_cts(ch, &ctx, k * chunks)?;
                let mut sent = Vec::with_capacity(chunks);
                let mut s_new = Vec::with_capacity(*len);
                for (j, w) in win.chunks(k).enumerate() {
                    let sj = &s[j * n..((j + 1) * n).min(*len)];
                    let (ct, sh) = square_server(&ctx, w, sj, SQUARE_W_PT, target, &mut rng)?;
                    report.sent.push(NoiseRecord {
                        step: i,
                        ct: j,
                        bits: ct.noise_bits(),
                    });
                    s_new.extend_from_slice(&sh[..sj.len()]);
                    sent.push(ct);
                }
                send_cts(ch, &ctx, &sent)?;
                s = s_new;
            }
            (Step::Act { block, gather, .. }, Prep::Act { labels, ot, s_y }) => {
                let l = block.bits();
                let s_x: Vec<u64> = gather.iter().map(|&g| s[g]).collect();
                let server_bits = [to_bits(&s_x, l), to_bits(s_y, l)].concat();
                let n_cx = s_x.len() * l;
                let body = ch.recv(MsgType::OtChoice)?;
                let mut r = Reader(&body);
                let count = r.u32()? as usize;
                if count != n_cx {
                    return Err(ProtocolError::Wire(format!(
                        "expected {n_cx} oblivious-transfer choices, got {count}"
                    )));
                }
                let points: Vec<[u8; POINT_LEN]> = (0..count)
                    .map(|_| Ok(r.take(POINT_LEN)?.try_into().unwrap()))
                    .collect::<Result<_, ProtocolError>>()?;
                r.finish()?;
                let pairs: Vec<[Label; 2]> = (server_bits.len()..server_bits.len() + n_cx)
                    .map(|w| labels.pair(w))
                    .collect();
                let enc = ot.respond(&points, &pairs)?;
                let mut w = Writer::default();
                w.u32(server_bits.len() as u32);
                for (wire, &b) in server_bits.iter().enumerate() {
                    w.u128(labels.label(wire, b));
                }
                w.u32(enc.len() as u32);
                for [a, b] in enc {
                    w.u128(a).u128(b);
                }
                ch.send(MsgType::OtResponse, &w.0, 0)?;
                s = neg(s_y, p);
            }
            _ => unreachable!("preparation follows the step list"),
        }
    }
    if !compiled.steps[last].is_linear() {
        let mut w = Writer::default();
        w.u32(s.len() as u32);
        for &v in &s {
            w.u32(v as u32);
        }
        ch.send(MsgType::Shares, &w.0, 0)?;
    }
    Ok(())
}

/// Run the client role on `input` (residues mod `p`, length of the network
/// input). Errors are reported to the peer before returning.
pub fn classify<S: Read + Write>(
    input: &[u64],
    stream: S,
    cfg: &SessionConfig,
) -> Result<ClientReport, ProtocolError> {
    let mut ch = Channel::new(stream);
    let mut report = ClientReport::default();
    let res = classify_inner(input, &mut ch, cfg, &mut report);
    if let Err(e) = &res {
        if !matches!(e, ProtocolError::Remote(_) | ProtocolError::Io(_)) {
            ch.send_error(&e.to_string());
        }
    }
    report.transcript = ch.transcript;
    res.map(|_| report)
}

fn classify_inner<S: Read + Write>(
    input: &[u64],
    ch: &mut Channel<S>,
    cfg: &SessionConfig,
    report: &mut ClientReport,
) -> Result<(), ProtocolError> {
    let mut rng = cfg.rng(2);
    let ctx = RingContext::new(cfg.params)?;
    let p = ctx.p();
    let n = ctx.n();
    report.line_bits = ctx.noise.line_bits;

    // ---- offline ----
    let hello = Hello {
        version: FORMAT_VERSION,
        n,
        p,
        q: ctx.params.q.value(),
        w_relin: cfg.w_relin,
    };
    ch.send(
        MsgType::Hello,
        &serde_json::to_vec(&hello).expect("hello serializes"),
        0,
    )?;
    let arch = Network::from_json(&String::from_utf8_lossy(&ch.recv(MsgType::Architecture)?))?;
    if arch.modulus != p {
        return Err(ProtocolError::Network(format!(
            "server network is over Z_{}, ring uses p = {p}",
            arch.modulus
        )));
    }
    if input.len() != arch.input.len() {
        return Err(ProtocolError::Network(format!(
            "input has {} values, network expects {}",
            input.len(),
            arch.input.len()
        )));
    }
    if let Some(v) = input.iter().find(|&&v| v >= p) {
        return Err(ProtocolError::Network(format!(
            "input value {v} is not reduced mod {p}"
        )));
    }
    let compiled = Compiled::new(&arch, n)?;

    let sk = ctx.keygen(&mut rng);
    let keys = KeySet::generate(&ctx, &sk, compiled.required_elems(), cfg.w_relin, &mut rng);
    report.keys = keys.len();
    let mut w = Writer::default();
    w.u32(keys.len() as u32);
    for k in keys.iter() {
        w.blob(&ctx.serialize_key(k));
    }
    ch.send(MsgType::Keys, &w.0, 0)?;
    drop(w);

    let body = ch.recv(MsgType::Garbled)?;
    let mut r = Reader(&body);
    let count = r.u32()? as usize;
    if count != compiled.act_steps() {
        return Err(ProtocolError::Wire(format!(
            "expected {} garbled blocks, got {count}",
            compiled.act_steps()
        )));
    }
    let mut garbled: Vec<(Circuit, GarbledCircuit, [u8; POINT_LEN])> = Vec::with_capacity(count);
    for step in &compiled.steps {
        if let Step::Act { block, .. } = step {
            let gc = GarbledCircuit::from_bytes(r.blob()?)?;
            let a: [u8; POINT_LEN] = r.take(POINT_LEN)?.try_into().unwrap();
            garbled.push((block.build()?, gc, a));
        }
    }
    r.finish()?;
    let mut garbled = garbled.into_iter();

    // ---- online ----
    ch.phase = Phase::Online;
    let mut c = input.to_vec();
    let last = compiled.steps.len() - 1;
    for (i, step) in compiled.steps.iter().enumerate() {
        let decrypt = |cts: &[Ciphertext], measured: &mut Vec<NoiseRecord>| -> Vec<Vec<u64>> {
            cts.iter()
                .enumerate()
                .map(|(j, ct)| {
                    let (pt, bits) = ctx.decrypt_with_noise(&sk, ct);
                    measured.push(NoiseRecord {
                        step: i,
                        ct: j,
                        bits,
                    });
                    pt.slots
                })
                .collect()
        };
        match step {
            Step::Fc { plan, n_o, .. } => {
                let up = ctx.encrypt_windows(
                    &sk,
                    &PlaintextVector::new(plan.input_slots(&c)),
                    plan.w_pt,
                    &mut rng,
                );
                send_cts(ch, &ctx, &up)?;
                let down = recv_cts(ch, &ctx, plan.output_cts())?;
                c = plan.decode_output(&decrypt(&down, &mut report.measured))[..*n_o].to_vec();
            }
            Step::Conv { plan, .. } => {
                let mut up = Vec::new();
                for slots in plan.input_slots(&c) {
                    up.extend(ctx.encrypt_windows(
                        &sk,
                        &PlaintextVector::new(slots),
                        plan.w_pt,
                        &mut rng,
                    ));
                }
                send_cts(ch, &ctx, &up)?;
                let down = recv_cts(ch, &ctx, plan.geom.out_cts())?;
                c = plan.decode_output(&decrypt(&down, &mut report.measured));
            }
            Step::Square { len, .. } => {
                let mut up = Vec::new();
                for chunk in c.chunks(n) {
                    up.extend(ctx.encrypt_windows(
                        &sk,
                        &PlaintextVector::new(pad(chunk, n)),
                        SQUARE_W_PT,
                        &mut rng,
                    ));
                }
                send_cts(ch, &ctx, &up)?;
                let down = recv_cts(ch, &ctx, len.div_ceil(n))?;
                let d: Vec<u64> = decrypt(&down, &mut report.measured).concat();
                c = square_client(&c, &d[..*len], p);
            }
            Step::Act { block, gather, .. } => {
                let (circuit, gc, a) = garbled
                    .next()
                    .expect("one garbled block per activation step");
                let l = block.bits();
                let c_x: Vec<u64> = gather.iter().map(|&g| c[g]).collect();
                let bits = to_bits(&c_x, l);
                let (receiver, points) = OtReceiver::new(&a, &bits, &mut rng)?;
                let mut w = Writer::default();
                w.u32(points.len() as u32);
                for pt in &points {
                    w.raw(pt);
                }
                ch.send(MsgType::OtChoice, &w.0, 0)?;
                let body = ch.recv(MsgType::OtResponse)?;
                let mut r = Reader(&body);
                let n_server = r.u32()? as usize;
                let mut inputs: Vec<Label> =
                    (0..n_server).map(|_| r.u128()).collect::<Result<_, _>>()?;
                let n_pairs = r.u32()? as usize;
                let enc: Vec<[Label; 2]> = (0..n_pairs)
                    .map(|_| Ok([r.u128()?, r.u128()?]))
                    .collect::<Result<_, ProtocolError>>()?;
                r.finish()?;
                inputs.extend(receiver.finish(&enc)?);
                let out = evaluate(&circuit, &gc, &inputs)?;
                c = from_bits(&decode(&gc, &out), l);
            }
        }
    }
    report.output = if compiled.steps[last].is_linear() {
        c
    } else {
        let body = ch.recv(MsgType::Shares)?;
        let mut r = Reader(&body);
        let count = r.u32()? as usize;
        if count != c.len() {
            return Err(ProtocolError::Wire(format!(
                "expected {} output shares, got {count}",
                c.len()
            )));
        }
        let s: Vec<u64> = (0..count)
            .map(|_| r.u32().map(|v| v as u64))
            .collect::<Result<_, _>>()?;
        r.finish()?;
        c.iter().zip(&s).map(|(a, b)| (a + b) % p).collect()
    };
    Ok(())
}

/// Both roles of one inference.
#[derive(Clone, Debug)]
pub struct LocalRun {
    pub server: ServerReport,
    pub client: ClientReport,
}

/// Run server and client on two threads connected by an in-process pipe.
pub fn run_local(
    net: &Network,
    input: &[u64],
    cfg: &SessionConfig,
) -> Result<LocalRun, ProtocolError> {
    let (a, b) = pipe();
    let (server, client) = std::thread::scope(|sc| {
        let h = sc.spawn(|| serve(net, a, cfg));
        let client = classify(input, b, cfg);
        (h.join().expect("server thread panicked"), client)
    });
    match (server, client) {
        (Ok(server), Ok(client)) => Ok(LocalRun { server, client }),
        // Prefer the side that failed first over the peer's echo of it.
        (Err(e), Err(ProtocolError::Remote(_))) | (Err(e), Ok(_)) => Err(e),
        (_, Err(e)) => Err(e),
    }
}

/// Messages a run of `compiled` must produce, from the client's view:
/// `(direction, type, phase, ciphertext count)`.
pub fn expected_transcript(
    compiled: &Compiled,
    ctx: &RingContext,
) -> Vec<(Direction, MsgType, Phase, u32)> {
    use Direction::{Received as In, Sent as Out};
    let mut v = vec![
        (Out, MsgType::Hello, Phase::Offline, 0),
        (In, MsgType::Architecture, Phase::Offline, 0),
        (Out, MsgType::Keys, Phase::Offline, 0),
        (In, MsgType::Garbled, Phase::Offline, 0),
    ];
    for step in &compiled.steps {
        let (up, down) = match step {
            Step::Fc { plan, .. } => (ctx.window_count(plan.w_pt), plan.output_cts()),
            Step::Conv { plan, .. } => (
                ctx.window_count(plan.w_pt) * plan.geom.in_cts(),
                plan.geom.out_cts(),
            ),
            Step::Square { len, .. } => {
                let c = len.div_ceil(compiled.n);
                (ctx.window_count(SQUARE_W_PT) * c, c)
            }
            Step::Act { .. } => {
                v.push((Out, MsgType::OtChoice, Phase::Online, 0));
                v.push((In, MsgType::OtResponse, Phase::Online, 0));
                continue;
            }
        };
        v.push((Out, MsgType::Ciphertexts, Phase::Online, up as u32));
        v.push((In, MsgType::Ciphertexts, Phase::Online, down as u32));
    }
    if !compiled.steps.last().expect("non-empty").is_linear() {
        v.push((In, MsgType::Shares, Phase::Online, 0));
    }
    v
}

/// Check a transcript against the sequence implied by the architecture.
/// `role` is the party that recorded it.
pub fn lint_transcript(
    compiled: &Compiled,
    ctx: &RingContext,
    transcript: &Transcript,
    role: Party,
) -> Result<(), String> {
    let expected = expected_transcript(compiled, ctx);
    let flip = |d: Direction| match (role, d) {
        (Party::Client, d) => d,
        (Party::Server, Direction::Sent) => Direction::Received,
        (Party::Server, Direction::Received) => Direction::Sent,
    };
    let got = &transcript.entries;
    for (k, (e, g)) in expected.iter().zip(got).enumerate() {
        let want = (flip(e.0), e.1, e.2, e.3);
        let have = (g.dir, g.msg_type, g.phase, g.ciphertexts);
        if want != have {
            return Err(format!("message {k}: expected {want:?}, got {have:?}"));
        }
    }
    if expected.len() != got.len() {
        return Err(format!(
            "expected {} messages, got {}",
            expected.len(),
            got.len()
        ));
    }
    Ok(())
}
