use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use secinfer::conv::ConvSpec;
use secinfer::modarith::RingParams;
use secinfer::pahe::{ciphertext_payload_len, RingContext};
use secinfer::protocol::gadgets::{ct_to_shares, flood_target, shares_to_ct, square_shares};
use secinfer::protocol::plan::SQUARE_W_PT;
use secinfer::protocol::wire::{pipe, Channel, HEADER_LEN, MAGIC};
use secinfer::protocol::*;
use secinfer::reference;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn cfg(seed: u64) -> SessionConfig {
    SessionConfig {
        seed: Some(seed),
        ..Default::default()
    }
}

const P: u64 = 307201;

fn check_noise(run: &LocalRun) {
    let line = run.server.line_bits;
    assert!(!run.server.sent.is_empty());
    for r in &run.server.sent {
        assert!(r.bits < line, "estimate {} at or above line {line}", r.bits);
    }
    assert_eq!(run.server.sent.len(), run.client.measured.len());
    for (est, got) in run.server.sent.iter().zip(&run.client.measured) {
        assert_eq!((est.step, est.ct), (got.step, got.ct));
        assert!(
            got.bits <= est.bits,
            "measured {} above estimate {}",
            got.bits,
            est.bits
        );
    }
}

#[test]
fn fixed_point_roundtrip() {
    let fp = FixedPoint::new(P, 6);
    for x in [0.0, 1.0, -1.0, 3.25, -2.015625, 100.5] {
        let r = fp.encode(x).unwrap();
        assert!((fp.decode(r) - x).abs() <= 0.5 / 64.0);
    }
    assert_eq!(fp.encode_int(-3), Some(P - 3));
    assert_eq!(fp.decode_int(P - 3), -3);
    assert_eq!(fp.encode(1e9), None);
    // -3 squared at 6 fractional bits carries 12 fractional bits.
    let sq = (fp.encode(-3.0).unwrap() as u128).pow(2) % P as u128;
    assert_eq!(fp.with_frac_bits(12).decode(sq as u64), 9.0);
}

#[test]
fn network_json_roundtrip_and_validation() {
    let net = Network::desk_d(P, &mut rng(1));
    let back = Network::from_json(&net.to_json()).unwrap();
    assert_eq!(back, net);
    let arch = net.architecture();
    assert!(!arch.has_weights());
    assert!(!arch.to_json().contains("weights"));
    assert_eq!(Network::from_json(&arch.to_json()).unwrap(), arch);
    assert_eq!(net.output_len().unwrap(), 10);

    let mut bad = net.clone();
    bad.layers[6] = Layer::Fc {
        n_i: 99,
        n_o: 16,
        weights: None,
        bias: None,
    };
    assert!(matches!(bad.shapes(), Err(ProtocolError::Network(_))));
    let mut bad = net.clone();
    if let Layer::Fc {
        weights: Some(w), ..
    } = &mut bad.layers[8]
    {
        w[0] = P;
    }
    assert!(bad.shapes().is_err());
    assert!(Network::from_json("{\"version\": 7}").is_err());
}

#[test]
fn compiled_steps_fuse_relu_and_pool() {
    let net = Network::desk_d(P, &mut rng(1)).architecture();
    let c = Compiled::new(&net, 2048).unwrap();
    let kinds: Vec<&str> = c
        .steps
        .iter()
        .map(|s| match s {
            Step::Fc { .. } => "fc",
            Step::Conv { .. } => "conv",
            Step::Act { layers, .. } if layers.len() == 2 => "relu+pool",
            Step::Act { .. } => "act",
            Step::Square { .. } => "square",
        })
        .collect();
    assert_eq!(
        kinds,
        ["conv", "relu+pool", "conv", "relu+pool", "fc", "act", "fc"]
    );
    assert_eq!(c.len_after(1), 2 * 14 * 14);
    assert_eq!(c.len_after(3), 98);
}

#[test]
fn shares_of_zero_and_reconstruction() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(2);
    let sk = ctx.keygen(&mut r);
    let target = flood_target(&ctx, 1.0);
    let zero = ctx.encrypt(
        &sk,
        &secinfer::pahe::PlaintextVector::zeros(ctx.n()),
        &mut r,
    );
    let (c, s) = ct_to_shares(&ctx, &sk, &zero, target, &mut r).unwrap();
    assert!(c.reconstruct(&s).iter().all(|&v| v == 0));
    for _ in 0..100 {
        let x: Vec<u64> = (0..ctx.n()).map(|_| r.gen_range(0..P)).collect();
        let ct = ctx.encrypt(&sk, &x.clone().into(), &mut r);
        let (c, s) = ct_to_shares(&ctx, &sk, &ct, target, &mut r).unwrap();
        assert_eq!(c.party, Party::Client);
        assert_eq!(s.party, Party::Server);
        assert_eq!(c.reconstruct(&s), x);
    }
}

#[test]
fn client_share_is_uniform() {
    // Chi-squared over 16 buckets on 10^4 masked slots of a fixed value.
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(3);
    let sk = ctx.keygen(&mut r);
    let x = vec![12345u64; ctx.n()];
    let ct = ctx.encrypt(&sk, &x.into(), &mut r);
    let mut hist = [0f64; 16];
    let mut total = 0.0;
    while total < 10_000.0 {
        let (c, _) = ct_to_shares(&ctx, &sk, &ct, flood_target(&ctx, 1.0), &mut r).unwrap();
        for &v in &c.values {
            hist[(v * 16 / P) as usize] += 1.0;
            total += 1.0;
        }
    }
    let e = total / 16.0;
    let chi: f64 = hist.iter().map(|h| (h - e).powi(2) / e).sum();
    // 15 degrees of freedom; 0.999 quantile is 37.7.
    assert!(chi < 37.7, "chi-squared {chi}");
}

#[test]
fn shares_to_ct_refreshes_noise() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(4);
    let sk = ctx.keygen(&mut r);
    let x: Vec<u64> = (0..ctx.n()).map(|_| r.gen_range(0..P)).collect();
    let ct = ctx.encrypt(&sk, &x.clone().into(), &mut r);
    // Deep computation: a few plaintext products accumulate noise.
    let w = ctx.encode_windows(&vec![1u64; ctx.n()], 10);
    let win = ctx.encrypt_windows(&sk, &x.clone().into(), 10, &mut r);
    let mut deep = ctx.scmult(&win, &w).unwrap();
    for _ in 0..8 {
        deep = ctx.add(&deep, &ctx.scmult(&win, &w).unwrap());
    }
    let nine: Vec<u64> = x.iter().map(|v| v * 9 % P).collect();
    assert_eq!(ctx.decrypt(&sk, &deep).slots, nine);
    let (c, s) = ct_to_shares(&ctx, &sk, &deep, flood_target(&ctx, 1.0), &mut r).unwrap();
    let fresh = shares_to_ct(&ctx, &sk, &c, &s, &mut r);
    let (pt, measured) = ctx.decrypt_with_noise(&sk, &fresh);
    assert_eq!(pt.slots, nine);
    assert!(fresh.noise_bits() < deep.noise_bits());
    assert!(measured < ctx.decrypt_with_noise(&sk, &deep).1);
    drop(ct);
}

#[test]
fn square_on_shares() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(5);
    let sk = ctx.keygen(&mut r);
    let target = flood_target(&ctx, 1.0);
    let split = |x: &[u64], r: &mut ChaCha20Rng| {
        let s: Vec<u64> = x.iter().map(|_| r.gen_range(0..P)).collect();
        let c: Vec<u64> = x.iter().zip(&s).map(|(x, s)| (x + P - s) % P).collect();
        (
            ShareVector::new(Party::Client, P, c),
            ShareVector::new(Party::Server, P, s),
        )
    };
    let fp = FixedPoint::new(P, 4);
    let cases: Vec<Vec<u64>> = vec![
        vec![0; 16],
        vec![fp.encode(-3.0).unwrap(); 16],
        (0..ctx.n()).map(|_| r.gen_range(0..P)).collect(),
    ];
    for x in cases {
        let (c, s) = split(&x, &mut r);
        let (c2, s2) = square_shares(&ctx, &sk, &c, &s, SQUARE_W_PT, target, &mut r).unwrap();
        let want: Vec<u64> = x
            .iter()
            .map(|&v| ((v as u128 * v as u128) % P as u128) as u64)
            .collect();
        assert_eq!(c2.reconstruct(&s2), want);
    }
    // (-3)^2 = 9 at twice the fractional bits.
    let (c, s) = split(&[fp.encode(-3.0).unwrap()], &mut r);
    let (c2, s2) = square_shares(&ctx, &sk, &c, &s, SQUARE_W_PT, target, &mut r).unwrap();
    assert_eq!(fp.with_frac_bits(8).decode(c2.reconstruct(&s2)[0]), 9.0);
}

#[test]
fn identity_layer_end_to_end() {
    let net = Network::identity(64, P);
    let x: Vec<u64> = (0..64).map(|i| (i * 4799 + 7) % P).collect();
    let run = run_local(&net, &x, &cfg(6)).unwrap();
    assert_eq!(run.client.output, x);
    check_noise(&run);
}

#[test]
fn fc_bandwidth_is_windows_up_one_down() {
    let net = Network::identity(128, P);
    let x = vec![1u64; 128];
    let run = run_local(&net, &x, &cfg(7)).unwrap();
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let k = ctx.window_count(10) as u64;
    let payload = ciphertext_payload_len(2048) as u64;
    assert_eq!(payload, 32768);
    let cts = run.client.transcript.ciphertexts(Phase::Online);
    assert_eq!(cts, k + 1);
    // Every online byte beyond the ciphertext payloads is framing.
    let online = run.client.transcript.bytes(Phase::Online);
    let framing = online - (k + 1) * payload;
    let ct_header = (secinfer::pahe::ciphertext_len(2048) - ciphertext_payload_len(2048)) as u64;
    assert_eq!(framing, 2 * (HEADER_LEN as u64 + 4) + (k + 1) * ct_header);
}

#[test]
fn desk_a_matches_reference() {
    let mut r = rng(8);
    let net = Network::desk_a(P, &mut r);
    let x = random_image(net.input, &mut r);
    let run = run_local(&net, &x, &cfg(8)).unwrap();
    assert_eq!(run.client.output, reference::evaluate(&net, &x).unwrap());
    check_noise(&run);
    let c = Compiled::new(&net.architecture(), 2048).unwrap();
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    lint_transcript(&c, &ctx, &run.client.transcript, Party::Client).unwrap();
    lint_transcript(&c, &ctx, &run.server.transcript, Party::Server).unwrap();
}

#[test]
fn desk_d_matches_reference() {
    let mut r = rng(9);
    let net = Network::desk_d(P, &mut r);
    for trial in 0..2 {
        let x = random_image(net.input, &mut r);
        let run = run_local(&net, &x, &cfg(100 + trial)).unwrap();
        assert_eq!(run.client.output, reference::evaluate(&net, &x).unwrap());
        check_noise(&run);
        let c = Compiled::new(&net.architecture(), 2048).unwrap();
        let ctx = RingContext::new(RingParams::standard()).unwrap();
        lint_transcript(&c, &ctx, &run.client.transcript, Party::Client).unwrap();
        lint_transcript(&c, &ctx, &run.server.transcript, Party::Server).unwrap();
    }
}

#[test]
fn final_nonlinear_layer_sends_shares() {
    let mut r = rng(10);
    let mut net = Network::identity(32, P);
    net.layers.push(Layer::Relu { shift: 1 });
    let x: Vec<u64> = (0..32).map(|_| r.gen_range(0..P)).collect();
    let run = run_local(&net, &x, &cfg(10)).unwrap();
    assert_eq!(run.client.output, reference::evaluate(&net, &x).unwrap());
    let last = run.client.transcript.entries.last().unwrap();
    assert_eq!(
        (last.msg_type, last.dir),
        (MsgType::Shares, Direction::Received)
    );
}

#[test]
fn strided_conv_and_pool_first() {
    let mut r = rng(11);
    let spec = ConvSpec::square(12, 1, 3, 2).with_stride(2);
    let (w, h) = spec.output_dims();
    let net = Network {
        version: FORMAT_VERSION,
        modulus: P,
        input: Shape::new(1, 12, 12),
        frac_bits: 0,
        layers: vec![
            Layer::Conv {
                spec,
                weights: Some((0..18).map(|_| r.gen_range(0..5)).collect()),
                bias: None,
            },
            Layer::MaxPool,
            Layer::Relu { shift: 0 },
            Layer::Fc {
                n_i: 2 * (h / 2) * (w / 2),
                n_o: 3,
                weights: Some(
                    (0..3 * 2 * (h / 2) * (w / 2))
                        .map(|_| r.gen_range(0..3))
                        .collect(),
                ),
                bias: None,
            },
        ],
    };
    let x = random_image(net.input, &mut r);
    let run = run_local(&net, &x, &cfg(11)).unwrap();
    assert_eq!(run.client.output, reference::evaluate(&net, &x).unwrap());
}

#[test]
fn transcript_linter_rejects_tampering() {
    let net = Network::identity(16, P);
    let run = run_local(&net, &[3; 16], &cfg(12)).unwrap();
    let c = Compiled::new(&net.architecture(), 2048).unwrap();
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut t = run.client.transcript.clone();
    lint_transcript(&c, &ctx, &t, Party::Client).unwrap();
    assert!(lint_transcript(&c, &ctx, &t, Party::Server).is_err());
    t.entries.swap(0, 1);
    assert!(lint_transcript(&c, &ctx, &t, Party::Client).is_err());
    let mut t = run.client.transcript.clone();
    t.entries.pop();
    assert!(lint_transcript(&c, &ctx, &t, Party::Client).is_err());
    let jl = run.client.transcript.to_json_lines();
    assert_eq!(jl.lines().count(), run.client.transcript.entries.len());
}

#[test]
fn wire_rejects_bad_version_and_garbage() {
    use std::io::Write;
    let (a, mut b) = pipe();
    let mut ch = Channel::new(a);
    let mut frame = Vec::new();
    frame.extend(MAGIC.to_le_bytes());
    frame.extend(99u16.to_le_bytes());
    frame.extend((MsgType::Hello as u16).to_le_bytes());
    frame.extend(0u64.to_le_bytes());
    b.write_all(&frame).unwrap();
    assert!(matches!(
        ch.recv(MsgType::Hello),
        Err(ProtocolError::Version {
            ours: 1,
            theirs: 99
        })
    ));
    b.write_all(&[0u8; 16]).unwrap();
    assert!(matches!(
        ch.recv(MsgType::Hello),
        Err(ProtocolError::Wire(_))
    ));
    drop(b);
    assert!(matches!(ch.recv(MsgType::Hello), Err(ProtocolError::Io(_))));
}

#[test]
fn mismatched_parameters_are_reported() {
    let net = Network::identity(8, P);
    let server = SessionConfig {
        seed: Some(1),
        ..Default::default()
    };
    let client = SessionConfig {
        seed: Some(2),
        params: RingParams::toy(),
        ..Default::default()
    };
    let (a, b) = pipe();
    let (s, c) = std::thread::scope(|sc| {
        let h = sc.spawn(|| serve(&net, a, &server));
        let c = classify(&[1; 8], b, &client);
        (h.join().unwrap(), c)
    });
    assert!(matches!(s, Err(ProtocolError::Wire(_))));
    assert!(matches!(c, Err(ProtocolError::Remote(_))));
}

#[test]
fn wrong_input_length_is_rejected() {
    let net = Network::identity(8, P);
    let err = run_local(&net, &[1; 9], &cfg(13)).unwrap_err();
    assert!(matches!(err, ProtocolError::Network(_)), "{err}");
}
