use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use secinfer::modarith::RingParams;
use secinfer::pahe::*;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn random_pt(ctx: &RingContext, r: &mut impl Rng) -> PlaintextVector {
    PlaintextVector::new((0..ctx.n()).map(|_| r.gen_range(0..ctx.p())).collect())
}

#[test]
fn keygen_is_ternary_and_deterministic() {
    let ctx = RingContext::new(RingParams::toy()).unwrap();
    let a = ctx.keygen(&mut rng(1));
    let b = ctx.keygen(&mut rng(1));
    assert_eq!(a, b);
    assert!(a.coeffs.iter().all(|c| (-1..=1).contains(c)));
    let mut seen = std::collections::HashSet::new();
    for s in 0..100 {
        assert!(seen.insert(ctx.keygen(&mut rng(1000 + s)).coeffs));
    }
}

#[test]
fn roundtrip_zero_counting_and_random() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(2);
    let sk = ctx.keygen(&mut r);
    let zero = PlaintextVector::zeros(ctx.n());
    assert_eq!(ctx.decrypt(&sk, &ctx.encrypt(&sk, &zero, &mut r)), zero);
    let count = PlaintextVector::new((0..ctx.n() as u64).map(|i| (i + 1) % ctx.p()).collect());
    assert_eq!(ctx.decrypt(&sk, &ctx.encrypt(&sk, &count, &mut r)), count);

    let toy = RingContext::new(RingParams::toy()).unwrap();
    let sk = toy.keygen(&mut r);
    for _ in 0..1000 {
        let pt = random_pt(&toy, &mut r);
        let (dec, bits) = toy.decrypt_with_noise(&sk, &toy.encrypt(&sk, &pt, &mut r));
        assert_eq!(dec, pt);
        assert!(bits <= (6.0 * 4.0f64).log2() + 1e-9);
    }
}

#[test]
fn slot_transform_roundtrip() {
    let ctx = RingContext::new(RingParams::toy()).unwrap();
    let mut r = rng(3);
    let pt = random_pt(&ctx, &mut r);
    assert_eq!(
        ctx.coeffs_to_slots(&ctx.slots_to_coeffs(&pt.slots)),
        pt.slots
    );
}

/// Every pair of slot values and every multiplier at `n = 8`, `p = 17`.
#[test]
fn homomorphism_exhaustive_tiny() {
    let ctx = RingContext::new(RingParams::tiny()).unwrap();
    let p = ctx.p();
    let mut r = rng(4);
    let sk = ctx.keygen(&mut r);
    for u in 0..p {
        let a: Vec<u64> = (0..8).map(|i| (u + i) % p).collect();
        let ca = ctx.encrypt(&sk, &a.clone().into(), &mut r);
        for v in 0..p {
            let b: Vec<u64> = (0..8).map(|i| (v * (i + 1)) % p).collect();
            let cb = ctx.encrypt(&sk, &b.clone().into(), &mut r);
            let sum = ctx.decrypt(&sk, &ctx.add(&ca, &cb)).slots;
            assert_eq!(
                sum,
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| (x + y) % p)
                    .collect::<Vec<_>>()
            );
            let w = ctx.encode_windows(&b, 5);
            let prod = ctx
                .decrypt(&sk, &ctx.scmult(std::slice::from_ref(&ca), &w).unwrap())
                .slots;
            assert_eq!(
                prod,
                a.iter().zip(&b).map(|(x, y)| x * y % p).collect::<Vec<_>>()
            );
        }
    }
}

#[test]
fn add_and_scmult_random_full_params() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let p = ctx.p();
    let mut r = rng(5);
    let sk = ctx.keygen(&mut r);
    let enc0 = ctx.encrypt(&sk, &PlaintextVector::zeros(ctx.n()), &mut r);
    for trial in 0..100 {
        let u = random_pt(&ctx, &mut r);
        let v = random_pt(&ctx, &mut r);
        let cu = ctx.encrypt(&sk, &u, &mut r);
        let cv = ctx.encrypt(&sk, &v, &mut r);
        let (sum, bits) = ctx.decrypt_with_noise(&sk, &ctx.add(&cu, &cv));
        assert_eq!(
            sum.slots,
            u.slots
                .iter()
                .zip(&v.slots)
                .map(|(a, b)| (a + b) % p)
                .collect::<Vec<_>>()
        );
        let (_, bu) = ctx.decrypt_with_noise(&sk, &cu);
        let (_, bv) = ctx.decrypt_with_noise(&sk, &cv);
        assert!(
            bits <= bu.max(bv) + 1.0 + 1e-9,
            "addition grew noise by more than one bit"
        );
        assert_eq!(ctx.decrypt(&sk, &ctx.add(&cu, &enc0)), u);
        if trial < 10 {
            let w = ctx.encode_windows(&v.slots, 10);
            let windows = ctx.encrypt_windows(&sk, &u, 10, &mut r);
            let prod = ctx.scmult(&windows, &w).unwrap();
            let (dec, measured) = ctx.decrypt_with_noise(&sk, &prod);
            assert_eq!(
                dec.slots,
                u.slots
                    .iter()
                    .zip(&v.slots)
                    .map(|(a, b)| a * b % p)
                    .collect::<Vec<_>>()
            );
            assert!(measured <= prod.noise_bits());
            assert!(ctx.noise.below_line(prod.noise));
        }
    }
}

#[test]
fn scmult_identity_zero_and_missing_windows() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(6);
    let sk = ctx.keygen(&mut r);
    let u = random_pt(&ctx, &mut r);
    let ones = ctx.encode_windows(&vec![1; ctx.n()], 10);
    let zeros = ctx.encode_windows(&vec![0; ctx.n()], 10);
    assert!(zeros.is_zero());
    let windows = ctx.encrypt_windows(&sk, &u, 10, &mut r);
    assert_eq!(ctx.decrypt(&sk, &ctx.scmult(&windows, &ones).unwrap()), u);
    assert_eq!(
        ctx.decrypt(&sk, &ctx.scmult(&windows, &zeros).unwrap()),
        PlaintextVector::zeros(ctx.n())
    );
    let v = random_pt(&ctx, &mut r);
    let w = ctx.encode_windows(&v.slots, 10);
    assert!(w.len() > 1);
    assert_eq!(
        ctx.scmult(&windows[..1], &w).unwrap_err(),
        PaheError::MissingWindowCiphertexts {
            needed: w.len(),
            got: 1
        }
    );
}

#[test]
fn windows_recompose() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let p = ctx.p();
    let mut r = rng(7);
    let v = random_pt(&ctx, &mut r);
    for w_pt in [4u32, 10, 19] {
        let w = ctx.encode_windows(&v.slots, w_pt);
        assert_eq!(w.len(), ctx.window_count(w_pt));
        for (k, &norm) in w.norms.iter().enumerate() {
            if k + 1 < w.len() {
                assert!(norm <= 1 << (w_pt - 1));
            }
        }
        // Recompose in the coefficient domain mod q, then map back to Z_p.
        let q = ctx.q_reducer();
        let mut acc = vec![0u64; ctx.n()];
        for (k, chunk) in w.chunks.iter().enumerate() {
            let mut c = chunk.clone();
            ctx.ntt_q().inverse_inplace(&mut c);
            let f = 1u64 << (w_pt as usize * k).min(63);
            for (a, x) in acc.iter_mut().zip(&c) {
                let centered = secinfer::modarith::Reducer::center(q, *x) as i128 * f as i128;
                *a = ((*a as i128 + centered).rem_euclid(p as i128)) as u64;
            }
        }
        assert_eq!(ctx.coeffs_to_slots(&acc), v.slots);
    }
}

#[test]
fn permutations_match_group_action() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let n = ctx.n();
    let mut r = rng(8);
    let sk = ctx.keygen(&mut r);
    let elems = [
        GroupElem::rotation(n, 1),
        GroupElem::rotation(n, n / 2 - 1),
        GroupElem::rotation(n, 37),
        GroupElem::swap_rows(),
        GroupElem::new(n, 5, true),
    ];
    let keys = KeySet::generate(&ctx, &sk, elems, 8, &mut r);
    let pt = PlaintextVector::new((0..n as u64).collect());
    let ct = ctx.encrypt(&sk, &pt, &mut r);
    let h = ctx.perm_decomp(&ct, 8);
    for e in elems {
        let full = ctx.perm(&ct, e, &keys).unwrap();
        let hoisted = ctx.perm_auto(&h, keys.get(e).unwrap()).unwrap();
        let expect = e.apply(&pt.slots);
        assert_eq!(ctx.decrypt(&sk, &full).slots, expect, "{e}");
        assert_eq!(ctx.decrypt(&sk, &hoisted).slots, expect, "{e}");
        let (_, bits) = ctx.decrypt_with_noise(&sk, &full);
        assert!(bits <= full.noise_bits());
    }
    // rotate by 1 then by n/2 - 1 = -1
    let back = ctx
        .perm(&ctx.perm(&ct, elems[0], &keys).unwrap(), elems[1], &keys)
        .unwrap();
    assert_eq!(ctx.decrypt(&sk, &back), pt);
    // identity needs no key
    assert_eq!(
        ctx.decrypt(&sk, &ctx.perm(&ct, GroupElem::IDENTITY, &keys).unwrap()),
        pt
    );
    assert_eq!(
        ctx.perm(&ct, GroupElem::rotation(n, 2), &keys).unwrap_err(),
        PaheError::MissingKey(GroupElem::rotation(n, 2))
    );
}

#[test]
fn group_structure() {
    let n = 16;
    let all = GroupElem::all(n);
    assert_eq!(all.len(), n);
    let mut gal: Vec<usize> = all.iter().map(|e| e.galois(n)).collect();
    gal.sort();
    assert_eq!(gal, (1..2 * n).step_by(2).collect::<Vec<_>>());
    for a in &all {
        assert!(a.then(a.inverse(n), n).is_identity());
        for b in &all {
            let v: Vec<usize> = (0..n).collect();
            assert_eq!(b.apply(&a.apply(&v)), a.then(*b, n).apply(&v));
        }
    }
    assert!(GroupElem::cyclic(n, 0).unwrap().is_identity());
    assert_eq!(GroupElem::cyclic(n, 8).unwrap(), GroupElem::swap_rows());
    assert!(matches!(
        GroupElem::cyclic(n, 3),
        Err(PaheError::UnsupportedPermutation(_))
    ));
}

#[test]
fn relin_window_tradeoff() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let n = ctx.n();
    let mut r = rng(9);
    let sk = ctx.keygen(&mut r);
    let ct = ctx.encrypt(&sk, &random_pt(&ctx, &mut r), &mut r);
    let e = GroupElem::rotation(n, 3);
    let mut last = (f64::INFINITY, f64::INFINITY);
    // 3, 6 and 12 digits
    for w in [20u32, 10, 5] {
        let keys = KeySet::generate(&ctx, &sk, [e], w, &mut r);
        assert_eq!(keys.get(e).unwrap().digits(), digit_count(w));
        let out = ctx.perm(&ct, e, &keys).unwrap();
        let (_, measured) = ctx.decrypt_with_noise(&sk, &out);
        assert!(measured <= out.noise_bits());
        assert!(out.noise_bits() < last.0);
        assert!(measured < last.1);
        last = (out.noise_bits(), measured);
    }
}

#[test]
fn naive_backend_agrees() {
    let params = RingParams::toy();
    let fast = RingContext::new(params).unwrap();
    let slow = RingContext::naive(params).unwrap();
    let sk = fast.keygen(&mut rng(10));
    let pt = random_pt(&fast, &mut rng(11));
    let a = fast.encrypt(&sk, &pt, &mut rng(12));
    let b = slow.encrypt(&sk, &pt, &mut rng(12));
    assert_eq!(a, b);
    let e = GroupElem::rotation(fast.n(), 1);
    let ka = KeySet::generate(&fast, &sk, [e], 8, &mut rng(13));
    let kb = KeySet::generate(&slow, &sk, [e], 8, &mut rng(13));
    assert_eq!(
        fast.perm(&a, e, &ka).unwrap(),
        slow.perm(&b, e, &kb).unwrap()
    );
}

#[test]
fn flooding_hides_but_keeps_correctness() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(14);
    let sk = ctx.keygen(&mut r);
    let pt = random_pt(&ctx, &mut r);
    let ct = ctx.encrypt(&sk, &pt, &mut r);
    let target = ctx.noise.line_bits - 1.0;
    let fl = ctx.flood(&ct, target, &mut r).unwrap();
    let (dec, bits) = ctx.decrypt_with_noise(&sk, &fl);
    assert_eq!(dec, pt);
    assert!(bits > target - 2.0 && bits <= fl.noise_bits());
    assert!((fl.noise_bits() - target).abs() < 1e-6);
    assert!(matches!(
        ctx.flood(&ct, 3.0, &mut r),
        Err(PaheError::NoiseBudgetExceeded { .. })
    ));
}

#[test]
fn serialization_roundtrip_and_size() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let mut r = rng(15);
    let sk = ctx.keygen(&mut r);
    let ct = ctx.encrypt(&sk, &random_pt(&ctx, &mut r), &mut r);
    let bytes = ctx.serialize_ciphertext(&ct);
    assert_eq!(bytes.len(), HEADER_LEN + 32768);
    assert_eq!(ciphertext_payload_len(2048), 32 * 1024);
    let back = ctx.deserialize_ciphertext(&bytes).unwrap();
    assert_eq!((back.c0, back.c1), (ct.c0.clone(), ct.c1.clone()));
    assert!(ctx.deserialize_ciphertext(&bytes[..100]).is_err());
    let mut bad = bytes.clone();
    bad[0] ^= 1;
    assert!(ctx.deserialize_ciphertext(&bad).is_err());

    let keys = KeySet::generate(&ctx, &sk, [GroupElem::new(ctx.n(), 3, true)], 10, &mut r);
    let key = keys.iter().next().unwrap();
    assert_eq!(&ctx.deserialize_key(&ctx.serialize_key(key)).unwrap(), key);

    let toy = RingContext::new(RingParams::toy()).unwrap();
    assert!(matches!(
        toy.deserialize_ciphertext(&bytes),
        Err(PaheError::ParamMismatch(_))
    ));
}

#[test]
fn counting_evaluator_tracks_ops_and_bounds_real_noise() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let n = ctx.n();
    let mut r = rng(16);
    let sk = ctx.keygen(&mut r);
    let e = GroupElem::rotation(n, 1);
    let keys = KeySet::generate(&ctx, &sk, [e], 8, &mut r);
    let he = HeEvaluator::new(&ctx, &keys);
    let ce = CountingEvaluator::new(&ctx, 8);
    let u = random_pt(&ctx, &mut r);
    let v = random_pt(&ctx, &mut r);
    let bundle = ctx.encrypt_windows(&sk, &u, 10, &mut r);
    let cbundle = vec![ctx.noise.fresh(); bundle.len()];

    fn pipeline<E: Evaluator>(ev: &E, bundle: &[E::Ct], v: &[u64]) -> E::Ct {
        let pt = ev.encode(10, || v.to_vec());
        let h = ev.decomp(bundle);
        let rot = ev.auto(&h, GroupElem::rotation(ev.n(), 1)).unwrap();
        let a = ev.mac(None, bundle, &pt).unwrap();
        let b = ev.mac(Some(a), &rot, &pt).unwrap();
        ev.perm(&b, GroupElem::rotation(ev.n(), 1)).unwrap()
    }
    let out = pipeline(&he, &bundle, &v.slots);
    let est = pipeline(&ce, &cbundle, &v.slots);
    assert_eq!(he.count(), ce.count());
    assert_eq!(
        he.count(),
        OpCount {
            perm_hoisted: 1,
            perm: 1,
            decomp: 2,
            scmult: 2,
            add: 1
        }
    );
    let (_, measured) = ctx.decrypt_with_noise(&sk, &out);
    assert!(measured <= est.bits());
    assert!(out.noise_bits() <= est.bits() + 1e-9);
}
