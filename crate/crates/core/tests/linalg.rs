use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use secinfer::linalg::*;
use secinfer::modarith::RingParams;
use secinfer::pahe::*;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

struct Bench {
    ctx: RingContext,
    sk: SecretKey,
    keys: KeySet,
}

impl Bench {
    fn new(params: RingParams, w_relin: u32, seed: u64) -> Self {
        let ctx = RingContext::new(params).unwrap();
        let sk = ctx.keygen(&mut rng(seed));
        Self {
            ctx,
            sk,
            keys: KeySet::empty(w_relin),
        }
    }

    fn keys_for(&mut self, plan: &MatVecPlan) {
        let elems = plan.required_elems();
        self.keys.extend(&self.ctx, &self.sk, elems, &mut rng(99));
    }

    /// Secure product; returns the decoded result, counts, and the worst
    /// (measured, estimated) noise over the output ciphertexts.
    fn run(
        &self,
        plan: &MatVecPlan,
        w: &WeightMatrix,
        v: &[u64],
        seed: u64,
    ) -> (Vec<u64>, OpCount, f64, f64) {
        let mut r = rng(seed);
        let ev = HeEvaluator::new(&self.ctx, &self.keys);
        let prepared = PreparedMatrix::new(&ev, plan, Some(w)).unwrap();
        let input = self.ctx.encrypt_windows(
            &self.sk,
            &PlaintextVector::new(plan.input_slots(v)),
            plan.w_pt,
            &mut r,
        );
        let before = ev.count();
        let outs = matvec(&ev, &prepared, &input).unwrap();
        let count = ev.count() - before;
        let mut dec = Vec::new();
        let (mut measured, mut est) = (0f64, 0f64);
        for ct in &outs {
            let (pt, bits) = self.ctx.decrypt_with_noise(&self.sk, ct);
            measured = measured.max(bits);
            est = est.max(ct.noise_bits());
            dec.push(pt.slots);
        }
        assert_eq!(outs.len(), plan.output_cts());
        (plan.decode_output(&dec), count, measured, est)
    }
}

fn counted(plan: &MatVecPlan, params: RingParams, w_relin: u32) -> (OpCount, NoiseEstimate) {
    let ctx = RingContext::new(params).unwrap();
    let ev = CountingEvaluator::new(&ctx, w_relin);
    let prepared = PreparedMatrix::new(&ev, plan, None).unwrap();
    let input = vec![ctx.noise.fresh(); ctx.window_count(plan.w_pt)];
    let out = matvec(&ev, &prepared, &input).unwrap();
    (
        ev.count(),
        out.iter().fold(NoiseEstimate::ZERO, |a, b| {
            if b.bound() > a.bound() {
                *b
            } else {
                a
            }
        }),
    )
}

#[test]
fn hybrid_counts_reproduce_table5() {
    // (n_i, n_o) -> (#in_rot, #out_rot, #mac)
    let rows = [
        ((2048, 1), (0, 11, 1)),
        ((1024, 128), (63, 4, 64)),
        ((1024, 16), (7, 7, 8)),
        ((128, 16), (0, 7, 1)),
    ];
    for ((ni, no), (inr, outr, mac)) in rows {
        let plan = MatVecPlan::with_default_window(Algorithm::Hybrid, 2048, ni, no).unwrap();
        let closed = plan.count_ops();
        assert_eq!(
            (closed.ops.perm_hoisted, closed.ops.perm, closed.ops.scmult),
            (inr, outr, mac),
            "{ni}x{no}"
        );
        let (measured, _) = counted(&plan, RingParams::standard(), 8);
        assert_eq!(measured, closed.ops, "{ni}x{no}");
    }
    let plan = MatVecPlan::with_default_window(Algorithm::Hybrid, 2048, 1024, 128).unwrap();
    assert_eq!(
        plan.encode(&WeightMatrix::zeros(128, 1024))
            .unwrap()
            .slots
            .len(),
        64
    );
}

#[test]
fn closed_forms() {
    let n = 2048;
    let c = count_ops(Algorithm::Naive, n, 1024, 128);
    assert_eq!(
        (c.ops.perm, c.ops.scmult, c.ops.add, c.output_cts),
        (1280, 128, 1280, 128)
    );
    let c = count_ops(Algorithm::Diagonal, n, n, n);
    assert_eq!(
        (c.ops.perm_hoisted, c.ops.perm, c.ops.scmult, c.output_cts),
        (n as u64 - 1, 0, n as u64, 1)
    );
    let c = count_ops(Algorithm::InputPacked, n, 16, 256);
    assert_eq!((c.ops.perm, c.ops.scmult, c.output_cts), (2 * 4, 2, 2));
    let c = count_ops(Algorithm::OutputPacked, n, 16, 4);
    assert_eq!(
        (c.ops.perm, c.ops.scmult, c.ops.add, c.output_cts),
        (4 * 4 + 3, 8, 4 * 4 + 4, 1)
    );
    // 2048 x 1 naive is the same as hybrid
    assert_eq!(count_ops(Algorithm::Naive, n, 2048, 1).ops.perm, 11);
}

#[test]
fn instrumented_counts_match_closed_forms_on_random_shapes() {
    let mut r = rng(1);
    let mut b = Bench::new(RingParams::toy(), 8, 2);
    let n = b.ctx.n();
    let p = b.ctx.p();
    for _ in 0..10 {
        let ni = 1 << r.gen_range(0..=6);
        let no = 1 << r.gen_range(0..=6);
        for algo in Algorithm::ALL {
            let Ok(plan) = MatVecPlan::new(algo, n, ni, no, 8) else {
                assert!(algo == Algorithm::Hybrid && no > ni);
                continue;
            };
            b.keys_for(&plan);
            let w = WeightMatrix::random(no, ni, p, &mut r);
            let v: Vec<u64> = (0..ni).map(|_| r.gen_range(0..p)).collect();
            let (out, count, _, _) = b.run(&plan, &w, &v, r.gen());
            assert_eq!(out, w.apply(&v, p), "{algo} {ni}x{no}");
            assert_eq!(count, plan.count_ops().ops, "{algo} {ni}x{no}");
            assert_eq!(counted(&plan, RingParams::toy(), 8).0, count);
        }
    }
}

#[test]
fn diagonal_identity_layout() {
    let plan = MatVecPlan::new(Algorithm::Diagonal, 64, 2, 2, 10).unwrap();
    let enc = plan.encode(&WeightMatrix::identity(2)).unwrap();
    assert_eq!(enc.slots.len(), 2);
    assert_eq!(&enc.slots[0][..2], &[1, 1]);
    assert_eq!(&enc.slots[1][..2], &[0, 0]);
    assert!(enc.slots.iter().all(|s| s[2..].iter().all(|&x| x == 0)));
}

/// Every extended diagonal holds at most one entry per output row, and all
/// diagonals together hold every entry exactly once.
#[test]
fn diagonals_partition_the_matrix() {
    let mut r = rng(3);
    for (n, ni, no) in [
        (64, 64, 64),
        (64, 16, 32),
        (2048, 2048, 16),
        (2048, 128, 128),
    ] {
        let plan = MatVecPlan::new(Algorithm::Diagonal, n, ni, no, 10).unwrap();
        let w = WeightMatrix::random(no, ni, 1 << 20, &mut r);
        let enc = plan.encode(&w).unwrap();
        assert_eq!(enc.decode().unwrap(), w);
        for entries in plan.pack_entries(&plan.packs[0]).unwrap() {
            let mut rows: Vec<u32> = entries.iter().flatten().map(|e| e.0).collect();
            let len = rows.len();
            rows.sort();
            rows.dedup();
            assert_eq!(rows.len(), len);
        }
    }
}

#[test]
fn encodings_decode_exactly() {
    let mut r = rng(4);
    for algo in Algorithm::ALL {
        for (ni, no) in [(16, 16), (64, 8), (8, 64), (64, 64), (1, 4)] {
            let Ok(plan) = MatVecPlan::new(algo, 64, ni, no, 10) else {
                continue;
            };
            let w = WeightMatrix::random(no, ni, 65537, &mut r);
            assert_eq!(
                plan.encode(&w).unwrap().decode().unwrap(),
                w,
                "{algo} {ni}x{no}"
            );
        }
    }
}

#[test]
fn rejects_bad_shapes() {
    assert!(matches!(
        MatVecPlan::new(Algorithm::Diagonal, 64, 12, 16, 10),
        Err(LinalgError::Dimension(_))
    ));
    assert!(matches!(
        MatVecPlan::new(Algorithm::Naive, 64, 16, 128, 10),
        Err(LinalgError::Dimension(_))
    ));
    assert!(matches!(
        MatVecPlan::new(Algorithm::Hybrid, 64, 8, 16, 10),
        Err(LinalgError::Dimension(_))
    ));
    let plan = MatVecPlan::new(Algorithm::Naive, 64, 16, 16, 10).unwrap();
    assert!(plan.encode(&WeightMatrix::zeros(16, 8)).is_err());
    assert!(WeightMatrix::new(2, 3, vec![0; 5]).is_err());
}

#[test]
fn missing_keys_are_reported() {
    let b = Bench::new(RingParams::toy(), 8, 5);
    let plan = MatVecPlan::new(Algorithm::Hybrid, 64, 32, 8, 8).unwrap();
    let ev = HeEvaluator::new(&b.ctx, &b.keys);
    let prepared = PreparedMatrix::new(&ev, &plan, Some(&WeightMatrix::zeros(8, 32))).unwrap();
    let input = b
        .ctx
        .encrypt_windows(&b.sk, &PlaintextVector::zeros(64), 8, &mut rng(6));
    assert!(matches!(
        matvec(&ev, &prepared, &input),
        Err(LinalgError::Pahe(PaheError::MissingKey(_)))
    ));
}

#[test]
fn all_algorithms_agree_at_toy_parameters() {
    let mut r = rng(7);
    let mut b = Bench::new(RingParams::toy(), 8, 8);
    let p = b.ctx.p();
    for (ni, no) in [(16, 16), (64, 16), (32, 8), (64, 64), (8, 1), (1, 8)] {
        let w = WeightMatrix::random(no, ni, p, &mut r);
        let v: Vec<u64> = (0..ni).map(|_| r.gen_range(0..p)).collect();
        let expect = w.apply(&v, p);
        for algo in Algorithm::ALL {
            let Ok(plan) = MatVecPlan::new(algo, 64, ni, no, 8) else {
                continue;
            };
            b.keys_for(&plan);
            let (out, _, measured, est) = b.run(&plan, &w, &v, r.gen());
            assert_eq!(out, expect, "{algo} {ni}x{no}");
            assert!(
                measured <= est,
                "{algo} {ni}x{no}: measured {measured:.1} > estimate {est:.1}"
            );
        }
    }
}

#[test]
fn identity_and_zero_matrices() {
    let mut b = Bench::new(RingParams::toy(), 8, 9);
    let p = b.ctx.p();
    let v: Vec<u64> = (0..16).map(|i| (i * 1234 + 5) % p).collect();
    for algo in Algorithm::ALL {
        let plan = MatVecPlan::new(algo, 64, 16, 16, 8).unwrap();
        b.keys_for(&plan);
        assert_eq!(
            b.run(&plan, &WeightMatrix::identity(16), &v, 1).0,
            v,
            "{algo}"
        );
        assert_eq!(
            b.run(&plan, &WeightMatrix::zeros(16, 16), &v, 2).0,
            vec![0; 16],
            "{algo}"
        );
    }
}

#[test]
fn bias_and_padding() {
    let mut r = rng(10);
    let mut b = Bench::new(RingParams::toy(), 8, 11);
    let p = b.ctx.p();
    let raw = WeightMatrix::random(10, 7, p, &mut r)
        .with_bias((0..10).map(|_| r.gen_range(0..p)).collect())
        .unwrap();
    let w = raw.padded();
    assert_eq!((w.n_o, w.n_i), (16, 8));
    let v: Vec<u64> = (0..7).map(|_| r.gen_range(0..p)).collect();
    let plan = MatVecPlan::new(Algorithm::Diagonal, 64, 8, 16, 8).unwrap();
    b.keys_for(&plan);
    let out = b.run(&plan, &w, &v, 3).0;
    assert_eq!(&out[..10], &raw.apply(&v, p)[..]);
}

#[test]
fn garbage_slots_are_randomised() {
    let mut r = rng(12);
    let mut b = Bench::new(RingParams::toy(), 8, 13);
    let p = b.ctx.p();
    let plan = MatVecPlan::new(Algorithm::Hybrid, 64, 32, 8, 8).unwrap();
    b.keys_for(&plan);
    let w = WeightMatrix::random(8, 32, p, &mut r);
    let v: Vec<u64> = (0..32).map(|_| r.gen_range(0..p)).collect();
    let ev = HeEvaluator::new(&b.ctx, &b.keys);
    let prepared = PreparedMatrix::new(&ev, &plan, Some(&w)).unwrap();
    let input = b.ctx.encrypt_windows(
        &b.sk,
        &PlaintextVector::new(plan.input_slots(&v)),
        8,
        &mut r,
    );
    let outs = matvec(&ev, &prepared, &input).unwrap();
    let a = b
        .ctx
        .decrypt(&b.sk, &hide_garbage(&ev, &plan, &outs, p, &mut r)[0])
        .slots;
    let c = b
        .ctx
        .decrypt(&b.sk, &hide_garbage(&ev, &plan, &outs, p, &mut r)[0])
        .slots;
    let result: Vec<usize> = plan.output_layout().iter().map(|x| x.1).collect();
    for s in 0..64 {
        if result.contains(&s) {
            assert_eq!(a[s], c[s]);
        }
    }
    let differing = (0..64)
        .filter(|s| !result.contains(s) && a[*s] != c[*s])
        .count();
    assert!(differing >= 64 - 8 - 2);
    assert_eq!(plan.decode_output(&[a]), w.apply(&v, p));
}

#[test]
fn hoisting_uses_one_decomposition() {
    for algo in [Algorithm::Diagonal, Algorithm::Hybrid] {
        let plan = MatVecPlan::with_default_window(algo, 2048, 1024, 128).unwrap();
        let (c, _) = counted(&plan, RingParams::standard(), 8);
        assert_eq!(c.decomp - c.perm, 1, "{algo}");
    }
}

#[test]
fn noise_ordering() {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let m = ctx.noise;
    let (eta0, eta_mult, eta_rot) = (m.sigma, m.eta_mult(512), m.eta_rot(6));
    for (ni, no) in [(16, 16), (128, 16), (1024, 16), (1024, 128), (2048, 1)] {
        let h = table_noise(Algorithm::Hybrid, ni, no, eta0, eta_mult, eta_rot);
        let d = table_noise(Algorithm::Diagonal, ni, no, eta0, eta_mult, eta_rot);
        assert!(h <= d + eta_rot * (ni as f64 / no as f64 - 1.0) + 1e-6);
        let o = table_noise(Algorithm::OutputPacked, ni, no, eta0, eta_mult, eta_rot);
        assert!(o > h);
        // and on the running estimator
        let est = |a| {
            counted(
                &MatVecPlan::with_default_window(a, 2048, ni, no).unwrap(),
                RingParams::standard(),
                6,
            )
            .1
        };
        assert!(est(Algorithm::OutputPacked).bound() > est(Algorithm::Hybrid).bound());
        assert!(
            !m.below_line(est(Algorithm::OutputPacked)),
            "output packing predicted to overflow at {ni}x{no}"
        );
        assert!(m.below_line(est(Algorithm::Hybrid)));
    }
}

/// Full parameters on the benchmark shapes, one instance each; output
/// packing only fits on tiny shapes with narrow windows. A 6-bit key
/// digit keeps the 1024-input hybrid product below the decryption line.
#[test]
fn full_parameter_equivalence() {
    let mut r = rng(14);
    let mut b = Bench::new(RingParams::standard(), 6, 15);
    let p = b.ctx.p();
    for (ni, no) in [(16, 16), (128, 16), (1024, 16), (1024, 128)] {
        let w = WeightMatrix::random(no, ni, p, &mut r);
        let v: Vec<u64> = (0..ni).map(|_| r.gen_range(0..p)).collect();
        let expect = w.apply(&v, p);
        for algo in [
            Algorithm::Naive,
            Algorithm::InputPacked,
            Algorithm::Diagonal,
            Algorithm::Hybrid,
        ] {
            let plan = MatVecPlan::with_default_window(algo, 2048, ni, no).unwrap();
            b.keys_for(&plan);
            let (out, count, measured, est) = b.run(&plan, &w, &v, r.gen());
            assert_eq!(out, expect, "{algo} {ni}x{no}");
            assert_eq!(count, plan.count_ops().ops);
            assert!(
                measured <= est && est < b.ctx.noise.line_bits,
                "{algo} {ni}x{no}: {measured:.1} / {est:.1}"
            );
        }
    }
    let mut b = Bench::new(RingParams::standard(), 4, 16);
    for (ni, no) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        let plan = MatVecPlan::new(Algorithm::OutputPacked, 2048, ni, no, 3).unwrap();
        b.keys_for(&plan);
        let w = WeightMatrix::random(no, ni, p, &mut r);
        let v: Vec<u64> = (0..ni).map(|_| r.gen_range(0..p)).collect();
        let (out, _, measured, est) = b.run(&plan, &w, &v, r.gen());
        assert_eq!(out, w.apply(&v, p));
        assert!(
            measured <= est && est < b.ctx.noise.line_bits,
            "{measured:.1} / {est:.1}"
        );
    }
}
