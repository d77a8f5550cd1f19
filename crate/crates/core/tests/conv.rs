use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use secinfer::conv::*;
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

struct Run {
    out: Vec<u64>,
    /// Every decrypted slot of every output ciphertext.
    raw: Vec<Vec<u64>>,
    count: OpCount,
    measured: f64,
    estimated: f64,
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

    fn p(&self) -> u64 {
        self.ctx.p()
    }

    fn run(&mut self, plan: &ConvPlan, f: &Filters, image: &[u64], seed: u64) -> Run {
        self.keys.extend(
            &self.ctx,
            &self.sk,
            plan.required_elems(),
            &mut rng(seed ^ 0x5eed),
        );
        let mut r = rng(seed);
        let ev = HeEvaluator::new(&self.ctx, &self.keys);
        let prepared = PreparedConv::new(&ev, plan, Some(f), seed.is_multiple_of(2)).unwrap();
        let inputs: Vec<Vec<Ciphertext>> = plan
            .input_slots(image)
            .into_iter()
            .map(|s| {
                self.ctx
                    .encrypt_windows(&self.sk, &PlaintextVector::new(s), plan.w_pt, &mut r)
            })
            .collect();
        let before = ev.count();
        let outs = conv2d(&ev, &prepared, &inputs).unwrap();
        let count = ev.count() - before;
        assert_eq!(outs.len(), plan.geom.out_cts());
        let (mut measured, mut estimated) = (0f64, 0f64);
        let mut raw = Vec::new();
        for ct in &outs {
            let (pt, bits) = self.ctx.decrypt_with_noise(&self.sk, ct);
            measured = measured.max(bits);
            estimated = estimated.max(ct.noise_bits());
            raw.push(pt.slots);
        }
        Run {
            out: plan.decode_output(&raw),
            raw,
            count,
            measured,
            estimated,
        }
    }
}

fn counted(plan: &ConvPlan, w_relin: u32) -> (OpCount, f64) {
    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let ev = CountingEvaluator::new(&ctx, w_relin);
    let prepared = PreparedConv::new(&ev, plan, None, false).unwrap();
    let inputs = vec![vec![ctx.noise.fresh(); ctx.window_count(plan.w_pt)]; plan.geom.in_cts()];
    let outs = conv2d(&ev, &prepared, &inputs).unwrap();
    (
        ev.count(),
        outs.iter().map(|e| e.bits()).fold(0.0, f64::max),
    )
}

fn random_image(spec: &ConvSpec, p: u64, r: &mut impl Rng) -> Vec<u64> {
    (0..spec.input_len()).map(|_| r.gen_range(0..p)).collect()
}

/// Independent evaluation of the Table 6 rows: (decomp, perm) per variant.
fn table6(c_i: u64, c_o: u64, c_n: u64, taps: u64, variant: Variant) -> (u64, u64) {
    match variant {
        Variant::OnePerCt => (c_i, (taps - 1) * c_i),
        Variant::InputRot => (c_i / c_n, (c_n * taps - 1) * c_i / c_n),
        Variant::OutputRot => (
            (1 + (c_n - 1) * c_o / c_n) * c_i / c_n,
            (taps - 1 + (c_n - 1) * c_o / c_n) * c_i / c_n,
        ),
        _ => unreachable!(),
    }
}

#[test]
fn table6_counts_on_benchmark_shapes() {
    // spec, expected c_n, (input-rotation perms, output-rotation perms)
    let shapes = [
        (ConvSpec::square(16, 128, 1, 128), 8, (112, 1792)),
        (ConvSpec::square(32, 32, 3, 32), 2, (272, 384)),
        (ConvSpec::square(16, 128, 3, 128), 8, (1136, 1920)),
        (ConvSpec::square(28, 1, 5, 5).with_stride(2), 1, (32, 32)),
    ];
    for (spec, c_n, (perm_in, perm_out)) in shapes {
        for (variant, expect) in [(Variant::InputRot, perm_in), (Variant::OutputRot, perm_out)] {
            let plan = ConvPlan::new(spec, variant, 2048, 10).unwrap();
            assert_eq!(plan.geom.c_n, c_n, "{spec}");
            let closed = plan.count_ops();
            assert_eq!(closed.ops.perms(), expect, "{spec} {variant}");
            let (c_in, taps) = (plan.geom.c_in as u64, plan.geom.taps.len() as u64);
            let (decomp, perms) = table6(c_in, spec.c_o as u64, c_n as u64, taps, variant);
            assert_eq!(
                (closed.ops.decomp, closed.ops.perms()),
                (decomp, perms),
                "{spec} {variant}"
            );
            assert_eq!(
                (closed.in_cts, closed.out_cts),
                (c_in / c_n as u64, spec.c_o as u64 / c_n as u64)
            );
            assert_eq!(counted(&plan, 6).0, closed.ops, "{spec} {variant}");
        }
        let one = ConvPlan::new(spec, Variant::OnePerCt, 2048, 10).unwrap();
        let (c_in, taps) = (one.geom.c_in as u64, one.geom.taps.len() as u64);
        let closed = one.count_ops().ops;
        assert_eq!(
            (closed.decomp, closed.perms()),
            table6(c_in, spec.c_o as u64, 1, taps, Variant::OnePerCt)
        );
        assert_eq!(counted(&one, 6).0, closed);
    }
}

#[test]
fn benchmark_shapes_stay_under_the_correctness_line() {
    let line = RingParams::standard().correctness_line_bits();
    for spec in [
        ConvSpec::square(16, 128, 1, 128),
        ConvSpec::square(32, 32, 3, 32),
        ConvSpec::square(16, 128, 3, 128),
    ] {
        for variant in [Variant::InputRot, Variant::OutputRot] {
            let plan = ConvPlan::new(spec, variant, 2048, 10).unwrap();
            let (_, bits) = counted(&plan, 6);
            assert!(bits < line, "{spec} {variant}: {bits:.1} bits");
        }
    }
}

#[test]
fn strided_decomposition_geometry() {
    let plan = ConvPlan::new(
        ConvSpec::square(28, 1, 5, 5).with_stride(2),
        Variant::InputRot,
        2048,
        10,
    )
    .unwrap();
    let g = &plan.geom;
    assert_eq!(
        (g.c_in, g.grid_h, g.grid_w, g.out_h, g.out_w, g.taps.len()),
        (4, 14, 14, 14, 14, 9)
    );
    let unit = ConvPlan::new(ConvSpec::square(8, 2, 3, 2), Variant::OnePerCt, 2048, 10).unwrap();
    assert_eq!((unit.geom.c_in, unit.geom.taps.len()), (2, 9));
}

#[test]
fn diagonal_grouping_is_valid() {
    for (spec, c_n) in [
        (ConvSpec::square(8, 8, 3, 8), 4),
        (ConvSpec::square(16, 128, 1, 128), 8),
        (ConvSpec::square(4, 4, 1, 8), 2),
    ] {
        let plan = ConvPlan::with_packing(spec, Variant::InputRot, 2048, 10, Some(c_n)).unwrap();
        let groups = plan.intermediate_groups();
        assert_eq!(groups.len(), spec.c_i * spec.c_o / c_n);
        let mut seen = std::collections::HashSet::new();
        for grp in &groups {
            let outs: std::collections::HashSet<_> = grp.iter().map(|x| x.0).collect();
            let ins: std::collections::HashSet<_> = grp.iter().map(|x| x.1).collect();
            assert_eq!(outs.len(), c_n, "output channel repeated in {grp:?}");
            assert_eq!(ins.len(), c_n, "input channel repeated in {grp:?}");
            for &pair in grp {
                assert!(seen.insert(pair), "{pair:?} computed twice");
            }
        }
        assert_eq!(seen.len(), spec.c_i * spec.c_o);
    }
}

#[test]
fn random_specs_match_oracle_at_toy_parameters() {
    let mut b = Bench::new(RingParams::toy(), 8, 1);
    let p = b.p();
    let mut r = rng(2);
    let mut done = 0;
    let mut variants_seen = std::collections::HashSet::new();
    while done < 60 {
        let stride = if r.gen_bool(0.25) { 2 } else { 1 };
        let (w, h) = (r.gen_range(1..=8), r.gen_range(1..=8));
        let padding = if r.gen_bool(0.7) {
            Padding::Same
        } else {
            Padding::Valid
        };
        let f = match padding {
            Padding::Same => [1, 3, 5][r.gen_range(0..3)],
            Padding::Valid => r.gen_range(1..=w.min(h)),
        };
        let spec = ConvSpec {
            w_i: w,
            h_i: h,
            c_i: r.gen_range(1..=8),
            f_w: f,
            f_h: f,
            c_o: r.gen_range(1..=8),
            s_w: stride,
            s_h: stride,
            padding,
        };
        let variant = [Variant::OnePerCt, Variant::InputRot, Variant::OutputRot][r.gen_range(0..3)];
        let Ok(plan) = ConvPlan::new(spec, variant, 64, 8) else {
            continue;
        };
        if spec.output_dims().0 == 0 || spec.output_dims().1 == 0 {
            continue;
        }
        let filters = Filters::random(spec, p, &mut r);
        let filters = if r.gen_bool(0.3) {
            filters
                .with_bias((0..spec.c_o).map(|_| r.gen_range(0..p)).collect())
                .unwrap()
        } else {
            filters
        };
        let image = random_image(&spec, p, &mut r);
        let run = b.run(&plan, &filters, &image, done);
        assert_eq!(
            run.out,
            conv2d_reference(&filters, &image, p),
            "{spec} {variant} c_n={}",
            plan.geom.c_n
        );
        assert_eq!(run.count, plan.count_ops().ops, "{spec} {variant}");
        assert!(
            run.measured <= run.estimated,
            "{spec}: noise {} > estimate {}",
            run.measured,
            run.estimated
        );
        variants_seen.insert((variant, plan.geom.c_n > 1, stride));
        done += 1;
    }
    assert!(variants_seen.len() >= 6, "{variants_seen:?}");
}

#[test]
fn random_specs_match_oracle_at_full_parameters() {
    let mut b = Bench::new(RingParams::standard(), 6, 3);
    let p = b.p();
    let mut r = rng(4);
    for i in 0..8 {
        let spec = ConvSpec {
            w_i: r.gen_range(4..=16),
            h_i: r.gen_range(4..=16),
            c_i: [1, 2, 4][r.gen_range(0..3)],
            f_w: 3,
            f_h: 3,
            c_o: [1, 2, 4][r.gen_range(0..3)],
            s_w: 1 + i % 2,
            s_h: 1 + i % 2,
            padding: Padding::Same,
        };
        let variant = [Variant::InputRot, Variant::OutputRot][i % 2];
        let plan = ConvPlan::new(spec, variant, 2048, 10).unwrap();
        let filters = Filters::random(spec, p, &mut r);
        let image = random_image(&spec, p, &mut r);
        let run = b.run(&plan, &filters, &image, 10 + i as u64);
        assert_eq!(
            run.out,
            conv2d_reference(&filters, &image, p),
            "{spec} {variant}"
        );
        assert!(run.measured <= run.estimated);
    }
}

#[test]
fn channel_packed_eight_channels() {
    let mut b = Bench::new(RingParams::standard(), 6, 5);
    let p = b.p();
    let spec = ConvSpec::square(8, 8, 3, 8);
    let filters = Filters::random(spec, p, &mut rng(6));
    let image = random_image(&spec, p, &mut rng(7));
    let expected = conv2d_reference(&filters, &image, p);
    for variant in [Variant::InputRot, Variant::OutputRot] {
        let plan = ConvPlan::with_packing(spec, variant, 2048, 10, Some(4)).unwrap();
        let run = b.run(&plan, &filters, &image, 8);
        assert_eq!(run.out, expected, "{variant}");
        assert_eq!(run.count, plan.count_ops().ops);
    }
    // c_n = 1 degenerates to one channel per ciphertext.
    let a = ConvPlan::with_packing(spec, Variant::InputRot, 2048, 10, Some(1)).unwrap();
    let one = ConvPlan::new(spec, Variant::OnePerCt, 2048, 10).unwrap();
    assert_eq!(a.count_ops(), one.count_ops());
    assert_eq!(b.run(&a, &filters, &image, 9).out, expected);
}

#[test]
fn strided_convolutions_match_oracle() {
    let mut b = Bench::new(RingParams::standard(), 6, 11);
    let p = b.p();
    let cases = [
        ConvSpec::square(8, 1, 3, 1).with_stride(2),
        ConvSpec::square(28, 1, 5, 5).with_stride(2),
        ConvSpec::square(9, 2, 3, 2).with_stride(2),
    ];
    for (i, spec) in cases.into_iter().enumerate() {
        let filters = Filters::random(spec, p, &mut rng(20 + i as u64));
        let image = random_image(&spec, p, &mut rng(30 + i as u64));
        let plan = ConvPlan::new(
            spec,
            choose_variant(&spec, 2048, DEFAULT_AUTO_DECOMP_RATIO).unwrap(),
            2048,
            10,
        )
        .unwrap();
        assert_eq!(
            b.run(&plan, &filters, &image, 40 + i as u64).out,
            conv2d_reference(&filters, &image, p),
            "{spec}"
        );
    }
}

#[test]
fn packed_siso_has_no_leakage() {
    let mut b = Bench::new(RingParams::standard(), 6, 12);
    let p = b.p();
    let spec = ConvSpec::square(28, 1, 5, 1);
    let plan = ConvPlan::new(spec, Variant::PackedSiso, 2048, 10).unwrap();
    assert_eq!(plan.geom.grid_h * plan.geom.grid_w, 784);
    let filters = Filters::random(spec, p, &mut rng(13));
    let image = random_image(&spec, p, &mut rng(14));
    let run = b.run(&plan, &filters, &image, 15);
    let expected = conv2d_reference(&filters, &image, p);
    assert_eq!(run.out, expected);
    // Every slot of the output is either a convolution value or zero.
    let mut full = vec![0u64; 2048];
    for ((_, s), v) in plan.output_layout().into_iter().zip(&expected) {
        full[s] = *v;
    }
    assert_eq!(run.raw[0], full);
    assert_eq!(run.count.perms(), 24);

    let zero = Filters::new(spec, vec![0; 25]).unwrap();
    assert!(b.run(&plan, &zero, &image, 16).raw[0]
        .iter()
        .all(|&v| v == 0));
}

#[test]
fn padded_siso() {
    let mut b = Bench::new(RingParams::standard(), 6, 17);
    let p = b.p();
    let spec = ConvSpec::square(4, 1, 3, 1);
    let plan = ConvPlan::new(spec, Variant::PaddedSiso, 2048, 10).unwrap();
    assert_eq!(plan.count_ops().ops.perm_hoisted, 8);
    let filters = Filters::random(spec, p, &mut rng(18));
    let image = random_image(&spec, p, &mut rng(19));
    let run = b.run(&plan, &filters, &image, 20);
    assert_eq!(run.out, conv2d_reference(&filters, &image, p));
    assert_eq!(run.count, plan.count_ops().ops);

    // 1x1 identity filter.
    let id = Filters::new(spec.clone_with_filter(1), vec![1]).unwrap();
    let id_plan = ConvPlan::new(id.spec, Variant::PaddedSiso, 2048, 10).unwrap();
    assert_eq!(b.run(&id_plan, &id, &image, 21).out, image);

    // Periphery masking keeps results and randomizes everything else.
    let ev = HeEvaluator::new(&b.ctx, &b.keys);
    let prepared = PreparedConv::new(&ev, &plan, Some(&filters), true).unwrap();
    let mut r = rng(22);
    let inputs: Vec<Vec<Ciphertext>> = plan
        .input_slots(&image)
        .into_iter()
        .map(|s| {
            b.ctx
                .encrypt_windows(&b.sk, &PlaintextVector::new(s), 10, &mut r)
        })
        .collect();
    let outs = conv2d(&ev, &prepared, &inputs).unwrap();
    let masked = hide_periphery(&ev, &plan, &outs, p, &mut r);
    let dec = vec![b.ctx.decrypt(&b.sk, &masked[0]).slots];
    assert_eq!(
        plan.decode_output(&dec),
        conv2d_reference(&filters, &image, p)
    );
    let plain = b.ctx.decrypt(&b.sk, &outs[0]).slots;
    let changed = (0..2048).filter(|&s| dec[0][s] != plain[s]).count();
    assert!(
        changed > 2048 - 16 - 20,
        "only {changed} periphery slots masked"
    );
}

trait WithFilter {
    fn clone_with_filter(&self, f: usize) -> ConvSpec;
}

impl WithFilter for ConvSpec {
    fn clone_with_filter(&self, f: usize) -> ConvSpec {
        ConvSpec {
            f_w: f,
            f_h: f,
            ..*self
        }
    }
}

#[test]
fn variant_choice() {
    let r = DEFAULT_AUTO_DECOMP_RATIO;
    assert_eq!(
        choose_variant(&ConvSpec::square(16, 128, 1, 128), 2048, r).unwrap(),
        Variant::InputRot
    );
    assert_eq!(
        choose_variant(&ConvSpec::square(16, 128, 3, 128), 2048, r).unwrap(),
        Variant::OutputRot
    );
    // c_n = 1: both sides are zero, the tie goes to input rotations.
    assert_eq!(
        choose_variant(&ConvSpec::square(28, 1, 5, 5).with_stride(2), 2048, r).unwrap(),
        Variant::InputRot
    );
}

#[test]
fn rejects_bad_specs() {
    let n = 2048;
    let even = ConvSpec::square(8, 1, 2, 1);
    assert!(matches!(
        ConvPlan::new(even, Variant::OnePerCt, n, 10),
        Err(ConvError::Spec(_))
    ));
    assert!(ConvPlan::new(even.with_padding(Padding::Valid), Variant::OnePerCt, n, 10).is_ok());
    assert!(matches!(
        ConvPlan::new(ConvSpec::square(64, 1, 3, 1), Variant::OnePerCt, n, 10),
        Err(ConvError::TooLarge(_))
    ));
    assert!(matches!(
        ConvPlan::new(ConvSpec::square(31, 1, 3, 1), Variant::PaddedSiso, n, 10),
        Err(ConvError::TooLarge(_))
    ));
    assert!(matches!(
        ConvPlan::with_packing(
            ConvSpec::square(8, 6, 3, 6),
            Variant::InputRot,
            n,
            10,
            Some(4)
        ),
        Err(ConvError::Packing(_))
    ));
    assert!(matches!(
        ConvPlan::new(ConvSpec::square(8, 2, 3, 1), Variant::PackedSiso, n, 10),
        Err(ConvError::Spec(_))
    ));
    let spec = ConvSpec::square(8, 2, 3, 2);
    assert!(Filters::new(spec, vec![0; 3]).is_err());
    assert!(Filters::new(spec, vec![0; 36])
        .unwrap()
        .with_bias(vec![1])
        .is_err());

    let ctx = RingContext::new(RingParams::standard()).unwrap();
    let ev = CountingEvaluator::new(&ctx, 6);
    let plan = ConvPlan::new(spec, Variant::OnePerCt, n, 10).unwrap();
    let prepared = PreparedConv::new(&ev, &plan, None, false).unwrap();
    assert_eq!(
        conv2d(&ev, &prepared, &[]).unwrap_err(),
        ConvError::Input {
            expected: 2,
            got: 0
        }
    );
    let other = Filters::new(ConvSpec::square(8, 2, 1, 2), vec![0; 4]).unwrap();
    assert!(PreparedConv::new(&ev, &plan, Some(&other), false).is_err());
}

#[test]
fn missing_keys_are_reported() {
    let b = Bench::new(RingParams::toy(), 8, 23);
    let ev = HeEvaluator::new(&b.ctx, &b.keys);
    let spec = ConvSpec::square(4, 1, 3, 1);
    let plan = ConvPlan::new(spec, Variant::PackedSiso, 64, 8).unwrap();
    let prepared = PreparedConv::new(&ev, &plan, None, false).unwrap();
    let ct = b
        .ctx
        .encrypt_windows(&b.sk, &PlaintextVector::zeros(64), 8, &mut rng(1));
    assert!(matches!(
        conv2d(&ev, &prepared, &[ct]),
        Err(ConvError::Pahe(PaheError::MissingKey(_)))
    ));
}
