//! Benchmark harness. Every benchmark checks the values it times against a
//! plaintext oracle and fails instead of reporting when they disagree.
//! Reports render as JSON lines or as an aligned table.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::conv::{self, conv2d, ConvPlan, ConvSpec, Filters, PreparedConv, Variant};
use crate::gc::{self, garble, Activation, BlockSpec};
use crate::linalg::{matvec, Algorithm, MatVecPlan, PreparedMatrix, WeightMatrix};
use crate::modarith::{Reducer, RingParams};
use crate::pahe::{
    ciphertext_len, CountingEvaluator, Evaluator, GroupElem, HeEvaluator, KeySet, OpCount,
    PlaintextVector, RingContext,
};
use crate::par;
use crate::protocol::gadgets::{flood_target, square_shares};
use crate::protocol::plan::SQUARE_W_PT;
use crate::protocol::{run_local, Network, Party, Phase, SessionConfig, ShareVector};
use crate::reference;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{what}: result disagrees with the plaintext oracle")]
    Oracle { what: String },
    #[error("{what}: counts {got:?} differ from the closed form {want:?}")]
    Counts {
        what: String,
        got: OpCount,
        want: OpCount,
    },
    #[error("{0}")]
    Failed(String),
}

macro_rules! into_failed {
    ($($t:ty),*) => {$(
        impl From<$t> for BenchError {
            fn from(e: $t) -> Self {
                BenchError::Failed(e.to_string())
            }
        }
    )*};
}
into_failed!(
    crate::pahe::PaheError,
    crate::linalg::LinalgError,
    crate::conv::ConvError,
    crate::gc::GcError,
    crate::protocol::ProtocolError
);

/// One timed operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub suite: String,
    pub name: String,
    pub trials: usize,
    pub median_us: f64,
    pub mean_us: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<OpCount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bytes: Option<u64>,
    /// Derived speed ratio, for comparison rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl BenchReport {
    fn new(
        suite: &str,
        name: impl Into<String>,
        trials: usize,
        (median_us, mean_us): (f64, f64),
    ) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            trials,
            median_us,
            mean_us,
            counts: None,
            noise_bits: None,
            bytes: None,
            ratio: None,
        }
    }

    fn ratio_row(suite: &str, name: impl Into<String>, ratio: f64) -> Self {
        Self {
            ratio: Some(ratio),
            ..Self::new(suite, name, 0, (0.0, 0.0))
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchConfig {
    /// Timed repetitions (rounded up to odd); 0 produces no reports.
    pub trials: usize,
    pub seed: u64,
    /// Let kernels use the thread pool; otherwise each timed body runs on one thread.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            trials: 5,
            seed: 1,
            parallel: false,
        }
    }
}

impl BenchConfig {
    fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed)
    }

    fn odd_trials(&self) -> usize {
        self.trials | 1
    }

    /// One warm-up run, then median and mean over the trials, in µs.
    fn time(&self, mut f: impl FnMut() + Send) -> (f64, f64) {
        let trials = self.odd_trials();
        let mut body = move || {
            f();
            let mut t: Vec<f64> = (0..trials)
                .map(|_| {
                    let start = Instant::now();
                    f();
                    start.elapsed().as_secs_f64() * 1e6
                })
                .collect();
            t.sort_by(f64::total_cmp);
            (t[t.len() / 2], t.iter().sum::<f64>() / t.len() as f64)
        };
        if self.parallel {
            body()
        } else {
            par::sequential(&mut body)
        }
    }
}

fn oracle(ok: bool, what: impl Into<String>) -> Result<(), BenchError> {
    if ok {
        Ok(())
    } else {
        Err(BenchError::Oracle { what: what.into() })
    }
}

fn uniform(p: u64, len: usize, r: &mut impl RngCore) -> Vec<u64> {
    (0..len).map(|_| r.gen_range(0..p)).collect()
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// Key-switching digit width used by every encrypted benchmark.
pub const BENCH_W_RELIN: u32 = 6;

fn primitives_for<Q: Reducer>(
    backend: &str,
    ctx: &RingContext<Q>,
    cfg: &BenchConfig,
) -> Result<Vec<BenchReport>, BenchError> {
    const S: &str = "primitives";
    let trials = cfg.odd_trials();
    let mut r = cfg.rng();
    let (n, p) = (ctx.n(), ctx.p());
    let name = |op: &str| format!("{op} [{backend}]");
    let mut out = Vec::new();

    let a: Vec<u64> = uniform(ctx.params.q.value(), n, &mut r);
    let mut t = a.clone();
    ctx.ntt_q().forward_inplace(&mut t);
    ctx.ntt_q().inverse_inplace(&mut t);
    oracle(t == a, "ntt roundtrip")?;
    out.push(BenchReport::new(
        S,
        name("ntt"),
        trials,
        cfg.time(|| ctx.ntt_q().forward_inplace(&mut t)),
    ));

    let seed: u64 = r.gen();
    out.push(BenchReport::new(
        S,
        name("keygen"),
        trials,
        cfg.time(|| drop(ctx.keygen(&mut ChaCha20Rng::seed_from_u64(seed)))),
    ));
    let sk = ctx.keygen(&mut r);
    let x = uniform(p, n, &mut r);
    let y = uniform(p, n, &mut r);
    let pt = PlaintextVector::new(x.clone());
    out.push(BenchReport::new(
        S,
        name("encrypt"),
        trials,
        cfg.time(|| drop(ctx.encrypt(&sk, &pt, &mut ChaCha20Rng::seed_from_u64(seed)))),
    ));
    let cx = ctx.encrypt(&sk, &pt, &mut r);
    let cy = ctx.encrypt(&sk, &PlaintextVector::new(y.clone()), &mut r);
    oracle(ctx.decrypt(&sk, &cx).slots == x, "decrypt")?;
    out.push(BenchReport::new(
        S,
        name("decrypt"),
        trials,
        cfg.time(|| drop(ctx.decrypt(&sk, &cx))),
    ));

    let sum = ctx.add(&cx, &cy);
    oracle(
        ctx.decrypt(&sk, &sum).slots
            == x.iter()
                .zip(&y)
                .map(|(a, b)| (a + b) % p)
                .collect::<Vec<_>>(),
        "simd add",
    )?;
    out.push(BenchReport::new(
        S,
        name("simd_add"),
        trials,
        cfg.time(|| drop(ctx.add(&cx, &cy))),
    ));

    let w_pt = 10;
    let win = ctx.encrypt_windows(&sk, &pt, w_pt, &mut r);
    let w = ctx.encode_windows(&y, w_pt);
    let prod = ctx.scmult(&win, &w)?;
    oracle(
        ctx.decrypt(&sk, &prod).slots
            == x.iter()
                .zip(&y)
                .map(|(&a, &b)| mulmod(a, b, p))
                .collect::<Vec<_>>(),
        "simd scmult",
    )?;
    let mut sc = BenchReport::new(
        S,
        name("simd_scmult"),
        trials,
        cfg.time(|| drop(ctx.scmult(&win, &w))),
    );
    sc.noise_bits = Some(prod.noise_bits());
    out.push(sc);

    let elem = GroupElem::rotation(n, 1);
    let keys = KeySet::generate(ctx, &sk, [elem], BENCH_W_RELIN, &mut r);
    let want: Vec<u64> = (0..n).map(|s| x[elem.src_slot(n, s)]).collect();
    let permuted = ctx.perm(&cx, elem, &keys)?;
    oracle(ctx.decrypt(&sk, &permuted).slots == want, "perm")?;
    let t_perm = cfg.time(|| drop(ctx.perm(&cx, elem, &keys)));
    let mut pr = BenchReport::new(S, name("perm"), trials, t_perm);
    pr.noise_bits = Some(permuted.noise_bits());
    out.push(pr);
    out.push(BenchReport::new(
        S,
        name("perm_decomp"),
        trials,
        cfg.time(|| drop(ctx.perm_decomp(&cx, BENCH_W_RELIN))),
    ));
    let h = ctx.perm_decomp(&cx, BENCH_W_RELIN);
    let key = keys.get(elem)?;
    oracle(
        ctx.decrypt(&sk, &ctx.perm_auto(&h, key)?).slots == want,
        "perm_auto",
    )?;
    let t_auto = cfg.time(|| drop(ctx.perm_auto(&h, key)));
    out.push(BenchReport::new(S, name("perm_auto"), trials, t_auto));
    out.push(BenchReport::ratio_row(
        S,
        name("perm / perm_auto"),
        t_perm.0 / t_auto.0,
    ));
    Ok(out)
}

/// Ring primitives with the fast and the naive reduction backends, plus
/// the speed-up ratios.
pub fn bench_primitives(cfg: &BenchConfig) -> Result<Vec<BenchReport>, BenchError> {
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    let params = RingParams::standard();
    let fast = primitives_for("fast", &RingContext::new(params)?, cfg)?;
    let naive = primitives_for("naive", &RingContext::naive(params)?, cfg)?;
    let mut out = Vec::new();
    for (f, s) in fast.iter().zip(&naive) {
        out.push(f.clone());
        out.push(s.clone());
        if f.ratio.is_none() && f.name.starts_with("ntt") {
            out.push(BenchReport::ratio_row(
                "primitives",
                "ntt speed-up (naive / fast)",
                s.median_us / f.median_us,
            ));
        }
    }
    Ok(out)
}

/// `(n_i, n_o)` matrix shapes of the matrix benchmark.
pub const MATVEC_SHAPES: [(usize, usize); 4] = [(2048, 1), (1024, 128), (1024, 16), (128, 16)];

/// Published `(#in_rot, #out_rot, #mac)` for the naive and hybrid kernels.
pub fn published_matvec_counts(algo: Algorithm, shape: (usize, usize)) -> Option<(u64, u64, u64)> {
    let row = MATVEC_SHAPES.iter().position(|&s| s == shape)?;
    match algo {
        Algorithm::Naive => Some([(0, 11, 1), (0, 1280, 128), (0, 160, 16), (0, 112, 16)][row]),
        Algorithm::Hybrid => Some([(0, 11, 1), (63, 4, 64), (7, 7, 8), (0, 7, 1)][row]),
        _ => None,
    }
}

/// Naive, diagonal and hybrid products on the benchmark shapes. Counts are
/// asserted against the closed forms (and, for N and H, the published rows).
pub fn bench_matvec(cfg: &BenchConfig) -> Result<Vec<BenchReport>, BenchError> {
    const S: &str = "matvec";
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    let mut r = cfg.rng();
    let ctx = RingContext::new(RingParams::standard())?;
    let p = ctx.p();
    let sk = ctx.keygen(&mut r);
    let mut keys = KeySet::empty(BENCH_W_RELIN);
    let mut out = Vec::new();
    for (n_i, n_o) in MATVEC_SHAPES {
        for algo in [Algorithm::Naive, Algorithm::Diagonal, Algorithm::Hybrid] {
            let what = format!("{n_i}x{n_o} {algo:?}");
            let plan = MatVecPlan::with_default_window(algo, ctx.n(), n_i, n_o)?;
            let closed = plan.count_ops();
            let counted = {
                let ev = CountingEvaluator::new(&ctx, BENCH_W_RELIN);
                let prep = PreparedMatrix::new(&ev, &plan, None)?;
                matvec(
                    &ev,
                    &prep,
                    &vec![ctx.noise.fresh(); ctx.window_count(plan.w_pt)],
                )?;
                ev.count()
            };
            if counted != closed.ops {
                return Err(BenchError::Counts {
                    what,
                    got: counted,
                    want: closed.ops,
                });
            }
            if let Some(row) = published_matvec_counts(algo, (n_i, n_o)) {
                if (closed.ops.perm_hoisted, closed.ops.perm, closed.ops.scmult) != row {
                    return Err(BenchError::Failed(format!(
                        "{what}: counts differ from the published row {row:?}"
                    )));
                }
            }
            keys.extend(&ctx, &sk, plan.required_elems(), &mut r);
            let ev = HeEvaluator::new(&ctx, &keys);
            let w = WeightMatrix::random(n_o, n_i, p, &mut r);
            let v = uniform(p, n_i, &mut r);
            let prep = PreparedMatrix::new(&ev, &plan, Some(&w))?;
            let input = ctx.encrypt_windows(
                &sk,
                &PlaintextVector::new(plan.input_slots(&v)),
                plan.w_pt,
                &mut r,
            );
            let res = matvec(&ev, &prep, &input)?;
            let dec: Vec<Vec<u64>> = res.iter().map(|c| ctx.decrypt(&sk, c).slots).collect();
            // Products whose noise estimate crosses the line are reported but not checked.
            let noise = res.iter().map(|c| c.noise_bits()).fold(0.0, f64::max);
            if noise < ctx.noise.line_bits {
                oracle(plan.decode_output(&dec) == w.apply(&v, p), &what)?;
            }
            let mut rep = BenchReport::new(
                S,
                what,
                cfg.odd_trials(),
                cfg.time(|| drop(matvec(&ev, &prep, &input))),
            );
            rep.counts = Some(closed.ops);
            rep.noise_bits = Some(noise);
            rep.bytes = Some(((input.len() + res.len()) * ciphertext_len(ctx.n())) as u64);
            out.push(rep);
        }
    }
    Ok(out)
}

/// Convolution shapes of the benchmark.
pub fn conv_shapes() -> [ConvSpec; 4] {
    [
        ConvSpec::square(28, 1, 5, 5).with_stride(2),
        ConvSpec::square(16, 128, 1, 128),
        ConvSpec::square(32, 32, 3, 32),
        ConvSpec::square(16, 128, 3, 128),
    ]
}

/// Input- and output-rotation variants on the benchmark shapes.
pub fn bench_conv(cfg: &BenchConfig) -> Result<Vec<BenchReport>, BenchError> {
    const S: &str = "conv";
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    let mut r = cfg.rng();
    let ctx = RingContext::new(RingParams::standard())?;
    let p = ctx.p();
    let sk = ctx.keygen(&mut r);
    let mut keys = KeySet::empty(BENCH_W_RELIN);
    let mut out = Vec::new();
    for spec in conv_shapes() {
        for variant in [Variant::InputRot, Variant::OutputRot] {
            let what = format!("{spec} {variant}");
            let plan = ConvPlan::new(spec, variant, ctx.n(), 10)?;
            let closed = plan.count_ops();
            let counted = {
                let ev = CountingEvaluator::new(&ctx, BENCH_W_RELIN);
                let prep = PreparedConv::new(&ev, &plan, None, false)?;
                conv2d(
                    &ev,
                    &prep,
                    &vec![vec![ctx.noise.fresh(); ctx.window_count(plan.w_pt)]; plan.geom.in_cts()],
                )?;
                ev.count()
            };
            if counted != closed.ops {
                return Err(BenchError::Counts {
                    what,
                    got: counted,
                    want: closed.ops,
                });
            }
            keys.extend(&ctx, &sk, plan.required_elems(), &mut r);
            let ev = HeEvaluator::new(&ctx, &keys);
            let f = Filters::random(spec, p, &mut r);
            let image = uniform(p, spec.input_len(), &mut r);
            let prep = PreparedConv::new(&ev, &plan, Some(&f), true)?;
            let inputs: Vec<Vec<_>> = plan
                .input_slots(&image)
                .into_iter()
                .map(|s| ctx.encrypt_windows(&sk, &PlaintextVector::new(s), plan.w_pt, &mut r))
                .collect();
            let res = conv2d(&ev, &prep, &inputs)?;
            let dec: Vec<Vec<u64>> = res.iter().map(|c| ctx.decrypt(&sk, c).slots).collect();
            oracle(
                plan.decode_output(&dec) == conv::conv2d_reference(&f, &image, p),
                &what,
            )?;
            let mut rep = BenchReport::new(
                S,
                what,
                cfg.odd_trials(),
                cfg.time(|| drop(conv2d(&ev, &prep, &inputs))),
            );
            rep.counts = Some(closed.ops);
            rep.noise_bits = Some(res.iter().map(|c| c.noise_bits()).fold(0.0, f64::max));
            rep.bytes = Some(
                ((inputs.len() * ctx.window_count(plan.w_pt) + res.len()) * ciphertext_len(ctx.n()))
                    as u64,
            );
            out.push(rep);
        }
    }
    Ok(out)
}

/// Values per activation benchmark.
pub const ACT_SIZES: [usize; 2] = [1000, 10000];

/// Square on shares, and garbled ReLU / MaxPool blocks (garble, transfer and
/// evaluate). Bandwidth is the serialized size of everything exchanged.
pub fn bench_activations(cfg: &BenchConfig) -> Result<Vec<BenchReport>, BenchError> {
    const S: &str = "act";
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    let mut r = cfg.rng();
    let ctx = RingContext::new(RingParams::standard())?;
    let (n, p) = (ctx.n(), ctx.p());
    let sk = ctx.keygen(&mut r);
    let target = flood_target(&ctx, 1.0);
    let mut out = Vec::new();
    for size in ACT_SIZES {
        // Square, one ciphertext round trip per n values.
        let x = uniform(p, size, &mut r);
        let s = uniform(p, size, &mut r);
        let c: Vec<u64> = x.iter().zip(&s).map(|(x, s)| (x + p - s) % p).collect();
        let square = |r: &mut ChaCha20Rng| -> Result<Vec<u64>, BenchError> {
            let mut res = Vec::with_capacity(size);
            for (cc, ss) in c.chunks(n).zip(s.chunks(n)) {
                let (a, b) = square_shares(
                    &ctx,
                    &sk,
                    &ShareVector::new(Party::Client, p, cc.to_vec()),
                    &ShareVector::new(Party::Server, p, ss.to_vec()),
                    SQUARE_W_PT,
                    target,
                    r,
                )?;
                res.extend(a.reconstruct(&b));
            }
            Ok(res)
        };
        oracle(
            square(&mut r)? == x.iter().map(|&v| mulmod(v, v, p)).collect::<Vec<_>>(),
            "square",
        )?;
        let seed: u64 = r.gen();
        let mut rep = BenchReport::new(
            S,
            format!("square x{size}"),
            cfg.odd_trials(),
            cfg.time(|| drop(square(&mut ChaCha20Rng::seed_from_u64(seed)))),
        );
        rep.bytes = Some(
            (size.div_ceil(n) * (ctx.window_count(SQUARE_W_PT) + 1) * ciphertext_len(n)) as u64,
        );
        out.push(rep);

        for kind in [Activation::Relu, Activation::MaxPool2x2] {
            let count = size / kind.arity();
            let block = BlockSpec::new(p, kind, count);
            let circuit = block.build()?;
            let k = kind.arity();
            let (s_x, s_y, c_x) = (
                uniform(p, count * k, &mut r),
                uniform(p, count, &mut r),
                uniform(p, count * k, &mut r),
            );
            oracle(
                gc::run_block(&block, &s_x, &s_y, &c_x, &mut r)?
                    == block.eval_plain(&s_x, &s_y, &c_x),
                format!("{kind:?}"),
            )?;
            let (g, _) = garble(&circuit, &mut r);
            let gc_bytes = g.to_bytes().len();
            if gc_bytes != g.size_bytes() {
                return Err(BenchError::Failed(format!(
                    "{kind:?}: serialized {gc_bytes} bytes, accounted {}",
                    g.size_bytes()
                )));
            }
            let l = block.bits();
            // OT: receiver points, two masked labels per client bit; plus the server's labels.
            let ot_bytes =
                count * k * l * (gc::POINT_LEN + 32) + (count * k + count) * l * 16 + gc::POINT_LEN;
            let seed: u64 = r.gen();
            let mut rep = BenchReport::new(
                S,
                format!("{kind:?} x{count}"),
                cfg.odd_trials(),
                cfg.time(|| {
                    drop(gc::run_block(
                        &block,
                        &s_x,
                        &s_y,
                        &c_x,
                        &mut ChaCha20Rng::seed_from_u64(seed),
                    ))
                }),
            );
            rep.bytes = Some((gc_bytes + ot_bytes) as u64);
            out.push(rep);
        }
    }
    Ok(out)
}

/// End-to-end runs of the two desk-scale networks over an in-process pipe.
pub fn bench_net(cfg: &BenchConfig) -> Result<Vec<BenchReport>, BenchError> {
    const S: &str = "net";
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    let mut r = cfg.rng();
    let p = RingParams::standard().p.value();
    let mut out = Vec::new();
    for (name, net) in [
        ("A", Network::desk_a(p, &mut r)),
        ("D", Network::desk_d(p, &mut r)),
    ] {
        let x = crate::protocol::random_image(net.input, &mut r);
        let want = reference::evaluate(&net, &x)?;
        let session = SessionConfig {
            seed: Some(cfg.seed),
            ..Default::default()
        };
        let run = run_local(&net, &x, &session)?;
        oracle(run.client.output == want, format!("network {name}"))?;
        let mut rep = BenchReport::new(
            S,
            format!("network {name} online+offline"),
            cfg.odd_trials(),
            cfg.time(|| drop(run_local(&net, &x, &session))),
        );
        let t = &run.client.transcript;
        rep.bytes = Some(t.bytes(Phase::Offline) + t.bytes(Phase::Online));
        rep.noise_bits = Some(
            run.client
                .measured
                .iter()
                .map(|m| m.bits)
                .fold(0.0, f64::max),
        );
        out.push(rep);
        let mut on = BenchReport::new(S, format!("network {name} online bytes"), 0, (0.0, 0.0));
        on.bytes = Some(t.bytes(Phase::Online));
        out.push(on);
    }
    Ok(out)
}

pub fn json_lines(reports: &[BenchReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("report serializes") + "\n")
        .collect()
}

/// Aligned human-readable table.
pub fn table(reports: &[BenchReport]) -> String {
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
            [
                r.suite.clone(),
                r.name.clone(),
                if r.trials > 0 {
                    format!("{:.1}", r.median_us)
                } else {
                    "-".into()
                },
                if r.trials > 0 {
                    format!("{:.1}", r.mean_us)
                } else {
                    "-".into()
                },
                opt(r.counts.map(|c| {
                    format!(
                        "rot {}+{} dec {} mac {} add {}",
                        c.perm_hoisted, c.perm, c.decomp, c.scmult, c.add
                    )
                })),
                opt(r
                    .noise_bits
                    .map(|b| format!("{b:.1}"))
                    .or(r.ratio.map(|x| format!("x{x:.2}")))),
                opt(r.bytes.map(|b| b.to_string())),
            ]
        })
        .collect();
    let header = [
        "suite",
        "operation",
        "median µs",
        "mean µs",
        "counts",
        "noise/ratio",
        "bytes",
    ]
    .map(String::from);
    let mut width = header.clone().map(|h| h.chars().count());
    for row in &rows {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let fmt = |row: &[String; 7]| {
        let cells: Vec<String> = row
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        cells.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = fmt(&header);
    s += &(width
        .iter()
        .map(|w| "-".repeat(*w))
        .collect::<Vec<_>>()
        .join("  ")
        + "\n");
    for row in &rows {
        s += &fmt(row);
    }
    s
}
