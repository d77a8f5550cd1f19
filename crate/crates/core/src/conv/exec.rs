use rand::RngCore;

use super::{ConvError, ConvPlan, Filters, Variant};
use crate::pahe::{Evaluator, PaheError};
use crate::par;

/// A convolution plan with its filters; plaintexts are encoded up front
/// (`eager`) or per output group while the kernel runs, which bounds memory
/// on wide layers.
pub struct PreparedConv<P> {
    pub plan: ConvPlan,
    filters: Option<Filters>,
    pts: Option<Vec<Vec<P>>>,
    bias: Option<Vec<Vec<u64>>>,
}

impl<P: Send + Sync> PreparedConv<P> {
    /// `filters = None` uses zero filters (enough for counting).
    pub fn new<E: Evaluator<Pt = P>>(
        ev: &E,
        plan: &ConvPlan,
        filters: Option<&Filters>,
        eager: bool,
    ) -> Result<Self, ConvError> {
        if let Some(f) = filters {
            if f.spec != plan.spec {
                return Err(ConvError::Spec(format!(
                    "filters for {} used with plan for {}",
                    f.spec, plan.spec
                )));
            }
        }
        let bias = filters.and_then(|f| f.bias.as_ref()).map(|b| {
            let per_pixel = plan.geom.out_h * plan.geom.out_w;
            let mut v = vec![vec![0u64; plan.n]; plan.geom.out_cts()];
            for (k, (c, s)) in plan.output_layout().into_iter().enumerate() {
                v[c][s] = b[k / per_pixel];
            }
            v
        });
        let mut prep = Self {
            plan: plan.clone(),
            filters: filters.cloned(),
            pts: None,
            bias,
        };
        if eager {
            prep.pts = Some(
                (0..plan.geom.out_cts())
                    .map(|go| prep.encode_group(ev, go))
                    .collect(),
            );
        }
        Ok(prep)
    }

    fn per_group(&self) -> usize {
        self.plan.geom.in_cts() * self.plan.chan_elems.len() * self.plan.geom.taps.len()
    }

    fn encode_group<E: Evaluator<Pt = P>>(&self, ev: &E, go: usize) -> Vec<P> {
        let plan = &self.plan;
        let (gs, ts) = (plan.chan_elems.len(), plan.geom.taps.len());
        par::map_range(self.per_group(), |idx| {
            let (j, g, t) = (idx / (gs * ts), (idx / ts) % gs, idx % ts);
            ev.encode(plan.w_pt, || match &self.filters {
                Some(f) => plan.plaintext(f, go, j, g, t),
                None => vec![0; plan.n],
            })
        })
    }
}

fn collect<T>(v: Vec<Result<T, PaheError>>) -> Result<Vec<T>, ConvError> {
    v.into_iter().map(|r| r.map_err(ConvError::from)).collect()
}

/// Convolve encrypted input bundles (one per input ciphertext of the plan,
/// each holding its window ciphertexts). Returns the output ciphertexts.
pub fn conv2d<E: Evaluator>(
    ev: &E,
    m: &PreparedConv<E::Pt>,
    inputs: &[Vec<E::Ct>],
) -> Result<Vec<E::Ct>, ConvError> {
    let plan = &m.plan;
    let g = &plan.geom;
    if inputs.len() != g.in_cts() {
        return Err(ConvError::Input {
            expected: g.in_cts(),
            got: inputs.len(),
        });
    }
    let (gs, ts) = (plan.chan_elems.len(), g.taps.len());
    let hs = par::map(inputs, |b| ev.decomp(b));
    let taps: Vec<_> = (0..ts).map(|t| plan.tap_elem(t)).collect();
    let output_rot = plan.variant == Variant::OutputRot;
    // Input rotations: indexed (j, g, t), or (j, t) when outputs are rotated.
    let rotated = if output_rot {
        collect(par::map_range(hs.len() * ts, |i| {
            ev.auto(&hs[i / ts], taps[i % ts])
        }))?
    } else {
        collect(par::map_range(hs.len() * gs * ts, |i| {
            let (j, gi, t) = (i / (gs * ts), (i / ts) % gs, i % ts);
            ev.auto(&hs[j], plan.chan_elems[gi].then(taps[t], plan.n))
        }))?
    };
    drop(hs);

    let mut outs = Vec::with_capacity(g.out_cts());
    for go in 0..g.out_cts() {
        let lazy;
        let pts = match &m.pts {
            Some(all) => &all[go],
            None => {
                lazy = m.encode_group(ev, go);
                &lazy
            }
        };
        let mut acc = ev.zero();
        if output_rot {
            let moved = collect(par::map_range(g.in_cts() * gs, |jg| {
                let (j, gi) = (jg / gs, jg % gs);
                let mut partial = ev.zero();
                for t in 0..ts {
                    let prod = ev.scmult(&rotated[j * ts + t], &pts[jg * ts + t])?;
                    partial = ev.accumulate(&partial, &prod);
                }
                ev.perm(&partial, plan.chan_elems[gi])
            }))?;
            for c in &moved {
                acc = ev.accumulate(&acc, c);
            }
        } else {
            let products = collect(par::map_range(pts.len(), |i| {
                ev.scmult(&rotated[i], &pts[i])
            }))?;
            for p in &products {
                acc = ev.accumulate(&acc, p);
            }
        }
        if let Some(b) = &m.bias {
            acc = ev.add_plain(&acc, || b[go].clone());
        }
        outs.push(acc);
    }
    Ok(outs)
}

/// Add uniform values to every slot outside the output region, hiding the
/// wrap-around sums of the padded variant (and anything else there).
pub fn hide_periphery<E: Evaluator>(
    ev: &E,
    plan: &ConvPlan,
    outs: &[E::Ct],
    p: u64,
    rng: &mut impl RngCore,
) -> Vec<E::Ct> {
    let masks = plan.periphery_mask(p, rng);
    outs.iter()
        .zip(masks)
        .map(|(c, m)| ev.add_plain(c, || m))
        .collect()
}
