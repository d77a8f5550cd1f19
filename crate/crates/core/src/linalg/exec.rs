use rand::RngCore;

use super::{Algorithm, LinalgError, MatVecPlan, WeightMatrix};
use crate::pahe::{Evaluator, PaheError};
use crate::par;

/// Window width that puts any plaintext in a single window.
const SINGLE_WINDOW: u32 = 32;

/// A plan with its plaintexts encoded for one evaluator backend.
pub struct PreparedMatrix<P> {
    pub plan: MatVecPlan,
    pts: Vec<P>,
    /// Output-packed only: the unit vector at slot 0.
    mask: Option<P>,
    /// Bias slot vector per output ciphertext.
    bias: Option<Vec<Vec<u64>>>,
}

impl<P: Send + Sync> PreparedMatrix<P> {
    /// Encode `w` (or zeros when `None`, which is enough for counting).
    pub fn new<E: Evaluator<Pt = P>>(
        ev: &E,
        plan: &MatVecPlan,
        w: Option<&WeightMatrix>,
    ) -> Result<Self, LinalgError> {
        let slots = match w {
            Some(w) => plan.encode(w)?.slots,
            None => vec![Vec::new(); plan.packs.iter().map(|p| p.inputs.len()).sum()],
        };
        let n = plan.n;
        let pts = par::map(&slots, |s| {
            ev.encode(
                plan.w_pt,
                || if s.is_empty() { vec![0; n] } else { s.clone() },
            )
        });
        let mask = (plan.algorithm == Algorithm::OutputPacked).then(|| {
            ev.encode(SINGLE_WINDOW, || {
                let mut e = vec![0; n];
                e[0] = 1;
                e
            })
        });
        let bias = w.and_then(|w| w.bias.as_ref()).map(|b| {
            let mut v = vec![vec![0u64; n]; plan.output_cts()];
            for (o, (c, s)) in plan.output_layout().into_iter().enumerate() {
                v[c][s] = b[o];
            }
            v
        });
        Ok(Self {
            plan: plan.clone(),
            pts,
            mask,
            bias,
        })
    }
}

fn collect<T>(v: Vec<Result<T, PaheError>>) -> Result<Vec<T>, LinalgError> {
    v.into_iter()
        .map(|r| r.map_err(LinalgError::from))
        .collect()
}

/// `W·v (+ b)` on an encrypted input bundle (the window ciphertexts of the
/// replicated input). Returns the output ciphertexts of the plan.
pub fn matvec<E: Evaluator>(
    ev: &E,
    m: &PreparedMatrix<E::Pt>,
    input: &[E::Ct],
) -> Result<Vec<E::Ct>, LinalgError> {
    let plan = &m.plan;
    if input.is_empty() {
        return Err(LinalgError::Input {
            expected: 1,
            got: 0,
        });
    }
    let mut outs = match plan.algorithm {
        Algorithm::Diagonal | Algorithm::Hybrid => {
            let pack = &plan.packs[0];
            let h = ev.decomp(input);
            let products = collect(par::map_range(pack.inputs.len(), |k| {
                let rotated = ev.auto(&h, pack.inputs[k])?;
                ev.scmult(&rotated, &m.pts[k])
            }))?;
            let mut acc = ev.zero();
            for p in &products {
                acc = ev.accumulate(&acc, p);
            }
            for &a in &pack.shifts {
                acc = ev.add(&acc, &ev.perm(&acc, a)?);
            }
            vec![acc]
        }
        Algorithm::Naive | Algorithm::InputPacked | Algorithm::OutputPacked => {
            let per_pack = collect(par::map_range(plan.packs.len(), |j| {
                let mut acc = ev.scmult(input, &m.pts[j])?;
                for &a in &plan.packs[j].shifts {
                    acc = ev.add(&acc, &ev.perm(&acc, a)?);
                }
                Ok(acc)
            }))?;
            if plan.algorithm == Algorithm::OutputPacked {
                let mask = m.mask.as_ref().expect("output-packed plan has a mask");
                let moved = collect(par::map_range(per_pack.len(), |i| {
                    let masked = ev.scmult(std::slice::from_ref(&per_pack[i]), mask)?;
                    ev.perm(&masked, plan.packing_elem(i))
                }))?;
                let mut acc = ev.zero();
                for c in &moved {
                    acc = ev.accumulate(&acc, c);
                }
                vec![acc]
            } else {
                per_pack
            }
        }
    };
    if let Some(bias) = &m.bias {
        for (ct, b) in outs.iter_mut().zip(bias) {
            *ct = ev.add_plain(ct, || b.clone());
        }
    }
    Ok(outs)
}

/// Add uniform values to every slot that does not hold a result, so the
/// key holder learns nothing about partial sums.
pub fn hide_garbage<E: Evaluator>(
    ev: &E,
    plan: &MatVecPlan,
    outs: &[E::Ct],
    p: u64,
    rng: &mut impl RngCore,
) -> Vec<E::Ct> {
    let masks = plan.garbage_mask(p, rng);
    outs.iter()
        .zip(masks)
        .map(|(c, m)| ev.add_plain(c, || m))
        .collect()
}
