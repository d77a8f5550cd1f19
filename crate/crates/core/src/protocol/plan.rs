//! Lowering a network architecture to protocol steps. Both parties compile
//! the same (weight-free) architecture, so they agree on every layout,
//! message and key without further negotiation.

use std::collections::BTreeSet;

use super::{Layer, Network, ProtocolError, Shape};
use crate::conv::{choose_variant, ConvPlan, DEFAULT_AUTO_DECOMP_RATIO};
use crate::gc::{Activation, BlockSpec};
use crate::linalg::{Algorithm, MatVecPlan};
use crate::pahe::GroupElem;

/// Plaintext window width for convolutions and the square protocol.
pub const CONV_W_PT: u32 = 10;
pub const SQUARE_W_PT: u32 = 10;

#[derive(Debug, Clone)]
pub enum Step {
    /// Fully connected layer, padded to powers of two.
    Fc {
        layer: usize,
        plan: MatVecPlan,
        n_i: usize,
        n_o: usize,
    },
    Conv {
        layer: usize,
        plan: ConvPlan,
    },
    /// One garbled block covering one or two activation layers.
    /// `gather[k]` is the index into the incoming activation vector of the
    /// `k`-th circuit input.
    Act {
        layers: Vec<usize>,
        block: BlockSpec,
        gather: Vec<usize>,
    },
    /// Elementwise square on shares.
    Square {
        layer: usize,
        len: usize,
    },
}

impl Step {
    pub fn is_linear(&self) -> bool {
        matches!(self, Step::Fc { .. } | Step::Conv { .. })
    }

    pub fn name(&self) -> String {
        match self {
            Step::Fc { n_i, n_o, plan, .. } => format!("fc {n_i}->{n_o} ({:?})", plan.algorithm),
            Step::Conv { plan, .. } => {
                let s = &plan.spec;
                format!(
                    "conv {}x{}x{} f{}x{} -> {} ({})",
                    s.c_i, s.h_i, s.w_i, s.f_h, s.f_w, s.c_o, plan.variant
                )
            }
            Step::Act { block, .. } => format!("{:?} x{}", block.kind, block.count),
            Step::Square { len, .. } => format!("square x{len}"),
        }
    }
}

/// The step list for one network at ring degree `n`.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub n: usize,
    pub p: u64,
    pub input_len: usize,
    pub steps: Vec<Step>,
}

fn maxpool_gather(shape: Shape) -> Vec<usize> {
    let (h, w) = (shape.h / 2, shape.w / 2);
    let mut g = Vec::with_capacity(4 * shape.c * h * w);
    for c in 0..shape.c {
        for y in 0..h {
            for x in 0..w {
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    g.push((c * shape.h + 2 * y + dy) * shape.w + 2 * x + dx);
                }
            }
        }
    }
    g
}

/// Plan for an `n_o × n_i` product after padding both sides to powers of two.
pub fn fc_plan(n: usize, n_i: usize, n_o: usize) -> Result<MatVecPlan, ProtocolError> {
    let (pi, po) = (n_i.next_power_of_two(), n_o.next_power_of_two());
    let algo = if po <= pi {
        Algorithm::Hybrid
    } else {
        Algorithm::Diagonal
    };
    Ok(MatVecPlan::with_default_window(algo, n, pi, po)?)
}

impl Compiled {
    pub fn new(net: &Network, n: usize) -> Result<Self, ProtocolError> {
        let shapes = net.shapes()?;
        let p = net.modulus;
        let mut steps = Vec::new();
        let mut i = 0;
        while i < net.layers.len() {
            let before = if i == 0 { net.input } else { shapes[i - 1] };
            let step = match &net.layers[i] {
                Layer::Fc { n_i, n_o, .. } => Step::Fc {
                    layer: i,
                    plan: fc_plan(n, *n_i, *n_o)?,
                    n_i: *n_i,
                    n_o: *n_o,
                },
                Layer::Conv { spec, .. } => {
                    let variant = choose_variant(spec, n, DEFAULT_AUTO_DECOMP_RATIO)?;
                    Step::Conv {
                        layer: i,
                        plan: ConvPlan::new(*spec, variant, n, CONV_W_PT)?,
                    }
                }
                Layer::Square => Step::Square {
                    layer: i,
                    len: before.len(),
                },
                Layer::Relu { shift } => {
                    // ReLU followed by pooling collapses into one block.
                    if matches!(net.layers.get(i + 1), Some(Layer::MaxPool)) {
                        let gather = maxpool_gather(before);
                        let block = BlockSpec::new(p, Activation::ReluMaxPool2x2, gather.len() / 4)
                            .with_shift(*shift);
                        i += 1;
                        Step::Act {
                            layers: vec![i - 1, i],
                            block,
                            gather,
                        }
                    } else {
                        Step::Act {
                            layers: vec![i],
                            block: BlockSpec::new(p, Activation::Relu, before.len())
                                .with_shift(*shift),
                            gather: (0..before.len()).collect(),
                        }
                    }
                }
                Layer::MaxPool => {
                    let gather = maxpool_gather(before);
                    if let Some(Layer::Relu { shift }) = net.layers.get(i + 1) {
                        let block = BlockSpec::new(p, Activation::ReluMaxPool2x2, gather.len() / 4)
                            .with_shift(*shift);
                        i += 1;
                        Step::Act {
                            layers: vec![i - 1, i],
                            block,
                            gather,
                        }
                    } else {
                        Step::Act {
                            layers: vec![i],
                            block: BlockSpec::new(p, Activation::MaxPool2x2, gather.len() / 4),
                            gather,
                        }
                    }
                }
            };
            if let Step::Act { block, .. } = &step {
                block.check()?;
            }
            steps.push(step);
            i += 1;
        }
        Ok(Self {
            n,
            p,
            input_len: net.input.len(),
            steps,
        })
    }

    /// Every permutation key the server needs.
    pub fn required_elems(&self) -> Vec<GroupElem> {
        let mut set = BTreeSet::new();
        for s in &self.steps {
            match s {
                Step::Fc { plan, .. } => set.extend(plan.required_elems()),
                Step::Conv { plan, .. } => set.extend(plan.required_elems()),
                _ => {}
            }
        }
        set.into_iter().filter(|e| !e.is_identity()).collect()
    }

    pub fn act_steps(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Act { .. }))
            .count()
    }

    /// Length of the activation vector entering step `i`.
    pub fn len_before(&self, i: usize) -> usize {
        if i == 0 {
            self.input_len
        } else {
            self.len_after(i - 1)
        }
    }

    pub fn len_after(&self, i: usize) -> usize {
        match &self.steps[i] {
            Step::Fc { n_o, .. } => *n_o,
            Step::Conv { plan, .. } => plan.spec.output_len(),
            Step::Act { block, .. } => block.count,
            Step::Square { len, .. } => *len,
        }
    }
}
