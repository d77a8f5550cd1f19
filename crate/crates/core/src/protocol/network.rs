//! Network descriptors: layer list, shapes and the JSON file format.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::conv::ConvSpec;

pub const FORMAT_VERSION: u32 = 1;

/// Activation tensor shape `[c][h][w]`; vectors are `(n, 1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn new(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w }
    }

    pub fn vector(n: usize) -> Self {
        Self { c: n, h: 1, w: 1 }
    }

    pub fn len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    /// `y = W·x + b`, `W` row-major `n_o × n_i`.
    Fc {
        n_i: usize,
        n_o: usize,
        #[serde(default, with = "b64", skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<u64>>,
        #[serde(default, with = "b64", skip_serializing_if = "Option::is_none")]
        bias: Option<Vec<u64>>,
    },
    /// Filters `[c_o][c_i][f_h][f_w]`.
    Conv {
        spec: ConvSpec,
        #[serde(default, with = "b64", skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<u64>>,
        #[serde(default, with = "b64", skip_serializing_if = "Option::is_none")]
        bias: Option<Vec<u64>>,
    },
    /// Signed ReLU followed by an arithmetic right shift (fixed-point rescale).
    Relu {
        #[serde(default)]
        shift: u32,
    },
    /// 2×2 windows, stride 2; odd trailing rows/columns are dropped.
    MaxPool,
    Square,
}

impl Layer {
    pub fn is_linear(&self) -> bool {
        matches!(self, Layer::Fc { .. } | Layer::Conv { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Fc { .. } => "fc",
            Layer::Conv { .. } => "conv",
            Layer::Relu { .. } => "relu",
            Layer::MaxPool => "max_pool",
            Layer::Square => "square",
        }
    }
}

/// A quantized network over `Z_p`. Weights are stored as residues.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub version: u32,
    pub modulus: u64,
    pub input: Shape,
    /// Fractional bits of the input encoding (informational for the codec).
    #[serde(default)]
    pub frac_bits: u32,
    pub layers: Vec<Layer>,
}

impl Network {
    /// Check dimensions and weights; returns the shape after every layer.
    pub fn shapes(&self) -> Result<Vec<Shape>, ProtocolError> {
        let bad = |i: usize, msg: String| ProtocolError::Network(format!("layer {i}: {msg}"));
        if self.version != FORMAT_VERSION {
            return Err(ProtocolError::Network(format!(
                "unsupported format version {}",
                self.version
            )));
        }
        if self.layers.is_empty() || self.input.is_empty() {
            return Err(ProtocolError::Network("empty network".into()));
        }
        let p = self.modulus;
        let check =
            |i: usize, v: &Option<Vec<u64>>, len: usize, what: &str| -> Result<(), ProtocolError> {
                match v {
                    Some(v) if v.len() != len => Err(bad(
                        i,
                        format!("{what} has {} entries, expected {len}", v.len()),
                    )),
                    Some(v) if v.iter().any(|&x| x >= p) => {
                        Err(bad(i, format!("{what} entry not reduced mod {p}")))
                    }
                    _ => Ok(()),
                }
            };
        let mut shape = self.input;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match layer {
                Layer::Fc {
                    n_i,
                    n_o,
                    weights,
                    bias,
                } => {
                    if *n_i != shape.len() {
                        return Err(bad(
                            i,
                            format!("expects {n_i} inputs, previous layer gives {}", shape.len()),
                        ));
                    }
                    check(i, weights, n_i * n_o, "weights")?;
                    check(i, bias, *n_o, "bias")?;
                    Shape::vector(*n_o)
                }
                Layer::Conv {
                    spec,
                    weights,
                    bias,
                } => {
                    if (spec.c_i, spec.h_i, spec.w_i) != (shape.c, shape.h, shape.w) {
                        return Err(bad(
                            i,
                            format!(
                                "expects {}x{}x{}, previous layer gives {shape:?}",
                                spec.c_i, spec.h_i, spec.w_i
                            ),
                        ));
                    }
                    check(
                        i,
                        weights,
                        spec.c_o * spec.c_i * spec.f_h * spec.f_w,
                        "filters",
                    )?;
                    check(i, bias, spec.c_o, "bias")?;
                    let (w, h) = spec.output_dims();
                    Shape::new(spec.c_o, h, w)
                }
                Layer::MaxPool => {
                    if shape.h < 2 || shape.w < 2 {
                        return Err(bad(i, format!("cannot pool {shape:?}")));
                    }
                    Shape::new(shape.c, shape.h / 2, shape.w / 2)
                }
                Layer::Relu { .. } | Layer::Square => shape,
            };
            out.push(shape);
        }
        Ok(out)
    }

    pub fn output_len(&self) -> Result<usize, ProtocolError> {
        Ok(self.shapes()?.last().expect("non-empty").len())
    }

    /// The same network without any weights: what the client is told.
    pub fn architecture(&self) -> Network {
        let mut a = self.clone();
        for l in &mut a.layers {
            match l {
                Layer::Fc { weights, bias, .. } | Layer::Conv { weights, bias, .. } => {
                    *weights = None;
                    *bias = None;
                }
                _ => {}
            }
        }
        a
    }

    pub fn has_weights(&self) -> bool {
        self.layers.iter().all(|l| match l {
            Layer::Fc { weights, .. } | Layer::Conv { weights, .. } => weights.is_some(),
            _ => true,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ProtocolError> {
        let net: Network =
            serde_json::from_str(s).map_err(|e| ProtocolError::Network(e.to_string()))?;
        net.shapes()?;
        Ok(net)
    }

    /// Single `n × n` identity layer.
    pub fn identity(n: usize, p: u64) -> Self {
        let mut w = vec![0u64; n * n];
        for i in 0..n {
            w[i * n + i] = 1;
        }
        Self {
            version: FORMAT_VERSION,
            modulus: p,
            input: Shape::vector(n),
            frac_bits: 0,
            layers: vec![Layer::Fc {
                n_i: n,
                n_o: n,
                weights: Some(w),
                bias: None,
            }],
        }
    }

    /// Three fully connected layers with square activations on a 28×28 input
    /// (784 → 128 → 128 → 10).
    pub fn desk_a(p: u64, rng: &mut impl RngCore) -> Self {
        let fc = |n_i: usize, n_o: usize, r: &mut dyn RngCore| Layer::Fc {
            n_i,
            n_o,
            weights: Some(small(n_i * n_o, 2, p, r)),
            bias: Some(small(n_o, 8, p, r)),
        };
        let layers = vec![
            fc(784, 128, rng),
            Layer::Square,
            fc(128, 128, rng),
            Layer::Square,
            fc(128, 10, rng),
        ];
        Self {
            version: FORMAT_VERSION,
            modulus: p,
            input: Shape::new(1, 28, 28),
            frac_bits: 0,
            layers,
        }
    }

    /// Two 5×5 convolutions with ReLU and max pooling, then two fully
    /// connected layers, on a 28×28 input (channels reduced for desk scale).
    pub fn desk_d(p: u64, rng: &mut impl RngCore) -> Self {
        let conv = |c_i: usize, size: usize, c_o: usize, r: &mut dyn RngCore| {
            let spec = ConvSpec::square(size, c_i, 5, c_o);
            Layer::Conv {
                spec,
                weights: Some(small(c_o * c_i * 25, 8, p, r)),
                bias: Some(small(c_o, 16, p, r)),
            }
        };
        let layers = vec![
            conv(1, 28, 2, rng),
            Layer::Relu { shift: 4 },
            Layer::MaxPool,
            conv(2, 14, 2, rng),
            Layer::Relu { shift: 6 },
            Layer::MaxPool,
            Layer::Fc {
                n_i: 98,
                n_o: 16,
                weights: Some(small(98 * 16, 4, p, rng)),
                bias: Some(small(16, 16, p, rng)),
            },
            Layer::Relu { shift: 4 },
            Layer::Fc {
                n_i: 16,
                n_o: 10,
                weights: Some(small(160, 8, p, rng)),
                bias: Some(small(10, 16, p, rng)),
            },
        ];
        Self {
            version: FORMAT_VERSION,
            modulus: p,
            input: Shape::new(1, 28, 28),
            frac_bits: 4,
            layers,
        }
    }
}

/// Signed values in `[-bound, bound)` as residues mod `p`.
fn small(len: usize, bound: i64, p: u64, rng: &mut dyn RngCore) -> Vec<u64> {
    (0..len)
        .map(|_| rng.gen_range(-bound..bound).rem_euclid(p as i64) as u64)
        .collect()
}

/// A random MNIST-shaped input (pixels in `[0, 16)`).
pub fn random_image(shape: Shape, rng: &mut impl RngCore) -> Vec<u64> {
    (0..shape.len()).map(|_| rng.gen_range(0..16)).collect()
}

/// `Option<Vec<u64>>` as base64 of little-endian `u32`s.
mod b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u64>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(v) => {
                let mut bytes = Vec::with_capacity(4 * v.len());
                for &x in v {
                    let x = u32::try_from(x).map_err(serde::ser::Error::custom)?;
                    bytes.extend(x.to_le_bytes());
                }
                s.serialize_str(&STANDARD.encode(bytes))
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u64>>, D::Error> {
        let Some(s) = Option::<String>::deserialize(d)? else {
            return Ok(None);
        };
        let bytes = STANDARD.decode(s.as_bytes()).map_err(D::Error::custom)?;
        if bytes.len() % 4 != 0 {
            return Err(D::Error::custom(
                "weight blob is not a whole number of u32 values",
            ));
        }
        Ok(Some(
            bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as u64)
                .collect(),
        ))
    }
}
