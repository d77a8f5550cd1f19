//! Homomorphic 2-D convolutions.
//!
//! Every convolution is first rewritten as a stride-1 convolution on a
//! *grid*: a stride `s` splits each input channel into `s_h·s_w` phase
//! channels (`x[c][s·Y + a][s·X + b]`), and the filter becomes a set of
//! taps `(dy, dx)` on those phases. A tap is a slot rotation by
//! `dy·grid_w + dx`; products that would read across a grid edge are
//! removed by zeros in the plaintext ("punctured" plaintexts).
//!
//! Channels are packed `c_n` per ciphertext in blocks of `n / c_n` slots
//! (`n / 2` when `c_n = 1`, so a channel never straddles the two slot
//! rows). Moving whole blocks uses the block-aligned part of the group
//! `C_{n/2} × C_2`, which acts on block positions as `C_{c_n/2} × C_2`.

mod exec;

use std::fmt;

use rand::{Rng, RngCore};

use crate::pahe::{GroupElem, OpCount, PaheError};

pub use exec::{conv2d, hide_periphery, PreparedConv};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConvError {
    #[error("invalid convolution: {0}")]
    Spec(String),
    #[error("image does not fit: {0}")]
    TooLarge(String),
    #[error("channel packing: {0}")]
    Packing(String),
    #[error("expected {expected} input ciphertexts, got {got}")]
    Input { expected: usize, got: usize },
    #[error(transparent)]
    Pahe(#[from] PaheError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ConvSpec {
    pub w_i: usize,
    pub h_i: usize,
    pub c_i: usize,
    pub f_w: usize,
    pub f_h: usize,
    pub c_o: usize,
    pub s_w: usize,
    pub s_h: usize,
    pub padding: Padding,
}

impl ConvSpec {
    /// Square image and filter, stride 1, same padding.
    pub fn square(size: usize, c_i: usize, f: usize, c_o: usize) -> Self {
        Self {
            w_i: size,
            h_i: size,
            c_i,
            f_w: f,
            f_h: f,
            c_o,
            s_w: 1,
            s_h: 1,
            padding: Padding::Same,
        }
    }

    pub fn with_stride(mut self, s: usize) -> Self {
        self.s_w = s;
        self.s_h = s;
        self
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    fn check(&self) -> Result<(), ConvError> {
        let dims = [
            self.w_i, self.h_i, self.c_i, self.f_w, self.f_h, self.c_o, self.s_w, self.s_h,
        ];
        if dims.contains(&0) {
            return Err(ConvError::Spec(format!("zero dimension in {self:?}")));
        }
        match self.padding {
            Padding::Same if self.f_w.is_multiple_of(2) || self.f_h.is_multiple_of(2) => {
                Err(ConvError::Spec(format!(
                    "same padding needs odd filters, got {}x{}",
                    self.f_w, self.f_h
                )))
            }
            Padding::Valid if self.f_w > self.w_i || self.f_h > self.h_i => {
                Err(ConvError::Spec("filter larger than image".into()))
            }
            _ => Ok(()),
        }
    }

    /// `(w_o, h_o)`.
    pub fn output_dims(&self) -> (usize, usize) {
        match self.padding {
            Padding::Same => (self.w_i / self.s_w, self.h_i / self.s_h),
            Padding::Valid => (
                (self.w_i - self.f_w) / self.s_w + 1,
                (self.h_i - self.f_h) / self.s_h + 1,
            ),
        }
    }

    fn pads(&self) -> (usize, usize) {
        match self.padding {
            Padding::Same => ((self.f_h - 1) / 2, (self.f_w - 1) / 2),
            Padding::Valid => (0, 0),
        }
    }

    pub fn input_len(&self) -> usize {
        self.c_i * self.h_i * self.w_i
    }

    pub fn output_len(&self) -> usize {
        let (w, h) = self.output_dims();
        self.c_o * h * w
    }
}

impl fmt::Display for ConvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}x{}, {}) * ({}x{}, {})",
            self.w_i, self.h_i, self.c_i, self.f_w, self.f_h, self.c_o
        )?;
        if self.s_w > 1 || self.s_h > 1 {
            write!(f, " stride {}x{}", self.s_w, self.s_h)?;
        }
        if self.padding == Padding::Valid {
            write!(f, " valid")?;
        }
        Ok(())
    }
}

/// Filter bank `W[c_o][c_i][f_h][f_w]` over `Z_p`, optional per-channel bias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filters {
    pub spec: ConvSpec,
    pub data: Vec<u64>,
    pub bias: Option<Vec<u64>>,
}

impl Filters {
    pub fn new(spec: ConvSpec, data: Vec<u64>) -> Result<Self, ConvError> {
        let len = spec.c_o * spec.c_i * spec.f_h * spec.f_w;
        if data.len() != len {
            return Err(ConvError::Spec(format!(
                "{} filter weights, expected {len}",
                data.len()
            )));
        }
        Ok(Self {
            spec,
            data,
            bias: None,
        })
    }

    pub fn with_bias(mut self, bias: Vec<u64>) -> Result<Self, ConvError> {
        if bias.len() != self.spec.c_o {
            return Err(ConvError::Spec(format!(
                "bias has {} entries, expected {}",
                bias.len(),
                self.spec.c_o
            )));
        }
        self.bias = Some(bias);
        Ok(self)
    }

    pub fn random(spec: ConvSpec, p: u64, rng: &mut impl RngCore) -> Self {
        let len = spec.c_o * spec.c_i * spec.f_h * spec.f_w;
        Self {
            spec,
            data: (0..len).map(|_| rng.gen_range(0..p)).collect(),
            bias: None,
        }
    }

    #[inline]
    pub fn get(&self, co: usize, ci: usize, ky: usize, kx: usize) -> u64 {
        let s = &self.spec;
        self.data[((co * s.c_i + ci) * s.f_h + ky) * s.f_w + kx]
    }
}

/// Plaintext multi-channel convolution mod `p`, output `[c_o][h_o][w_o]`.
pub fn conv2d_reference(filters: &Filters, image: &[u64], p: u64) -> Vec<u64> {
    let s = &filters.spec;
    assert_eq!(image.len(), s.input_len(), "image size");
    let (w_o, h_o) = s.output_dims();
    let (ph, pw) = s.pads();
    let mut out = vec![0u64; s.c_o * h_o * w_o];
    for co in 0..s.c_o {
        for y in 0..h_o {
            for x in 0..w_o {
                let mut acc: u128 = filters.bias.as_ref().map_or(0, |b| b[co] as u128);
                for ci in 0..s.c_i {
                    for ky in 0..s.f_h {
                        let iy = (s.s_h * y + ky) as isize - ph as isize;
                        if iy < 0 || iy >= s.h_i as isize {
                            continue;
                        }
                        for kx in 0..s.f_w {
                            let ix = (s.s_w * x + kx) as isize - pw as isize;
                            if ix < 0 || ix >= s.w_i as isize {
                                continue;
                            }
                            let v = image[(ci * s.h_i + iy as usize) * s.w_i + ix as usize];
                            acc += filters.get(co, ci, ky, kx) as u128 * v as u128;
                        }
                    }
                }
                out[(co * h_o + y) * w_o + x] = (acc % p as u128) as u64;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Zero-padded single channel, constant plaintexts.
    PaddedSiso,
    /// Tightly packed single channel, punctured plaintexts.
    PackedSiso,
    /// One channel per ciphertext.
    OnePerCt,
    /// Channel packing, all rotations on the inputs.
    InputRot,
    /// Channel packing, channel alignment by rotating partial outputs.
    OutputRot,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PaddedSiso => "padded_siso",
            Self::PackedSiso => "packed_siso",
            Self::OnePerCt => "one_per_ct",
            Self::InputRot => "chan_in_rot",
            Self::OutputRot => "chan_out_rot",
        })
    }
}

/// Cost of one hoisted automorphism relative to one decomposition
/// (35 µs vs 231 µs in the reference timings).
pub const DEFAULT_AUTO_DECOMP_RATIO: f64 = 35.0 / 231.0;

/// Pick output rotations iff
/// `(f_w·f_h − 1)·(c_n − 1) > (c_n − 1)·(c_o/c_n)·ratio`; ties go to input
/// rotations.
pub fn choose_variant(spec: &ConvSpec, n: usize, ratio: f64) -> Result<Variant, ConvError> {
    let g = Geometry::new(spec, n, Variant::InputRot, None)?;
    let lhs = (g.taps.len() as f64 - 1.0) * (g.c_n as f64 - 1.0);
    let rhs = (g.c_n as f64 - 1.0) * (g.c_out / g.c_n) as f64 * ratio;
    Ok(if lhs > rhs {
        Variant::OutputRot
    } else {
        Variant::InputRot
    })
}

/// The stride-1 problem a convolution is reduced to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geometry {
    pub grid_h: usize,
    pub grid_w: usize,
    /// Output pixels occupy grid rows `out_y0..out_y0 + out_h`, same for x.
    pub out_h: usize,
    pub out_w: usize,
    pub out_y0: usize,
    pub out_x0: usize,
    /// Offset of input pixel `(0, 0)` inside the grid (padded layout only).
    pub in_y0: usize,
    pub in_x0: usize,
    /// Phase channels: `c_i·s_h·s_w`.
    pub c_in: usize,
    pub c_out: usize,
    pub taps: Vec<(isize, isize)>,
    pub c_n: usize,
    pub block: usize,
}

impl Geometry {
    pub fn new(
        spec: &ConvSpec,
        n: usize,
        variant: Variant,
        c_n: Option<usize>,
    ) -> Result<Self, ConvError> {
        spec.check()?;
        let (w_o, h_o) = spec.output_dims();
        let (ph, pw) = spec.pads();
        if variant == Variant::PaddedSiso {
            if spec.c_i != 1
                || spec.c_o != 1
                || spec.s_w != 1
                || spec.s_h != 1
                || spec.padding != Padding::Same
            {
                return Err(ConvError::Spec(
                    "padded SISO handles one channel, stride 1, same padding".into(),
                ));
            }
            let (gh, gw) = (spec.h_i + spec.f_h - 1, spec.w_i + spec.f_w - 1);
            if gh * gw > n / 2 {
                return Err(ConvError::TooLarge(format!(
                    "padded image {gw}x{gh} exceeds {} slots",
                    n / 2
                )));
            }
            let taps = (0..spec.f_h as isize)
                .flat_map(|ky| {
                    (0..spec.f_w as isize).map(move |kx| (ky - ph as isize, kx - pw as isize))
                })
                .collect();
            return Ok(Self {
                grid_h: gh,
                grid_w: gw,
                out_h: h_o,
                out_w: w_o,
                out_y0: ph,
                out_x0: pw,
                in_y0: ph,
                in_x0: pw,
                c_in: 1,
                c_out: 1,
                taps,
                c_n: 1,
                block: n / 2,
            });
        }
        let (gh, gw) = (spec.h_i.div_ceil(spec.s_h), spec.w_i.div_ceil(spec.s_w));
        let c_in = spec.c_i * spec.s_h * spec.s_w;
        let dys = tap_range(spec.f_h, spec.s_h, ph);
        let dxs = tap_range(spec.f_w, spec.s_w, pw);
        // Taps that never land inside the grid contribute nothing.
        let hits = |d: isize, out: usize, grid: usize| d < grid as isize && d + out as isize > 0;
        let taps: Vec<(isize, isize)> = dys
            .flat_map(|dy| dxs.clone().map(move |dx| (dy, dx)))
            .filter(|&(dy, dx)| hits(dy, h_o, gh) && hits(dx, w_o, gw))
            .collect();
        let mut shifts: Vec<isize> = taps
            .iter()
            .map(|&(dy, dx)| (dy * gw as isize + dx).rem_euclid(n as isize / 2))
            .collect();
        shifts.sort_unstable();
        shifts.dedup();
        if shifts.len() != taps.len() {
            return Err(ConvError::TooLarge(format!(
                "taps of a {gw}x{gh} grid alias under rotation"
            )));
        }
        let area = gh * gw;
        if area > n / 2 {
            return Err(ConvError::TooLarge(format!(
                "{gw}x{gh} grid exceeds {} slots",
                n / 2
            )));
        }
        let c_n = match (variant, c_n) {
            (Variant::PackedSiso, _)
                if spec.c_i != 1 || spec.c_o != 1 || spec.s_w * spec.s_h != 1 =>
            {
                return Err(ConvError::Spec(
                    "packed SISO handles one input and one output channel".into(),
                ))
            }
            (Variant::PackedSiso | Variant::OnePerCt, _) => 1,
            (_, Some(c)) => c,
            (_, None) => {
                let mut c = 1;
                while c_in.is_multiple_of(2 * c)
                    && spec.c_o.is_multiple_of(2 * c)
                    && area <= n / (2 * c)
                {
                    c *= 2;
                }
                c
            }
        };
        if !c_n.is_power_of_two() || !c_in.is_multiple_of(c_n) || !spec.c_o.is_multiple_of(c_n) {
            return Err(ConvError::Packing(format!(
                "c_n = {c_n} must be a power of two dividing {c_in} and {}",
                spec.c_o
            )));
        }
        let block = if c_n == 1 { n / 2 } else { n / c_n };
        if area > block {
            return Err(ConvError::Packing(format!(
                "{c_n} channels of {area} pixels exceed {n} slots"
            )));
        }
        Ok(Self {
            grid_h: gh,
            grid_w: gw,
            out_h: h_o,
            out_w: w_o,
            out_y0: 0,
            out_x0: 0,
            in_y0: 0,
            in_x0: 0,
            c_in,
            c_out: spec.c_o,
            taps,
            c_n,
            block,
        })
    }

    pub fn in_cts(&self) -> usize {
        self.c_in / self.c_n
    }

    pub fn out_cts(&self) -> usize {
        self.c_out / self.c_n
    }
}

/// Phase-grid offsets `dy` with `s·dy + a + pad ∈ [0, f)` for some phase `a`.
fn tap_range(f: usize, s: usize, pad: usize) -> std::ops::RangeInclusive<isize> {
    let lo = (-(pad as isize)).div_euclid(s as isize);
    let hi = (f as isize - 1 - pad as isize).div_euclid(s as isize);
    lo..=hi
}

/// A convolution lowered onto slots: geometry, rotations and layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvPlan {
    pub spec: ConvSpec,
    pub variant: Variant,
    pub n: usize,
    pub w_pt: u32,
    pub geom: Geometry,
    /// Block permutations (identity first).
    pub chan_elems: Vec<GroupElem>,
    /// `block_src[g][l]`: block moved into position `l` by `chan_elems[g]`.
    pub block_src: Vec<Vec<usize>>,
}

/// Closed-form counts for a plan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConvCount {
    pub ops: OpCount,
    pub in_cts: u64,
    pub out_cts: u64,
}

impl ConvPlan {
    pub fn new(spec: ConvSpec, variant: Variant, n: usize, w_pt: u32) -> Result<Self, ConvError> {
        Self::with_packing(spec, variant, n, w_pt, None)
    }

    /// Force `c_n` channels per ciphertext (packed variants only).
    pub fn with_packing(
        spec: ConvSpec,
        variant: Variant,
        n: usize,
        w_pt: u32,
        c_n: Option<usize>,
    ) -> Result<Self, ConvError> {
        let geom = Geometry::new(&spec, n, variant, c_n)?;
        let h = n / 2;
        let per_row = (geom.c_n / 2).max(1);
        let chan_elems: Vec<GroupElem> = if geom.c_n == 1 {
            vec![GroupElem::IDENTITY]
        } else {
            [false, true]
                .iter()
                .flat_map(|&sw| {
                    (0..per_row).map(move |k| GroupElem::new(n, k * (n / geom.c_n), sw))
                })
                .collect()
        };
        let offset = |l: usize| (l / per_row) * h + (l % per_row) * geom.block;
        let block_src = chan_elems
            .iter()
            .map(|g| {
                (0..geom.c_n)
                    .map(|l| {
                        let src = g.src_slot(n, offset(l));
                        (0..geom.c_n)
                            .find(|&m| offset(m) == src)
                            .expect("block permutation maps blocks to blocks")
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            spec,
            variant,
            n,
            w_pt,
            geom,
            chan_elems,
            block_src,
        })
    }

    /// First slot of block `l`.
    pub fn block_offset(&self, l: usize) -> usize {
        let per_row = (self.geom.c_n / 2).max(1);
        (l / per_row) * (self.n / 2) + (l % per_row) * self.geom.block
    }

    /// Position of block `m` after `chan_elems[g]`.
    pub fn block_dst(&self, g: usize, m: usize) -> usize {
        self.block_src[g]
            .iter()
            .position(|&s| s == m)
            .expect("permutation")
    }

    pub fn tap_elem(&self, t: usize) -> GroupElem {
        let (dy, dx) = self.geom.taps[t];
        GroupElem::rotation_signed(self.n, dy as i64 * self.geom.grid_w as i64 + dx as i64)
    }

    /// Is grid pixel `(y, x) + tap` inside the grid?
    fn tap_valid(&self, y: usize, x: usize, t: usize) -> bool {
        let (dy, dx) = self.geom.taps[t];
        let (yy, xx) = (y as isize + dy, x as isize + dx);
        yy >= 0 && xx >= 0 && (yy as usize) < self.geom.grid_h && (xx as usize) < self.geom.grid_w
    }

    /// Phase-channel weight for output channel `co`, phase channel `cp`, tap `t`.
    fn weight(&self, f: &Filters, co: usize, cp: usize, t: usize) -> u64 {
        let s = &self.spec;
        if self.variant == Variant::PaddedSiso {
            let (dy, dx) = self.geom.taps[t];
            let (ph, pw) = s.pads();
            return f.get(
                0,
                0,
                (dy + ph as isize) as usize,
                (dx + pw as isize) as usize,
            );
        }
        let phases = s.s_h * s.s_w;
        let (ci, a, b) = (cp / phases, (cp % phases) / s.s_w, cp % s.s_w);
        let (ph, pw) = s.pads();
        let (dy, dx) = self.geom.taps[t];
        let ky = s.s_h as isize * dy + a as isize + ph as isize;
        let kx = s.s_w as isize * dx + b as isize + pw as isize;
        if ky < 0 || kx < 0 || ky >= s.f_h as isize || kx >= s.f_w as isize {
            0
        } else {
            f.get(co, ci, ky as usize, kx as usize)
        }
    }

    /// Group elements whose keys the kernel needs.
    pub fn required_elems(&self) -> Vec<GroupElem> {
        let taps: Vec<GroupElem> = (0..self.geom.taps.len())
            .map(|t| self.tap_elem(t))
            .collect();
        let mut v: Vec<GroupElem> = match self.variant {
            Variant::InputRot => self
                .chan_elems
                .iter()
                .flat_map(|g| taps.iter().map(move |t| g.then(*t, self.n)))
                .collect(),
            Variant::OutputRot => taps.iter().chain(&self.chan_elems).copied().collect(),
            _ => taps,
        };
        v.retain(|e| !e.is_identity());
        v.sort();
        v.dedup();
        v
    }

    /// Plaintext slot vector for output group `go`, input ciphertext `j`,
    /// block permutation `g` and tap `t`.
    pub fn plaintext(&self, f: &Filters, go: usize, j: usize, g: usize, t: usize) -> Vec<u64> {
        let geom = &self.geom;
        let mut v = vec![0u64; self.n];
        if self.variant == Variant::PaddedSiso {
            v.fill(self.weight(f, 0, 0, t));
            return v;
        }
        let c_n = geom.c_n;
        for l in 0..c_n {
            // Block `l` of the product: which (output, input) channel pair?
            let (co, cp, base) = match self.variant {
                Variant::OutputRot => (
                    go * c_n + self.block_dst(g, l),
                    j * c_n + l,
                    self.block_offset(l),
                ),
                _ => (
                    go * c_n + l,
                    j * c_n + self.block_src[g][l],
                    self.block_offset(l),
                ),
            };
            for y in 0..geom.out_h {
                for x in 0..geom.out_w {
                    if self.tap_valid(y, x, t) {
                        v[base + y * geom.grid_w + x] = self.weight(f, co, cp, t);
                    }
                }
            }
        }
        v
    }

    /// Input ciphertext slot vectors from an image `[c_i][h_i][w_i]`.
    pub fn input_slots(&self, image: &[u64]) -> Vec<Vec<u64>> {
        let s = &self.spec;
        let g = &self.geom;
        assert_eq!(image.len(), s.input_len(), "image size");
        let mut cts = vec![vec![0u64; self.n]; g.in_cts()];
        let phases = s.s_h * s.s_w;
        for ci in 0..s.c_i {
            for y in 0..s.h_i {
                for x in 0..s.w_i {
                    let cp = ci * phases + (y % s.s_h) * s.s_w + x % s.s_w;
                    let (gy, gx) = (y / s.s_h + g.in_y0, x / s.s_w + g.in_x0);
                    let slot = self.block_offset(cp % g.c_n) + gy * g.grid_w + gx;
                    cts[cp / g.c_n][slot] = image[(ci * s.h_i + y) * s.w_i + x];
                }
            }
        }
        cts
    }

    /// `(ciphertext, slot)` of output value `[co][y][x]`, raster order.
    pub fn output_layout(&self) -> Vec<(usize, usize)> {
        let g = &self.geom;
        let mut v = Vec::with_capacity(g.c_out * g.out_h * g.out_w);
        for co in 0..g.c_out {
            for y in 0..g.out_h {
                for x in 0..g.out_w {
                    let slot =
                        self.block_offset(co % g.c_n) + (y + g.out_y0) * g.grid_w + x + g.out_x0;
                    v.push((co / g.c_n, slot));
                }
            }
        }
        v
    }

    pub fn decode_output(&self, decrypted: &[Vec<u64>]) -> Vec<u64> {
        self.output_layout()
            .into_iter()
            .map(|(c, s)| decrypted[c][s])
            .collect()
    }

    /// For every intermediate product `(output group, input ct, block
    /// permutation)`: the `(output channel, input channel)` pair in each block.
    pub fn intermediate_groups(&self) -> Vec<Vec<(usize, usize)>> {
        let g = &self.geom;
        let mut groups = Vec::new();
        for go in 0..g.out_cts() {
            for j in 0..g.in_cts() {
                for gi in 0..self.chan_elems.len() {
                    groups.push(
                        (0..g.c_n)
                            .map(|l| (go * g.c_n + l, j * g.c_n + self.block_src[gi][l]))
                            .collect(),
                    );
                }
            }
        }
        groups
    }

    /// Closed-form counts (the executor matches them exactly).
    pub fn count_ops(&self) -> ConvCount {
        let g = &self.geom;
        let t = g.taps.len() as u64;
        let (cn, ci, co) = (g.c_n as u64, g.in_cts() as u64, g.out_cts() as u64);
        let products = ci * co * cn * t;
        let ops = match self.variant {
            Variant::PaddedSiso => OpCount {
                perm_hoisted: t - 1,
                perm: 0,
                decomp: 1,
                scmult: t,
                add: t,
            },
            Variant::PackedSiso | Variant::OnePerCt | Variant::InputRot => OpCount {
                perm_hoisted: (cn * t - 1) * ci,
                perm: 0,
                decomp: ci,
                scmult: products,
                add: products,
            },
            Variant::OutputRot => {
                let out_rot = (cn - 1) * co * ci;
                OpCount {
                    perm_hoisted: (t - 1) * ci,
                    perm: out_rot,
                    decomp: ci + out_rot,
                    scmult: products,
                    add: products + co * ci * cn,
                }
            }
        };
        ConvCount {
            ops,
            in_cts: ci,
            out_cts: co,
        }
    }

    /// Uniform values on every slot outside the output region.
    pub fn periphery_mask(&self, p: u64, rng: &mut impl RngCore) -> Vec<Vec<u64>> {
        let mut masks: Vec<Vec<u64>> = (0..self.geom.out_cts())
            .map(|_| (0..self.n).map(|_| rng.gen_range(0..p)).collect())
            .collect();
        for (c, s) in self.output_layout() {
            masks[c][s] = 0;
        }
        masks
    }
}
