/// Signed fixed-point numbers embedded in `Z_p`: `x ↦ round(x·2^f) mod p`,
/// with residues above `p/2` read as negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPoint {
    pub p: u64,
    pub frac_bits: u32,
}

impl FixedPoint {
    pub fn new(p: u64, frac_bits: u32) -> Self {
        Self { p, frac_bits }
    }

    /// Largest representable magnitude in integer units.
    pub fn max_int(&self) -> i64 {
        (self.p / 2) as i64
    }

    pub fn encode_int(&self, v: i64) -> Option<u64> {
        (v.abs() <= self.max_int()).then(|| v.rem_euclid(self.p as i64) as u64)
    }

    pub fn decode_int(&self, r: u64) -> i64 {
        let r = r % self.p;
        if r > self.p / 2 {
            r as i64 - self.p as i64
        } else {
            r as i64
        }
    }

    /// `None` when `x` is out of range.
    pub fn encode(&self, x: f64) -> Option<u64> {
        let v = (x * (1u64 << self.frac_bits) as f64).round();
        if !v.is_finite() || v.abs() > self.max_int() as f64 {
            return None;
        }
        self.encode_int(v as i64)
    }

    pub fn decode(&self, r: u64) -> f64 {
        self.decode_int(r) as f64 / (1u64 << self.frac_bits) as f64
    }

    /// Same value at a different number of fractional bits.
    pub fn with_frac_bits(self, frac_bits: u32) -> Self {
        Self { frac_bits, ..self }
    }
}
