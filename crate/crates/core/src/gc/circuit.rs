//! Boolean circuits over {XOR, AND, NOT} and the arithmetic blocks used by
//! the activation layers.

use super::GcError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Wire(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Xor(Wire, Wire, Wire),
    And(Wire, Wire, Wire),
    Not(Wire, Wire),
}

/// A bit during construction: either known at build time or carried by a wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bit {
    Const(bool),
    Wire(Wire),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputGroup {
    pub name: String,
    pub wires: Vec<Wire>,
}

/// A topologically ordered circuit. Input wires come first, numbered in
/// group order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub n_wires: u32,
    pub gates: Vec<Gate>,
    pub inputs: Vec<InputGroup>,
    pub outputs: Vec<Wire>,
}

impl Circuit {
    pub fn and_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::And(..)))
            .count()
    }

    pub fn xor_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Xor(..)))
            .count()
    }

    pub fn input_len(&self) -> usize {
        self.inputs.iter().map(|g| g.wires.len()).sum()
    }

    pub fn group(&self, name: &str) -> Option<&InputGroup> {
        self.inputs.iter().find(|g| g.name == name)
    }

    /// Plaintext evaluation; `inputs[k]` feeds group `k`.
    pub fn eval(&self, inputs: &[Vec<bool>]) -> Result<Vec<bool>, GcError> {
        if inputs.len() != self.inputs.len() {
            return Err(GcError::InputLength {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        let mut w = vec![false; self.n_wires as usize];
        for (g, bits) in self.inputs.iter().zip(inputs) {
            if bits.len() != g.wires.len() {
                return Err(GcError::InputLength {
                    expected: g.wires.len(),
                    got: bits.len(),
                });
            }
            for (wire, &b) in g.wires.iter().zip(bits) {
                w[wire.0 as usize] = b;
            }
        }
        for g in &self.gates {
            match *g {
                Gate::Xor(a, b, c) => w[c.0 as usize] = w[a.0 as usize] ^ w[b.0 as usize],
                Gate::And(a, b, c) => w[c.0 as usize] = w[a.0 as usize] & w[b.0 as usize],
                Gate::Not(a, c) => w[c.0 as usize] = !w[a.0 as usize],
            }
        }
        Ok(self.outputs.iter().map(|o| w[o.0 as usize]).collect())
    }
}

/// Circuit builder with constant folding: gates whose result is known at
/// build time are never emitted.
#[derive(Debug, Default)]
pub struct Builder {
    n_wires: u32,
    gates: Vec<Gate>,
    inputs: Vec<InputGroup>,
    sealed_inputs: bool,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> Wire {
        let w = Wire(self.n_wires);
        self.n_wires += 1;
        w
    }

    /// Declare an input group. All inputs must be declared before any gate.
    pub fn input(&mut self, name: &str, bits: usize) -> Vec<Bit> {
        assert!(!self.sealed_inputs, "inputs must be declared before gates");
        let wires: Vec<Wire> = (0..bits).map(|_| self.fresh()).collect();
        self.inputs.push(InputGroup {
            name: name.to_string(),
            wires: wires.clone(),
        });
        wires.into_iter().map(Bit::Wire).collect()
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(x ^ y),
            (Bit::Const(false), w) | (w, Bit::Const(false)) => w,
            (Bit::Const(true), w) | (w, Bit::Const(true)) => self.not(w),
            (Bit::Wire(x), Bit::Wire(y)) if x == y => Bit::Const(false),
            (Bit::Wire(x), Bit::Wire(y)) => {
                self.sealed_inputs = true;
                let c = self.fresh();
                self.gates.push(Gate::Xor(x, y, c));
                Bit::Wire(c)
            }
        }
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(x & y),
            (Bit::Const(false), _) | (_, Bit::Const(false)) => Bit::Const(false),
            (Bit::Const(true), w) | (w, Bit::Const(true)) => w,
            (Bit::Wire(x), Bit::Wire(y)) if x == y => a,
            (Bit::Wire(x), Bit::Wire(y)) => {
                self.sealed_inputs = true;
                let c = self.fresh();
                self.gates.push(Gate::And(x, y, c));
                Bit::Wire(c)
            }
        }
    }

    pub fn not(&mut self, a: Bit) -> Bit {
        match a {
            Bit::Const(x) => Bit::Const(!x),
            Bit::Wire(x) => {
                self.sealed_inputs = true;
                let c = self.fresh();
                self.gates.push(Gate::Not(x, c));
                Bit::Wire(c)
            }
        }
    }

    /// `s ? a : b` with one AND.
    pub fn mux(&mut self, s: Bit, a: Bit, b: Bit) -> Bit {
        let d = self.xor(a, b);
        let t = self.and(s, d);
        self.xor(b, t)
    }

    pub fn mux_bits(&mut self, s: Bit, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        a.iter().zip(b).map(|(&x, &y)| self.mux(s, x, y)).collect()
    }

    /// Ripple-carry `a + b + cin` (equal widths); one AND per bit. Returns
    /// `(sum, carry_out)`.
    pub fn add_carry(&mut self, a: &[Bit], b: &[Bit], cin: Bit) -> (Vec<Bit>, Bit) {
        assert_eq!(a.len(), b.len(), "adder width");
        let mut c = cin;
        let mut sum = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xc = self.xor(x, c);
            let yc = self.xor(y, c);
            sum.push(self.xor(xc, y));
            let t = self.and(xc, yc);
            c = self.xor(c, t);
        }
        (sum, c)
    }

    /// `a + b`, one bit wider than the inputs.
    pub fn add(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        let (mut s, c) = self.add_carry(a, b, Bit::Const(false));
        s.push(c);
        s
    }

    /// `a ≥ b` (unsigned, equal widths): carry of `a + !b + 1`.
    pub fn geq(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let nb: Vec<Bit> = b.iter().map(|&x| self.not(x)).collect();
        let mut c = Bit::Const(true);
        for (&x, &y) in a.iter().zip(&nb) {
            let xc = self.xor(x, c);
            let yc = self.xor(y, c);
            let t = self.and(xc, yc);
            c = self.xor(c, t);
        }
        c
    }

    /// `(a + b) mod p` for `a, b < p` of width `bits(p)`: the sum `t` gets
    /// `2^(ℓ+1) − p` added, whose carry out is exactly `t ≥ p`.
    pub fn add_mod(&mut self, a: &[Bit], b: &[Bit], p: u64) -> Vec<Bit> {
        let l = a.len();
        let t = self.add(a, b);
        let k = constant((1u64 << (l + 1)) - p, l + 1);
        let (t_minus_p, ge) = self.add_carry(&t, &k, Bit::Const(false));
        self.mux_bits(ge, &t_minus_p[..l], &t[..l])
    }

    /// `(a + k) mod p` for a constant `k < p`.
    pub fn add_mod_const(&mut self, a: &[Bit], k: u64, p: u64) -> Vec<Bit> {
        let kb = constant(k, a.len());
        self.add_mod(a, &kb, p)
    }

    pub fn finish(mut self, outputs: Vec<Bit>) -> Circuit {
        let outputs = outputs.into_iter().map(|o| self.materialise(o)).collect();
        Circuit {
            n_wires: self.n_wires,
            gates: self.gates,
            inputs: self.inputs,
            outputs,
        }
    }

    /// A wire carrying `o`; constants are derived from the first input wire
    /// (`x ⊕ x = 0`).
    fn materialise(&mut self, o: Bit) -> Wire {
        let v = match o {
            Bit::Wire(w) => return w,
            Bit::Const(v) => v,
        };
        let x = self
            .inputs
            .iter()
            .flat_map(|g| g.wires.first())
            .next()
            .copied()
            .expect("circuit has an input");
        self.sealed_inputs = true;
        let zero = self.fresh();
        self.gates.push(Gate::Xor(x, x, zero));
        if !v {
            return zero;
        }
        let one = self.fresh();
        self.gates.push(Gate::Not(zero, one));
        one
    }
}

/// Little-endian constant bits.
pub fn constant(v: u64, bits: usize) -> Vec<Bit> {
    (0..bits)
        .map(|i| Bit::Const(i < 64 && (v >> i) & 1 == 1))
        .collect()
}

/// Bits needed for values in `[0, p)`.
pub fn value_bits(p: u64) -> usize {
    (64 - (p - 1).leading_zeros()).max(1) as usize
}

pub fn to_bits(values: &[u64], bits: usize) -> Vec<bool> {
    values
        .iter()
        .flat_map(|&v| (0..bits).map(move |i| (v >> i) & 1 == 1))
        .collect()
}

pub fn from_bits(bits: &[bool], width: usize) -> Vec<u64> {
    bits.chunks(width)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i)
        })
        .collect()
}

/// Non-linear layer computed by a garbled block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    MaxPool2x2,
    ReluMaxPool2x2,
}

impl Activation {
    /// Inputs per output value.
    pub fn arity(&self) -> usize {
        match self {
            Activation::Relu => 1,
            _ => 4,
        }
    }

    pub fn has_relu(&self) -> bool {
        !matches!(self, Activation::MaxPool2x2)
    }
}

pub const GROUP_SERVER_X: &str = "s_x";
pub const GROUP_SERVER_Y: &str = "s_y";
pub const GROUP_CLIENT_X: &str = "c_x";

/// A batch of activation instances over `Z_p`.
///
/// Per instance the block recombines `x_k = s_x,k + c_x,k mod p`, applies the
/// activation on signed values (`(p/2, p)` are negative), shifts right by
/// `shift` bits (only after a ReLU, where the value is non-negative) and
/// outputs `c_y = y + s_y mod p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BlockSpec {
    pub p: u64,
    pub kind: Activation,
    pub count: usize,
    pub shift: u32,
}

impl BlockSpec {
    pub fn new(p: u64, kind: Activation, count: usize) -> Self {
        Self {
            p,
            kind,
            count,
            shift: 0,
        }
    }

    pub fn with_shift(mut self, shift: u32) -> Self {
        self.shift = shift;
        self
    }

    pub fn bits(&self) -> usize {
        value_bits(self.p)
    }

    pub fn check(&self) -> Result<(), GcError> {
        if self.p < 3 || self.p >= 1 << 31 {
            return Err(GcError::Block(format!(
                "modulus {} outside [3, 2^31)",
                self.p
            )));
        }
        if self.shift > 0 && !self.kind.has_relu() {
            return Err(GcError::Block("rescaling needs a ReLU".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Circuit, GcError> {
        self.check()?;
        let (p, l, k) = (self.p, self.bits(), self.kind.arity());
        let mut b = Builder::new();
        let sx = b.input(GROUP_SERVER_X, self.count * k * l);
        let sy = b.input(GROUP_SERVER_Y, self.count * l);
        let cx = b.input(GROUP_CLIENT_X, self.count * k * l);
        let half = p / 2;
        let mut out = Vec::with_capacity(self.count * l);
        for i in 0..self.count {
            let xs: Vec<Vec<Bit>> = (0..k)
                .map(|j| {
                    let r = (i * k + j) * l..(i * k + j + 1) * l;
                    b.add_mod(&sx[r.clone()], &cx[r], p)
                })
                .collect();
            let mut y = if k == 1 {
                xs[0].clone()
            } else {
                // Shift into [0, p) monotonically in the signed value, take the
                // unsigned max, shift back.
                let us: Vec<Vec<Bit>> = xs.iter().map(|x| b.add_mod_const(x, half, p)).collect();
                let mut m = us[0].clone();
                for u in &us[1..] {
                    let ge = b.geq(u, &m);
                    m = b.mux_bits(ge, u, &m);
                }
                b.add_mod_const(&m, p - half, p)
            };
            if self.kind.has_relu() {
                let neg = b.geq(&y, &constant(half + 1, l));
                let keep = b.not(neg);
                y = y.iter().map(|&x| b.and(keep, x)).collect();
                let s = (self.shift as usize).min(l);
                y = y[s..]
                    .iter()
                    .copied()
                    .chain(std::iter::repeat_n(Bit::Const(false), s))
                    .collect();
            }
            out.extend(b.add_mod(&y, &sy[i * l..(i + 1) * l], p));
        }
        Ok(b.finish(out))
    }

    /// Integer oracle: `c_y` for one batch.
    pub fn eval_plain(&self, s_x: &[u64], s_y: &[u64], c_x: &[u64]) -> Vec<u64> {
        let (p, k) = (self.p, self.kind.arity());
        let signed = |v: u64| {
            if v > p / 2 {
                v as i64 - p as i64
            } else {
                v as i64
            }
        };
        (0..self.count)
            .map(|i| {
                let vals = (0..k).map(|j| signed((s_x[i * k + j] + c_x[i * k + j]) % p));
                let mut y = vals.max().expect("arity ≥ 1");
                if self.kind.has_relu() {
                    y = y.max(0) >> self.shift;
                }
                (y.rem_euclid(p as i64) as u64 + s_y[i]) % p
            })
            .collect()
    }

    /// Plaintext circuit evaluation on values.
    pub fn eval_circuit(
        &self,
        c: &Circuit,
        s_x: &[u64],
        s_y: &[u64],
        c_x: &[u64],
    ) -> Result<Vec<u64>, GcError> {
        let l = self.bits();
        let out = c.eval(&[to_bits(s_x, l), to_bits(s_y, l), to_bits(c_x, l)])?;
        Ok(from_bits(&out, l))
    }
}

pub fn build_relu_block(p: u64, count: usize) -> Result<Circuit, GcError> {
    BlockSpec::new(p, Activation::Relu, count).build()
}

pub fn build_maxpool_block(p: u64, count: usize) -> Result<Circuit, GcError> {
    BlockSpec::new(p, Activation::MaxPool2x2, count).build()
}
