use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::features::FEATURE_COUNT;
use crate::optim::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Vanilla,
    Gru,
    Lstm,
}

impl CellKind {
    pub const ALL: [CellKind; 3] = [CellKind::Vanilla, CellKind::Gru, CellKind::Lstm];

    /// Gate blocks, in registry order: vanilla `[h]`, GRU `[r, z, h]`,
    /// LSTM `[i, f, o, c]`.
    pub fn gate_count(self) -> usize {
        match self {
            Self::Vanilla => 1,
            Self::Gru => 3,
            Self::Lstm => 4,
        }
    }

    pub fn code(self) -> u16 {
        match self {
            Self::Vanilla => 0,
            Self::Gru => 1,
            Self::Lstm => 2,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Closed-form parameter count for a head of this kind.
    pub fn parameter_count(self, input: usize, hidden: usize) -> usize {
        let projection = hidden * input + hidden;
        let gates = self.gate_count() * (2 * hidden * hidden + hidden);
        projection + gates + hidden + 1
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vanilla => "vanilla",
            Self::Gru => "gru",
            Self::Lstm => "lstm",
        })
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" | "rnn" => Ok(Self::Vanilla),
            "gru" => Ok(Self::Gru),
            "lstm" => Ok(Self::Lstm),
            other => Err(invalid("cell", format!("unknown cell kind `{other}`"))),
        }
    }
}

/// One gate block: `W` acts on the projected input, `U` on the recurrent
/// state. Both are `hidden x hidden`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

impl Gate {
    fn zeros(h: usize) -> Self {
        Self {
            w: vec![0.0; h * h],
            u: vec![0.0; h * h],
            b: vec![0.0; h],
        }
    }
}

/// Input projection, one recurrent cell and a single-logit output head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    kind: CellKind,
    input: usize,
    hidden: usize,
    /// `hidden x input`, row-major.
    pub proj_w: Vec<f64>,
    pub proj_b: Vec<f64>,
    pub gates: Vec<Gate>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl HeadParams {
    pub fn zeros(kind: CellKind, input: usize, hidden: usize) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(invalid("hidden", "input and hidden sizes must be positive"));
        }
        Ok(Self {
            kind,
            input,
            hidden,
            proj_w: vec![0.0; hidden * input],
            proj_b: vec![0.0; hidden],
            gates: (0..kind.gate_count())
                .map(|_| Gate::zeros(hidden))
                .collect(),
            out_w: vec![0.0; hidden],
            out_b: vec![0.0],
        })
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn init(kind: CellKind, hidden: usize, seed: u64) -> Result<Self> {
        Self::init_with_input(kind, FEATURE_COUNT, hidden, seed)
    }

    pub fn init_with_input(kind: CellKind, input: usize, hidden: usize, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(kind, input, hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |t: &mut [f64], fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            t.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
        };
        fill(&mut p.proj_w, input);
        for g in &mut p.gates {
            fill(&mut g.w, hidden);
            fill(&mut g.u, hidden);
        }
        fill(&mut p.out_w, hidden);
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.kind, self.input, self.hidden).expect("sizes already validated")
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Tensor lengths in registry order.
    pub fn shapes(kind: CellKind, input: usize, hidden: usize) -> Vec<usize> {
        let mut s = vec![hidden * input, hidden];
        for _ in 0..kind.gate_count() {
            s.extend([hidden * hidden, hidden * hidden, hidden]);
        }
        s.extend([hidden, 1]);
        s
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl Parameters for HeadParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.proj_w, &self.proj_b];
        for g in &self.gates {
            v.extend([g.w.as_slice(), g.u.as_slice(), g.b.as_slice()]);
        }
        v.extend([self.out_w.as_slice(), self.out_b.as_slice()]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.proj_w, &mut self.proj_b];
        for g in &mut self.gates {
            v.extend([g.w.as_mut_slice(), g.u.as_mut_slice(), g.b.as_mut_slice()]);
        }
        v.extend([self.out_w.as_mut_slice(), self.out_b.as_mut_slice()]);
        v
    }
}
