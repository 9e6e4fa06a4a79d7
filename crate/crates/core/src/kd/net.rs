use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::optim::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    pub fn code(self) -> u32 {
        match self {
            Self::Tanh => 0,
            Self::Identity => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Self::Tanh),
            1 => Some(Self::Identity),
            _ => None,
        }
    }

    fn apply(self, z: &mut DMatrix<f64>) {
        if self == Self::Tanh {
            z.apply(|v| *v = v.tanh());
        }
    }

    /// Multiplies `delta` by the derivative, given the activation output.
    fn backprop(self, delta: &mut DMatrix<f64>, out: &DMatrix<f64>) {
        if self == Self::Tanh {
            delta.zip_apply(out, |d, a| *d *= 1.0 - a * a);
        }
    }
}

/// Affine map `W x + b` followed by a fixed nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `d_out x d_in`.
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_width(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_width(&self) -> usize {
        self.weight.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Layer output for a batch stored one sample per column.
    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weight * x;
        for mut col in z.column_iter_mut() {
            col += &self.bias;
        }
        self.activation.apply(&mut z);
        z
    }
}

/// Feed-forward classifier; tanh hidden layers, identity logits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

impl DenseNet {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_width() != pair[1].in_width() {
                return Err(Error::ShapeMismatch {
                    context: "adjacent layer widths",
                    expected: pair[0].out_width(),
                    actual: pair[1].in_width(),
                });
            }
        }
        for l in &layers {
            if l.bias.len() != l.out_width() {
                return Err(Error::ShapeMismatch {
                    context: "layer bias",
                    expected: l.out_width(),
                    actual: l.bias.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// `widths = [input, hidden.., classes]`; uniform `±1/sqrt(fan_in)`
    /// weights and zero biases.
    pub fn new(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(invalid(
                "widths",
                "need at least input and output widths, all positive",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let a = 1.0 / (w[0] as f64).sqrt();
                DenseLayer {
                    weight: DMatrix::from_fn(w[1], w[0], |_, _| rng.random_range(-a..a)),
                    bias: DVector::zeros(w[1]),
                    activation: if i == last {
                        Activation::Identity
                    } else {
                        Activation::Tanh
                    },
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_width()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("non-empty").out_width()
    }

    /// `[input, layer outputs..]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(DenseLayer::out_width))
            .collect()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    weight: DMatrix::zeros(l.out_width(), l.in_width()),
                    bias: DVector::zeros(l.out_width()),
                    activation: l.activation,
                })
                .collect(),
        }
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.input_width() {
            return Err(Error::ShapeMismatch {
                context: "network input",
                expected: self.input_width(),
                actual: x.nrows(),
            });
        }
        Ok(())
    }

    /// Logits, one column per sample.
    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let mut a = self.layers[0].forward(x);
        for l in &self.layers[1..] {
            a = l.forward(&a);
        }
        Ok(a)
    }

    /// Every layer's output, `[a_1, .., logits]`.
    pub fn forward_all(&self, x: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        self.check_input(x)?;
        let mut outs: Vec<DMatrix<f64>> = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let next = l.forward(if i == 0 { x } else { &outs[i - 1] });
            outs.push(next);
        }
        Ok(outs)
    }

    /// Gradients of a loss whose derivative with respect to the logits is
    /// `dlogits` (already scaled as the caller wants).
    pub fn backward(
        &self,
        x: &DMatrix<f64>,
        outs: &[DMatrix<f64>],
        dlogits: DMatrix<f64>,
        grads: &mut DenseNet,
    ) {
        let mut delta = dlogits;
        for i in (0..self.layers.len()).rev() {
            let input = if i == 0 { x } else { &outs[i - 1] };
            let g = &mut grads.layers[i];
            g.weight.gemm(1.0, &delta, &input.transpose(), 1.0);
            for col in delta.column_iter() {
                g.bias += col;
            }
            if i > 0 {
                let mut next = self.layers[i].weight.transpose() * &delta;
                self.layers[i - 1]
                    .activation
                    .backprop(&mut next, &outs[i - 1]);
                delta = next;
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        let logits = self.forward(x)?;
        Ok(logits.column_iter().map(|c| c.argmax().0).collect())
    }

    pub fn accuracy(&self, x: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
        if labels.is_empty() {
            return Err(Error::Empty("evaluation labels"));
        }
        let pred = self.predict(x)?;
        Ok(pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64)
    }
}

impl Parameters for DenseNet {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}
