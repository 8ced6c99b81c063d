//! Stacked-LSTM window classifier.
//!
//! Each window is read left to right, one residue per time step, through a
//! stack of unidirectional LSTM layers (no peepholes). The top layer's final
//! hidden state feeds an optional ReLU hidden layer, then a single linear
//! unit and a sigmoid.
//!
//! Gate layout inside every `4H`-wide pre-activation is input, forget,
//! cell, output:
//!
//! ```text
//! i = σ(z[0..H])   f = σ(z[H..2H])   g = tanh(z[2H..3H])   o = σ(z[3H..4H])
//! c' = f ∘ c + i ∘ g
//! h' = o ∘ tanh(c')
//! ```
//!
//! Weights are stored `[fan_in × fan_out]` so a layer is `x · W`. Biases are
//! `[1 × n]` rows added through a ones column.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::data::{EncodedWindow, ALPHABET_SIZE, WINDOW_SIZES};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Negative slope used for the Kaiming-uniform initialisation.
pub const KAIMING_A: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub window: usize,
    pub lstm_sizes: Vec<usize>,
    #[serde(default)]
    pub mlp_size: usize,
    #[serde(default = "default_input_width")]
    pub input_width: usize,
}

fn default_input_width() -> usize {
    ALPHABET_SIZE
}

impl ModelConfig {
    pub fn new(window: usize, lstm_sizes: Vec<usize>, mlp_size: usize) -> Self {
        Self {
            window,
            lstm_sizes,
            mlp_size,
            input_width: ALPHABET_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lstm_sizes.is_empty() || self.lstm_sizes.len() > 4 {
            return Err(Error::Config(format!(
                "between 1 and 4 LSTM layers required, got {}",
                self.lstm_sizes.len()
            )));
        }
        if self.lstm_sizes.contains(&0) {
            return Err(Error::Config("LSTM hidden sizes must be >= 1".into()));
        }
        if !WINDOW_SIZES.contains(&self.window) {
            return Err(Error::Config(format!(
                "window {} not in {:?}",
                self.window, WINDOW_SIZES
            )));
        }
        if self.input_width == 0 {
            return Err(Error::Config("input width must be >= 1".into()));
        }
        Ok(())
    }

    /// Sequence length `2w+1`.
    pub fn steps(&self) -> usize {
        2 * self.window + 1
    }

    /// Parameter names and shapes in storage order.
    pub fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut fan_in = self.input_width;
        for (l, &h) in self.lstm_sizes.iter().enumerate() {
            out.push((format!("lstm{l}.w_ih"), vec![fan_in, 4 * h]));
            out.push((format!("lstm{l}.w_hh"), vec![h, 4 * h]));
            out.push((format!("lstm{l}.bias"), vec![1, 4 * h]));
            fan_in = h;
        }
        if self.mlp_size > 0 {
            out.push(("head.w_hidden".into(), vec![fan_in, self.mlp_size]));
            out.push(("head.b_hidden".into(), vec![1, self.mlp_size]));
            fan_in = self.mlp_size;
        }
        out.push(("head.w_out".into(), vec![fan_in, 1]));
        out.push(("head.b_out".into(), vec![1, 1]));
        out
    }

    pub fn label(&self) -> String {
        format!(
            "w={} lstm={:?} mlp={}",
            self.window, self.lstm_sizes, self.mlp_size
        )
    }
}

/// Kaiming-uniform bound `gain · sqrt(3 / fan_in)` with
/// `gain = sqrt(2 / (1 + a²))`.
pub fn kaiming_uniform_bound(fan_in: usize, a: f64) -> f64 {
    let gain = libm::sqrt(2.0 / (1.0 + a * a));
    gain * libm::sqrt(3.0 / fan_in as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    /// Draws every weight and bias from `U(−b, b)`, `b = 1/sqrt(fan_in)`.
    /// LSTM biases use the layer's hidden size as fan-in.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (i, (name, shape)) in config.layout().into_iter().enumerate() {
            let fan_in = if name.starts_with("lstm") && name.ends_with("bias") {
                shape[1] / 4
            } else if name.ends_with("b_hidden") || name.ends_with("b_out") {
                // Linear-layer bias shares the fan-in of its weight, which
                // precedes it in the layout.
                tensors
                    .last()
                    .map(|t: &Tensor| t.shape()[0])
                    .expect("bias follows its weight")
            } else {
                shape[0]
            };
            let bound = kaiming_uniform_bound(fan_in, KAIMING_A);
            let mut rng = seeded(derive_seed(seed, i as u64));
            let n = shape.iter().product();
            let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
            tensors.push(Tensor::new(shape, data)?);
            names.push(name);
        }
        Ok(Self {
            config: config.clone(),
            names,
            tensors,
        })
    }

    /// Reassembles parameters, checking names and shapes against the
    /// config's layout.
    pub fn from_parts(config: ModelConfig, parts: Vec<(String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        if layout.len() != parts.len() {
            return Err(Error::Config(format!(
                "expected {} parameter tensors, got {}",
                layout.len(),
                parts.len()
            )));
        }
        let mut names = Vec::with_capacity(parts.len());
        let mut tensors = Vec::with_capacity(parts.len());
        for ((name, shape), (got_name, t)) in layout.into_iter().zip(parts) {
            if name != got_name || t.shape() != &shape[..] {
                return Err(Error::Config(format!(
                    "parameter `{got_name}` {:?} does not match expected `{name}` {shape:?}",
                    t.shape()
                )));
            }
            if t.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("parameter `{name}` is not finite")));
            }
            names.push(name);
            tensors.push(t);
        }
        Ok(Self {
            config,
            names,
            tensors,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Registers every tensor on `g`, as differentiable leaves when
    /// `trainable`.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.tensors
            .iter()
            .map(|t| {
                if trainable {
                    g.param(t.clone())
                } else {
                    g.constant(t.clone())
                }
            })
            .collect()
    }

    /// Probabilities for a batch, computed without gradient bookkeeping in
    /// chunks of `chunk` windows.
    pub fn predict<W: Borrow<EncodedWindow>>(
        &self,
        windows: &[W],
        chunk: usize,
    ) -> Result<Vec<f64>> {
        let chunk = chunk.max(1);
        let mut out = Vec::with_capacity(windows.len());
        for part in windows.chunks(chunk) {
            let mut g = Graph::new();
            let vars = self.bind(&mut g, false);
            let p = forward(&self.config, &mut g, &vars, part)?;
            out.extend_from_slice(g.value(p).data());
        }
        Ok(out)
    }
}

/// One-hot input matrices, one `[B × A]` constant per time step.
fn step_inputs<W: Borrow<EncodedWindow>>(
    g: &mut Graph,
    batch: &[W],
    steps: usize,
    width: usize,
) -> Result<Vec<Var>> {
    for w in batch {
        let w = w.borrow();
        if w.len() != steps {
            return Err(Error::Shape {
                op: "forward",
                left: vec![w.len()],
                right: vec![steps],
            });
        }
    }
    let b = batch.len();
    (0..steps)
        .map(|t| {
            let mut m = vec![0.0; b * width];
            for (row, w) in batch.iter().enumerate() {
                let col = w.borrow().columns()[t] as usize;
                if col >= width {
                    return Err(Error::Shape {
                        op: "forward",
                        left: vec![col],
                        right: vec![width],
                    });
                }
                m[row * width + col] = 1.0;
            }
            Ok(g.constant(Tensor::matrix(b, width, m)?))
        })
        .collect()
}

/// Runs one LSTM layer over `inputs` (each `[B × in]`) from zero initial
/// state and returns the hidden state at every step.
pub fn lstm_layer(
    g: &mut Graph,
    inputs: &[Var],
    w_ih: Var,
    w_hh: Var,
    bias: Var,
    ones: Var,
) -> Result<Vec<Var>> {
    let hidden = g.shape(w_hh)[0];
    let mut h: Option<Var> = None;
    let mut c: Option<Var> = None;
    let b_row = g.matmul(ones, bias)?;
    let mut out = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let mut z = g.matmul(x, w_ih)?;
        if let Some(h) = h {
            let rec = g.matmul(h, w_hh)?;
            z = g.add(z, rec)?;
        }
        z = g.add(z, b_row)?;
        let zi = g.slice(z, 0, hidden)?;
        let zf = g.slice(z, hidden, 2 * hidden)?;
        let zg = g.slice(z, 2 * hidden, 3 * hidden)?;
        let zo = g.slice(z, 3 * hidden, 4 * hidden)?;
        let i = g.sigmoid(zi);
        let gg = g.tanh(zg);
        let o = g.sigmoid(zo);
        let ig = g.mul(i, gg)?;
        let c_new = match c {
            Some(c_prev) => {
                let f = g.sigmoid(zf);
                let fc = g.mul(f, c_prev)?;
                g.add(fc, ig)?
            }
            None => ig,
        };
        let tc = g.tanh(c_new);
        let h_new = g.mul(o, tc)?;
        h = Some(h_new);
        c = Some(c_new);
        out.push(h_new);
    }
    Ok(out)
}

/// Builds the forward pass on `g` with parameters already bound as `vars`
/// (in [`ModelConfig::layout`] order). Returns probabilities of shape `[B]`.
pub fn forward<W: Borrow<EncodedWindow>>(
    config: &ModelConfig,
    g: &mut Graph,
    vars: &[Var],
    batch: &[W],
) -> Result<Var> {
    let expected = config.layout().len();
    if vars.len() != expected {
        return Err(Error::Contract(format!(
            "{} parameter handles bound, layout needs {expected}",
            vars.len()
        )));
    }
    if batch.is_empty() {
        return Err(Error::Contract("forward over an empty batch".to_owned()));
    }
    let b = batch.len();
    let ones = g.constant(Tensor::filled(&[b, 1], 1.0));
    let mut seq = step_inputs(g, batch, config.steps(), config.input_width)?;
    let mut k = 0;
    for _ in &config.lstm_sizes {
        seq = lstm_layer(g, &seq, vars[k], vars[k + 1], vars[k + 2], ones)?;
        k += 3;
    }
    let mut x = *seq.last().expect("at least one time step");
    if config.mlp_size > 0 {
        let z = g.matmul(x, vars[k])?;
        let bias = g.matmul(ones, vars[k + 1])?;
        let z = g.add(z, bias)?;
        x = g.relu(z);
        k += 2;
    }
    let logit = g.matmul(x, vars[k])?;
    let bias = g.matmul(ones, vars[k + 1])?;
    let logit = g.add(logit, bias)?;
    let p = g.sigmoid(logit);
    g.reshape(p, &[b])
}
