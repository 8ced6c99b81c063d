//! Mini-batch training with AdamW and a per-epoch cosine schedule.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor};
use crate::data::EncodedWindow;
use crate::losses::LossSpec;
use crate::metrics::{default_thresholds, sweep};
use crate::model::{forward, ModelConfig, ModelParams};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Chunk size for inference passes during validation.
const EVAL_CHUNK: usize = 512;
const INIT_TAG: u64 = 0x1417;
const SHUFFLE_TAG: u64 = 0x5EED;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    #[serde(default)]
    pub weight_decay: f64,
    pub batch_size: usize,
    pub loss: LossSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub shuffle: bool,
    /// Global gradient-norm clip. Off unless set.
    #[serde(default)]
    pub clip_norm: Option<f64>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be >= 2".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be > 0",
                self.lr
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight decay must be >= 0".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config("clip norm must be > 0".into()));
            }
        }
        self.loss.validate()
    }

    pub fn label(&self) -> String {
        format!(
            "lr={} wd={} bs={} epochs={} loss={}",
            self.lr,
            self.weight_decay,
            self.batch_size,
            self.epochs,
            self.loss.label()
        )
    }
}

/// Second-stage optimisation with a new loss and learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineTune {
    pub loss: LossSpec,
    pub lr: f64,
    pub epochs: usize,
}

/// `lr_e = ½·lr·(1 + cos(π·e/E))`.
pub fn cosine_lr(epoch: usize, epochs: usize, lr: f64) -> f64 {
    0.5 * lr * (1.0 + libm::cos(core::f64::consts::PI * epoch as f64 / epochs as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(tensors: &[Tensor]) -> Self {
        Self {
            m: tensors.iter().map(|t| vec![0.0; t.numel()]).collect(),
            v: tensors.iter().map(|t| vec![0.0; t.numel()]).collect(),
            step: 0,
        }
    }
}

/// One AdamW update. Decay `p ← p·(1 − lr·λ)` is applied to the parameter
/// before, and independently of, the bias-corrected moment step.
pub fn adamw_step(
    params: &mut [Tensor],
    grads: &[Vec<f64>],
    state: &mut OptimizerState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Contract(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, g) in grads.iter().enumerate() {
        if g.len() != params[i].numel() {
            return Err(Error::Shape {
                op: "adamw",
                left: params[i].shape().to_vec(),
                right: vec![g.len()],
            });
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                param: format!("#{i}"),
                epoch: 0,
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - libm::pow(BETA1, t as f64);
    let bc2 = 1.0 - libm::pow(BETA2, t as f64);
    let decay = 1.0 - lr * weight_decay;
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g)
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mv = BETA1 * *mv + (1.0 - BETA1) * gv;
            *vv = BETA2 * *vv + (1.0 - BETA2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *pv *= decay;
            *pv -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPS);
        }
    }
    Ok(())
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// Best-threshold validation F1 and MCC (percent), when a validation set
    /// was supplied.
    pub val_f1: Option<f64>,
    pub val_mcc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
}

fn class_counts(data: &[EncodedWindow]) -> (usize, usize) {
    let positives = data.iter().filter(|w| w.label).count();
    (positives, data.len() - positives)
}

/// Loss value and parameter gradients for one batch.
pub fn batch_gradients(
    params: &ModelParams,
    loss: &LossSpec,
    batch: &[&EncodedWindow],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, true);
    let pred = forward(params.config(), &mut g, &vars, batch)?;
    let y = g.constant(Tensor::vector(
        batch
            .iter()
            .map(|w| if w.label { 1.0 } else { 0.0 })
            .collect(),
    ));
    let l = loss.apply(&mut g, pred, y)?;
    g.backward(l)?;
    let grads = vars
        .iter()
        .zip(params.tensors())
        .map(|(v, t)| {
            g.grad(*v)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; t.numel()])
        })
        .collect();
    Ok((g.item(l), grads))
}

fn clip_global_norm(grads: &mut [Vec<f64>], max_norm: f64) {
    let norm = libm::sqrt(grads.iter().flatten().map(|g| g * g).sum::<f64>());
    if norm > max_norm {
        let scale = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= scale);
    }
}

/// Trains a freshly initialised model.
pub fn train(
    model: &ModelConfig,
    config: &TrainConfig,
    data: &[EncodedWindow],
    validation: Option<&[EncodedWindow]>,
) -> Result<Trained> {
    model.validate()?;
    let params = ModelParams::init(model, derive_seed(config.seed, INIT_TAG))?;
    train_from(params, config, data, validation)
}

/// Continues optimisation of `params` with a fresh optimizer state.
pub fn train_from(
    mut params: ModelParams,
    config: &TrainConfig,
    data: &[EncodedWindow],
    validation: Option<&[EncodedWindow]>,
) -> Result<Trained> {
    config.validate()?;
    let (positives, negatives) = class_counts(data);
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }
    let mut state = OptimizerState::new(params.tensors());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = cosine_lr(epoch, config.epochs, config.lr);
        if config.shuffle {
            order.sort_unstable();
            order.shuffle(&mut seeded(derive_seed(
                derive_seed(config.seed, SHUFFLE_TAG),
                epoch as u64,
            )));
        }
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&EncodedWindow> = chunk.iter().map(|&i| &data[i]).collect();
            let (loss, mut grads) = batch_gradients(&params, &config.loss, &batch)?;
            if let Some(bad) = grads.iter().position(|g| g.iter().any(|x| !x.is_finite())) {
                return Err(Error::NonFinite {
                    param: params.names()[bad].clone(),
                    epoch,
                });
            }
            if let Some(c) = config.clip_norm {
                clip_global_norm(&mut grads, c);
            }
            adamw_step(
                params.tensors_mut(),
                &grads,
                &mut state,
                lr,
                config.weight_decay,
            )?;
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / data.len() as f64;
        let (val_f1, val_mcc) = match validation {
            Some(val) if !val.is_empty() => {
                let scores = params.predict(val, EVAL_CHUNK)?;
                let labels: Vec<bool> = val.iter().map(|w| w.label).collect();
                let best = *sweep(&scores, &labels, &default_thresholds()).best_point();
                (Some(best.f1), Some(best.mcc))
            }
            _ => (None, None),
        };
        log.push(EpochLog {
            epoch,
            lr,
            train_loss,
            val_f1,
            val_mcc,
        });
    }
    Ok(Trained { params, log })
}

/// Re-optimises trained parameters under `tune`'s loss and learning rate,
/// keeping the batch size, weight decay and seed lineage of `base`.
pub fn fine_tune(
    params: &ModelParams,
    base: &TrainConfig,
    tune: &FineTune,
    data: &[EncodedWindow],
    validation: Option<&[EncodedWindow]>,
) -> Result<Trained> {
    if tune.epochs == 0 {
        return Ok(Trained {
            params: params.clone(),
            log: Vec::new(),
        });
    }
    let config = TrainConfig {
        epochs: tune.epochs,
        lr: tune.lr,
        loss: tune.loss,
        seed: derive_seed(base.seed, 0xF1AE),
        ..base.clone()
    };
    train_from(params.clone(), &config, data, validation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::encode_sequence;

    #[test]
    fn cosine_schedule_values() {
        assert_eq!(cosine_lr(0, 70, 1e-3), 1e-3);
        assert!((cosine_lr(35, 70, 1e-3) - 0.5e-3).abs() < 1e-15);
        let last = cosine_lr(69, 70, 1e-3);
        // ½(1 + cos(69π/70)) evaluated independently.
        let expected = 0.5e-3 * (1.0 + (69.0 * core::f64::consts::PI / 70.0).cos());
        assert!((last - expected).abs() < 1e-15);
        assert!(last > 0.0 && last < 0.05e-3);
    }

    #[test]
    fn zero_gradient_without_decay_changes_nothing() {
        let mut p = vec![Tensor::vector(vec![0.3, -1.2])];
        let before = p.clone();
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &[vec![0.0, 0.0]], &mut s, 1e-3, 0.0).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn decay_only_step() {
        let mut p = vec![Tensor::vector(vec![2.0])];
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &[vec![0.0]], &mut s, 1e-3, 0.1).unwrap();
        assert!((p[0].data()[0] - 2.0 * (1.0 - 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn single_scalar_step_matches_hand_arithmetic() {
        // p=0.5, g=0.2, lr=0.01, λ=0.01, first step.
        // m = 0.02, v = 4e-5, m̂ = 0.2, v̂ = 0.04, √v̂ = 0.2
        // p ← 0.5·(1 − 1e-4) − 0.01·0.2/(0.2 + 1e-8)
        let expected = 0.5 * (1.0 - 1e-4) - 0.01 * 0.2 / (0.2 + 1e-8);
        let mut p = vec![Tensor::vector(vec![0.5])];
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &[vec![0.2]], &mut s, 0.01, 0.01).unwrap();
        assert!((p[0].data()[0] - expected).abs() < 1e-12);
        assert!((s.m[0][0] - 0.02).abs() < 1e-15);
        assert!((s.v[0][0] - 4e-5).abs() < 1e-18);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut p = vec![Tensor::vector(vec![0.5])];
        let mut s = OptimizerState::new(&p);
        assert!(matches!(
            adamw_step(&mut p, &[vec![f64::NAN]], &mut s, 0.01, 0.0),
            Err(Error::NonFinite { .. })
        ));
    }

    fn toy(n: usize) -> Vec<EncodedWindow> {
        // Label is carried by the residue right after the center.
        (0..n)
            .map(|i| {
                let pos = i % 4 == 0;
                let s = if pos { "AAAAASWAAAA" } else { "AAAAASGAAAA" };
                let mut s: Vec<u8> = s.bytes().collect();
                s[i % 5] = b"CDEFK"[i % 5];
                encode_sequence(core::str::from_utf8(&s).unwrap(), pos)
            })
            .collect()
    }

    fn cfg(loss: LossSpec) -> TrainConfig {
        TrainConfig {
            epochs: 3,
            lr: 1e-2,
            weight_decay: 0.01,
            batch_size: 8,
            loss,
            seed: 5,
            shuffle: true,
            clip_norm: None,
        }
    }

    #[test]
    fn single_class_data_is_refused() {
        let data: Vec<EncodedWindow> = toy(20).into_iter().filter(|w| !w.label).collect();
        let m = ModelConfig::new(5, vec![4], 0);
        assert!(matches!(
            train(&m, &cfg(LossSpec::WeightedCe { w_pos: 2.0 }), &data, None),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn training_is_seed_deterministic_and_finite() {
        let data = toy(40);
        let m = ModelConfig::new(5, vec![4], 0);
        let c = cfg(LossSpec::DiffMcc { w: 2.0, gamma: 2.0 });
        let a = train(&m, &c, &data, Some(&data)).unwrap();
        let b = train(&m, &c, &data, Some(&data)).unwrap();
        assert_eq!(a, b);
        assert!(a.log.iter().all(|e| e.train_loss.is_finite()));
        assert!(a.log.iter().all(|e| e.val_f1.is_some()));
        assert_eq!(a.log.len(), 3);
    }

    #[test]
    fn fine_tune_zero_epochs_is_identity() {
        let data = toy(24);
        let m = ModelConfig::new(5, vec![4], 0);
        let c = cfg(LossSpec::WeightedCe { w_pos: 3.0 });
        let base = train(&m, &c, &data, None).unwrap();
        let tune = FineTune {
            loss: LossSpec::DiffMcc { w: 2.0, gamma: 2.0 },
            lr: 1e-3,
            epochs: 0,
        };
        let tuned = fine_tune(&base.params, &c, &tune, &data, None).unwrap();
        assert_eq!(tuned.params, base.params);
    }

    #[test]
    fn fine_tune_starts_from_fresh_optimizer_state() {
        let data = toy(24);
        let m = ModelConfig::new(5, vec![4], 0);
        let c = TrainConfig {
            batch_size: 64,
            shuffle: false,
            ..cfg(LossSpec::WeightedCe { w_pos: 3.0 })
        };
        let base = train(&m, &c, &data, None).unwrap();
        let tune = FineTune {
            loss: LossSpec::DiffMcc { w: 2.0, gamma: 2.0 },
            lr: 5e-3,
            epochs: 1,
        };
        let tuned = fine_tune(&base.params, &c, &tune, &data, None).unwrap();

        let batch: Vec<&EncodedWindow> = data.iter().collect();
        let (_, grads) = batch_gradients(&base.params, &tune.loss, &batch).unwrap();
        let mut manual = base.params.clone();
        let mut fresh = OptimizerState::new(manual.tensors());
        adamw_step(
            manual.tensors_mut(),
            &grads,
            &mut fresh,
            5e-3,
            c.weight_decay,
        )
        .unwrap();
        assert_eq!(tuned.params, manual);
    }

    #[test]
    fn zero_gradient_with_decay_still_moves_parameters() {
        let mut p = vec![Tensor::vector(vec![1.0, -1.0])];
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &[vec![0.0, 0.0]], &mut s, 0.1, 0.5).unwrap();
        assert_eq!(p[0].data(), &[0.95, -0.95]);
    }

    #[test]
    fn clipping_bounds_the_global_norm() {
        let mut g = vec![vec![3.0, 0.0], vec![4.0]];
        clip_global_norm(&mut g, 1.0);
        let n: f64 = g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }
}
