//! Differentiable losses over a batch of predicted probabilities.
//!
//! All four losses take `pred` (shape `[B]`, probabilities) and `y`
//! (shape `[B]`, 0/1 targets) as graph nodes and return a scalar node.
//!
//! The weighted focal differentiable MCC builds soft confusion counts from
//! `p_t`, the probability assigned to the correct class:
//!
//! ```text
//! p_t = pred·y + (1 − pred)·(1 − y)
//! TP  = Σ (p_t)^γ · y · W        FN = Σ (1 − p_t)^γ · y · W
//! FP  = Σ (1 − p_t)^γ · (1 − y)  TN = Σ (p_t)^γ · (1 − y)
//! loss = −(TP·TN − FP·FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN) + ε)
//! ```
//!
//! `W` scales only the positive-class counts.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::{diagnostics, Error, Result};

/// Guard added under the MCC square root and the F1 denominator.
pub const DENOM_EPS: f64 = 1e-12;
/// Predictions are clamped to `[PROB_EPS, 1 − PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

/// Loss selection with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    WeightedCe { w_pos: f64 },
    Focal { alpha: f64, gamma: f64 },
    DiffF1 { w: f64, gamma: f64 },
    DiffMcc { w: f64, gamma: f64 },
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("{self:?}: {msg}")));
        match *self {
            LossSpec::WeightedCe { w_pos } if !(w_pos > 0.0 && w_pos.is_finite()) => {
                bad("w_pos must be positive")
            }
            LossSpec::Focal { alpha, .. } if !(alpha > 0.0 && alpha < 1.0) => {
                bad("alpha must lie in (0, 1)")
            }
            LossSpec::Focal { gamma, .. } if !(gamma >= 0.0 && gamma.is_finite()) => {
                bad("gamma must be >= 0")
            }
            LossSpec::DiffF1 { w, gamma } | LossSpec::DiffMcc { w, gamma } => {
                if !(w > 0.0 && w.is_finite()) {
                    bad("W must be positive")
                } else if !(gamma >= 1.0 && gamma.is_finite()) {
                    bad("gamma must be >= 1")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Builds the loss node.
    pub fn apply(&self, g: &mut Graph, pred: Var, y: Var) -> Result<Var> {
        match *self {
            LossSpec::WeightedCe { w_pos } => weighted_ce(g, pred, y, w_pos),
            LossSpec::Focal { alpha, gamma } => focal(g, pred, y, alpha, gamma),
            LossSpec::DiffF1 { w, gamma } => diff_f1_loss(g, pred, y, w, gamma),
            LossSpec::DiffMcc { w, gamma } => diff_mcc_loss(g, pred, y, w, gamma),
        }
    }

    /// Short label used in run identities and logs.
    pub fn label(&self) -> alloc::string::String {
        match *self {
            LossSpec::WeightedCe { w_pos } => format!("ce(w={w_pos})"),
            LossSpec::Focal { alpha, gamma } => format!("focal(a={alpha},g={gamma})"),
            LossSpec::DiffF1 { w, gamma } => format!("diff_f1(W={w},g={gamma})"),
            LossSpec::DiffMcc { w, gamma } => format!("diff_mcc(W={w},g={gamma})"),
        }
    }
}

fn check_batch(g: &Graph, pred: Var, y: Var) -> Result<usize> {
    let (sp, sy) = (g.shape(pred), g.shape(y));
    if sp.len() != 1 || sp != sy {
        return Err(Error::Shape {
            op: "loss",
            left: sp.to_vec(),
            right: sy.to_vec(),
        });
    }
    if sp[0] == 0 {
        return Err(Error::Contract("loss over an empty batch".into()));
    }
    Ok(sp[0])
}

/// `−mean(w_pos·y·log p + (1−y)·log(1−p))` with `p` clamped.
pub fn weighted_ce(g: &mut Graph, pred: Var, y: Var, w_pos: f64) -> Result<Var> {
    check_batch(g, pred, y)?;
    let p = g.clamp(pred, PROB_EPS, 1.0 - PROB_EPS);
    let log_p = g.log(p)?;
    let one_minus_p = g.rsub_scalar(1.0, p);
    let log_q = g.log(one_minus_p)?;
    let wy = g.mul_scalar(y, w_pos);
    let pos = g.mul(wy, log_p)?;
    let one_minus_y = g.rsub_scalar(1.0, y);
    let neg = g.mul(one_minus_y, log_q)?;
    let total = g.add(pos, neg)?;
    let m = g.mean(total);
    Ok(g.neg(m))
}

/// `p_t = pred·y + (1 − pred)·(1 − y)`.
pub fn p_correct(g: &mut Graph, pred: Var, y: Var) -> Result<Var> {
    let a = g.mul(pred, y)?;
    let q = g.rsub_scalar(1.0, pred);
    let ny = g.rsub_scalar(1.0, y);
    let b = g.mul(q, ny)?;
    g.add(a, b)
}

/// `−mean(α_t·(1−p_t)^γ·log p_t)` with `α_t = α` on positives and `1−α` on
/// negatives.
pub fn focal(g: &mut Graph, pred: Var, y: Var, alpha: f64, gamma: f64) -> Result<Var> {
    check_batch(g, pred, y)?;
    let p = g.clamp(pred, PROB_EPS, 1.0 - PROB_EPS);
    let pt = p_correct(g, p, y)?;
    let alpha_t: Vec<f64> = g
        .value(y)
        .data()
        .iter()
        .map(|&t| alpha * t + (1.0 - alpha) * (1.0 - t))
        .collect();
    let alpha_t = g.constant(Tensor::vector(alpha_t));
    let one_minus_pt = g.rsub_scalar(1.0, pt);
    let modulating = g.pow(one_minus_pt, gamma)?;
    let log_pt = g.log(pt)?;
    let weighted = g.mul(alpha_t, modulating)?;
    let term = g.mul(weighted, log_pt)?;
    let m = g.mean(term);
    Ok(g.neg(m))
}

/// Soft confusion counts as scalar graph nodes.
#[derive(Debug, Clone, Copy)]
pub struct SoftConfusion {
    pub tp: Var,
    pub fn_: Var,
    pub fp: Var,
    pub tn: Var,
}

impl SoftConfusion {
    pub fn values(&self, g: &Graph) -> [f64; 4] {
        [
            g.item(self.tp),
            g.item(self.fn_),
            g.item(self.fp),
            g.item(self.tn),
        ]
    }
}

pub fn soft_confusion(
    g: &mut Graph,
    pred: Var,
    y: Var,
    w: f64,
    gamma: f64,
) -> Result<SoftConfusion> {
    check_batch(g, pred, y)?;
    let pt = p_correct(g, pred, y)?;
    let pt_g = g.pow(pt, gamma)?;
    let miss = g.rsub_scalar(1.0, pt);
    let miss_g = g.pow(miss, gamma)?;
    let ny = g.rsub_scalar(1.0, y);

    let tp = g.mul(pt_g, y)?;
    let tp = g.sum(tp);
    let tp = g.mul_scalar(tp, w);
    let fn_ = g.mul(miss_g, y)?;
    let fn_ = g.sum(fn_);
    let fn_ = g.mul_scalar(fn_, w);
    let fp = g.mul(miss_g, ny)?;
    let fp = g.sum(fp);
    let tn = g.mul(pt_g, ny)?;
    let tn = g.sum(tn);
    Ok(SoftConfusion { tp, fn_, fp, tn })
}

fn note_if_single_class(g: &Graph, y: Var) {
    let ys = g.value(y).data();
    let positives = ys.iter().filter(|&&t| t > 0.5).count();
    if positives == 0 || positives == ys.len() {
        diagnostics::note_single_class_batch();
    }
}

/// Weighted focal differentiable MCC, negated.
pub fn diff_mcc_loss(g: &mut Graph, pred: Var, y: Var, w: f64, gamma: f64) -> Result<Var> {
    let c = soft_confusion(g, pred, y, w, gamma)?;
    note_if_single_class(g, y);
    let a = g.mul(c.tp, c.tn)?;
    let b = g.mul(c.fp, c.fn_)?;
    let numerator = g.sub(a, b)?;
    let tp_fp = g.add(c.tp, c.fp)?;
    let tp_fn = g.add(c.tp, c.fn_)?;
    let tn_fp = g.add(c.tn, c.fp)?;
    let tn_fn = g.add(c.tn, c.fn_)?;
    let d = g.mul(tp_fp, tp_fn)?;
    let d = g.mul(d, tn_fp)?;
    let d = g.mul(d, tn_fn)?;
    let d = g.add_scalar(d, DENOM_EPS);
    let denominator = g.sqrt(d)?;
    let mcc = g.div(numerator, denominator)?;
    Ok(g.neg(mcc))
}

/// Differentiable F1 from the same soft counts, negated.
pub fn diff_f1_loss(g: &mut Graph, pred: Var, y: Var, w: f64, gamma: f64) -> Result<Var> {
    let c = soft_confusion(g, pred, y, w, gamma)?;
    note_if_single_class(g, y);
    let two_tp = g.mul_scalar(c.tp, 2.0);
    let d = g.add(two_tp, c.fp)?;
    let d = g.add(d, c.fn_)?;
    let d = g.add_scalar(d, DENOM_EPS);
    let f1 = g.div(two_tp, d)?;
    Ok(g.neg(f1))
}

/// Evaluates `spec` on plain slices. Convenience for tests and tooling.
pub fn loss_value(spec: &LossSpec, pred: &[f64], y: &[f64]) -> Result<f64> {
    let mut g = Graph::new();
    let p = g.constant(Tensor::vector(pred.to_vec()));
    let t = g.constant(Tensor::vector(y.to_vec()));
    let l = spec.apply(&mut g, p, t)?;
    Ok(g.item(l))
}

/// Loss value and its gradient with respect to `pred`.
pub fn loss_and_grad(spec: &LossSpec, pred: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut g = Graph::new();
    let p = g.param(Tensor::vector(pred.to_vec()));
    let t = g.constant(Tensor::vector(y.to_vec()));
    let l = spec.apply(&mut g, p, t)?;
    g.backward(l)?;
    let grad = g
        .grad(p)
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| alloc::vec![0.0; pred.len()]);
    Ok((g.item(l), grad))
}
