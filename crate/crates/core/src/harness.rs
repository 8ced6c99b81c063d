//! Cross-validation, grid search, held-out evaluation and nested validation.
//!
//! Learners only ever see materialised windows built from index lists that
//! the harness chooses, and every such read is recorded in an [`AuditLog`].
//! Jobs run through a [`Runner`]; their audit entries come back with the
//! result and are appended by the coordinating `Harness` alone.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{encode, make_nested_splits, DatasetSplit, EncodedWindow, SiteRecord, FOLDS};
use crate::metrics::{default_thresholds, mean_std, sweep, MetricPoint, PrCurve};
use crate::model::{ModelConfig, ModelParams};
use crate::rng::derive_seed;
use crate::train::{fine_tune, train, EpochLog, FineTune, TrainConfig};
use crate::{Error, Result};

/// Chunk size for inference passes.
const SCORE_CHUNK: usize = 512;
/// Seed tag for the final retrain on the whole training split.
const RETRAIN_TAG: u64 = 0xF17A1;

/// Executes `n` independent jobs and returns results in job order.
pub trait Runner: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Runner for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}

/// Scores windows with a fitted model.
pub trait Scorer {
    fn score(&self, windows: &[EncodedWindow]) -> Result<Vec<f64>>;
}

/// A trainable configuration.
pub trait Learner: Sync {
    type Fitted: Scorer + Send;

    /// Half-width the learner consumes.
    fn window(&self) -> usize;
    /// Stable identity used in rankings and result files.
    fn label(&self) -> String;
    fn fit(&self, train: &[EncodedWindow], seed: u64) -> Result<Self::Fitted>;
}

/// Stacked-LSTM candidate: base training plus optional fine-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLearner {
    pub model: ModelConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub fine_tune: Option<FineTune>,
}

/// A trained LSTM with its per-epoch logs.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedLstm {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
    pub fine_tune_log: Vec<EpochLog>,
}

impl Scorer for FittedLstm {
    fn score(&self, windows: &[EncodedWindow]) -> Result<Vec<f64>> {
        self.params.predict(windows, SCORE_CHUNK)
    }
}

impl Scorer for ModelParams {
    fn score(&self, windows: &[EncodedWindow]) -> Result<Vec<f64>> {
        self.predict(windows, SCORE_CHUNK)
    }
}

impl LstmLearner {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if let Some(ft) = &self.fine_tune {
            ft.loss.validate()?;
            if !(ft.lr > 0.0) {
                return Err(Error::Config("fine-tune learning rate must be > 0".into()));
            }
        }
        Ok(())
    }
}

impl Learner for LstmLearner {
    type Fitted = FittedLstm;

    fn window(&self) -> usize {
        self.model.window
    }

    fn label(&self) -> String {
        let mut s = format!("{} {}", self.model.label(), self.train.label());
        if let Some(ft) = &self.fine_tune {
            s.push_str(&format!(
                " then {} lr={} epochs={}",
                ft.loss.label(),
                ft.lr,
                ft.epochs
            ));
        }
        s
    }

    fn fit(&self, data: &[EncodedWindow], seed: u64) -> Result<FittedLstm> {
        let cfg = TrainConfig {
            seed,
            ..self.train.clone()
        };
        let base = train(&self.model, &cfg, data, None)?;
        match &self.fine_tune {
            Some(ft) => {
                let tuned = fine_tune(&base.params, &cfg, ft, data, None)?;
                Ok(FittedLstm {
                    params: tuned.params,
                    log: base.log,
                    fine_tune_log: tuned.log,
                })
            }
            None => Ok(FittedLstm {
                params: base.params,
                log: base.log,
                fine_tune_log: Vec::new(),
            }),
        }
    }
}

/// Candidate values; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub windows: Vec<usize>,
    pub lstm_sizes: Vec<Vec<usize>>,
    pub mlp_sizes: Vec<usize>,
    pub lrs: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub losses: Vec<crate::losses::LossSpec>,
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fine_tune: Option<FineTune>,
}

impl GridSpec {
    /// All combinations, validated, in a fixed nested order.
    pub fn candidates(&self) -> Result<Vec<LstmLearner>> {
        let mut out = Vec::new();
        for &window in &self.windows {
            for sizes in &self.lstm_sizes {
                for &mlp in &self.mlp_sizes {
                    for &lr in &self.lrs {
                        for &wd in &self.weight_decays {
                            for &bs in &self.batch_sizes {
                                for loss in &self.losses {
                                    let c = LstmLearner {
                                        model: ModelConfig::new(window, sizes.clone(), mlp),
                                        train: TrainConfig {
                                            epochs: self.epochs,
                                            lr,
                                            weight_decay: wd,
                                            batch_size: bs,
                                            loss: *loss,
                                            seed: self.seed,
                                            shuffle: true,
                                            clip_norm: None,
                                        },
                                        fine_tune: self.fine_tune,
                                    };
                                    c.validate()?;
                                    out.push(c);
                                }
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("grid has an empty axis".into()));
        }
        Ok(out)
    }
}

/// Records backed by stored-width windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<SiteRecord>,
}

impl Dataset {
    pub fn new(records: Vec<SiteRecord>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[SiteRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Encodes the records at `indices`, center-cropped to half-width `w`.
    pub fn windows(&self, indices: &[usize], w: usize) -> Result<Vec<EncodedWindow>> {
        indices
            .iter()
            .map(|&i| {
                let r = self.records.get(i).ok_or(Error::Bounds {
                    op: "dataset index",
                    start: i,
                    end: i + 1,
                    len: self.records.len(),
                })?;
                Ok(encode(&r.cropped(w)?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Train,
    Validate,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Which job produced the read, e.g. `cv fold 3`.
    pub job: String,
    pub phase: Phase,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditLog {
    entries: Vec<AuditEntry>,
}

impl AuditLog {
    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    fn extend(&mut self, more: Vec<AuditEntry>) {
        self.entries.extend(more);
    }

    /// Number of training reads that touched any index in `held_out`.
    pub fn train_reads_of(&self, held_out: &[usize]) -> usize {
        let mut sorted = held_out.to_vec();
        sorted.sort_unstable();
        self.entries
            .iter()
            .filter(|e| e.phase == Phase::Train)
            .flat_map(|e| e.indices.iter())
            .filter(|i| sorted.binary_search(i).is_ok())
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub label: String,
    /// Best-F1 point of each held-out fold, in fold order.
    pub folds: Vec<MetricPoint>,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_mcc: f64,
    pub std_mcc: f64,
    /// Diagnostics for the first failing fold, if any.
    pub failure: Option<String>,
}

impl CvResult {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    fn aggregate(label: String, outcomes: Vec<Result<MetricPoint>>) -> Self {
        let mut folds = Vec::with_capacity(outcomes.len());
        let mut failure = None;
        for (k, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(p) => folds.push(p),
                Err(e) => {
                    if failure.is_none() {
                        failure = Some(format!("fold {k}: {e}"));
                    }
                }
            }
        }
        let f1: Vec<f64> = folds.iter().map(|p| p.f1).collect();
        let mcc: Vec<f64> = folds.iter().map(|p| p.mcc).collect();
        let (mean_f1, std_f1) = mean_std(&f1);
        let (mean_mcc, std_mcc) = mean_std(&mcc);
        Self {
            label,
            folds,
            mean_f1,
            std_f1,
            mean_mcc,
            std_mcc,
            failure,
        }
    }
}

/// Ranking order: successes first, then mean F1 descending, mean MCC
/// descending, label ascending.
pub fn rank_order(a: &CvResult, b: &CvResult) -> Ordering {
    a.failed()
        .cmp(&b.failed())
        .then_with(|| b.mean_f1.total_cmp(&a.mean_f1))
        .then_with(|| b.mean_mcc.total_cmp(&a.mean_mcc))
        .then_with(|| a.label.cmp(&b.label))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestEvaluation<M> {
    pub model: M,
    pub scores: Vec<f64>,
    pub curve: PrCurve,
    pub seed: u64,
}

impl<M> TestEvaluation<M> {
    pub fn best(&self) -> &MetricPoint {
        self.curve.best_point()
    }
}

/// Mean and population σ of each metric over the outer folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedSummary {
    pub threshold: (f64, f64),
    pub recall: (f64, f64),
    pub precision: (f64, f64),
    pub f1: (f64, f64),
    pub mcc: (f64, f64),
}

impl NestedSummary {
    pub fn from_points(points: &[MetricPoint]) -> Self {
        let col = |f: fn(&MetricPoint) -> f64| mean_std(&points.iter().map(f).collect::<Vec<_>>());
        Self {
            threshold: col(|p| p.threshold),
            recall: col(|p| p.recall),
            precision: col(|p| p.precision),
            f1: col(|p| p.f1),
            mcc: col(|p| p.mcc),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedResult {
    pub splits: Vec<DatasetSplit>,
    pub curves: Vec<PrCurve>,
    pub summary: NestedSummary,
}

/// Seed for CV fold `k` of a run.
pub fn fold_seed(run_seed: u64, k: usize) -> u64 {
    derive_seed(run_seed, k as u64)
}

/// Seed for the retrain on a full training split.
pub fn retrain_seed(run_seed: u64) -> u64 {
    derive_seed(run_seed, RETRAIN_TAG)
}

pub struct Harness<'a, R: Runner> {
    data: &'a Dataset,
    runner: R,
    thresholds: Vec<f64>,
    audit: AuditLog,
}

type Job<T> = (Result<T>, Vec<AuditEntry>);

fn read(job: &str, phase: Phase, indices: &[usize]) -> AuditEntry {
    AuditEntry {
        job: job.to_string(),
        phase,
        indices: indices.to_vec(),
    }
}

impl<'a, R: Runner> Harness<'a, R> {
    pub fn new(data: &'a Dataset, runner: R) -> Self {
        Self {
            data,
            runner,
            thresholds: default_thresholds(),
            audit: AuditLog::default(),
        }
    }

    /// Replaces the threshold grid. Values must be strictly increasing.
    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "thresholds must be non-empty and strictly increasing".into(),
            ));
        }
        self.thresholds = thresholds;
        Ok(self)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    /// Trains on `train_idx`, scores `eval_idx`, sweeps thresholds.
    #[allow(clippy::too_many_arguments)]
    fn fit_and_score<L: Learner>(
        data: &Dataset,
        thresholds: &[f64],
        learner: &L,
        job: &str,
        train_idx: &[usize],
        eval_idx: &[usize],
        eval_phase: Phase,
        seed: u64,
    ) -> Job<TestEvaluation<L::Fitted>> {
        let mut audit = Vec::with_capacity(2);
        let result = (|| {
            let train_windows = data.windows(train_idx, learner.window())?;
            audit.push(read(job, Phase::Train, train_idx));
            let model = learner.fit(&train_windows, seed)?;
            drop(train_windows);
            let eval_windows = data.windows(eval_idx, learner.window())?;
            audit.push(read(job, eval_phase, eval_idx));
            let scores = model.score(&eval_windows)?;
            let labels: Vec<bool> = eval_windows.iter().map(|w| w.label).collect();
            let curve = sweep(&scores, &labels, thresholds);
            Ok(TestEvaluation {
                model,
                scores,
                curve,
                seed,
            })
        })();
        (result, audit)
    }

    fn check_split(&self, split: &DatasetSplit) -> Result<()> {
        if split.folds.len() != FOLDS {
            return Err(Error::Contract(format!(
                "split has {} folds, expected {FOLDS}",
                split.folds.len()
            )));
        }
        if split
            .train
            .iter()
            .chain(&split.test)
            .any(|&i| i >= self.data.len())
        {
            return Err(Error::Contract("split indexes past the dataset".into()));
        }
        Ok(())
    }

    /// Five-fold CV of one learner over the training part of `split`.
    pub fn run_cv<L: Learner>(&mut self, learner: &L, split: &DatasetSplit) -> Result<CvResult> {
        Ok(self
            .run_cv_many(core::slice::from_ref(learner), split)?
            .remove(0))
    }

    /// CV for several learners, all `(learner, fold)` jobs flattened into one
    /// runner call. Results are in learner order.
    fn run_cv_many<L: Learner>(
        &mut self,
        learners: &[L],
        split: &DatasetSplit,
    ) -> Result<Vec<CvResult>> {
        self.check_split(split)?;
        let (data, thresholds) = (self.data, self.thresholds.as_slice());
        let fold_train: Vec<Vec<usize>> = (0..FOLDS).map(|k| split.fold_train(k)).collect();
        let jobs = self.runner.map(learners.len() * FOLDS, |j| {
            let (c, k) = (j / FOLDS, j % FOLDS);
            let (r, audit) = Self::fit_and_score(
                data,
                thresholds,
                &learners[c],
                &format!("cv candidate {c} fold {k}"),
                &fold_train[k],
                &split.folds[k],
                Phase::Validate,
                fold_seed(split.seed, k),
            );
            (r.map(|e| *e.best()), audit)
        });
        let mut per: Vec<Vec<Result<MetricPoint>>> = learners.iter().map(|_| Vec::new()).collect();
        for (j, (r, audit)) in jobs.into_iter().enumerate() {
            self.audit.extend(audit);
            per[j / FOLDS].push(r);
        }
        Ok(learners
            .iter()
            .zip(per)
            .map(|(l, o)| CvResult::aggregate(l.label(), o))
            .collect())
    }

    /// CV every candidate that `keep` accepts and rank the results.
    pub fn grid_search<L: Learner + Clone>(
        &mut self,
        candidates: &[L],
        keep: impl Fn(&L) -> bool,
        split: &DatasetSplit,
    ) -> Result<Vec<CvResult>> {
        let kept: Vec<L> = candidates.iter().filter(|c| keep(c)).cloned().collect();
        if kept.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut results = self.run_cv_many(&kept, split)?;
        results.sort_by(rank_order);
        Ok(results)
    }

    /// Retrains on the whole training split and sweeps the test split.
    pub fn evaluate_test<L: Learner>(
        &mut self,
        learner: &L,
        split: &DatasetSplit,
    ) -> Result<TestEvaluation<L::Fitted>> {
        self.check_split(split)?;
        let (r, audit) = Self::fit_and_score(
            self.data,
            &self.thresholds,
            learner,
            "test",
            &split.train,
            &split.test,
            Phase::Test,
            retrain_seed(split.seed),
        );
        self.audit.extend(audit);
        r
    }

    /// Held-out evaluation on each of five outer splits whose test sets
    /// partition the data.
    pub fn nested_validation<L: Learner>(
        &mut self,
        learner: &L,
        seed: u64,
    ) -> Result<NestedResult> {
        let splits = make_nested_splits(&self.data.labels(), seed)?;
        let (data, thresholds) = (self.data, self.thresholds.as_slice());
        let jobs = self.runner.map(splits.len(), |k| {
            let s = &splits[k];
            Self::fit_and_score(
                data,
                thresholds,
                learner,
                &format!("nested outer {k}"),
                &s.train,
                &s.test,
                Phase::Test,
                retrain_seed(s.seed),
            )
        });
        let mut curves = Vec::with_capacity(jobs.len());
        for (r, audit) in jobs {
            self.audit.extend(audit);
            curves.push(r?.curve);
        }
        let bests: Vec<MetricPoint> = curves.iter().map(|c| *c.best_point()).collect();
        Ok(NestedResult {
            summary: NestedSummary::from_points(&bests),
            splits,
            curves,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_split;
    use crate::losses::LossSpec;
    use crate::metrics::{confusion, point_metrics};
    use alloc::vec;

    /// Predicts the same probability for every window.
    #[derive(Clone)]
    struct Constant(f64, &'static str);

    impl Scorer for f64 {
        fn score(&self, w: &[EncodedWindow]) -> Result<Vec<f64>> {
            Ok(vec![*self; w.len()])
        }
    }

    impl Learner for Constant {
        type Fitted = f64;
        fn window(&self) -> usize {
            5
        }
        fn label(&self) -> String {
            self.1.into()
        }
        fn fit(&self, _: &[EncodedWindow], _: u64) -> Result<f64> {
            Ok(self.0)
        }
    }

    /// Scores 1 when the residue after the center is `W`.
    #[derive(Clone)]
    struct Oracle;

    struct OracleFit;

    impl Scorer for OracleFit {
        fn score(&self, w: &[EncodedWindow]) -> Result<Vec<f64>> {
            Ok(w.iter()
                .map(|x| {
                    if crate::data::decode(x).as_bytes()[6] == b'W' {
                        0.9
                    } else {
                        0.1
                    }
                })
                .collect())
        }
    }

    impl Learner for Oracle {
        type Fitted = OracleFit;
        fn window(&self) -> usize {
            5
        }
        fn label(&self) -> String {
            "oracle".into()
        }
        fn fit(&self, _: &[EncodedWindow], _: u64) -> Result<OracleFit> {
            Ok(OracleFit)
        }
    }

    /// Fails whenever it sees an odd seed.
    #[derive(Clone)]
    struct Flaky;

    impl Learner for Flaky {
        type Fitted = f64;
        fn window(&self) -> usize {
            5
        }
        fn label(&self) -> String {
            "flaky".into()
        }
        fn fit(&self, _: &[EncodedWindow], seed: u64) -> Result<f64> {
            if seed % 2 == 1 {
                Err(Error::Contract("odd seed".into()))
            } else {
                Ok(0.5)
            }
        }
    }

    struct Reversed;

    impl Runner for Reversed {
        fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
        where
            T: Send,
            F: Fn(usize) -> T + Sync,
        {
            let mut out: Vec<(usize, T)> = (0..n).rev().map(|i| (i, f(i))).collect();
            out.reverse();
            out.into_iter().map(|(_, t)| t).collect()
        }
    }

    fn toy(n: usize) -> Dataset {
        let recs = (0..n)
            .map(|i| {
                let pos = i % 5 == 0;
                let mut s = *b"AAAAASGAAAA";
                if pos {
                    s[6] = b'W';
                }
                s[i % 5] = b"CDEFK"[(i / 5) % 5];
                SiteRecord::new(String::from_utf8(s.to_vec()).unwrap(), pos, i).unwrap()
            })
            .collect();
        Dataset::new(recs)
    }

    #[test]
    fn constant_model_matches_fold_base_rate() {
        let data = toy(100);
        let split = make_split(&data.labels(), 0).unwrap();
        let mut h = Harness::new(&data, Sequential);
        let r = h.run_cv(&Constant(1.0, "c"), &split).unwrap();
        assert_eq!(r.folds.len(), 5);
        for (k, p) in r.folds.iter().enumerate() {
            let y: Vec<bool> = split.folds[k]
                .iter()
                .map(|&i| data.records()[i].label)
                .collect();
            let all = point_metrics(&confusion(&vec![1.0; y.len()], &y, 0.0));
            assert_eq!(p.f1, all.f1);
            assert_eq!(p.mcc, 0.0);
        }
        let mean = r.folds.iter().map(|p| p.f1).sum::<f64>() / 5.0;
        assert!((r.mean_f1 - mean).abs() < 1e-12);
    }

    #[test]
    fn separable_data_reaches_full_cv_f1() {
        let data = toy(100);
        let split = make_split(&data.labels(), 1).unwrap();
        let mut h = Harness::new(&data, Sequential);
        let r = h.run_cv(&Oracle, &split).unwrap();
        assert_eq!(r.mean_f1, 100.0);
        assert_eq!(r.std_f1, 0.0);
    }

    #[test]
    fn fold_order_does_not_change_results() {
        let data = toy(100);
        let split = make_split(&data.labels(), 2).unwrap();
        let a = Harness::new(&data, Sequential)
            .run_cv(&Oracle, &split)
            .unwrap();
        let b = Harness::new(&data, Reversed)
            .run_cv(&Oracle, &split)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_fold_marks_result() {
        let data = toy(100);
        // Find a split seed whose fold seeds include an odd one.
        let split = make_split(&data.labels(), 3).unwrap();
        assert!((0..5).any(|k| fold_seed(3, k) % 2 == 1));
        let r = Harness::new(&data, Sequential)
            .run_cv(&Flaky, &split)
            .unwrap();
        assert!(r.failed());
        assert!(r.failure.as_ref().unwrap().contains("odd seed"));
    }

    #[test]
    fn grid_ranking_matches_independent_sort() {
        let data = toy(100);
        let split = make_split(&data.labels(), 4).unwrap();
        let grid = [
            Constant(0.5, "b"),
            Constant(0.04, "a"),
            Constant(1.0, "d"),
            Constant(0.0, "c"),
        ];
        let mut h = Harness::new(&data, Sequential);
        let ranked = h.grid_search(&grid, |_| true, &split).unwrap();
        let mut indep: Vec<CvResult> = grid
            .iter()
            .map(|c| Harness::new(&data, Sequential).run_cv(c, &split).unwrap())
            .collect();
        // Independent ordering by (-f1, -mcc, label) using keyed sort.
        indep.sort_by(|x, y| {
            let kx = (-x.mean_f1, -x.mean_mcc, x.label.clone());
            let ky = (-y.mean_f1, -y.mean_mcc, y.label.clone());
            kx.partial_cmp(&ky).unwrap()
        });
        assert_eq!(ranked, indep);
        let mut labels: Vec<&str> = ranked.iter().map(|r| r.label.as_str()).collect();
        labels.sort_unstable();
        assert_eq!(labels, ["a", "b", "c", "d"]);
    }

    #[test]
    fn single_candidate_grid_equals_run_cv() {
        let data = toy(100);
        let split = make_split(&data.labels(), 5).unwrap();
        let g = Harness::new(&data, Sequential)
            .grid_search(&[Oracle], |_| true, &split)
            .unwrap();
        let c = Harness::new(&data, Sequential)
            .run_cv(&Oracle, &split)
            .unwrap();
        assert_eq!(g, vec![c]);
    }

    #[test]
    fn everything_pruned_is_an_error() {
        let data = toy(100);
        let split = make_split(&data.labels(), 5).unwrap();
        let r = Harness::new(&data, Sequential).grid_search(&[Oracle], |_| false, &split);
        assert_eq!(r.unwrap_err(), Error::EmptyGrid);
    }

    #[test]
    fn test_evaluation_never_trains_on_test_indices() {
        let data = toy(100);
        let split = make_split(&data.labels(), 6).unwrap();
        let mut h = Harness::new(&data, Sequential);
        h.run_cv(&Oracle, &split).unwrap();
        let e = h.evaluate_test(&Constant(1.0, "all"), &split).unwrap();
        assert_eq!(h.audit().train_reads_of(&split.test), 0);
        let test_pos = split
            .test
            .iter()
            .filter(|&&i| data.records()[i].label)
            .count();
        let rate = 100.0 * test_pos as f64 / split.test.len() as f64;
        assert!((e.best().precision - rate).abs() < 1e-12);
        assert_eq!(e.best().recall, 100.0);
    }

    #[test]
    fn nested_validation_partitions_and_audits() {
        let data = toy(100);
        let mut h = Harness::new(&data, Sequential);
        let n = h.nested_validation(&Oracle, 7).unwrap();
        assert_eq!(n.curves.len(), 5);
        let mut all: Vec<usize> = n
            .splits
            .iter()
            .flat_map(|s| s.test.iter().copied())
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        for s in &n.splits {
            let test_reads = h
                .audit()
                .entries()
                .iter()
                .filter(|e| e.phase == Phase::Train)
                .filter(|e| e.job.starts_with("nested"))
                .count();
            assert_eq!(test_reads, 5);
            assert!(s.train.iter().all(|i| s.test.binary_search(i).is_err()));
        }
        // Each outer job trained only on its own train split.
        for (k, e) in h
            .audit()
            .entries()
            .iter()
            .filter(|e| e.phase == Phase::Train)
            .enumerate()
        {
            assert_eq!(e.indices, n.splits[k].train);
        }
        assert_eq!(n.summary.f1, (100.0, 0.0));
    }

    #[test]
    fn audit_detects_leakage() {
        let mut log = AuditLog::default();
        log.extend(vec![
            read("x", Phase::Train, &[1, 2, 3]),
            read("x", Phase::Test, &[4]),
        ]);
        assert_eq!(log.train_reads_of(&[4, 5]), 0);
        assert_eq!(log.train_reads_of(&[3, 4]), 1);
    }

    #[test]
    fn nested_summary_uses_population_sigma() {
        let p = |f1: f64| MetricPoint {
            threshold: 0.5,
            recall: 0.0,
            precision: 0.0,
            f1,
            mcc: 0.0,
        };
        let s = NestedSummary::from_points(&[p(1.0), p(2.0), p(3.0), p(4.0), p(5.0)]);
        assert_eq!(s.f1.0, 3.0);
        assert!((s.f1.1 - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_candidates_cover_the_product() {
        let g = GridSpec {
            windows: vec![5, 10],
            lstm_sizes: vec![vec![4], vec![4, 2]],
            mlp_sizes: vec![0],
            lrs: vec![1e-3],
            weight_decays: vec![0.0, 0.01],
            batch_sizes: vec![16],
            losses: vec![LossSpec::DiffMcc { w: 2.0, gamma: 2.0 }],
            epochs: 2,
            seed: 0,
            fine_tune: None,
        };
        let c = g.candidates().unwrap();
        assert_eq!(c.len(), 8);
        let mut labels: Vec<String> = c.iter().map(|x| x.label()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 8);
        let bad = GridSpec {
            lrs: vec![-1.0],
            ..g
        };
        assert!(bad.candidates().is_err());
    }

    #[test]
    fn lstm_learner_runs_through_cv() {
        let data = toy(60);
        let split = make_split(&data.labels(), 8).unwrap();
        let l = LstmLearner {
            model: ModelConfig::new(5, vec![3], 0),
            train: TrainConfig {
                epochs: 1,
                lr: 1e-2,
                weight_decay: 0.0,
                batch_size: 16,
                loss: LossSpec::WeightedCe { w_pos: 4.0 },
                seed: 0,
                shuffle: true,
                clip_norm: None,
            },
            fine_tune: Some(FineTune {
                loss: LossSpec::DiffMcc { w: 2.0, gamma: 2.0 },
                lr: 1e-3,
                epochs: 1,
            }),
        };
        let r = Harness::new(&data, Sequential).run_cv(&l, &split).unwrap();
        assert!(!r.failed(), "{:?}", r.failure);
        assert_eq!(r.folds.len(), 5);
    }
}
