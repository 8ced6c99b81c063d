//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or input error. Failures
//! print one line `focalmcc: error kind=<kind> exit=<code>: <message>` to
//! stderr.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use focalmcc_core::data::make_split;
use focalmcc_core::harness::{Dataset, Harness, Learner, Scorer};
use focalmcc_core::metrics::{confusion, default_thresholds, point_metrics, sweep, MetricPoint};
use focalmcc_core::synth::{generate, SynthSpec};
use focalmcc_core::train::EpochLog;

use crate::config::{self, GridConfig, RunConfig};
use crate::dataset::{load_dataset, write_dataset, Loaded};
use crate::error::{IoError, Result};
use crate::manifest::{sha256_file, Manifest};
use crate::model_file::{ModelMeta, StoredModel};
use crate::predict::{predict_csv, predict_sequence};
use crate::report;
use crate::runner::ThreadRunner;
use crate::{output_path, write_file};

#[derive(Debug, Parser)]
#[command(
    name = "focalmcc",
    version,
    about = "Train, evaluate and apply S/T site classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one configuration and evaluate it on the held-out split.
    Train(TrainArgs),
    /// Predict site probabilities for a sequence or a CSV of sequences.
    Predict(PredictArgs),
    /// Grid search with five-fold cross-validation.
    Sweep(SweepArgs),
    /// Five-fold nested validation of one configuration.
    Nested(NestedArgs),
    /// Re-evaluate a saved model, or the all-positive baseline.
    Eval(EvalArgs),
    /// Print record counts of a dataset, optionally checking a manifest.
    Census(CensusArgs),
    /// Write a synthetic planted-motif dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Model file to write. Logs and curves are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// A raw sequence, or a `.csv` file with a header and one sequence column.
    pub input: String,
    #[arg(long)]
    pub model: PathBuf,
    /// Decision threshold; defaults to the one stored in the model.
    #[arg(short = 't', long)]
    pub threshold: Option<f64>,
    /// Windows per forward pass (`-bs` is accepted too).
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    /// Output CSV for CSV input; defaults to `<input>_predictions.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct NestedArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(
        long,
        required_unless_present = "baseline",
        conflicts_with = "baseline"
    )]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    /// Score the all-positive predictor on the whole dataset instead.
    #[arg(long)]
    pub baseline: bool,
    /// Directory for the PR-curve CSV and SVG.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2050)]
    pub records: usize,
    #[arg(long, default_value_t = 50)]
    pub positives: usize,
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    #[arg(long, default_value = "WHY")]
    pub motif: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a manifest for the generated file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Rewrites the short `-bs` spelling to `--batch-size`.
fn normalize_args<I: IntoIterator<Item = OsString>>(args: I) -> Vec<OsString> {
    args.into_iter()
        .map(|a| match a.to_str() {
            Some("-bs") => OsString::from("--batch-size"),
            Some(s) if s.starts_with("-bs=") => OsString::from(format!("--batch-size={}", &s[4..])),
            _ => a,
        })
        .collect()
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(normalize_args(args)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("focalmcc: error kind={} exit={code}: {e}", e.kind());
            code
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Nested(a) => cmd_nested(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Census(a) => cmd_census(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn say(msg: impl AsRef<str>) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", msg.as_ref());
}

fn check_manifest(
    config_path: &Path,
    manifest: Option<&PathBuf>,
    data: &Path,
    loaded: &Loaded,
) -> Result<()> {
    if let Some(m) = manifest {
        let path = config::relative_to(config_path, m);
        Manifest::load(&path)?.verify(data, &loaded.census)?;
        say(format!("manifest {} verified", path.display()));
    }
    Ok(())
}

fn load_data(path: &Path, w: usize) -> Result<Loaded> {
    let loaded = load_dataset(path, w)?;
    say(format!("{}: {}", path.display(), loaded.census));
    Ok(loaded)
}

/// `<dir>/<stem><suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn joined_log(base: &[EpochLog], tuned: &[EpochLog]) -> Vec<EpochLog> {
    let mut log = base.to_vec();
    log.extend(tuned.iter().map(|e| EpochLog {
        epoch: e.epoch + base.len(),
        ..*e
    }));
    log
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let cfg: RunConfig = config::load(&a.config)?;
    cfg.validate(&a.config)?;
    let loaded = load_data(&a.data, cfg.model.window)?;
    check_manifest(&a.config, cfg.manifest.as_ref(), &a.data, &loaded)?;
    let data = Dataset::new(loaded.records);
    let split = make_split(&data.labels(), cfg.split_seed)?;
    let learner = cfg.learner();
    say(format!("training {}", learner.label()));
    let mut h = Harness::new(&data, ThreadRunner::new(a.jobs)).with_thresholds(cfg.thresholds())?;
    let e = h.evaluate_test(&learner, &split)?;
    let best = *e.best();

    let out = output_path(&a.out);
    let stored = StoredModel {
        meta: ModelMeta {
            best_threshold: best.threshold,
            split_seed: cfg.split_seed,
            trained_with: learner.label(),
            model: cfg.model.clone(),
        },
        params: e.model.params.clone(),
    };
    stored.save(&out)?;
    let log = joined_log(&e.model.log, &e.model.fine_tune_log);
    write_file(
        &sibling(&out, ".epochs.csv"),
        report::epoch_csv(&log).as_bytes(),
    )?;
    write_file(
        &sibling(&out, ".test_pr.csv"),
        report::pr_csv(&e.curve).as_bytes(),
    )?;
    write_file(
        &sibling(&out, ".test_pr.svg"),
        report::pr_svg(&[("test", &e.curve)]).as_bytes(),
    )?;
    say(report::metric_table(&[("Test", best)]));
    say(format!("model written to {}", out.display()));
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = StoredModel::load(&a.model)?;
    let threshold = a.threshold.unwrap_or(model.meta.best_threshold);
    let bs = a.batch_size.max(1);
    let as_path = Path::new(&a.input);
    let is_csv = as_path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let out = output_path(
            &a.out
                .clone()
                .unwrap_or_else(|| sibling(as_path, "_predictions.csv")),
        );
        let (rows, written, errors) = predict_csv(&model, as_path, &out, threshold, bs)?;
        say(format!(
            "{rows} input rows, {written} output rows ({errors} with errors) written to {}",
            out.display()
        ));
        return Ok(());
    }
    let preds = predict_sequence(&model, &a.input, threshold, bs)?;
    if preds.is_empty() {
        return Err(IoError::Format {
            path: PathBuf::from("<sequence>"),
            message: "no S/T site in sequence".into(),
        });
    }
    say("position,window,probability,label");
    for p in preds {
        say(format!(
            "{},{},{},{}",
            p.position,
            p.window,
            p.probability,
            u8::from(p.label)
        ));
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let cfg: GridConfig = config::load(&a.grid)?;
    let candidates = cfg.grid.candidates().map_err(|e| IoError::Format {
        path: a.grid.clone(),
        message: e.to_string(),
    })?;
    let windows: Vec<usize> = cfg.grid.windows.clone();
    let stored_w = windows.iter().copied().max().unwrap_or(20);
    let loaded = load_data(&a.data, stored_w)?;
    check_manifest(&a.grid, cfg.manifest.as_ref(), &a.data, &loaded)?;
    let data = Dataset::new(loaded.records);
    let split = make_split(&data.labels(), cfg.split_seed)?;
    let mut h = Harness::new(&data, ThreadRunner::new(a.jobs)).with_thresholds(cfg.thresholds())?;
    say(format!("{} candidates", candidates.len()));
    let ranked = h.grid_search(&candidates, |c| cfg.keep(c), &split)?;

    let dir = output_path(&a.out);
    write_file(
        &dir.join("cv_folds.csv"),
        report::cv_folds_csv(&ranked).as_bytes(),
    )?;
    write_file(
        &dir.join("ranking.csv"),
        report::ranking_csv(&ranked).as_bytes(),
    )?;
    for (i, r) in ranked.iter().enumerate().take(10) {
        say(format!(
            "{:>3}. F1 {:.2} ± {:.2}  MCC {:.2} ± {:.2}  {}",
            i + 1,
            r.mean_f1,
            r.std_f1,
            r.mean_mcc,
            r.std_mcc,
            r.label
        ));
    }
    let top = &ranked[0];
    if top.failed() {
        return Err(IoError::Core(focalmcc_core::Error::Contract(format!(
            "every candidate failed; first: {}",
            top.failure.as_deref().unwrap_or("")
        ))));
    }
    let best = candidates
        .iter()
        .find(|c| c.label() == top.label)
        .expect("ranked label comes from a candidate");
    let e = h.evaluate_test(best, &split)?;
    report::write_curve(&dir, "test_pr", "best", &e.curve)?;
    let stored = StoredModel {
        meta: ModelMeta {
            best_threshold: e.best().threshold,
            split_seed: cfg.split_seed,
            trained_with: best.label(),
            model: best.model.clone(),
        },
        params: e.model.params.clone(),
    };
    stored.save(&dir.join("best.fmcc"))?;
    say(report::metric_table(&[("Best", *e.best())]));
    Ok(())
}

fn cmd_nested(a: &NestedArgs) -> Result<()> {
    let cfg: RunConfig = config::load(&a.config)?;
    cfg.validate(&a.config)?;
    let loaded = load_data(&a.data, cfg.model.window)?;
    check_manifest(&a.config, cfg.manifest.as_ref(), &a.data, &loaded)?;
    let data = Dataset::new(loaded.records);
    let learner = cfg.learner();
    let mut h = Harness::new(&data, ThreadRunner::new(a.jobs)).with_thresholds(cfg.thresholds())?;
    let n = h.nested_validation(&learner, cfg.split_seed)?;
    let dir = output_path(&a.out);
    for (k, c) in n.curves.iter().enumerate() {
        write_file(
            &dir.join(format!("outer_{k}_pr.csv")),
            report::pr_csv(c).as_bytes(),
        )?;
    }
    let bests: Vec<MetricPoint> = n.curves.iter().map(|c| *c.best_point()).collect();
    write_file(
        &dir.join("nested_summary.csv"),
        report::nested_summary_csv(&bests, &n.summary).as_bytes(),
    )?;
    let names: Vec<String> = (0..n.curves.len()).map(|k| format!("outer {k}")).collect();
    let named: Vec<(&str, &_)> = names
        .iter()
        .map(String::as_str)
        .zip(n.curves.iter())
        .collect();
    write_file(
        &dir.join("nested_pr.svg"),
        report::pr_svg(&named).as_bytes(),
    )?;
    say(report::nested_table(&n.summary));
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    if a.baseline {
        let loaded = load_data(&a.data, 20)?;
        let y: Vec<bool> = loaded.records.iter().map(|r| r.label).collect();
        let p = MetricPoint {
            threshold: 0.0,
            ..point_metrics(&confusion(&vec![1.0; y.len()], &y, 0.0))
        };
        say(report::metric_table(&[("No Model", p)]));
        return Ok(());
    }
    let model_path = a
        .model
        .as_ref()
        .expect("clap enforces --model without --baseline");
    let model = StoredModel::load(model_path)?;
    let loaded = load_data(&a.data, model.window())?;
    let data = Dataset::new(loaded.records);
    let split = make_split(&data.labels(), model.meta.split_seed)?;
    let test = data.windows(&split.test, model.window())?;
    let scores = model.params.score(&test)?;
    let y: Vec<bool> = test.iter().map(|w| w.label).collect();
    let curve = sweep(&scores, &y, &default_thresholds());
    if let Some(dir) = &a.out {
        report::write_curve(&output_path(dir), "eval_pr", "test", &curve)?;
    }
    say(report::metric_table(&[("Test", *curve.best_point())]));
    Ok(())
}

fn cmd_census(a: &CensusArgs) -> Result<()> {
    let loaded = load_data(&a.data, a.window)?;
    if let Some(m) = &a.manifest {
        Manifest::load(m)?.verify(&a.data, &loaded.census)?;
        say("manifest verified");
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let motif: [u8; 3] = a.motif.as_bytes().try_into().map_err(|_| IoError::Format {
        path: PathBuf::from("--motif"),
        message: "motif must be exactly three residues".into(),
    })?;
    let spec = SynthSpec {
        records: a.records,
        positives: a.positives,
        window: a.window,
        motif,
        noise: a.noise,
        seed: a.seed,
    };
    let records = generate(&spec)?;
    let out = output_path(&a.out);
    write_dataset(&out, &records)?;
    say(format!(
        "wrote {} records to {}",
        records.len(),
        out.display()
    ));
    if let Some(m) = &a.manifest {
        let m = output_path(m);
        let file = match (out.parent(), m.parent()) {
            (Some(o), Some(d)) if o == d => PathBuf::from(out.file_name().expect("file name")),
            _ => out.clone(),
        };
        let manifest = Manifest {
            url: format!(
                "synthetic: focalmcc synth --records {} --positives {} --window {} --noise {} --motif {} --seed {}",
                a.records, a.positives, a.window, a.noise, a.motif, a.seed
            ),
            file: Some(file),
            sha256: Some(sha256_file(&out)?),
            rows: records.len(),
            positives: Some(a.positives),
        };
        write_file(&m, manifest.to_toml().as_bytes())?;
    }
    Ok(())
}
