//! CSV artifacts, summary tables and a minimal SVG plot of PR curves.
//!
//! Every CSV has a header row and ends with a newline. Metric columns are
//! percentages.

use std::fmt::Write as _;
use std::path::Path;

use focalmcc_core::harness::{CvResult, NestedSummary};
use focalmcc_core::metrics::{MetricPoint, PrCurve};
use focalmcc_core::train::EpochLog;

use crate::error::Result;

pub const PR_HEADER: &str = "threshold,recall_pct,precision_pct,f1_pct,mcc_pct";
pub const EPOCH_HEADER: &str = "epoch,lr,train_loss,val_f1,val_mcc";

type Row = (&'static str, fn(&MetricPoint) -> f64);

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn pr_csv(curve: &PrCurve) -> String {
    let mut s = format!("{PR_HEADER}\n");
    for p in &curve.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.threshold, p.recall, p.precision, p.f1, p.mcc
        );
    }
    s
}

pub fn epoch_csv(log: &[EpochLog]) -> String {
    let mut s = format!("{EPOCH_HEADER}\n");
    for e in log {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            e.epoch,
            e.lr,
            e.train_loss,
            opt(e.val_f1),
            opt(e.val_mcc)
        );
    }
    s
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// One row per (candidate, fold).
pub fn cv_folds_csv(results: &[CvResult]) -> String {
    let mut s = String::from("config,fold,threshold,recall_pct,precision_pct,f1_pct,mcc_pct\n");
    for r in results {
        for (k, p) in r.folds.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{k},{},{},{},{},{}",
                quote(&r.label),
                p.threshold,
                p.recall,
                p.precision,
                p.f1,
                p.mcc
            );
        }
    }
    s
}

/// Ranked summary, best first.
pub fn ranking_csv(results: &[CvResult]) -> String {
    let mut s =
        String::from("rank,config,mean_f1_pct,std_f1_pct,mean_mcc_pct,std_mcc_pct,failure\n");
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            i + 1,
            quote(&r.label),
            r.mean_f1,
            r.std_f1,
            r.mean_mcc,
            r.std_mcc,
            r.failure.as_deref().map(quote).unwrap_or_default()
        );
    }
    s
}

pub fn nested_summary_csv(bests: &[MetricPoint], summary: &NestedSummary) -> String {
    let mut s = String::from("fold,threshold,recall_pct,precision_pct,f1_pct,mcc_pct\n");
    for (k, p) in bests.iter().enumerate() {
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{}",
            p.threshold, p.recall, p.precision, p.f1, p.mcc
        );
    }
    let cols = [
        summary.threshold,
        summary.recall,
        summary.precision,
        summary.f1,
        summary.mcc,
    ];
    let _ = writeln!(
        s,
        "mean,{}",
        cols.iter()
            .map(|c| c.0.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(
        s,
        "std,{}",
        cols.iter()
            .map(|c| c.1.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    s
}

/// Column table with one metric per row, the layout of a results table.
pub fn metric_table(columns: &[(&str, MetricPoint)]) -> String {
    let width = columns
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(0)
        .max(9);
    let mut s = format!("{:<16}", "");
    for (name, _) in columns {
        let _ = write!(s, " {name:>width$}");
    }
    s.push('\n');
    let rows: [Row; 5] = [
        ("Best Threshold", |p| p.threshold),
        ("Recall", |p| p.recall),
        ("Precision", |p| p.precision),
        ("F1 Score", |p| p.f1),
        ("MCC", |p| p.mcc),
    ];
    for (label, f) in rows {
        let _ = write!(s, "{label:<16}");
        for (_, p) in columns {
            let v = f(p);
            if label == "Best Threshold" {
                let _ = write!(s, " {v:>width$.2}");
            } else {
                let _ = write!(s, " {:>width$}", format!("{v:.2}%"));
            }
        }
        s.push('\n');
    }
    s
}

/// Table of `mean ± σ` per metric.
pub fn nested_table(summary: &NestedSummary) -> String {
    let mut s = String::from("Metric           Mean (±σ)\n");
    for (label, (m, sd)) in [
        ("Best Threshold", summary.threshold),
        ("Recall", summary.recall),
        ("Precision", summary.precision),
        ("F1 Score", summary.f1),
        ("MCC", summary.mcc),
    ] {
        let _ = writeln!(s, "{label:<16} {m:.2} ± {sd:.2}");
    }
    s
}

/// Precision against recall, one polyline per curve, with F1 isolines.
pub fn pr_svg(curves: &[(&str, &PrCurve)]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 480.0;
    const M: f64 = 48.0;
    let x = |r: f64| M + r / 100.0 * (W - 2.0 * M);
    let y = |p: f64| H - M - p / 100.0 * (H - 2.0 * M);
    let palette = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    ];

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    for f1 in [20.0, 40.0, 60.0, 80.0] {
        let pts: Vec<String> = (0..=100)
            .filter_map(|i| {
                let r = f1 / 2.0 + (100.0 - f1 / 2.0) * i as f64 / 100.0;
                let p = f1 * r / (2.0 * r - f1);
                (p <= 100.0 && p > 0.0).then(|| format!("{:.1},{:.1}", x(r), y(p)))
            })
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#ccc\" stroke-dasharray=\"3,3\"/>",
            pts.join(" ")
        );
    }
    let _ = writeln!(
        s,
        "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * M,
        H - 2.0 * M
    );
    for t in [0, 25, 50, 75, 100] {
        let v = t as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{t}</text>",
            x(v),
            H - M + 16.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{t}</text>",
            M - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Recall (%)</text>",
        W / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">Precision (%)</text>",
        H / 2.0,
        H / 2.0
    );
    for (i, (name, c)) in curves.iter().enumerate() {
        let color = palette[i % palette.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", x(p.recall), y(p.precision)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            M + 8.0,
            M + 14.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes `<stem>.csv` and `<stem>.svg` for one curve.
pub fn write_curve(dir: &Path, stem: &str, name: &str, curve: &PrCurve) -> Result<()> {
    crate::write_file(&dir.join(format!("{stem}.csv")), pr_csv(curve).as_bytes())?;
    crate::write_file(
        &dir.join(format!("{stem}.svg")),
        pr_svg(&[(name, curve)]).as_bytes(),
    )
}
