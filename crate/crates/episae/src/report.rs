//! CSV reports.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use episae_core::assoc::{AssocTest, Scan};
use episae_core::genotype::VariantRecord;
use episae_core::metrics::EvalReport;
use episae_core::pipeline::EpochRecord;
use episae_core::qc::{Axis, QcReport};
use episae_core::simulate::TruthRow;

use crate::Error;

/// Column order of the model tables.
pub const TABLE_HEADER: [&str; 8] = ["model", "AUC", "Sens", "Spec", "Logloss", "Gini", "MSE", "threshold"];

pub const ASSOC_HEADER: [&str; 12] = [
    "variant_id",
    "chromosome",
    "bp_position",
    "beta1",
    "se",
    "chi2",
    "p_raw",
    "p_gc",
    "allelic_chi2",
    "allelic_p",
    "n_used",
    "status",
];

fn f(x: f64) -> String {
    format!("{x}")
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::Sample => "sample",
        Axis::Variant => "variant",
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn table_row(model: &str, r: &EvalReport) -> Vec<String> {
    vec![
        model.to_string(),
        f(r.auc),
        f(r.sensitivity),
        f(r.specificity),
        f(r.logloss),
        f(r.gini),
        f(r.mse),
        f(r.threshold),
    ]
}

/// One row per model, in the given order.
pub fn model_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a EvalReport)>) -> Result<Vec<u8>, Error> {
    csv_bytes(&TABLE_HEADER, rows.into_iter().map(|(m, r)| table_row(m, r)))
}

pub fn roc_csv(points: &[(f64, f64)]) -> Result<Vec<u8>, Error> {
    csv_bytes(&["fpr", "tpr"], points.iter().map(|&(x, y)| vec![f(x), f(y)]))
}

pub fn history_csv(history: &[EpochRecord]) -> Result<Vec<u8>, Error> {
    csv_bytes(
        &["epoch", "train_logloss", "validation_logloss", "validation_auc"],
        history
            .iter()
            .map(|h| vec![h.epoch.to_string(), f(h.train_logloss), f(h.validation_logloss), f(h.validation_auc)]),
    )
}

pub fn truth_csv(truth: &[TruthRow]) -> Result<Vec<u8>, Error> {
    csv_bytes(
        &["kind", "first", "second", "effect"],
        truth.iter().map(|t| vec![t.kind.clone(), t.first.clone(), t.second.clone().unwrap_or_default(), f(t.effect)]),
    )
}

/// Per-stage summary: stage, axis, rule, skipped, removed count.
pub fn qc_stages_csv(report: &QcReport) -> Result<Vec<u8>, Error> {
    csv_bytes(
        &["stage", "axis", "rule", "skipped", "removed"],
        report.stages.iter().map(|s| {
            vec![
                s.name.to_string(),
                axis_name(s.axis).to_string(),
                s.rule.clone(),
                s.skipped.to_string(),
                s.removed_count().to_string(),
            ]
        }),
    )
}

/// Every removed id with the stage that removed it.
pub fn qc_removed_csv(report: &QcReport) -> Result<Vec<u8>, Error> {
    csv_bytes(
        &["stage", "axis", "id"],
        report.stages.iter().flat_map(|s| {
            s.removed.iter().map(move |id| vec![s.name.to_string(), axis_name(s.axis).to_string(), id.clone()])
        }),
    )
}

pub fn qc_summary(report: &QcReport, dropped_phenotype: usize) -> String {
    let mut s = String::new();
    s.push_str(&format!("samples without phenotype dropped: {dropped_phenotype}\n"));
    s.push_str(&format!("initial: {} samples, {} variants\n", report.initial_samples, report.initial_variants));
    for st in &report.stages {
        let state = if st.skipped { "skipped".to_string() } else { format!("removed {}", st.removed_count()) };
        s.push_str(&format!("{:<20} {:<8} {:<40} {state}\n", st.name, axis_name(st.axis), st.rule));
    }
    s.push_str(&format!(
        "final: {} samples, {} variants (removed {} samples, {} variants)\n",
        report.final_samples,
        report.final_variants,
        report.removed_total(Axis::Sample),
        report.removed_total(Axis::Variant)
    ));
    s.push_str(&format!("call rate: {}\n", report.call_rate));
    s
}

/// Per-variant results, preceded by a `#` line with the inflation factor.
pub fn assoc_csv(scan: &Scan, variants: &[VariantRecord], test: AssocTest) -> Result<Vec<u8>, Error> {
    let mut out =
        format!("# test={} genomic_control_lambda={} raw_lambda={}\n", test.name(), scan.gc.lambda, scan.gc.raw_lambda)
            .into_bytes();
    let rows = scan.results.iter().zip(variants).map(|(r, v)| {
        vec![
            r.variant_id.clone(),
            v.chromosome.to_string(),
            v.bp_position.to_string(),
            f(r.beta1),
            f(r.se_beta1),
            f(r.chi2_stat),
            f(r.p_raw),
            f(r.p_gc),
            f(r.allelic_chi2),
            f(r.allelic_p),
            r.n_used.to_string(),
            format!("{:?}", r.status).to_lowercase(),
        ]
    });
    out.extend(csv_bytes(&ASSOC_HEADER, rows)?);
    Ok(out)
}

/// Observed against expected −log10 p (uniform quantiles `(i − 0.5) / m`).
pub fn qq_csv(scan: &Scan) -> Result<Vec<u8>, Error> {
    let mut p: Vec<f64> = scan.results.iter().map(|r| r.p_gc).collect();
    p.sort_by(f64::total_cmp);
    let m = p.len() as f64;
    csv_bytes(
        &["expected", "observed"],
        p.iter().enumerate().map(|(i, &pi)| vec![f(-((i as f64 + 0.5) / m).log10()), f(-pi.log10())]),
    )
}

/// Selected variant ids, one per line.
pub fn id_list<'a>(ids: impl IntoIterator<Item = &'a str>) -> Vec<u8> {
    let mut out = Vec::new();
    for id in ids {
        out.extend_from_slice(id.as_bytes());
        out.push(b'\n');
    }
    out
}

/// Plain-text log lines collected while a command runs.
#[derive(Debug, Default)]
pub struct Log {
    lines: Vec<String>,
    quiet: bool,
}

impl Log {
    pub fn new(quiet: bool) -> Self {
        Log { lines: Vec::new(), quiet }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        let s = s.into();
        if !self.quiet {
            let _ = writeln!(io::stderr(), "{s}");
        }
        self.lines.push(s);
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}
