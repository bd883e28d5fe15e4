//! Subcommands of the `episae` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use episae_core::assoc;
use episae_core::metrics;
use episae_core::pipeline::{labels, ModelCheckpoint, SplitRole, ThresholdMode};
use episae_core::qc::run_qc;
use episae_core::simulate::simulate;

use crate::config::{parse_arch, Overrides, PipelineConfig};
use crate::plink::{drop_missing_phenotypes, read_dataset, write_dataset};
use crate::report::{self, write_file, Log};
use crate::{par, svg, Error};

#[derive(Debug, Parser)]
#[command(name = "episae", version, about = "GWAS QC, association scans and stacked-autoencoder classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic case-control cohort and its planted effects.
    Simulate(CommonArgs),
    /// Filter samples and variants and write an audit report.
    Qc(CommonArgs),
    /// Per-variant logistic scan with genomic control.
    Assoc(CommonArgs),
    /// Select SNPs on the training split, train every model, report.
    Train(CommonArgs),
    /// Score a saved model on one split of a dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Holdout,
}

impl From<ModeArg> for ThresholdMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => ThresholdMode::Paper,
            ModeArg::Holdout => ThresholdMode::Holdout,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
}

impl From<SplitArg> for SplitRole {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => SplitRole::Train,
            SplitArg::Validation => SplitRole::Validation,
            SplitArg::Test => SplitRole::Test,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// PLINK fileset prefix (without .bed/.bim/.fam).
    #[arg(long, value_name = "PREFIX")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, value_name = "X")]
    pub p_threshold: Option<f64>,
    /// Stack sizes for the SAE model, e.g. "2500,1500,700".
    #[arg(long, value_name = "SIZES", value_parser = parse_arch)]
    pub arch: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub threshold_mode: Option<ModeArg>,
    /// Do not echo the log to stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            input: self.input.clone(),
            out: self.out.clone(),
            seed: self.seed,
            threads: self.threads,
            p_threshold: self.p_threshold,
            arch: self.arch.clone(),
            threshold_mode: self.threshold_mode.map(Into::into),
        }
    }

    /// Config file (or defaults) with flags applied, validated.
    pub fn resolve(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<(), Error> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Qc(c) | Command::Assoc(c) | Command::Train(c) => c,
        Command::Evaluate(e) => &e.common,
    };
    let cfg = common.resolve()?;
    let mut log = Log::new(common.quiet);
    par::with_threads(cfg.threads, || match &cli.command {
        Command::Simulate(_) => cmd_simulate(&cfg, &mut log),
        Command::Qc(_) => cmd_qc(&cfg, &mut log),
        Command::Assoc(_) => cmd_assoc(&cfg, &mut log),
        Command::Train(_) => cmd_train(&cfg, &mut log),
        Command::Evaluate(e) => cmd_evaluate(&cfg, &e.checkpoint, e.split.into(), &mut log),
    })
}

fn input(cfg: &PipelineConfig) -> Result<&Path, Error> {
    cfg.input.as_deref().ok_or_else(|| Error::Usage("no input dataset: pass --input PREFIX or set `input`".into()))
}

/// Reads the input and drops samples without a phenotype.
fn load_labelled(cfg: &PipelineConfig, log: &mut Log) -> Result<episae_core::Dataset, Error> {
    let path = input(cfg)?;
    let raw = read_dataset(path)?;
    let (dataset, dropped) = drop_missing_phenotypes(&raw);
    log.line(format!(
        "input {}: {} samples, {} variants; {dropped} without phenotype dropped",
        path.display(),
        raw.n_samples(),
        raw.n_variants()
    ));
    Ok(dataset)
}

fn finish_log(cfg: &PipelineConfig, name: &str, log: &Log) -> Result<(), Error> {
    write_file(&cfg.out.join(name), log.text().as_bytes())
}

pub fn cmd_simulate(cfg: &PipelineConfig, log: &mut Log) -> Result<(), Error> {
    let spec = cfg.sim_spec();
    let sim = simulate(&spec)?;
    let prefix = cfg.out.join("cohort");
    write_dataset(&prefix, &sim.dataset)?;
    write_file(&cfg.out.join("truth.csv"), &report::truth_csv(&sim.truth)?)?;
    log.line(format!(
        "simulated {} cases, {} controls, {} variants (seed {})",
        spec.n_cases, spec.n_controls, spec.n_variants, spec.seed
    ));
    log.line(format!("intercept {}, {} individuals drawn", sim.intercept, sim.attempts));
    log.line("wrote cohort.{bed,bim,fam} and truth.csv");
    finish_log(cfg, "simulate.log", log)
}

pub fn cmd_qc(cfg: &PipelineConfig, log: &mut Log) -> Result<(), Error> {
    let path = input(cfg)?;
    let raw = read_dataset(path)?;
    let (dataset, dropped) = drop_missing_phenotypes(&raw);
    let (filtered, rep) = run_qc(&dataset, &cfg.qc)?;
    write_dataset(&cfg.out.join("qc"), &filtered)?;
    write_file(&cfg.out.join("qc_stages.csv"), &report::qc_stages_csv(&rep)?)?;
    write_file(&cfg.out.join("qc_removed.csv"), &report::qc_removed_csv(&rep)?)?;
    log.line(format!("input {}", path.display()));
    for l in report::qc_summary(&rep, dropped).lines() {
        log.line(l);
    }
    finish_log(cfg, "qc.log", log)
}

pub fn cmd_assoc(cfg: &PipelineConfig, log: &mut Log) -> Result<(), Error> {
    let dataset = load_labelled(cfg, log)?;
    let y = labels(&dataset)?;
    let scan = par::scan(&dataset.genotypes, &dataset.variants, &y, cfg.assoc.test)?;
    let selected = assoc::select_snps(&scan.results, cfg.assoc.p_threshold);
    write_file(&cfg.out.join("assoc.csv"), &report::assoc_csv(&scan, &dataset.variants, cfg.assoc.test)?)?;
    write_file(&cfg.out.join("qq.csv"), &report::qq_csv(&scan)?)?;
    write_file(
        &cfg.out.join("selected.txt"),
        &report::id_list(selected.iter().map(|&j| scan.results[j].variant_id.as_str())),
    )?;
    log.line(format!(
        "{} test, genomic control lambda {} (raw {})",
        cfg.assoc.test.name(),
        scan.gc.lambda,
        scan.gc.raw_lambda
    ));
    log.line(format!("{} of {} variants with p_gc <= {}", selected.len(), scan.results.len(), cfg.assoc.p_threshold));
    finish_log(cfg, "assoc.log", log)
}

pub fn cmd_train(cfg: &PipelineConfig, log: &mut Log) -> Result<(), Error> {
    let dataset = load_labelled(cfg, log)?;
    let ecfg = cfg.experiment();
    let exp = par::run_experiment(&dataset, &ecfg)?;
    let p = &exp.prepared;
    log.line(format!(
        "split seed {}: {} train, {} validation, {} test",
        p.split.seed,
        p.split.count(SplitRole::Train),
        p.split.count(SplitRole::Validation),
        p.split.count(SplitRole::Test)
    ));
    log.line(format!(
        "training-split lambda {}; {} variants selected at p_gc <= {}",
        p.scan.gc.lambda,
        p.features.width(),
        cfg.assoc.p_threshold
    ));
    write_file(&cfg.out.join("features.txt"), &report::id_list(p.features.variant_ids.iter().map(String::as_str)))?;
    for o in &exp.outcomes {
        let ckpt = cfg.out.join("models").join(format!("{}.ckpt", o.name));
        write_file(&ckpt, &o.checkpoint.encode())?;
        let points = metrics::roc_points(&o.test_scores, &p.y[2])?;
        write_file(&cfg.out.join(format!("roc_{}.csv", o.name)), &report::roc_csv(&points)?)?;
        write_file(
            &cfg.out.join(format!("roc_{}.svg", o.name)),
            svg::roc_svg(&format!("{} test ROC", o.name), o.test.auc, &points).as_bytes(),
        )?;
        if !o.history.is_empty() {
            write_file(&cfg.out.join(format!("history_{}.csv", o.name)), &report::history_csv(&o.history)?)?;
        }
        log.line(format!(
            "{}: validation AUC {:.4}, test AUC {:.4}, {} epochs",
            o.name,
            o.validation.auc,
            o.test.auc,
            o.history.len()
        ));
    }
    let val = report::model_table(exp.outcomes.iter().map(|o| (o.name.as_str(), &o.validation)))?;
    let test = report::model_table(exp.outcomes.iter().map(|o| (o.name.as_str(), &o.test)))?;
    write_file(&cfg.out.join("validation.csv"), &val)?;
    write_file(&cfg.out.join("test.csv"), &test)?;
    finish_log(cfg, "train.log", log)
}

pub fn cmd_evaluate(cfg: &PipelineConfig, checkpoint: &Path, role: SplitRole, log: &mut Log) -> Result<(), Error> {
    let bytes = fs::read(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let ckpt = ModelCheckpoint::decode(&bytes)
        .map_err(|source| Error::Checkpoint { path: checkpoint.to_path_buf(), source })?;
    let dataset = load_labelled(cfg, log)?;
    if dataset.n_samples() as u64 != ckpt.n_samples {
        return Err(Error::Data(format!(
            "checkpoint was trained on {} samples but the dataset has {}; the split cannot be reproduced",
            ckpt.n_samples,
            dataset.n_samples()
        )));
    }
    let (rep, _) = ckpt.evaluate(&dataset, role, cfg.train.threshold_mode)?;
    let split = match role {
        SplitRole::Train => "train",
        SplitRole::Validation => "validation",
        SplitRole::Test => "test",
    };
    let out = cfg.out.join(format!("evaluate_{}_{split}.csv", ckpt.model));
    write_file(&out, &report::model_table([(ckpt.model.as_str(), &rep)])?)?;
    log.line(format!("{} on {split}: AUC {:.4}, threshold {}", ckpt.model, rep.auc, rep.threshold));
    finish_log(cfg, &format!("evaluate_{}_{split}.log", ckpt.model), log)
}
