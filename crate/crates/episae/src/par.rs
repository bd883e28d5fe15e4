//! Rayon versions of the scan and the experiment.
//!
//! Per-variant fits and per-model training jobs are independent; their
//! results are collected in input order, so output does not depend on the
//! number of threads.

use rayon::prelude::*;

use episae_core::assoc::{self, AssocError, AssocTest, Scan};
use episae_core::genotype::{GenotypeMatrix, VariantRecord};
use episae_core::pipeline::{self, Experiment, ExperimentConfig, ModelOutcome, PipelineError, Prepared};
use episae_core::Dataset;

/// Runs `f` on a pool of `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(f)
}

pub fn scan(g: &GenotypeMatrix, variants: &[VariantRecord], y: &[u8], test: AssocTest) -> Result<Scan, AssocError> {
    if y.len() != g.n_samples() {
        return Err(AssocError::LengthMismatch { labels: y.len(), samples: g.n_samples() });
    }
    let fits: Vec<_> = (0..g.n_variants())
        .into_par_iter()
        .map(|j| assoc::logistic_fit_additive(&variants[j].variant_id, &g.column(j), y))
        .collect();
    assoc::finish_scan(fits.into_iter().collect::<Result<_, _>>()?, test)
}

pub fn run_models(prepared: &Prepared, cfg: &ExperimentConfig) -> Result<Vec<ModelOutcome>, PipelineError> {
    let outcomes: Vec<_> = cfg.models.par_iter().map(|m| pipeline::run_model(prepared, m, cfg)).collect();
    outcomes.into_iter().collect()
}

/// Same result as [`pipeline::run_experiment`].
pub fn run_experiment(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<Experiment, PipelineError> {
    let split = pipeline::split_80_10_10(dataset.n_samples(), cfg.split_seed)?;
    let (g, y) = pipeline::training_rows(dataset, &split)?;
    let scan = scan(&g, &dataset.variants, &y, cfg.assoc_test)?;
    let prepared = pipeline::prepare(dataset, split, scan, cfg)?;
    let outcomes = run_models(&prepared, cfg)?;
    Ok(Experiment { prepared, outcomes })
}
