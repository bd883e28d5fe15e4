//! Genotype-to-classifier pipeline for case-control GWAS data.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! parts of the pipeline:
//!
//! * [`genotype`]: the PLINK 1 `.bed`/`.bim`/`.fam` layout and an in-memory
//!   genotype matrix.
//! * [`qc`]: per-sample and per-variant quality-control filters.
//! * [`assoc`]: allelic chi-square and additive logistic association tests
//!   with genomic control.
//! * [`nn`]: a small feed-forward network with backpropagation, weight decay,
//!   momentum, ADADELTA, dropout, max-norm and a KL sparsity penalty.
//! * [`pipeline`]: greedy layer-wise autoencoder pretraining, fine-tuning and
//!   the evaluation protocol.
//! * [`metrics`]: ROC/AUC, Gini, logloss, MSE and F1-optimal thresholds.
//! * [`simulate`]: synthetic cohorts with planted main effects and epistatic
//!   pairs.
//!
//! File IO, configuration files and the command-line driver live in the
//! `episae` crate.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod assoc;
pub mod genotype;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod qc;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use genotype::{Dataset, Genotype, GenotypeMatrix, Phenotype, SampleRecord, Sex, VariantRecord};
pub use matrix::Matrix;
