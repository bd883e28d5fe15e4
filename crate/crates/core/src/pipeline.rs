//! Stacked-autoencoder pretraining, classifier fine-tuning and the
//! train/validation/test experiment.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::{self, fit_logistic, AssocError, AssocResult, AssocTest, Scan};
use crate::genotype::{Dataset, GenotypeMatrix};
use crate::matrix::Matrix;
use crate::metrics::{self, EvalReport, MetricsError};
use crate::nn::checkpoint::{read_network, write_network, ByteReader, ByteWriter};
use crate::nn::{
    early_stop, train_epoch, Activation, LayerParams, Network, NnError, OptimizerState, StoppingMetric, TrainConfig,
};
use crate::rng::{substream, Rng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("need at least 10 samples to split, got {0}")]
    TooFewSamples(usize),
    #[error("{0} samples have no phenotype")]
    MissingLabels(usize),
    #[error("no variants left for training")]
    NoFeatures,
    #[error("invalid model spec {model}: {reason}")]
    InvalidSpec { model: String, reason: String },
    #[error("variant {0} required by the model is not in the dataset")]
    UnknownVariant(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Assoc(#[from] AssocError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub roles: Vec<SplitRole>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn indices(&self, role: SplitRole) -> Vec<usize> {
        self.roles.iter().enumerate().filter(|(_, r)| **r == role).map(|(i, _)| i).collect()
    }

    pub fn count(&self, role: SplitRole) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }
}

/// Shuffles `0..n` by seed; the first `floor(0.8n)` go to training, the next
/// `floor(0.1n)` to validation and the rest to test.
pub fn split_80_10_10(n: usize, seed: u64) -> Result<SplitAssignment, PipelineError> {
    if n < 10 {
        return Err(PipelineError::TooFewSamples(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, "split"));
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let mut roles = vec![SplitRole::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        roles[i] = if rank < n_train {
            SplitRole::Train
        } else if rank < n_train + n_val {
            SplitRole::Validation
        } else {
            SplitRole::Test
        };
    }
    Ok(SplitAssignment { roles, seed })
}

/// Genotype columns as network inputs: `code / 2`, missing calls replaced
/// by the column's training-set mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMap {
    pub variant_ids: Vec<String>,
    pub columns: Vec<usize>,
    pub fill: Vec<u8>,
}

impl FeatureMap {
    /// Modes are taken over `train_rows` only; ties go to the smaller code.
    pub fn fit(g: &GenotypeMatrix, ids: &[String], columns: &[usize], train_rows: &[usize]) -> Self {
        let fill = columns
            .iter()
            .map(|&j| {
                let mut counts = [0usize; 3];
                for &i in train_rows {
                    if let Some(d) = g.get(i, j).dosage() {
                        counts[d as usize] += 1;
                    }
                }
                (0..3u8).max_by_key(|&d| (counts[d as usize], core::cmp::Reverse(d))).unwrap_or(0)
            })
            .collect();
        FeatureMap { variant_ids: columns.iter().map(|&j| ids[j].clone()).collect(), columns: columns.to_vec(), fill }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Additive codes (missing imputed) for `rows`.
    pub fn codes(&self, g: &GenotypeMatrix, rows: &[usize]) -> Vec<Vec<u8>> {
        rows.iter()
            .map(|&i| self.columns.iter().zip(&self.fill).map(|(&j, &f)| g.get(i, j).dosage().unwrap_or(f)).collect())
            .collect()
    }

    pub fn transform(&self, g: &GenotypeMatrix, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.width());
        for r in self.codes(g, rows) {
            data.extend(r.iter().map(|&c| f64::from(c) / 2.0));
        }
        Matrix::from_vec(rows.len(), self.width(), data)
    }

    /// Rebinds the map to another dataset's column order by variant id.
    pub fn rebind(&self, ids: &[String]) -> Result<FeatureMap, PipelineError> {
        let columns = self
            .variant_ids
            .iter()
            .map(|id| ids.iter().position(|v| v == id).ok_or_else(|| PipelineError::UnknownVariant(id.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureMap { variant_ids: self.variant_ids.clone(), columns, fill: self.fill.clone() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: LayerParams,
    pub decoder: LayerParams,
    /// Mean squared reconstruction error per input cell.
    pub reconstruction_mse: f64,
    pub epochs_run: usize,
}

fn reconstruction_mse(net: &Network, data: &Matrix) -> Result<f64, NnError> {
    let mut s = 0.0;
    for x in data.iter_rows() {
        let h = net.predict(x)?;
        s += h.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(s / (data.rows() * data.cols()).max(1) as f64)
}

/// Trains `x -> a -> x̂` on `sparse_cost`, stopping early on the training
/// reconstruction error when `cfg.stopping_rounds > 0`.
pub fn train_autoencoder(
    data: &Matrix,
    n_hidden: usize,
    activations: (Activation, Activation),
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<Autoencoder, NnError> {
    if n_hidden == 0 {
        return Err(NnError::InvalidConfig("autoencoder needs at least one hidden unit".into()));
    }
    if data.rows() == 0 {
        return Err(NnError::ShapeMismatch { expected: 1, found: 0 });
    }
    let d = data.cols();
    let mut net = Network::random(&[d, n_hidden, d], &[activations.0, activations.1], rng);
    cfg.validate_for(&net)?;
    let mut state = OptimizerState::new(&net);
    let mut history = Vec::new();
    let mut epochs_run = 0;
    for _ in 0..cfg.epochs {
        train_epoch(&mut net, data, data, cfg, &mut state, rng)?;
        epochs_run += 1;
        if cfg.stopping_rounds > 0 {
            history.push(reconstruction_mse(&net, data)?);
            if early_stop(&history, cfg) {
                break;
            }
        }
    }
    let reconstruction_mse = reconstruction_mse(&net, data)?;
    let mut layers = net.layers.into_iter();
    let encoder = layers.next().unwrap();
    let decoder = layers.next().unwrap();
    Ok(Autoencoder { encoder, decoder, reconstruction_mse, epochs_run })
}

/// Hidden activations of `encoder` for each row, without dropout.
pub fn encode(encoder: &LayerParams, data: &Matrix) -> Result<Matrix, NnError> {
    if data.cols() != encoder.inputs() {
        return Err(NnError::ShapeMismatch { expected: encoder.inputs(), found: data.cols() });
    }
    let mut out = Vec::with_capacity(data.rows() * encoder.outputs());
    for x in data.iter_rows() {
        out.extend(encoder.forward(x));
    }
    Ok(Matrix::from_vec(data.rows(), encoder.outputs(), out))
}

/// Hidden layers and activation of the supervised head; a two-unit softmax
/// output is always appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackSpec {
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub decoder_activation: Activation,
    pub pretrain: TrainConfig,
    /// Per-layer replacements for `pretrain`.
    pub overrides: Vec<Option<TrainConfig>>,
    pub head: HeadSpec,
}

impl StackSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.hidden_sizes.contains(&0) {
            return Err("hidden sizes must be positive".into());
        }
        if self.hidden_sizes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(format!("hidden sizes {:?} are not strictly decreasing", self.hidden_sizes));
        }
        Ok(())
    }

    pub fn layer_config(&self, k: usize) -> &TrainConfig {
        self.overrides.get(k).and_then(Option::as_ref).unwrap_or(&self.pretrain)
    }
}

/// Greedy layer-wise pretraining: layer `k` trains on the encodings of
/// layers `0..k`.
pub fn stack_pretrain(data: &Matrix, spec: &StackSpec, rng: &mut Rng) -> Result<Vec<Autoencoder>, PipelineError> {
    spec.validate().map_err(|reason| PipelineError::InvalidSpec { model: "stack".into(), reason })?;
    let mut input = data.clone();
    let mut out = Vec::with_capacity(spec.hidden_sizes.len());
    for (k, &h) in spec.hidden_sizes.iter().enumerate() {
        let ae = train_autoencoder(&input, h, (spec.activation, spec.decoder_activation), spec.layer_config(k), rng)?;
        input = encode(&ae.encoder, &input)?;
        out.push(ae);
    }
    Ok(out)
}

/// Pretrained encoders followed by a freshly initialized head.
pub fn init_classifier(
    encoders: &[LayerParams],
    input_dim: usize,
    head: &HeadSpec,
    rng: &mut Rng,
) -> Result<Network, NnError> {
    let mut layers: Vec<LayerParams> = encoders.to_vec();
    let mut width = input_dim;
    for e in encoders {
        if e.inputs() != width {
            return Err(NnError::ShapeMismatch { expected: width, found: e.inputs() });
        }
        width = e.outputs();
    }
    for &h in &head.hidden {
        layers.push(LayerParams::glorot(width, h, head.activation, rng));
        width = h;
    }
    layers.push(LayerParams::glorot(width, 2, Activation::Softmax, rng));
    Network::new(layers)
}

/// Probability of the positive class.
pub fn positive_score(net: &Network, x: &[f64]) -> Result<f64, NnError> {
    let out = net.predict(x)?;
    Ok(*out.last().unwrap_or(&0.0))
}

pub fn score_rows(net: &Network, data: &Matrix) -> Result<Vec<f64>, NnError> {
    data.iter_rows().map(|x| positive_score(net, x)).collect()
}

fn label_targets(net: &Network, y: &[u8]) -> Matrix {
    if net.output_dim() == 2 {
        let data = y.iter().flat_map(|&v| [1.0 - f64::from(v), f64::from(v)]).collect();
        Matrix::from_vec(y.len(), 2, data)
    } else {
        Matrix::from_vec(y.len(), 1, y.iter().map(|&v| f64::from(v)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_logloss: f64,
    pub validation_logloss: f64,
    pub validation_auc: f64,
}

fn stopping_value(metric: StoppingMetric, scores: &[f64], y: &[u8]) -> f64 {
    match metric {
        StoppingMetric::Logloss => metrics::logloss(scores, y),
        StoppingMetric::Mse => metrics::mse(scores, y),
        StoppingMetric::Auc => metrics::auc(scores, y).map_or_else(|_| metrics::logloss(scores, y), |a| 1.0 - a),
    }
}

/// Supervised training of every layer. Returns the parameters with the
/// best validation stopping metric seen and the per-epoch history.
pub fn fine_tune(
    net: Network,
    train: (&Matrix, &[u8]),
    validation: (&Matrix, &[u8]),
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<(Network, Vec<EpochRecord>), NnError> {
    cfg.validate_for(&net)?;
    let targets = label_targets(&net, train.1);
    let mut net = net;
    let mut state = OptimizerState::new(&net);
    let mut history = Vec::new();
    let mut stops = Vec::new();
    let mut best: Option<(f64, Network)> = None;
    for epoch in 1..=cfg.epochs {
        train_epoch(&mut net, train.0, &targets, cfg, &mut state, rng)?;
        let train_scores = score_rows(&net, train.0)?;
        let val_scores = score_rows(&net, validation.0)?;
        history.push(EpochRecord {
            epoch,
            train_logloss: metrics::logloss(&train_scores, train.1),
            validation_logloss: metrics::logloss(&val_scores, validation.1),
            validation_auc: metrics::auc(&val_scores, validation.1).unwrap_or(f64::NAN),
        });
        let v = stopping_value(cfg.stopping_metric, &val_scores, validation.1);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, net.clone()));
        }
        stops.push(v);
        if early_stop(&stops, cfg) {
            break;
        }
    }
    Ok((best.map_or(net, |(_, n)| n), history))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// F1-optimal threshold chosen separately on each evaluated split.
    Paper,
    /// Threshold chosen on validation and reused for test.
    Holdout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Per-SNP logistic log-odds summed, then calibrated.
    Logistic,
    /// Randomly initialized classifier.
    Mlp,
    /// Pretrained stack plus head.
    Sae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    /// Stack sizes for `sae`, hidden layers for `mlp`.
    pub hidden: Vec<usize>,
    /// Head layers after the stack (`sae` only).
    pub head: Vec<usize>,
    pub hidden_activation: Activation,
    pub head_activation: Activation,
    pub decoder_activation: Activation,
    pub pretrain: TrainConfig,
    pub finetune: TrainConfig,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            name: String::new(),
            kind: ModelKind::Mlp,
            hidden: Vec::new(),
            head: Vec::new(),
            hidden_activation: Activation::Relu,
            head_activation: Activation::Relu,
            decoder_activation: Activation::Sigmoid,
            pretrain: TrainConfig { batch_size: 1, ..TrainConfig::paper_autoencoder() },
            finetune: TrainConfig { batch_size: 1, ..TrainConfig::paper_classifier() },
        }
    }
}

impl ModelSpec {
    pub fn logistic(name: &str) -> Self {
        ModelSpec { name: name.into(), kind: ModelKind::Logistic, ..ModelSpec::default() }
    }

    pub fn mlp(name: &str, hidden: &[usize]) -> Self {
        ModelSpec { name: name.into(), kind: ModelKind::Mlp, hidden: hidden.to_vec(), ..ModelSpec::default() }
    }

    pub fn sae(name: &str, stack: &[usize], head: &[usize]) -> Self {
        ModelSpec {
            name: name.into(),
            kind: ModelKind::Sae,
            hidden: stack.to_vec(),
            head: head.to_vec(),
            hidden_activation: Activation::Sigmoid,
            ..ModelSpec::default()
        }
    }

    pub fn stack(&self) -> StackSpec {
        StackSpec {
            hidden_sizes: self.hidden.clone(),
            activation: self.hidden_activation,
            decoder_activation: self.decoder_activation,
            pretrain: self.pretrain.clone(),
            overrides: Vec::new(),
            head: HeadSpec { hidden: self.head.clone(), activation: self.head_activation },
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |reason: String| PipelineError::InvalidSpec { model: self.name.clone(), reason };
        if self.name.is_empty() || self.name.contains([',', '\n', '"']) {
            return Err(err(format!("name {:?} must be non-empty and CSV-safe", self.name)));
        }
        match self.kind {
            ModelKind::Logistic => Ok(()),
            ModelKind::Mlp => {
                if self.hidden.contains(&0) {
                    return Err(err("hidden sizes must be positive".into()));
                }
                self.finetune.validate().map_err(|e| err(format!("{e}")))
            }
            ModelKind::Sae => {
                if self.hidden.is_empty() {
                    return Err(err("a stack needs at least one layer".into()));
                }
                self.stack().validate().map_err(err)?;
                if self.pretrain.sparsity_beta > 0.0 && self.hidden_activation != Activation::Sigmoid {
                    return Err(err("the sparsity penalty needs sigmoid hidden units".into()));
                }
                self.pretrain.validate().map_err(|e| err(format!("{e}")))?;
                self.finetune.validate().map_err(|e| err(format!("{e}")))
            }
        }
    }
}

/// Experiment settings shared by every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub models: Vec<ModelSpec>,
    /// Keep variants with training-split `p_gc` below this; `None` keeps all.
    pub p_threshold: Option<f64>,
    pub threshold_mode: ThresholdMode,
    pub assoc_test: AssocTest,
    pub split_seed: u64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            models: desk_models(),
            p_threshold: Some(0.01),
            threshold_mode: ThresholdMode::Holdout,
            assoc_test: AssocTest::Logistic,
            split_seed: 7,
            seed: 42,
        }
    }
}

/// The reference line-up at desk scale: the 2500/1500/700 stack shrunk to
/// 50/30/14, heads as in the reference settings.
pub fn desk_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::logistic("Logistic"),
        ModelSpec::mlp("DL", &[10, 10, 10, 10]),
        ModelSpec::sae("SAE1", &[50], &[10, 10]),
        ModelSpec::sae("SAE2", &[50, 30], &[20, 20]),
        ModelSpec::sae("SAE3", &[50, 30, 14], &[20, 20]),
    ]
}

/// Everything a model needs: split, selected features and buffers.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: SplitAssignment,
    pub n_samples: usize,
    /// Training-split scan over every variant.
    pub scan: Scan,
    pub features: FeatureMap,
    pub x: [Matrix; 3],
    pub y: [Vec<u8>; 3],
    /// Additive codes of the training rows, for the logistic baseline.
    pub train_codes: Vec<Vec<u8>>,
}

impl Prepared {
    pub fn selected_results(&self) -> Vec<&AssocResult> {
        self.features.columns.iter().map(|&j| &self.scan.results[j]).collect()
    }
}

pub fn labels(dataset: &Dataset) -> Result<Vec<u8>, PipelineError> {
    let labels = dataset.phenotype_labels();
    let missing = labels.iter().filter(|l| l.is_none()).count();
    if missing > 0 {
        return Err(PipelineError::MissingLabels(missing));
    }
    Ok(labels.into_iter().map(|l| l.unwrap()).collect())
}

/// Genotypes and labels of the training rows.
pub fn training_rows(dataset: &Dataset, split: &SplitAssignment) -> Result<(GenotypeMatrix, Vec<u8>), PipelineError> {
    let y = labels(dataset)?;
    let rows = split.indices(SplitRole::Train);
    let yt: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    Ok((dataset.genotypes.select_samples(&rows), yt))
}

/// Association scan over the training rows only.
pub fn training_scan(dataset: &Dataset, split: &SplitAssignment, test: AssocTest) -> Result<Scan, PipelineError> {
    let (g, y) = training_rows(dataset, split)?;
    Ok(assoc::scan_with(&g, &dataset.variants, &y, test)?)
}

/// Selects features from `scan` and materializes the three splits.
pub fn prepare(
    dataset: &Dataset,
    split: SplitAssignment,
    scan: Scan,
    cfg: &ExperimentConfig,
) -> Result<Prepared, PipelineError> {
    let y = labels(dataset)?;
    let columns: Vec<usize> = match cfg.p_threshold {
        Some(t) => {
            let mut c = assoc::select_snps(&scan.results, t);
            c.sort_unstable();
            c
        }
        None => (0..dataset.n_variants()).collect(),
    };
    if columns.is_empty() {
        return Err(PipelineError::NoFeatures);
    }
    let ids: Vec<String> = dataset.variants.iter().map(|v| v.variant_id.clone()).collect();
    let train = split.indices(SplitRole::Train);
    let features = FeatureMap::fit(&dataset.genotypes, &ids, &columns, &train);
    let roles = [SplitRole::Train, SplitRole::Validation, SplitRole::Test];
    let rows = roles.map(|r| split.indices(r));
    let x = [0, 1, 2].map(|k| features.transform(&dataset.genotypes, &rows[k]));
    let yy = [0, 1, 2].map(|k| rows[k].iter().map(|&i| y[i]).collect::<Vec<u8>>());
    let train_codes = features.codes(&dataset.genotypes, &train);
    Ok(Prepared { split, n_samples: dataset.n_samples(), scan, features, x, y: yy, train_codes })
}

/// Single-layer sigmoid network computing `sigmoid(a + b · Σ β_j code_j)`
/// on `code / 2` inputs, with β from the per-SNP fits and (a, b) fitted on
/// the training rows.
pub fn logistic_baseline(prepared: &Prepared) -> Result<Network, PipelineError> {
    let betas: Vec<f64> = prepared.selected_results().iter().map(|r| r.beta1).collect();
    let raw: Vec<f64> =
        prepared.train_codes.iter().map(|c| c.iter().zip(&betas).map(|(&code, b)| b * f64::from(code)).sum()).collect();
    let fit = fit_logistic(&raw, &prepared.y[0])?;
    let w: Vec<f64> = betas.iter().map(|b| 2.0 * fit.beta1 * b).collect();
    let n = w.len();
    let layer = LayerParams::new(Matrix::from_vec(1, n, w), vec![fit.beta0], Activation::Sigmoid)?;
    Ok(Network::new(vec![layer])?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub name: String,
    pub validation: EvalReport,
    pub test: EvalReport,
    pub validation_scores: Vec<f64>,
    pub test_scores: Vec<f64>,
    pub history: Vec<EpochRecord>,
    pub checkpoint: ModelCheckpoint,
}

/// Trains and evaluates one model. Randomness comes from streams named
/// after the model, so models are independent of each other.
pub fn run_model(prepared: &Prepared, spec: &ModelSpec, cfg: &ExperimentConfig) -> Result<ModelOutcome, PipelineError> {
    spec.validate()?;
    let width = prepared.features.width();
    let mut init_rng = substream(cfg.seed, &format!("{}/init", spec.name));
    let mut train_rng = substream(cfg.seed, &format!("{}/train", spec.name));
    let train = (&prepared.x[0], prepared.y[0].as_slice());
    let val = (&prepared.x[1], prepared.y[1].as_slice());
    let (net, history) = match spec.kind {
        ModelKind::Logistic => (logistic_baseline(prepared)?, Vec::new()),
        ModelKind::Mlp => {
            let head = HeadSpec { hidden: spec.hidden.clone(), activation: spec.hidden_activation };
            let net = init_classifier(&[], width, &head, &mut init_rng)?;
            fine_tune(net, train, val, &spec.finetune, &mut train_rng)?
        }
        ModelKind::Sae => {
            let stack = spec.stack();
            let mut pre_rng = substream(cfg.seed, &format!("{}/pretrain", spec.name));
            let aes = stack_pretrain(&prepared.x[0], &stack, &mut pre_rng)?;
            let encoders: Vec<LayerParams> = aes.into_iter().map(|a| a.encoder).collect();
            let net = init_classifier(&encoders, width, &stack.head, &mut init_rng)?;
            fine_tune(net, train, val, &spec.finetune, &mut train_rng)?
        }
    };
    let validation_scores = score_rows(&net, &prepared.x[1])?;
    let test_scores = score_rows(&net, &prepared.x[2])?;
    let val_threshold = metrics::f1_optimal_threshold(&validation_scores, &prepared.y[1])?;
    let test_threshold = match cfg.threshold_mode {
        ThresholdMode::Paper => metrics::f1_optimal_threshold(&test_scores, &prepared.y[2])?,
        ThresholdMode::Holdout => val_threshold,
    };
    let validation = metrics::evaluate(&validation_scores, &prepared.y[1], val_threshold)?;
    let test = metrics::evaluate(&test_scores, &prepared.y[2], test_threshold)?;
    let checkpoint = ModelCheckpoint {
        model: spec.name.clone(),
        network: net,
        variant_ids: prepared.features.variant_ids.clone(),
        fill: prepared.features.fill.clone(),
        threshold: val_threshold,
        split_seed: prepared.split.seed,
        n_samples: prepared.n_samples as u64,
    };
    Ok(ModelOutcome { name: spec.name.clone(), validation, test, validation_scores, test_scores, history, checkpoint })
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub prepared: Prepared,
    pub outcomes: Vec<ModelOutcome>,
}

/// Split, training-only scan and selection, then every model in order.
pub fn run_experiment(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<Experiment, PipelineError> {
    let split = split_80_10_10(dataset.n_samples(), cfg.split_seed)?;
    let scan = training_scan(dataset, &split, cfg.assoc_test)?;
    let prepared = prepare(dataset, split, scan, cfg)?;
    let outcomes = cfg.models.iter().map(|m| run_model(&prepared, m, cfg)).collect::<Result<Vec<_>, _>>()?;
    Ok(Experiment { prepared, outcomes })
}

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"EPMC";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model plus what is needed to score new genotypes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub model: String,
    pub network: Network,
    pub variant_ids: Vec<String>,
    pub fill: Vec<u8>,
    /// Chosen on the validation split.
    pub threshold: f64,
    pub split_seed: u64,
    pub n_samples: u64,
}

impl ModelCheckpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.bytes(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.str(&self.model);
        w.u64(self.variant_ids.len() as u64);
        for (id, &f) in self.variant_ids.iter().zip(&self.fill) {
            w.str(id);
            w.u8(f);
        }
        w.f64(self.threshold);
        w.u64(self.split_seed);
        w.u64(self.n_samples);
        write_network(&mut w, &self.network);
        w.buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, NnError> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(NnError::Corrupt("bad magic"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(NnError::UnsupportedVersion(version));
        }
        let model = r.str()?;
        let n = r.len()?;
        let mut variant_ids = Vec::with_capacity(n);
        let mut fill = Vec::with_capacity(n);
        for _ in 0..n {
            variant_ids.push(r.str()?);
            let f = r.u8()?;
            if f > 2 {
                return Err(NnError::Corrupt("fill code above 2"));
            }
            fill.push(f);
        }
        let threshold = r.f64()?;
        let split_seed = r.u64()?;
        let n_samples = r.u64()?;
        let network = read_network(&mut r)?;
        if !r.is_empty() {
            return Err(NnError::Corrupt("trailing bytes"));
        }
        if network.input_dim() != variant_ids.len() {
            return Err(NnError::ShapeMismatch { expected: variant_ids.len(), found: network.input_dim() });
        }
        Ok(ModelCheckpoint { model, network, variant_ids, fill, threshold, split_seed, n_samples })
    }

    pub fn feature_map(&self, dataset_ids: &[String]) -> Result<FeatureMap, PipelineError> {
        FeatureMap { variant_ids: self.variant_ids.clone(), columns: Vec::new(), fill: self.fill.clone() }
            .rebind(dataset_ids)
    }

    /// Scores and evaluates `role` of the checkpoint's split on `dataset`.
    pub fn evaluate(
        &self,
        dataset: &Dataset,
        role: SplitRole,
        mode: ThresholdMode,
    ) -> Result<(EvalReport, Vec<f64>), PipelineError> {
        let y = labels(dataset)?;
        let split = split_80_10_10(dataset.n_samples(), self.split_seed)?;
        let rows = split.indices(role);
        let ids: Vec<String> = dataset.variants.iter().map(|v| v.variant_id.clone()).collect();
        let map = self.feature_map(&ids)?;
        let x = map.transform(&dataset.genotypes, &rows);
        let yy: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
        let scores = score_rows(&self.network, &x)?;
        let threshold = match mode {
            ThresholdMode::Paper => metrics::f1_optimal_threshold(&scores, &yy)?,
            ThresholdMode::Holdout => self.threshold,
        };
        Ok((metrics::evaluate(&scores, &yy, threshold)?, scores))
    }
}
