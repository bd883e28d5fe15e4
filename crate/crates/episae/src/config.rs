//! TOML pipeline configuration and command-line overrides.
//!
//! ```toml
//! seed = 42
//! out = "run1"
//!
//! [simulate]
//! n_cases = 1500
//! n_controls = 1500
//!
//! [qc]
//! maf_min = 0.05
//!
//! [assoc]
//! test = "logistic"
//! p_threshold = 0.01
//!
//! [train]
//! threshold_mode = "holdout"
//! [[train.models]]
//! name = "SAE3"
//! kind = "sae"
//! hidden = [50, 30, 14]
//! head = [20, 20]
//! hidden_activation = "sigmoid"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use episae_core::assoc::AssocTest;
use episae_core::pipeline::{desk_models, ExperimentConfig, ModelKind, ModelSpec, ThresholdMode};
use episae_core::qc::QcThresholds;
use episae_core::simulate::SimSpec;

use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssocSection {
    pub test: AssocTest,
    /// Keep variants with `p_gc` at or below this.
    pub p_threshold: f64,
}

impl Default for AssocSection {
    fn default() -> Self {
        AssocSection { test: AssocTest::Logistic, p_threshold: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub models: Vec<ModelSpec>,
    pub threshold_mode: ThresholdMode,
    pub split_seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection { models: desk_models(), threshold_mode: ThresholdMode::Holdout, split_seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// PLINK prefix read by `qc`, `assoc`, `train` and `evaluate`.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    /// Drives simulation, initialization and dropout. The split has its own
    /// seed under `[train]`.
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide. Results do not depend on it.
    pub threads: usize,
    pub simulate: SimSpec,
    pub qc: QcThresholds,
    pub assoc: AssocSection,
    pub train: TrainSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            out: PathBuf::from("out"),
            seed: 42,
            threads: 0,
            simulate: SimSpec::default(),
            qc: QcThresholds::default(),
            assoc: AssocSection::default(),
            train: TrainSection::default(),
        }
    }
}

/// Command-line values that replace config entries when given.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub p_threshold: Option<f64>,
    pub arch: Option<Vec<usize>>,
    pub threshold_mode: Option<ThresholdMode>,
}

/// Parses `"2500,1500,700"`.
pub fn parse_arch(s: &str) -> Result<Vec<usize>, String> {
    let sizes = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad layer size {t:?} in --arch {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.contains(&0) {
        return Err(format!("layer sizes in --arch {s:?} must be positive"));
    }
    Ok(sizes)
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies flag values. `--arch` replaces every SAE model with a single
    /// `SAE` model using that stack; its head and training settings come from
    /// the first configured SAE model (or the defaults).
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.input {
            self.input = Some(v.clone());
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.threads {
            self.threads = v;
        }
        if let Some(v) = o.p_threshold {
            self.assoc.p_threshold = v;
        }
        if let Some(v) = o.threshold_mode {
            self.train.threshold_mode = v;
        }
        if let Some(stack) = &o.arch {
            let models = &mut self.train.models;
            let template = models.iter().find(|m| m.kind == ModelKind::Sae).cloned().unwrap_or_else(|| {
                let head: &[usize] = if stack.len() == 1 { &[10, 10] } else { &[20, 20] };
                ModelSpec::sae("SAE", stack, head)
            });
            let at = models.iter().position(|m| m.kind == ModelKind::Sae).unwrap_or(models.len());
            models.retain(|m| m.kind != ModelKind::Sae);
            let sae = ModelSpec { name: "SAE".into(), hidden: stack.clone(), ..template };
            models.insert(at.min(models.len()), sae);
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |message: String| Error::Usage(message);
        let p = self.assoc.p_threshold;
        if !(p > 0.0 && p <= 1.0) {
            return Err(bad(format!("p_threshold = {p} must be in (0, 1]")));
        }
        self.qc.validate()?;
        let mut names: Vec<&str> = self.train.models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(bad(format!("model name {:?} is used twice", w[0])));
        }
        for m in &self.train.models {
            m.validate()?;
            if m.name.contains(['/', '\\']) {
                return Err(bad(format!("model name {:?} must not contain path separators", m.name)));
            }
        }
        Ok(())
    }

    /// The simulation spec with the pipeline seed.
    pub fn sim_spec(&self) -> SimSpec {
        SimSpec { seed: self.seed, ..self.simulate.clone() }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            models: self.train.models.clone(),
            p_threshold: Some(self.assoc.p_threshold),
            threshold_mode: self.train.threshold_mode,
            assoc_test: self.assoc.test,
            split_seed: self.train.split_seed,
            seed: self.seed,
        }
    }
}
