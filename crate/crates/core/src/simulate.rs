//! Synthetic case-control cohorts with planted main and pairwise effects.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genotype::{Dataset, Genotype, GenotypeMatrix, Phenotype, SampleRecord, Sex, VariantRecord};
use crate::math;
use crate::rng::{indexed_substream, substream, Rng};

/// MAF at which `P(code >= 1) = 1/2`, so a dominance-coded xor pair has no
/// marginal effect on either SNP.
pub const BALANCED_XOR_MAF: f64 = 1.0 - core::f64::consts::FRAC_1_SQRT_2;

/// Largest number of effect variants for which the intercept is solved by
/// exact enumeration.
pub const EXACT_INTERCEPT_VARIANTS: usize = 10;
/// Individuals used to estimate the population case fraction when solving
/// for the intercept with more effect variants.
const INTERCEPT_SAMPLE: usize = 50_000;
/// Rejection sampling gives up after this many draws per requested sample.
const MAX_ATTEMPTS_PER_SAMPLE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation spec, {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("case fraction {target} cannot be reached by the liability model")]
    UnattainablePrevalence { target: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionModel {
    /// Exactly one of the two SNPs carries a minor allele.
    Xor,
    /// Product of the two additive codes.
    Multiplicative,
    /// Both SNPs homozygous minor.
    Threshold,
}

impl InteractionModel {
    pub fn name(self) -> &'static str {
        match self {
            InteractionModel::Xor => "xor",
            InteractionModel::Multiplicative => "multiplicative",
            InteractionModel::Threshold => "threshold",
        }
    }

    pub fn term(self, a: u8, b: u8) -> f64 {
        match self {
            InteractionModel::Xor => f64::from(((a >= 1) != (b >= 1)) as u8),
            InteractionModel::Multiplicative => f64::from(a) * f64::from(b),
            InteractionModel::Threshold => f64::from((a == 2 && b == 2) as u8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainEffect {
    pub variant: usize,
    /// Per minor allele.
    pub odds_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpistaticPair {
    pub first: usize,
    pub second: usize,
    pub model: InteractionModel,
    /// Log-odds added when the interaction term is 1.
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSpec {
    pub n_cases: usize,
    pub n_controls: usize,
    pub n_variants: usize,
    pub maf_range: (f64, f64),
    pub main_effects: Vec<MainEffect>,
    pub epistatic_pairs: Vec<EpistaticPair>,
    pub missing_rate: f64,
    /// Pin SNPs in xor pairs to [`BALANCED_XOR_MAF`].
    pub balance_xor: bool,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            n_cases: 500,
            n_controls: 500,
            n_variants: 200,
            maf_range: (0.05, 0.5),
            main_effects: Vec::new(),
            epistatic_pairs: Vec::new(),
            missing_rate: 0.0,
            balance_xor: true,
            seed: 1,
        }
    }
}

fn invalid(field: &'static str, reason: impl ToString) -> SimError {
    SimError::InvalidSpec { field, reason: reason.to_string() }
}

impl SimSpec {
    pub fn n_samples(&self) -> usize {
        self.n_cases + self.n_controls
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_cases == 0 {
            return Err(invalid("n_cases", "must be at least 1"));
        }
        if self.n_controls == 0 {
            return Err(invalid("n_controls", "must be at least 1"));
        }
        let (lo, hi) = self.maf_range;
        if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
            return Err(invalid("maf_range", format!("({lo}, {hi}) is not inside (0, 0.5]")));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(invalid("missing_rate", format!("{} outside [0, 1)", self.missing_rate)));
        }
        for e in &self.main_effects {
            if e.variant >= self.n_variants {
                return Err(invalid(
                    "main_effects",
                    format!("variant {} >= n_variants {}", e.variant, self.n_variants),
                ));
            }
            if !(e.odds_ratio > 0.0 && e.odds_ratio.is_finite()) {
                return Err(invalid("main_effects", format!("odds ratio {} must be positive", e.odds_ratio)));
            }
        }
        for p in &self.epistatic_pairs {
            if p.first >= self.n_variants || p.second >= self.n_variants {
                return Err(invalid(
                    "epistatic_pairs",
                    format!("pair ({}, {}) outside n_variants {}", p.first, p.second, self.n_variants),
                ));
            }
            if p.first == p.second {
                return Err(invalid("epistatic_pairs", format!("pair uses variant {} twice", p.first)));
            }
            if !p.effect.is_finite() {
                return Err(invalid("epistatic_pairs", "effect must be finite"));
            }
        }
        Ok(())
    }

    /// Liability without the intercept, from additive codes.
    pub fn liability(&self, codes: &[u8]) -> f64 {
        let main: f64 = self.main_effects.iter().map(|e| math::ln(e.odds_ratio) * f64::from(codes[e.variant])).sum();
        let pairs: f64 =
            self.epistatic_pairs.iter().map(|p| p.effect * p.model.term(codes[p.first], codes[p.second])).sum();
        main + pairs
    }

    fn effect_variants(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .main_effects
            .iter()
            .map(|e| e.variant)
            .chain(self.epistatic_pairs.iter().flat_map(|p| [p.first, p.second]))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// One planted effect, for the ground-truth sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub kind: String,
    pub first: String,
    pub second: Option<String>,
    /// Log-odds.
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub dataset: Dataset,
    pub mafs: Vec<f64>,
    pub intercept: f64,
    pub truth: Vec<TruthRow>,
    /// Individuals drawn before both class quotas were met.
    pub attempts: usize,
}

/// Per-variant minor allele frequencies.
pub fn draw_mafs(spec: &SimSpec) -> Vec<f64> {
    let mut rng = substream(spec.seed, "maf");
    let (lo, hi) = spec.maf_range;
    let mut mafs: Vec<f64> = (0..spec.n_variants).map(|_| if lo < hi { rng.gen_range(lo..hi) } else { lo }).collect();
    if spec.balance_xor {
        for p in spec.epistatic_pairs.iter().filter(|p| p.model == InteractionModel::Xor) {
            mafs[p.first] = BALANCED_XOR_MAF;
            mafs[p.second] = BALANCED_XOR_MAF;
        }
    }
    mafs
}

/// Minor-allele count under Hardy-Weinberg proportions.
pub fn draw_code(q: f64, rng: &mut Rng) -> u8 {
    let u: f64 = rng.gen();
    if u < q * q {
        2
    } else if u < q * q + 2.0 * q * (1.0 - q) {
        1
    } else {
        0
    }
}

fn draw_individual(mafs: &[f64], rng: &mut Rng) -> Vec<u8> {
    mafs.iter().map(|&q| draw_code(q, rng)).collect()
}

fn mask_missing(codes: &[u8], rate: f64, rng: &mut Rng) -> Vec<Genotype> {
    codes
        .iter()
        .map(|&c| if rate > 0.0 && rng.gen::<f64>() < rate { Genotype::Missing } else { Genotype::from_dosage(c) })
        .collect()
}

fn variant_records(n: usize) -> Vec<VariantRecord> {
    (0..n)
        .map(|j| {
            let chromosome = (1 + j * 22 / n.max(1)) as u8;
            VariantRecord {
                chromosome,
                variant_id: format!("snp{}", j + 1),
                genetic_distance: 0.0,
                bp_position: 1000 * (j as u64 + 1),
                allele1: "A".into(),
                allele2: "G".into(),
            }
        })
        .collect()
}

fn sample_record(i: usize, rng: &mut Rng, phenotype: Phenotype) -> SampleRecord {
    let sex = if rng.gen::<bool>() { Sex::Male } else { Sex::Female };
    let id = format!("S{}", i + 1);
    SampleRecord::new(&id, &id, sex, phenotype)
}

/// Unlabeled genotypes for `n_cases + n_controls` individuals, with
/// missing cells masked at `missing_rate`.
pub fn gen_genotypes(spec: &SimSpec) -> Result<(GenotypeMatrix, Vec<VariantRecord>, Vec<SampleRecord>), SimError> {
    spec.validate()?;
    let mafs = draw_mafs(spec);
    let n = spec.n_samples();
    let mut codes = Vec::with_capacity(n * spec.n_variants);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = indexed_substream(spec.seed, "genotypes", i as u64);
        let row = draw_individual(&mafs, &mut rng);
        codes.extend(mask_missing(&row, spec.missing_rate, &mut rng));
        samples.push(sample_record(i, &mut rng, Phenotype::Missing));
    }
    Ok((GenotypeMatrix::new(n, spec.n_variants, codes), variant_records(spec.n_variants), samples))
}

/// Intercept `b0` with `E[sigmoid(b0 + η)]` within 1e-3 of the requested
/// case fraction, by bisection.
///
/// The expectation is exact (enumerated over HWE genotype combinations)
/// for up to [`EXACT_INTERCEPT_VARIANTS`] effect variants and a Monte Carlo
/// average over a fixed population beyond that.
pub fn solve_intercept(spec: &SimSpec, mafs: &[f64]) -> Result<f64, SimError> {
    let target = spec.n_cases as f64 / spec.n_samples() as f64;
    let effects = spec.effect_variants();
    if effects.is_empty() {
        return Ok(math::ln(target / (1.0 - target)));
    }
    // (liability, probability weight) atoms
    let mut codes = vec![0u8; spec.n_variants];
    let atoms: Vec<(f64, f64)> = if effects.len() <= EXACT_INTERCEPT_VARIANTS {
        let total = 3usize.pow(effects.len() as u32);
        (0..total)
            .map(|mut k| {
                let mut w = 1.0;
                for &j in &effects {
                    let c = (k % 3) as u8;
                    k /= 3;
                    codes[j] = c;
                    let q = mafs[j];
                    w *= [(1.0 - q) * (1.0 - q), 2.0 * q * (1.0 - q), q * q][c as usize];
                }
                (spec.liability(&codes), w)
            })
            .collect()
    } else {
        let mut rng = substream(spec.seed, "intercept");
        let w = 1.0 / INTERCEPT_SAMPLE as f64;
        (0..INTERCEPT_SAMPLE)
            .map(|_| {
                for &j in &effects {
                    codes[j] = draw_code(mafs[j], &mut rng);
                }
                (spec.liability(&codes), w)
            })
            .collect()
    };
    let prevalence = |b0: f64| atoms.iter().map(|&(e, w)| w * math::sigmoid(b0 + e)).sum::<f64>();
    let (mut lo, mut hi) = (-60.0, 60.0);
    if prevalence(lo) > target || prevalence(hi) < target {
        return Err(SimError::UnattainablePrevalence { target });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if prevalence(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if math::abs(prevalence(mid) - target) < 1e-3 {
        Ok(mid)
    } else {
        Err(SimError::UnattainablePrevalence { target })
    }
}

/// Bernoulli labels from the liability model, one per row of `g`.
/// Missing calls count as zero minor alleles.
pub fn assign_phenotypes(g: &GenotypeMatrix, spec: &SimSpec, intercept: f64, rng: &mut Rng) -> Vec<Phenotype> {
    (0..g.n_samples())
        .map(|i| {
            let codes: Vec<u8> = g.row(i).iter().map(|c| c.dosage().unwrap_or(0)).collect();
            let p = math::sigmoid(intercept + spec.liability(&codes));
            if rng.gen::<f64>() < p {
                Phenotype::Case
            } else {
                Phenotype::Control
            }
        })
        .collect()
}

/// Full cohort with exact class counts: individuals are drawn and labeled
/// one at a time, and kept only while their class still has room.
pub fn simulate(spec: &SimSpec) -> Result<Simulation, SimError> {
    spec.validate()?;
    let mafs = draw_mafs(spec);
    let intercept = solve_intercept(spec, &mafs)?;
    let n = spec.n_samples();
    let (mut cases, mut controls) = (0usize, 0usize);
    let mut codes = Vec::with_capacity(n * spec.n_variants);
    let mut samples = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while cases < spec.n_cases || controls < spec.n_controls {
        if attempts >= n.saturating_mul(MAX_ATTEMPTS_PER_SAMPLE) {
            return Err(SimError::UnattainablePrevalence { target: spec.n_cases as f64 / n as f64 });
        }
        let mut rng = indexed_substream(spec.seed, "individual", attempts as u64);
        attempts += 1;
        let row = draw_individual(&mafs, &mut rng);
        let is_case = rng.gen::<f64>() < math::sigmoid(intercept + spec.liability(&row));
        let phenotype = match (is_case, cases < spec.n_cases, controls < spec.n_controls) {
            (true, true, _) => {
                cases += 1;
                Phenotype::Case
            }
            (false, _, true) => {
                controls += 1;
                Phenotype::Control
            }
            _ => continue,
        };
        codes.extend(mask_missing(&row, spec.missing_rate, &mut rng));
        samples.push(sample_record(samples.len(), &mut rng, phenotype));
    }
    let variants = variant_records(spec.n_variants);
    let truth = ground_truth(spec, &variants);
    let genotypes = GenotypeMatrix::new(n, spec.n_variants, codes);
    let dataset = Dataset::new(samples, variants, genotypes).expect("dimensions agree by construction");
    Ok(Simulation { dataset, mafs, intercept, truth, attempts })
}

pub fn ground_truth(spec: &SimSpec, variants: &[VariantRecord]) -> Vec<TruthRow> {
    let id = |j: usize| variants[j].variant_id.clone();
    spec.main_effects
        .iter()
        .map(|e| TruthRow { kind: "main".into(), first: id(e.variant), second: None, effect: math::ln(e.odds_ratio) })
        .chain(spec.epistatic_pairs.iter().map(|p| TruthRow {
            kind: p.model.name().into(),
            first: id(p.first),
            second: Some(id(p.second)),
            effect: p.effect,
        }))
        .collect()
}

/// The epistasis cohort used in the end-to-end experiment: `n_pairs` xor
/// pairs on the first `2 * n_pairs` variants, each of those SNPs also
/// carrying a small additive effect.
pub fn epistasis_spec(
    n_samples: usize,
    n_variants: usize,
    n_pairs: usize,
    leakage: f64,
    effect: f64,
    seed: u64,
) -> SimSpec {
    SimSpec {
        n_cases: n_samples / 2,
        n_controls: n_samples - n_samples / 2,
        n_variants,
        main_effects: (0..2 * n_pairs).map(|j| MainEffect { variant: j, odds_ratio: math::exp(leakage) }).collect(),
        epistatic_pairs: (0..n_pairs)
            .map(|k| EpistaticPair { first: 2 * k, second: 2 * k + 1, model: InteractionModel::Xor, effect })
            .collect(),
        seed,
        ..SimSpec::default()
    }
}
