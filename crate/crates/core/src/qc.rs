//! Sample and variant quality control.
//!
//! [`run_qc`] applies the filters in a fixed order (sex check, sample
//! missingness, heterozygosity, ancestry, relatedness, sample call rate,
//! variant missingness, MAF, HWE), each stage seeing only the survivors of
//! the previous one.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::genotype::{Dataset, Genotype, GenotypeMatrix, SampleRecord, Sex, VariantRecord, CHROM_X};
use crate::math;
use crate::matrix::{dot, Matrix};
use crate::rng;
use crate::stats;

/// Minimum number of informative variants for the relatedness estimator.
pub const IBD_MIN_VARIANTS: usize = 50;

const PCA_MAX_ITER: usize = 20_000;
const PCA_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QcError {
    #[error("genotype matrix has no {0}")]
    EmptyMatrix(&'static str),
    #[error("no chromosome X variants for the sex check")]
    NoXVariants,
    #[error("every call is missing")]
    AllMissing,
    #[error("{found} informative variants, relatedness needs at least {needed}")]
    TooFewVariants { found: usize, needed: usize },
    #[error("principal component {component} did not converge in {iterations} iterations")]
    ConvergenceFailure { component: usize, iterations: usize },
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
}

/// Which side of the PC2 cutoff counts as divergent ancestry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AncestrySide {
    /// Flag samples with `PC2 > cutoff`.
    Above,
    /// Flag samples with `PC2 < cutoff`.
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QcThresholds {
    /// Samples with missing rate `>=` this are removed.
    pub sample_missing_max: f64,
    pub het_sd_band: f64,
    pub sex_female_homozygosity_max: f64,
    pub sex_male_homozygosity_min: f64,
    pub ibd_pi_hat_max: f64,
    pub pc2_cutoff: f64,
    pub pc2_side: AncestrySide,
    /// Variants with missing rate `>` this are removed.
    pub variant_missing_max: f64,
    /// Variants with MAF `<` this are removed.
    pub maf_min: f64,
    /// Variants with control HWE p `<` this are removed.
    pub hwe_p_min: f64,
}

impl Default for QcThresholds {
    fn default() -> Self {
        QcThresholds {
            sample_missing_max: 0.05,
            het_sd_band: 3.0,
            sex_female_homozygosity_max: 0.2,
            sex_male_homozygosity_min: 0.8,
            ibd_pi_hat_max: 0.185,
            pc2_cutoff: 0.061,
            pc2_side: AncestrySide::Above,
            variant_missing_max: 0.01,
            maf_min: 0.05,
            hwe_p_min: 0.001,
        }
    }
}

impl QcThresholds {
    pub fn validate(&self) -> Result<(), QcError> {
        let rates = [
            ("sample_missing_max", self.sample_missing_max),
            ("sex_female_homozygosity_max", self.sex_female_homozygosity_max),
            ("sex_male_homozygosity_min", self.sex_male_homozygosity_min),
            ("ibd_pi_hat_max", self.ibd_pi_hat_max),
            ("variant_missing_max", self.variant_missing_max),
            ("maf_min", self.maf_min),
            ("hwe_p_min", self.hwe_p_min),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(QcError::InvalidThreshold(alloc::format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if !(self.het_sd_band > 0.0) {
            return Err(QcError::InvalidThreshold(alloc::format!("het_sd_band = {} must be > 0", self.het_sd_band)));
        }
        if !self.pc2_cutoff.is_finite() {
            return Err(QcError::InvalidThreshold("pc2_cutoff must be finite".into()));
        }
        Ok(())
    }
}

#[inline]
fn is_autosome(chrom: u8) -> bool {
    (1..=22).contains(&chrom)
}

fn missing_fraction(calls: impl Iterator<Item = Genotype>) -> (usize, usize) {
    calls.fold((0, 0), |(miss, n), g| (miss + g.is_missing() as usize, n + 1))
}

pub fn sample_missingness(g: &GenotypeMatrix) -> Result<Vec<f64>, QcError> {
    if g.n_variants() == 0 {
        return Err(QcError::EmptyMatrix("variants"));
    }
    Ok((0..g.n_samples())
        .map(|i| {
            let (miss, n) = missing_fraction(g.row(i).iter().copied());
            miss as f64 / n as f64
        })
        .collect())
}

pub fn variant_missingness(g: &GenotypeMatrix) -> Result<Vec<f64>, QcError> {
    if g.n_samples() == 0 {
        return Err(QcError::EmptyMatrix("samples"));
    }
    let mut miss = vec![0usize; g.n_variants()];
    for i in 0..g.n_samples() {
        for (m, c) in miss.iter_mut().zip(g.row(i)) {
            *m += c.is_missing() as usize;
        }
    }
    Ok(miss.into_iter().map(|m| m as f64 / g.n_samples() as f64).collect())
}

/// Per-sample heterozygosity over autosomal calls; `None` without calls.
pub fn heterozygosity_rates(g: &GenotypeMatrix, variants: &[VariantRecord]) -> Vec<Option<f64>> {
    (0..g.n_samples())
        .map(|i| {
            let (mut het, mut called) = (0usize, 0usize);
            for (c, v) in g.row(i).iter().zip(variants) {
                if is_autosome(v.chromosome) && !c.is_missing() {
                    called += 1;
                    het += (*c == Genotype::Het) as usize;
                }
            }
            (called > 0).then(|| het as f64 / called as f64)
        })
        .collect()
}

/// Samples whose heterozygosity is more than `band` sample SDs from the mean.
pub fn heterozygosity_outliers(g: &GenotypeMatrix, variants: &[VariantRecord], band: f64) -> Vec<usize> {
    let rates = heterozygosity_rates(g, variants);
    let observed: Vec<f64> = rates.iter().flatten().copied().collect();
    if observed.len() < 2 {
        return Vec::new();
    }
    let mean = stats::mean(&observed);
    let sd = stats::sample_sd(&observed);
    if sd == 0.0 {
        return Vec::new();
    }
    rates.iter().enumerate().filter_map(|(i, r)| r.filter(|h| math::abs(h - mean) > band * sd).map(|_| i)).collect()
}

/// Homozygosity over chromosome X calls, per sample.
pub fn x_homozygosity(g: &GenotypeMatrix, variants: &[VariantRecord]) -> Result<Vec<Option<f64>>, QcError> {
    let x_cols: Vec<usize> =
        variants.iter().enumerate().filter(|(_, v)| v.chromosome == CHROM_X).map(|(j, _)| j).collect();
    if x_cols.is_empty() {
        return Err(QcError::NoXVariants);
    }
    Ok((0..g.n_samples())
        .map(|i| {
            let (mut hom, mut called) = (0usize, 0usize);
            for &j in &x_cols {
                match g.get(i, j) {
                    Genotype::Missing => {}
                    Genotype::Het => called += 1,
                    _ => {
                        called += 1;
                        hom += 1;
                    }
                }
            }
            (called > 0).then(|| hom as f64 / called as f64)
        })
        .collect())
}

/// Samples whose X homozygosity disagrees with their declared sex.
pub fn sex_check(
    g: &GenotypeMatrix,
    variants: &[VariantRecord],
    samples: &[SampleRecord],
    thr: &QcThresholds,
) -> Result<Vec<usize>, QcError> {
    let h = x_homozygosity(g, variants)?;
    Ok(samples
        .iter()
        .zip(&h)
        .enumerate()
        .filter_map(|(i, (s, h))| {
            let h = (*h)?;
            let bad = match s.sex {
                Sex::Female => h > thr.sex_female_homozygosity_max,
                Sex::Male => h < thr.sex_male_homozygosity_min,
                Sex::Unknown => false,
            };
            bad.then_some(i)
        })
        .collect())
}

/// Genotype counts `[hom_major, het, hom_minor]` over non-missing calls.
pub fn genotype_counts(column: &[Genotype]) -> [usize; 3] {
    let mut c = [0usize; 3];
    for g in column {
        if let Some(d) = g.dosage() {
            c[d as usize] += 1;
        }
    }
    c
}

/// Folded minor allele frequency, `min(f, 1 - f)`.
pub fn minor_allele_frequency(column: &[Genotype]) -> Result<f64, QcError> {
    let [_, het, hom] = genotype_counts(column);
    let called = column.iter().filter(|g| !g.is_missing()).count();
    if called == 0 {
        return Err(QcError::AllMissing);
    }
    let alleles = 2 * hom + het;
    Ok(alleles.min(2 * called - alleles) as f64 / (2 * called) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HweResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson goodness-of-fit test of `[n_AA, n_Aa, n_aa]` against HWE, 1 df.
pub fn hwe_chi2(counts: [usize; 3]) -> Result<HweResult, QcError> {
    let n = (counts[0] + counts[1] + counts[2]) as f64;
    if n == 0.0 {
        return Err(QcError::AllMissing);
    }
    let p = (2 * counts[0] + counts[1]) as f64 / (2.0 * n);
    let q = 1.0 - p;
    let expected = [n * p * p, 2.0 * n * p * q, n * q * q];
    let statistic: f64 =
        counts.iter().zip(expected).filter(|(_, e)| *e > 0.0).map(|(&o, e)| (o as f64 - e) * (o as f64 - e) / e).sum();
    let p_value = stats::chi2_survival(statistic, 1).unwrap_or(1.0);
    Ok(HweResult { statistic, p_value })
}

/// HWE test restricted to control samples (`label == Some(0)`).
pub fn hwe_test(column: &[Genotype], labels: &[Option<u8>]) -> Result<HweResult, QcError> {
    let controls: Vec<Genotype> = column.iter().zip(labels).filter(|(_, y)| **y == Some(0)).map(|(g, _)| *g).collect();
    hwe_chi2(genotype_counts(&controls))
}

/// Relatedness estimate for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbdPair {
    pub first: usize,
    pub second: usize,
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
    pub pi_hat: f64,
}

struct LocusExpectation {
    // P(IBS = 0 | IBD = 0), P(IBS = 1 | IBD = 0), P(IBS = 1 | IBD = 1)
    ibs0_ibd0: f64,
    ibs1_ibd0: f64,
    ibs1_ibd1: f64,
}

fn locus_expectations(g: &GenotypeMatrix) -> Vec<Option<LocusExpectation>> {
    (0..g.n_variants())
        .map(|j| {
            let [a, h, b] = genotype_counts(&g.column(j));
            let called = a + h + b;
            if called == 0 {
                return None;
            }
            let p = (2 * a + h) as f64 / (2 * called) as f64;
            let q = 1.0 - p;
            if p <= 0.0 || q <= 0.0 {
                return None;
            }
            Some(LocusExpectation {
                ibs0_ibd0: 2.0 * p * p * q * q,
                ibs1_ibd0: 4.0 * p * p * p * q + 4.0 * p * q * q * q,
                ibs1_ibd1: 2.0 * p * q,
            })
        })
        .collect()
}

/// Method-of-moments IBD estimate for every sample pair.
///
/// Observed IBS0/IBS1 proportions are matched to their expectations under
/// IBD 0 and 1 given the pooled allele frequencies; `pi_hat = z1/2 + z2`.
pub fn ibd_estimates(g: &GenotypeMatrix) -> Result<Vec<IbdPair>, QcError> {
    let exp = locus_expectations(g);
    let informative: Vec<usize> = exp.iter().enumerate().filter(|(_, e)| e.is_some()).map(|(j, _)| j).collect();
    if informative.len() < IBD_MIN_VARIANTS {
        return Err(QcError::TooFewVariants { found: informative.len(), needed: IBD_MIN_VARIANTS });
    }
    let n = g.n_samples();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let dosages: Vec<Vec<i8>> = (0..n)
        .map(|i| {
            let row = g.row(i);
            informative.iter().map(|&j| row[j].dosage().map_or(-1, |d| d as i8)).collect()
        })
        .collect();
    let e: Vec<&LocusExpectation> = informative.iter().map(|&j| exp[j].as_ref().unwrap()).collect();
    for a in 0..n {
        for b in (a + 1)..n {
            let (mut ibs, mut sums, mut loci) = ([0usize; 2], [0.0f64; 3], 0usize);
            for ((&x, &y), el) in dosages[a].iter().zip(&dosages[b]).zip(&e) {
                if x < 0 || y < 0 {
                    continue;
                }
                loci += 1;
                match (x - y).abs() {
                    2 => ibs[0] += 1,
                    1 => ibs[1] += 1,
                    _ => {}
                }
                sums[0] += el.ibs0_ibd0;
                sums[1] += el.ibs1_ibd0;
                sums[2] += el.ibs1_ibd1;
            }
            if loci == 0 {
                continue;
            }
            let l = loci as f64;
            let (p0, p1) = (ibs[0] as f64 / l, ibs[1] as f64 / l);
            let (e00, e10, e11) = (sums[0] / l, sums[1] / l, sums[2] / l);
            let z0 = (p0 / e00).clamp(0.0, 1.0);
            let z1 = ((p1 - z0 * e10) / e11).clamp(0.0, 1.0 - z0);
            let z2 = (1.0 - z0 - z1).max(0.0);
            out.push(IbdPair { first: a, second: b, z0, z1, z2, pi_hat: z2 + 0.5 * z1 });
        }
    }
    Ok(out)
}

/// Samples to drop so no remaining pair has `pi_hat > pi_hat_max`.
///
/// From each related pair the member with the higher missing rate is
/// removed; ties go to the lexicographically larger `FID:IID`.
pub fn ibd_flags(g: &GenotypeMatrix, samples: &[SampleRecord], pi_hat_max: f64) -> Result<Vec<usize>, QcError> {
    let pairs = ibd_estimates(g)?;
    let miss = sample_missingness(g)?;
    let mut removed = vec![false; g.n_samples()];
    for p in pairs.iter().filter(|p| p.pi_hat > pi_hat_max) {
        if removed[p.first] || removed[p.second] {
            continue;
        }
        let (a, b) = (p.first, p.second);
        let drop = if miss[a] > miss[b] {
            a
        } else if miss[b] > miss[a] {
            b
        } else if samples[a].key() > samples[b].key() {
            a
        } else {
            b
        };
        removed[drop] = true;
    }
    Ok(removed.iter().enumerate().filter(|(_, r)| **r).map(|(i, _)| i).collect())
}

/// Top principal components of the standardized genotype matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// `n_samples x k` unit-norm sample scores.
    pub scores: Matrix,
    pub eigenvalues: Vec<f64>,
}

fn standardized(g: &GenotypeMatrix) -> Matrix {
    let (n, m) = (g.n_samples(), g.n_variants());
    let mut x = Matrix::zeros(n, m);
    for j in 0..m {
        let col = g.column(j);
        let called: Vec<f64> = col.iter().filter_map(|c| c.dosage()).map(f64::from).collect();
        if called.is_empty() {
            continue;
        }
        let mean = stats::mean(&called);
        let f = mean / 2.0;
        let scale = math::sqrt(2.0 * f * (1.0 - f));
        if scale == 0.0 {
            continue;
        }
        for (i, c) in col.iter().enumerate() {
            x[(i, j)] = c.dosage().map_or(0.0, |d| (d as f64 - mean) / scale);
        }
    }
    x
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = math::sqrt(dot(v, v));
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// Power iteration with deflation on `X Xᵀ / m`.
///
/// Missing calls sit at the column mean (zero after centering). Each
/// component is oriented so its largest-magnitude entry is positive.
pub fn ancestry_pca(g: &GenotypeMatrix, k: usize) -> Result<Pca, QcError> {
    let (n, m) = (g.n_samples(), g.n_variants());
    if k > n.min(m) {
        return Err(QcError::InvalidThreshold(alloc::format!("k = {k} exceeds min({n}, {m})")));
    }
    let x = standardized(g);
    let apply = |v: &[f64]| -> Vec<f64> {
        let t = x.t_matvec(v);
        let mut out = x.matvec(&t);
        out.iter_mut().for_each(|o| *o /= m as f64);
        out
    };
    let mut init = rng::substream(0, "pca");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for comp in 0..k {
        let mut v: Vec<f64> = (0..n).map(|_| init.gen::<f64>() - 0.5).collect();
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        let mut lambda = 0.0;
        let mut converged = false;
        for _ in 0..PCA_MAX_ITER {
            let mut w = apply(&v);
            orthogonalize(&mut w, &basis);
            let new_lambda = dot(&w, &v);
            if normalize(&mut w) <= 1e-300 {
                // degenerate operator: no variance left
                v.iter_mut().for_each(|e| *e = 0.0);
                lambda = 0.0;
                converged = true;
                break;
            }
            let delta = w.iter().zip(&v).map(|(a, b)| math::abs(a - b)).fold(0.0, f64::max);
            let lambda_settled = math::abs(new_lambda - lambda) <= 1e-14 * math::abs(new_lambda);
            v = w;
            lambda = new_lambda;
            if delta < PCA_TOL || lambda_settled {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(QcError::ConvergenceFailure { component: comp + 1, iterations: PCA_MAX_ITER });
        }
        // final re-orthogonalization keeps |PCi·PCj| at machine precision
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        if let Some(pivot) = v.iter().copied().reduce(|a, b| if math::abs(b) > math::abs(a) { b } else { a }) {
            if pivot < 0.0 {
                v.iter_mut().for_each(|e| *e = -*e);
            }
        }
        basis.push(v);
        eigenvalues.push(lambda);
    }
    let mut scores = Matrix::zeros(n, k);
    for (c, b) in basis.iter().enumerate() {
        for (i, &s) in b.iter().enumerate() {
            scores[(i, c)] = s;
        }
    }
    Ok(Pca { scores, eigenvalues })
}

/// Samples on the divergent side of the PC2 cutoff.
pub fn ancestry_flags(pca: &Pca, cutoff: f64, side: AncestrySide) -> Vec<usize> {
    if pca.scores.cols() < 2 {
        return Vec::new();
    }
    (0..pca.scores.rows())
        .filter(|&i| {
            let s = pca.scores[(i, 1)];
            match side {
                AncestrySide::Above => s > cutoff,
                AncestrySide::Below => s < cutoff,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Sample,
    Variant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub name: &'static str,
    pub axis: Axis,
    /// Human-readable rule, e.g. `missing rate >= 0.05`.
    pub rule: String,
    /// Ids of removed samples (`FID:IID`) or variants.
    pub removed: Vec<String>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcReport {
    pub initial_samples: usize,
    pub initial_variants: usize,
    pub stages: Vec<StageReport>,
    pub final_samples: usize,
    pub final_variants: usize,
    /// Fraction of non-missing calls in the filtered matrix.
    pub call_rate: f64,
}

impl QcReport {
    pub fn removed_total(&self, axis: Axis) -> usize {
        self.stages.iter().filter(|s| s.axis == axis).map(|s| s.removed.len()).sum()
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }
}

struct Pipeline {
    data: Dataset,
    stages: Vec<StageReport>,
}

impl Pipeline {
    fn drop_samples(&mut self, name: &'static str, rule: String, flagged: &[usize]) {
        let removed = flagged.iter().map(|&i| self.data.samples[i].key()).collect();
        let keep: Vec<usize> = (0..self.data.n_samples()).filter(|i| !flagged.contains(i)).collect();
        if !flagged.is_empty() {
            self.data = self.data.select_samples(&keep);
        }
        self.stages.push(StageReport { name, axis: Axis::Sample, rule, removed, skipped: false });
    }

    fn drop_variants(&mut self, name: &'static str, rule: String, flagged: &[usize]) {
        let removed = flagged.iter().map(|&j| self.data.variants[j].variant_id.clone()).collect();
        let keep: Vec<usize> = (0..self.data.n_variants()).filter(|j| !flagged.contains(j)).collect();
        if !flagged.is_empty() {
            self.data = self.data.select_variants(&keep);
        }
        self.stages.push(StageReport { name, axis: Axis::Variant, rule, removed, skipped: false });
    }

    fn skip(&mut self, name: &'static str, axis: Axis, rule: String) {
        self.stages.push(StageReport { name, axis, rule, removed: Vec::new(), skipped: true });
    }

    fn missing_samples(&mut self, name: &'static str, thr: f64) -> Result<(), QcError> {
        let rule = alloc::format!("sample missing rate >= {thr}");
        if self.data.n_variants() == 0 {
            self.skip(name, Axis::Sample, rule);
            return Ok(());
        }
        let rates = sample_missingness(&self.data.genotypes)?;
        let flagged: Vec<usize> = rates.iter().enumerate().filter(|(_, r)| **r >= thr).map(|(i, _)| i).collect();
        self.drop_samples(name, rule, &flagged);
        Ok(())
    }

    /// Autosomal columns with MAF >= `maf_min` among current samples.
    fn common_autosomal(&self, maf_min: f64) -> Vec<usize> {
        (0..self.data.n_variants())
            .filter(|&j| {
                is_autosome(self.data.variants[j].chromosome)
                    && minor_allele_frequency(&self.data.genotypes.column(j)).is_ok_and(|f| f >= maf_min && f > 0.0)
            })
            .collect()
    }
}

/// Runs every filter in order and reports what each stage removed.
pub fn run_qc(dataset: &Dataset, thr: &QcThresholds) -> Result<(Dataset, QcReport), QcError> {
    thr.validate()?;
    let mut p = Pipeline { data: dataset.clone(), stages: Vec::new() };

    let sex_rule = alloc::format!(
        "female X homozygosity > {}, male < {}",
        thr.sex_female_homozygosity_max,
        thr.sex_male_homozygosity_min
    );
    match sex_check(&p.data.genotypes, &p.data.variants, &p.data.samples, thr) {
        Ok(flagged) => p.drop_samples("sex_check", sex_rule, &flagged),
        Err(QcError::NoXVariants) => p.skip("sex_check", Axis::Sample, sex_rule),
        Err(e) => return Err(e),
    }

    p.missing_samples("sample_missingness", thr.sample_missing_max)?;

    let flagged = heterozygosity_outliers(&p.data.genotypes, &p.data.variants, thr.het_sd_band);
    p.drop_samples("heterozygosity", alloc::format!("|het - mean| > {} SD", thr.het_sd_band), &flagged);

    let side = match thr.pc2_side {
        AncestrySide::Above => ">",
        AncestrySide::Below => "<",
    };
    let anc_rule = alloc::format!("PC2 {side} {}", thr.pc2_cutoff);
    let cols = p.common_autosomal(thr.maf_min);
    if p.data.n_samples() >= 3 && cols.len() >= 2 {
        let pca = ancestry_pca(&p.data.genotypes.select_variants(&cols), 2)?;
        let flagged = ancestry_flags(&pca, thr.pc2_cutoff, thr.pc2_side);
        p.drop_samples("ancestry", anc_rule, &flagged);
    } else {
        p.skip("ancestry", Axis::Sample, anc_rule);
    }

    let ibd_rule = alloc::format!("pi_hat > {}", thr.ibd_pi_hat_max);
    if p.data.n_samples() >= 2 {
        let cols = p.common_autosomal(thr.maf_min);
        let sub = p.data.genotypes.select_variants(&cols);
        let flagged = ibd_flags(&sub, &p.data.samples, thr.ibd_pi_hat_max)?;
        p.drop_samples("ibd", ibd_rule, &flagged);
    } else {
        p.skip("ibd", Axis::Sample, ibd_rule);
    }

    p.missing_samples("sample_call_rate", thr.sample_missing_max)?;

    let vrule = alloc::format!("variant missing rate > {}", thr.variant_missing_max);
    if p.data.n_samples() == 0 {
        p.skip("variant_missingness", Axis::Variant, vrule);
    } else {
        let rates = variant_missingness(&p.data.genotypes)?;
        let flagged: Vec<usize> =
            rates.iter().enumerate().filter(|(_, r)| **r > thr.variant_missing_max).map(|(j, _)| j).collect();
        p.drop_variants("variant_missingness", vrule, &flagged);
    }

    let flagged: Vec<usize> = (0..p.data.n_variants())
        .filter(|&j| minor_allele_frequency(&p.data.genotypes.column(j)).map_or(true, |f| f < thr.maf_min))
        .collect();
    p.drop_variants("maf", alloc::format!("MAF < {}", thr.maf_min), &flagged);

    let labels = p.data.phenotype_labels();
    let female_labels: Vec<Option<u8>> =
        p.data.samples.iter().zip(&labels).map(|(s, y)| if s.sex == Sex::Female { *y } else { None }).collect();
    let flagged: Vec<usize> = (0..p.data.n_variants())
        .filter(|&j| {
            let col = p.data.genotypes.column(j);
            let ys = if p.data.variants[j].chromosome == CHROM_X { &female_labels } else { &labels };
            hwe_test(&col, ys).is_ok_and(|r| r.p_value < thr.hwe_p_min)
        })
        .collect();
    p.drop_variants("hwe", alloc::format!("control HWE p < {}", thr.hwe_p_min), &flagged);

    let counts = p.data.genotypes.code_counts();
    let total: usize = counts.iter().sum();
    let call_rate = if total == 0 { 0.0 } else { 1.0 - counts[3] as f64 / total as f64 };
    let report = QcReport {
        initial_samples: dataset.n_samples(),
        initial_variants: dataset.n_variants(),
        final_samples: p.data.n_samples(),
        final_variants: p.data.n_variants(),
        stages: p.stages,
        call_rate,
    };
    Ok((p.data, report))
}

impl StageReport {
    pub fn removed_count(&self) -> usize {
        self.removed.len()
    }
}

/// Stage names in execution order.
pub const STAGE_ORDER: [&str; 9] = [
    "sex_check",
    "sample_missingness",
    "heterozygosity",
    "ancestry",
    "ibd",
    "sample_call_rate",
    "variant_missingness",
    "maf",
    "hwe",
];
