//! Single-SNP association: allelic chi-square, additive logistic
//! regression (Wald test) and genomic control.

use alloc::string::String;
use alloc::vec::Vec;

use crate::genotype::{Genotype, GenotypeMatrix, VariantRecord};
use crate::math;
use crate::stats;

/// Median of the chi-square distribution with one degree of freedom.
pub const CHI2_1DF_MEDIAN: f64 = 0.454_936_4;

/// |β₁| beyond which a fit is treated as perfectly separated.
pub const SEPARATION_CAP: f64 = 30.0;

const IRLS_MAX_ITER: usize = 100;
const SCORE_TOL: f64 = 1e-8;
const DEVIANCE_TOL: f64 = 1e-10;
const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum AssocError {
    #[error("labels contain a single class")]
    NoVariationInY,
    #[error("no statistics to compute genomic control from")]
    EmptyInput,
    #[error("{labels} labels for {samples} samples")]
    LengthMismatch { labels: usize, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Result {
    pub statistic: f64,
    pub p_value: f64,
    /// A zero margin in the table; statistic forced to 0.
    pub degenerate: bool,
}

/// Pearson chi-square on the 2×2 case/control × minor/major allele table.
pub fn chi2_allelic(column: &[Genotype], y: &[u8]) -> Chi2Result {
    // [case, control] x [minor, major]
    let mut t = [[0.0f64; 2]; 2];
    for (g, &label) in column.iter().zip(y) {
        if let Some(d) = g.dosage() {
            let row = if label == 1 { 0 } else { 1 };
            t[row][0] += d as f64;
            t[row][1] += (2 - d) as f64;
        }
    }
    chi2_2x2(t)
}

pub fn chi2_2x2(t: [[f64; 2]; 2]) -> Chi2Result {
    let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
    let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
    let n = rows[0] + rows[1];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return Chi2Result { statistic: 0.0, p_value: 1.0, degenerate: true };
    }
    let mut statistic = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            statistic += (t[i][j] - e) * (t[i][j] - e) / e;
        }
    }
    let p_value = stats::chi2_survival(statistic, 1).unwrap_or(1.0);
    Chi2Result { statistic, p_value, degenerate: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    /// |β₁| exceeded [`SEPARATION_CAP`]; the Wald value at that point is kept.
    Separation,
    /// Constant genotype column: β₁ = 0, p = 1.
    NoVariation,
    /// Iteration limit reached without meeting either tolerance.
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub beta0: f64,
    pub beta1: f64,
    pub se_beta1: f64,
    pub wald_chi2: f64,
    pub p_value: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

fn neg2_loglik(x: &[f64], y: &[u8], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let eta = b0 + b1 * xi;
            // log(1 + e^eta) - y*eta, stable for both signs
            let softplus = if eta > 0.0 { eta + math::ln_1p(math::exp(-eta)) } else { math::ln_1p(math::exp(eta)) };
            2.0 * (softplus - yi as f64 * eta)
        })
        .sum()
}

struct Moments {
    score: [f64; 2],
    info: [[f64; 2]; 2],
}

fn moments(x: &[f64], y: &[u8], b0: f64, b1: f64) -> Moments {
    let mut m = Moments { score: [0.0; 2], info: [[0.0; 2]; 2] };
    for (&xi, &yi) in x.iter().zip(y) {
        let mu = math::sigmoid(b0 + b1 * xi);
        let r = yi as f64 - mu;
        let w = mu * (1.0 - mu);
        m.score[0] += r;
        m.score[1] += r * xi;
        m.info[0][0] += w;
        m.info[0][1] += w * xi;
        m.info[1][1] += w * xi * xi;
    }
    m.info[1][0] = m.info[0][1];
    m
}

fn invert_2x2(mut h: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(math::abs(det) > 1e-300) || !det.is_finite() {
        h[0][0] += RIDGE;
        h[1][1] += RIDGE;
        det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    }
    [[h[1][1] / det, -h[0][1] / det], [-h[1][0] / det, h[0][0] / det]]
}

fn wald(beta1: f64, info: [[f64; 2]; 2]) -> (f64, f64, f64) {
    let cov = invert_2x2(info);
    let se = math::sqrt(cov[1][1].max(0.0));
    let chi2 = if se > 0.0 && se.is_finite() { (beta1 / se) * (beta1 / se) } else { 0.0 };
    let p = stats::chi2_survival(chi2, 1).unwrap_or(1.0);
    (se, chi2, p)
}

/// Maximum-likelihood fit of `logit P(y=1) = β₀ + β₁x` by IRLS.
pub fn fit_logistic(x: &[f64], y: &[u8]) -> Result<LogisticFit, AssocError> {
    let n = y.len();
    let cases = y.iter().filter(|&&v| v == 1).count();
    if cases == 0 || cases == n {
        return Err(AssocError::NoVariationInY);
    }
    let ybar = cases as f64 / n as f64;
    let mut b0 = math::ln(ybar / (1.0 - ybar));
    if x.iter().all(|&v| v == x[0]) {
        return Ok(LogisticFit {
            beta0: b0,
            beta1: 0.0,
            se_beta1: f64::INFINITY,
            wald_chi2: 0.0,
            p_value: 1.0,
            iterations: 0,
            status: FitStatus::NoVariation,
        });
    }
    let mut b1 = 0.0;
    let mut dev = neg2_loglik(x, y, b0, b1);
    let mut m = moments(x, y, b0, b1);
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;
    for it in 1..=IRLS_MAX_ITER {
        iterations = it;
        let inv = invert_2x2(m.info);
        let d0 = inv[0][0] * m.score[0] + inv[0][1] * m.score[1];
        let d1 = inv[1][0] * m.score[0] + inv[1][1] * m.score[1];
        let mut step = 1.0;
        let (mut nb0, mut nb1, mut ndev);
        loop {
            nb0 = b0 + step * d0;
            nb1 = b1 + step * d1;
            ndev = neg2_loglik(x, y, nb0, nb1);
            if ndev <= dev + 1e-12 * dev.abs().max(1.0) || step < 1e-10 {
                break;
            }
            step *= 0.5;
        }
        let ddev = math::abs(dev - ndev);
        b0 = nb0;
        b1 = nb1;
        dev = ndev;
        m = moments(x, y, b0, b1);
        // a vanishing deviance means every fitted probability is saturated
        if math::abs(b1) > SEPARATION_CAP || dev < 1e-6 {
            status = FitStatus::Separation;
            break;
        }
        let max_score = math::abs(m.score[0]).max(math::abs(m.score[1]));
        if max_score < SCORE_TOL || ddev < DEVIANCE_TOL {
            status = FitStatus::Converged;
            break;
        }
    }
    let (se_beta1, wald_chi2, p_value) = wald(b1, m.info);
    Ok(LogisticFit { beta0: b0, beta1: b1, se_beta1, wald_chi2, p_value, iterations, status })
}

/// Per-variant association result.
#[derive(Debug, Clone, PartialEq)]
pub struct AssocResult {
    pub variant_id: String,
    pub beta0: f64,
    pub beta1: f64,
    pub se_beta1: f64,
    /// Wald chi-square of the logistic fit (1 df).
    pub chi2_stat: f64,
    pub p_raw: f64,
    /// Filled in by [`apply_genomic_control`]; equals `p_raw` until then.
    pub p_gc: f64,
    pub n_used: usize,
    pub status: FitStatus,
    pub allelic_chi2: f64,
    pub allelic_p: f64,
}

/// Additive-model logistic fit for one genotype column; missing calls are
/// dropped.
pub fn logistic_fit_additive(variant_id: &str, column: &[Genotype], y: &[u8]) -> Result<AssocResult, AssocError> {
    let (x, yy): (Vec<f64>, Vec<u8>) =
        column.iter().zip(y).filter_map(|(g, &label)| g.dosage().map(|d| (d as f64, label))).unzip();
    let fit = fit_logistic(&x, &yy)?;
    let allelic = chi2_allelic(column, y);
    Ok(AssocResult {
        variant_id: variant_id.into(),
        beta0: fit.beta0,
        beta1: fit.beta1,
        se_beta1: fit.se_beta1,
        chi2_stat: fit.wald_chi2,
        p_raw: fit.p_value.max(f64::MIN_POSITIVE),
        p_gc: fit.p_value.max(f64::MIN_POSITIVE),
        n_used: x.len(),
        status: fit.status,
        allelic_chi2: allelic.statistic,
        allelic_p: allelic.p_value,
    })
}

/// Genomic-control inflation factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcContext {
    /// Applied factor, never below 1.
    pub lambda: f64,
    /// `median / CHI2_1DF_MEDIAN` before clamping.
    pub raw_lambda: f64,
}

impl GcContext {
    pub const IDENTITY: GcContext = GcContext { lambda: 1.0, raw_lambda: 1.0 };
}

pub fn genomic_control_lambda(stats_1df: &[f64]) -> Result<GcContext, AssocError> {
    let med = stats::median(stats_1df).ok_or(AssocError::EmptyInput)?;
    let raw_lambda = med / CHI2_1DF_MEDIAN;
    Ok(GcContext { lambda: raw_lambda.max(1.0), raw_lambda })
}

/// `(stat / λ, P(χ²₁ >= stat / λ))`.
pub fn gc_adjust(stat: f64, ctx: GcContext) -> (f64, f64) {
    let adjusted = stat / ctx.lambda.max(1.0);
    (adjusted, stats::chi2_survival(adjusted.max(0.0), 1).unwrap_or(1.0))
}

/// Which statistic feeds genomic control and SNP selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssocTest {
    /// Wald statistic of the additive logistic fit.
    #[default]
    Logistic,
    /// 1-df allelic chi-square.
    Allelic,
}

impl AssocTest {
    pub fn name(self) -> &'static str {
        match self {
            AssocTest::Logistic => "logistic",
            AssocTest::Allelic => "allelic",
        }
    }

    pub fn statistic(self, r: &AssocResult) -> f64 {
        match self {
            AssocTest::Logistic => r.chi2_stat,
            AssocTest::Allelic => r.allelic_chi2,
        }
    }
}

/// Computes λ from the Wald statistics and fills every `p_gc`.
pub fn apply_genomic_control(results: &mut [AssocResult]) -> Result<GcContext, AssocError> {
    apply_genomic_control_for(results, AssocTest::Logistic)
}

/// Like [`apply_genomic_control`], with λ and `p_gc` taken from `test`.
pub fn apply_genomic_control_for(results: &mut [AssocResult], test: AssocTest) -> Result<GcContext, AssocError> {
    let chi2: Vec<f64> = results.iter().map(|r| test.statistic(r)).collect();
    let ctx = genomic_control_lambda(&chi2)?;
    for r in results.iter_mut() {
        let (_, p) = gc_adjust(test.statistic(r), ctx);
        r.p_gc = p.max(f64::MIN_POSITIVE);
    }
    Ok(ctx)
}

/// Indices with `p_gc <= threshold`, by ascending `p_gc` then variant id.
pub fn select_snps(results: &[AssocResult], threshold: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..results.len()).filter(|&i| results[i].p_gc <= threshold).collect();
    idx.sort_by(|&a, &b| {
        results[a].p_gc.total_cmp(&results[b].p_gc).then_with(|| results[a].variant_id.cmp(&results[b].variant_id))
    });
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub results: Vec<AssocResult>,
    pub gc: GcContext,
}

/// Fits every variant, then applies genomic control.
pub fn scan(g: &GenotypeMatrix, variants: &[VariantRecord], y: &[u8]) -> Result<Scan, AssocError> {
    scan_with(g, variants, y, AssocTest::Logistic)
}

pub fn scan_with(
    g: &GenotypeMatrix,
    variants: &[VariantRecord],
    y: &[u8],
    test: AssocTest,
) -> Result<Scan, AssocError> {
    if y.len() != g.n_samples() {
        return Err(AssocError::LengthMismatch { labels: y.len(), samples: g.n_samples() });
    }
    let results = (0..g.n_variants())
        .map(|j| logistic_fit_additive(&variants[j].variant_id, &g.column(j), y))
        .collect::<Result<Vec<_>, _>>()?;
    finish_scan(results, test)
}

/// The barrier step of a scan: λ over all per-variant fits.
pub fn finish_scan(mut results: Vec<AssocResult>, test: AssocTest) -> Result<Scan, AssocError> {
    let gc = if results.is_empty() { GcContext::IDENTITY } else { apply_genomic_control_for(&mut results, test)? };
    Ok(Scan { results, gc })
}
