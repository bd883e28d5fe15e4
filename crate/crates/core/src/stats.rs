//! Chi-square tail probabilities and small descriptive statistics.

use alloc::vec::Vec;

use crate::math;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("chi-square statistic must be >= 0, got {0}")]
    Domain(f64),
    #[error("degrees of freedom must be >= 1")]
    ZeroDf,
}

/// Upper tail `P(X >= x)` of a chi-square distribution with `df` degrees of
/// freedom.
///
/// One and two degrees of freedom use closed forms (`erfc(sqrt(x/2))` and
/// `exp(-x/2)`); other values go through the regularized upper incomplete
/// gamma function `Q(df/2, x/2)`.
pub fn chi2_survival(x: f64, df: u32) -> Result<f64, StatsError> {
    if !(x >= 0.0) {
        return Err(StatsError::Domain(x));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    match df {
        0 => Err(StatsError::ZeroDf),
        1 => Ok(math::erfc(math::sqrt(0.5 * x))),
        2 => Ok(math::exp(-0.5 * x)),
        _ => Ok(gamma_q(0.5 * df as f64, 0.5 * x)),
    }
}

/// Regularized upper incomplete gamma `Q(a, x)` for `a > 0`, `x >= 0`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cont_frac(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if math::abs(term) < math::abs(sum) * 1e-17 {
            break;
        }
    }
    sum * math::exp(-x + a * math::ln(x) - math::ln_gamma(a))
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_q_cont_frac(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if math::abs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if math::abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if math::abs(delta - 1.0) < 1e-16 {
            break;
        }
    }
    math::exp(-x + a * math::ln(x) - math::ln_gamma(a)) * h
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    math::sqrt(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64)
}

/// Kolmogorov distance between the empirical CDF of `p` and Uniform(0, 1).
pub fn ks_uniform_distance(p: &[f64]) -> f64 {
    let mut v = p.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let lo = x - i as f64 / n;
        let hi = (i + 1) as f64 / n - x;
        d.max(lo).max(hi)
    })
}
