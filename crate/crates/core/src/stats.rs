//! Return moments, benchmark comparisons and per-agent summaries.

use crate::belief::AgentCategory;
use crate::market::SimPath;
use crate::params::ModelParams;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("price {price} at index {index} is not positive")]
    NonPositivePrice { index: usize, price: f64 },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// Sample moments with population normalisation. Kurtosis is Pearson's
/// (3 for a normal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub n_obs: usize,
}

/// Simple returns `p_t / p_{t-1} - 1`.
pub fn returns_series(prices: &[f64]) -> Result<Vec<f64>, StatsError> {
    if prices.len() < 2 {
        return Err(StatsError::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    for (index, &price) in prices.iter().enumerate() {
        if !(price > 0.0) || !price.is_finite() {
            return Err(StatsError::NonPositivePrice { index, price });
        }
    }
    Ok(prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
}

pub fn moments(series: &[f64]) -> Result<MomentReport, StatsError> {
    let n = series.len();
    if n < 4 {
        return Err(StatsError::TooShort { needed: 4, got: n });
    }
    if let Some(i) = series.iter().position(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(MomentReport {
        mean,
        std: m2.sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        n_obs: n,
    })
}

/// Population variance.
pub fn variance(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Returns after the burn-in window: uses prices from index `burn_in` on.
pub fn post_burn_in_returns(path: &SimPath, burn_in: usize) -> Result<Vec<f64>, StatsError> {
    let start = burn_in.min(path.price.len());
    returns_series(&path.price[start..])
}

/// Price the representative fully informed investor would set:
/// `d/r + theta_{t+1} / (R - beta)`.
pub fn benchmark_prices(theta: &[f64], params: &ModelParams) -> Vec<f64> {
    let base = params.fundamental_price();
    let disc = params.belief_discount();
    theta.iter().map(|th| base + th / disc).collect()
}

/// `Var(p) - Var(p*)` over the post-burn-in window, on the same theta path.
pub fn excess_price_variance(path: &SimPath, burn_in: usize) -> f64 {
    let start = burn_in.min(path.price.len());
    let bench = benchmark_prices(&path.theta[start..], &path.params);
    variance(&path.price[start..]) - variance(&bench)
}

/// Stationary variance of the benchmark price:
/// `sigma_eta^2 / ((1 - beta^2)(R - beta)^2)`.
pub fn benchmark_price_variance(params: &ModelParams) -> f64 {
    params.sigma_eta.powi(2) / ((1.0 - params.beta.powi(2)) * params.belief_discount().powi(2))
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(theoretical, empirical)` quantile pairs against a normal with the
/// sample's mean and standard deviation, at `levels` evenly spaced
/// probabilities `k / (levels + 1)`.
pub fn qq_points(series: &[f64], levels: usize) -> Result<Vec<(f64, f64)>, StatsError> {
    if series.len() < 10 {
        return Err(StatsError::TooShort {
            needed: 10,
            got: series.len(),
        });
    }
    let m = moments(series)?;
    let fitted = Normal::new(m.mean, m.std).map_err(|_| StatsError::ZeroVariance)?;
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((1..=levels)
        .map(|k| {
            let prob = k as f64 / (levels + 1) as f64;
            (fitted.inverse_cdf(prob), quantile(&sorted, prob))
        })
        .collect())
}

pub const DEFAULT_QQ_LEVELS: usize = 199;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: usize,
    pub category: AgentCategory,
    pub cum_profit: f64,
    /// Mean of `|posterior mean - theta_{t+1}|` over post-burn-in steps.
    pub mean_abs_forecast_error: f64,
}

pub fn agent_summaries(path: &SimPath, burn_in: usize) -> Vec<AgentSummary> {
    let start = burn_in.min(path.len());
    let steps = (path.len() - start).max(1) as f64;
    let cum = path.cum_profit();
    path.categories
        .iter()
        .enumerate()
        .map(|(i, &category)| {
            let err: f64 = (start..path.len())
                .map(|t| (path.posterior_mean[t][i] - path.theta[t]).abs())
                .sum();
            AgentSummary {
                agent: i,
                category,
                cum_profit: cum[i],
                mean_abs_forecast_error: err / steps,
            }
        })
        .collect()
}

/// Mean cumulative profit per agent of a category; `None` when absent.
pub fn category_mean_profit(summaries: &[AgentSummary], category: AgentCategory) -> Option<f64> {
    let vals: Vec<f64> = summaries
        .iter()
        .filter(|s| s.category == category)
        .map(|s| s.cum_profit)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Mean and standard error across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se }
}

/// Standardises to zero mean and unit variance.
pub fn standardize(series: &[f64]) -> Vec<f64> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let sd = (series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    series.iter().map(|x| (x - mean) / sd).collect()
}
