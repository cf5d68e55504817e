//! Likelihood-free calibration of the two shock scales against return
//! skewness and kurtosis.
//!
//! Draws of `(sigma_eta, sigma_nu)` come uniformly from a prior box and are
//! simulated once each. The posterior is built from the table of draws and
//! simulated moments by a [`PosteriorEstimator`]; [`RejectionAbc`] keeps the
//! closest fraction of draws.

use super::{ExperimentError, NetworkSpec};
use crate::market::run_simulation;
use crate::network::TopologyConfig;
use crate::params::ModelParams;
use crate::rng::{stream_rng, Stream};
use crate::stats::{moments, post_burn_in_returns, quantile};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbcConfig {
    /// Lower corner of the prior box for `(sigma_eta, sigma_nu)`.
    pub prior_lo: [f64; 2],
    pub prior_hi: [f64; 2],
    pub n_draws: usize,
    /// Fraction of draws kept.
    pub accept_q: f64,
    /// Seeds averaged per draw; the same seeds serve every draw.
    pub seeds_per_draw: usize,
    /// Seed of the prior sampling stream.
    pub sampling_seed: u64,
}

impl Default for AbcConfig {
    fn default() -> Self {
        Self {
            prior_lo: [0.1, 0.1],
            prior_hi: [2.0, 2.0],
            n_draws: 2000,
            accept_q: 0.01,
            seeds_per_draw: 2,
            sampling_seed: 0,
        }
    }
}

impl AbcConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        for i in 0..2 {
            let (lo, hi) = (self.prior_lo[i], self.prior_hi[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) {
                return Err(ExperimentError::Invalid(format!(
                    "degenerate prior [{lo}, {hi}]"
                )));
            }
        }
        if self.n_draws < 100 {
            return Err(ExperimentError::Invalid(format!(
                "n_draws must be at least 100, got {}",
                self.n_draws
            )));
        }
        if !(self.accept_q > 0.0 && self.accept_q <= 1.0) {
            return Err(ExperimentError::Invalid(format!(
                "accept_q must lie in (0, 1], got {}",
                self.accept_q
            )));
        }
        if self.seeds_per_draw == 0 {
            return Err(ExperimentError::NoSeeds);
        }
        Ok(())
    }
}

/// Prior draws and their simulated `(skewness, kurtosis)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbcSimulations {
    pub draws: Vec<[f64; 2]>,
    pub moments: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbcPosterior {
    pub target: [f64; 2],
    pub accept_q: f64,
    /// Accepted `(sigma_eta, sigma_nu)` draws, closest first.
    pub accepted: Vec<[f64; 2]>,
    pub distances: Vec<f64>,
    pub median: [f64; 2],
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

impl AbcPosterior {
    fn from_accepted(
        target: [f64; 2],
        accept_q: f64,
        accepted: Vec<[f64; 2]>,
        distances: Vec<f64>,
    ) -> Self {
        let mut median = [0.0; 2];
        let mut mean = [0.0; 2];
        let mut std = [0.0; 2];
        let n = accepted.len() as f64;
        for c in 0..2 {
            let mut col: Vec<f64> = accepted.iter().map(|d| d[c]).collect();
            col.sort_by(f64::total_cmp);
            median[c] = quantile(&col, 0.5);
            mean[c] = col.iter().sum::<f64>() / n;
            std[c] = (col.iter().map(|v| (v - mean[c]).powi(2)).sum::<f64>() / n).sqrt();
        }
        Self {
            target,
            accept_q,
            accepted,
            distances,
            median,
            mean,
            std,
        }
    }
}

/// Turns a simulation table into a posterior.
pub trait PosteriorEstimator {
    fn estimate(
        &self,
        sims: &AbcSimulations,
        target: [f64; 2],
    ) -> Result<AbcPosterior, ExperimentError>;
}

/// Keeps the `round(accept_q n)` draws closest to the target, with each
/// moment scaled by its standard deviation across draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionAbc {
    pub accept_q: f64,
}

impl RejectionAbc {
    pub fn distances(sims: &AbcSimulations, target: [f64; 2]) -> Vec<f64> {
        let n = sims.moments.len() as f64;
        let mut scale = [0.0; 2];
        for (c, s) in scale.iter_mut().enumerate() {
            let mean = sims.moments.iter().map(|m| m[c]).sum::<f64>() / n;
            *s = (sims
                .moments
                .iter()
                .map(|m| (m[c] - mean).powi(2))
                .sum::<f64>()
                / n)
                .sqrt();
        }
        sims.moments
            .iter()
            .map(|m| {
                (0..2)
                    .filter(|&c| scale[c] > 0.0)
                    .map(|c| ((m[c] - target[c]) / scale[c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn accepted_count(&self, n_draws: usize) -> usize {
        ((self.accept_q * n_draws as f64).round() as usize).clamp(1, n_draws)
    }
}

impl PosteriorEstimator for RejectionAbc {
    fn estimate(
        &self,
        sims: &AbcSimulations,
        target: [f64; 2],
    ) -> Result<AbcPosterior, ExperimentError> {
        if sims.draws.is_empty() || sims.draws.len() != sims.moments.len() {
            return Err(ExperimentError::Invalid(
                "simulation table is empty or ragged".into(),
            ));
        }
        let dist = Self::distances(sims, target);
        let mut order: Vec<usize> = (0..dist.len()).collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        order.truncate(self.accepted_count(dist.len()));
        Ok(AbcPosterior::from_accepted(
            target,
            self.accept_q,
            order.iter().map(|&i| sims.draws[i]).collect(),
            order.iter().map(|&i| dist[i]).collect(),
        ))
    }
}

/// `(skewness, kurtosis)` of post-burn-in returns averaged over seeds.
pub fn simulated_moments(
    params: &ModelParams,
    topology: &TopologyConfig,
    seeds: &[u64],
    burn_in: usize,
) -> Result<[f64; 2], ExperimentError> {
    if seeds.is_empty() {
        return Err(ExperimentError::NoSeeds);
    }
    let spec = NetworkSpec::Generate(*topology);
    let mut acc = [0.0; 2];
    for &seed in seeds {
        let net = spec.for_seed(params, seed)?;
        let path = run_simulation(params, &net, seed)?;
        let m = moments(&post_burn_in_returns(&path, burn_in)?)?;
        acc[0] += m.skewness;
        acc[1] += m.kurtosis;
    }
    let n = seeds.len() as f64;
    Ok([acc[0] / n, acc[1] / n])
}

/// Draws the prior and simulates every draw.
pub fn simulate_prior(
    base: &ModelParams,
    topology: &TopologyConfig,
    config: &AbcConfig,
    seeds: &[u64],
    burn_in: usize,
) -> Result<AbcSimulations, ExperimentError> {
    config.validate()?;
    if seeds.len() < config.seeds_per_draw {
        return Err(ExperimentError::Invalid(format!(
            "{} seeds per draw requested but only {} given",
            config.seeds_per_draw,
            seeds.len()
        )));
    }
    let seeds = &seeds[..config.seeds_per_draw];
    let mut rng = stream_rng(config.sampling_seed, Stream::Sampling);
    let draws: Vec<[f64; 2]> = (0..config.n_draws)
        .map(|_| {
            [
                rng.random_range(config.prior_lo[0]..config.prior_hi[0]),
                rng.random_range(config.prior_lo[1]..config.prior_hi[1]),
            ]
        })
        .collect();
    let moments = draws
        .par_iter()
        .map(|d| {
            let params = ModelParams {
                sigma_eta: d[0],
                sigma_nu: d[1],
                ..base.clone()
            };
            let m = simulated_moments(&params, topology, seeds, burn_in)?;
            if m.iter().any(|v| !v.is_finite()) {
                return Err(ExperimentError::NonFinite {
                    output: "moments".into(),
                    point: vec![("sigma_eta".into(), d[0]), ("sigma_nu".into(), d[1])],
                });
            }
            Ok(m)
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(AbcSimulations { draws, moments })
}

/// Rejection-ABC posterior for `(sigma_eta, sigma_nu)` given target
/// `(skewness, kurtosis)`.
pub fn calibrate_abc(
    target: [f64; 2],
    base: &ModelParams,
    topology: &TopologyConfig,
    config: &AbcConfig,
    seeds: &[u64],
    burn_in: usize,
) -> Result<AbcPosterior, ExperimentError> {
    calibrate_with(
        &RejectionAbc {
            accept_q: config.accept_q,
        },
        target,
        base,
        topology,
        config,
        seeds,
        burn_in,
    )
}

/// Calibration with any estimator.
pub fn calibrate_with<E: PosteriorEstimator + ?Sized>(
    estimator: &E,
    target: [f64; 2],
    base: &ModelParams,
    topology: &TopologyConfig,
    config: &AbcConfig,
    seeds: &[u64],
    burn_in: usize,
) -> Result<AbcPosterior, ExperimentError> {
    let sims = simulate_prior(base, topology, config, seeds, burn_in)?;
    estimator.estimate(&sims, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(n: usize) -> AbcSimulations {
        // moments are a known function of the draw
        let draws: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = 0.1 + 1.9 * ((i * 37) % n) as f64 / n as f64;
                let b = 0.1 + 1.9 * ((i * 11) % n) as f64 / n as f64;
                [a, b]
            })
            .collect();
        let moments = draws
            .iter()
            .map(|d| [d[0] - d[1], 3.0 + d[0] * d[1]])
            .collect();
        AbcSimulations { draws, moments }
    }

    #[test]
    fn accept_all_returns_prior() {
        let sims = table(200);
        let post = RejectionAbc { accept_q: 1.0 }
            .estimate(&sims, [0.0, 4.0])
            .unwrap();
        assert_eq!(post.accepted.len(), 200);
        let mut a: Vec<[f64; 2]> = post.accepted.clone();
        let mut b = sims.draws.clone();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn closest_draws_recover_known_map() {
        let sims = table(1000);
        let truth = [0.7, 0.7];
        let post = RejectionAbc { accept_q: 0.02 }
            .estimate(&sims, [truth[0] - truth[1], 3.0 + truth[0] * truth[1]])
            .unwrap();
        assert!((post.median[0] - 0.7).abs() < 0.15);
        assert!((post.median[1] - 0.7).abs() < 0.15);
        assert!(post.distances.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn config_checks() {
        let mut c = AbcConfig::default();
        assert!(c.validate().is_ok());
        c.prior_hi = [0.1, 2.0];
        assert!(c.validate().is_err());
        let c = AbcConfig {
            n_draws: 50,
            ..AbcConfig::default()
        };
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn accepted_count_is_rounded_fraction(n in 100usize..3000, q in 0.001f64..1.0) {
            let sims = table(n);
            let post = RejectionAbc { accept_q: q }.estimate(&sims, [0.0, 4.0]).unwrap();
            let expected = ((q * n as f64).round() as usize).max(1);
            prop_assert_eq!(post.accepted.len(), expected);
            for d in &post.accepted {
                prop_assert!(d[0] >= 0.1 && d[0] <= 2.0 && d[1] >= 0.1 && d[1] <= 2.0);
            }
        }
    }
}
