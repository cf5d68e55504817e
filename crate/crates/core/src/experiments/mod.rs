//! Multi-run studies built on the single-run simulator: Monte Carlo
//! replication, topology scenarios, nested variants, impulse responses,
//! Sobol sensitivity and rejection-ABC calibration.
//!
//! Every driver takes an explicit seed list. Runs execute in parallel and are
//! merged in seed order, so results do not depend on the thread count.

pub mod abc;
pub mod irf;
pub mod sobol;
pub mod variants;

use crate::belief::AgentCategory;
use crate::market::{run_simulation, SimError, SimPath};
use crate::network::{NetworkError, Placement, SocialNetwork, TopologyConfig};
use crate::params::ModelParams;
use crate::rng::{stream_rng, Stream};
use crate::stats::{
    agent_summaries, category_mean_profit, excess_price_variance, mean_se, moments,
    post_burn_in_returns, MeanSe, MomentReport, StatsError,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("at least one seed is required")]
    NoSeeds,
    #[error("invalid experiment setting: {0}")]
    Invalid(String),
    #[error("model output {output} is not finite at {point:?}")]
    NonFinite {
        output: String,
        point: Vec<(String, f64)>,
    },
}

/// Where the network of each run comes from.
#[derive(Debug, Clone, Copy)]
pub enum NetworkSpec<'a> {
    /// The same network for every seed.
    Fixed(&'a SocialNetwork),
    /// A fresh draw per seed from the seed's network and placement streams.
    Generate(TopologyConfig),
}

impl NetworkSpec<'_> {
    pub fn for_seed(
        &self,
        params: &ModelParams,
        seed: u64,
    ) -> Result<Cow<'_, SocialNetwork>, ExperimentError> {
        match self {
            NetworkSpec::Fixed(net) => Ok(Cow::Borrowed(*net)),
            NetworkSpec::Generate(cfg) => Ok(Cow::Owned(cfg.generate(
                params.agents,
                params.lambda,
                params.xi,
                &mut stream_rng(seed, Stream::Network),
                &mut stream_rng(seed, Stream::Placement),
            )?)),
        }
    }
}

/// Summary of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub moments: MomentReport,
    pub excess_variance: f64,
    pub profit_informed: Option<f64>,
    pub profit_misinformed: Option<f64>,
    pub profit_uninformed: Option<f64>,
    /// Sum of all cumulative profits; zero up to rounding.
    pub total_profit: f64,
    /// Sum of absolute cumulative profits, the scale for `total_profit`.
    pub gross_profit: f64,
    pub max_clearing_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// Moments of all post-burn-in returns pooled across seeds.
    pub pooled: MomentReport,
    pub excess_variance: MeanSe,
    pub profit_informed: Option<MeanSe>,
    pub profit_misinformed: Option<MeanSe>,
    pub profit_uninformed: Option<MeanSe>,
    pub per_seed: Vec<SeedSummary>,
}

fn summarize(path: &SimPath, burn_in: usize) -> Result<(SeedSummary, Vec<f64>), ExperimentError> {
    let returns = post_burn_in_returns(path, burn_in)?;
    let sums = agent_summaries(path, burn_in);
    let total: f64 = sums.iter().map(|s| s.cum_profit).sum();
    let gross: f64 = sums.iter().map(|s| s.cum_profit.abs()).sum();
    let summary = SeedSummary {
        seed: path.seed,
        moments: moments(&returns)?,
        excess_variance: excess_price_variance(path, burn_in),
        profit_informed: category_mean_profit(&sums, AgentCategory::Informed),
        profit_misinformed: category_mean_profit(&sums, AgentCategory::Misinformed),
        profit_uninformed: category_mean_profit(&sums, AgentCategory::Uninformed),
        total_profit: total,
        gross_profit: gross,
        max_clearing_residual: path
            .clearing_residual
            .iter()
            .fold(0.0, |m, r| m.max(r.abs())),
    };
    Ok((summary, returns))
}

/// Runs one replication per seed and pools the results.
pub fn monte_carlo(
    params: &ModelParams,
    network: NetworkSpec<'_>,
    seeds: &[u64],
    burn_in: usize,
) -> Result<ExperimentResult, ExperimentError> {
    if seeds.is_empty() {
        return Err(ExperimentError::NoSeeds);
    }
    let runs: Vec<(SeedSummary, Vec<f64>)> = seeds
        .par_iter()
        .map(|&seed| {
            let net = network.for_seed(params, seed)?;
            let path = run_simulation(params, &net, seed)?;
            summarize(&path, burn_in)
        })
        .collect::<Result<_, ExperimentError>>()?;

    let pooled: Vec<f64> = runs.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    let per_seed: Vec<SeedSummary> = runs.into_iter().map(|(s, _)| s).collect();
    let across = |f: fn(&SeedSummary) -> Option<f64>| -> Option<MeanSe> {
        let vals: Vec<f64> = per_seed.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| mean_se(&vals))
    };
    Ok(ExperimentResult {
        pooled: moments(&pooled)?,
        excess_variance: mean_se(
            &per_seed
                .iter()
                .map(|s| s.excess_variance)
                .collect::<Vec<_>>(),
        ),
        profit_informed: across(|s| s.profit_informed),
        profit_misinformed: across(|s| s.profit_misinformed),
        profit_uninformed: across(|s| s.profit_uninformed),
        per_seed,
    })
}

/// The four network scenarios compared in the topology study.
pub fn standard_scenarios() -> Vec<(&'static str, TopologyConfig)> {
    vec![
        ("small_world", TopologyConfig::small_world()),
        ("stochastic_block", TopologyConfig::stochastic_block()),
        (
            "scale_free_informed",
            TopologyConfig::scale_free(Placement::HubsInformed),
        ),
        (
            "scale_free_misinformed",
            TopologyConfig::scale_free(Placement::HubsMisinformed),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub profit_misinformed: f64,
    pub profit_misinformed_se: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Table of misinformed profit and return moments per topology.
pub fn scenario_suite(
    params: &ModelParams,
    seeds: &[u64],
    burn_in: usize,
) -> Result<Vec<ScenarioRow>, ExperimentError> {
    standard_scenarios()
        .into_iter()
        .map(|(name, cfg)| {
            let res = monte_carlo(params, NetworkSpec::Generate(cfg), seeds, burn_in)?;
            let profit = res.profit_misinformed.unwrap_or(MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
            });
            Ok(ScenarioRow {
                scenario: name.to_string(),
                profit_misinformed: profit.mean,
                profit_misinformed_se: profit.se,
                skewness: res.pooled.skewness,
                kurtosis: res.pooled.kurtosis,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelParams {
        ModelParams {
            steps: 300,
            agents: 40,
            ..ModelParams::default()
        }
    }

    #[test]
    fn single_seed_matches_single_run() {
        let p = small();
        let spec = NetworkSpec::Generate(TopologyConfig::small_world());
        let res = monte_carlo(&p, spec, &[9], 50).unwrap();
        let net = spec.for_seed(&p, 9).unwrap();
        let path = run_simulation(&p, &net, 9).unwrap();
        let r = post_burn_in_returns(&path, 50).unwrap();
        assert_eq!(res.pooled, moments(&r).unwrap());
        assert_eq!(res.per_seed.len(), 1);
    }

    #[test]
    fn repeated_seed_is_reproducible() {
        let p = small();
        let spec = NetworkSpec::Generate(TopologyConfig::small_world());
        let a = monte_carlo(&p, spec, &[3, 3], 50).unwrap();
        let b = monte_carlo(&p, spec, &[3, 3], 50).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_seed[0], a.per_seed[1]);
    }

    #[test]
    fn profits_are_zero_sum() {
        let p = small();
        let res = monte_carlo(
            &p,
            NetworkSpec::Generate(TopologyConfig::small_world()),
            &[1, 2, 3],
            50,
        )
        .unwrap();
        for s in &res.per_seed {
            assert!(s.total_profit.abs() <= 1e-6 * s.gross_profit.max(1.0));
        }
    }

    #[test]
    fn empty_seed_list_is_rejected() {
        let p = small();
        let err = monte_carlo(
            &p,
            NetworkSpec::Generate(TopologyConfig::small_world()),
            &[],
            0,
        );
        assert!(matches!(err, Err(ExperimentError::NoSeeds)));
    }
}
