//! Impulse responses of the price under frozen source weights.
//!
//! Per seed, a warm-up run with Gaussian shocks settles the forecast-error
//! EMAs. A fresh market on the same network then starts from those EMAs
//! with updates switched off, sees no noise at all, and receives a single
//! shock at step `tau`. The response is the shocked price path minus the
//! unshocked one.

use super::{ExperimentError, NetworkSpec};
use crate::market::{continue_run, GaussianShocks, Market, NoShocks, Shocks};
use crate::params::{ModelParams, DEFAULT_BURN_IN};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockTarget {
    Information,
    Misinformation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrfConfig {
    pub warmup_steps: usize,
    /// Step at which the shock enters.
    pub tau: usize,
    /// Last recorded step.
    pub horizon: usize,
    pub shock_target: ShockTarget,
    /// Shock size in standard deviations of the targeted innovation.
    pub shock_size: f64,
}

impl Default for IrfConfig {
    fn default() -> Self {
        Self {
            warmup_steps: 500,
            tau: 10,
            horizon: 60,
            shock_target: ShockTarget::Information,
            shock_size: 1.0,
        }
    }
}

impl IrfConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.tau >= self.horizon {
            return Err(ExperimentError::Invalid(format!(
                "tau ({}) must be below horizon ({})",
                self.tau, self.horizon
            )));
        }
        if self.warmup_steps < DEFAULT_BURN_IN {
            return Err(ExperimentError::Invalid(format!(
                "warmup_steps ({}) must be at least the burn-in ({DEFAULT_BURN_IN})",
                self.warmup_steps
            )));
        }
        if !self.shock_size.is_finite() {
            return Err(ExperimentError::Invalid("shock_size must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    /// Price deviation from the unshocked path, `horizon + 1` entries.
    pub response: Vec<f64>,
    /// Unshocked frozen-weight price path.
    pub baseline: Vec<f64>,
}

impl IrfResult {
    /// Step of the largest absolute response.
    pub fn peak_step(&self) -> usize {
        self.response
            .iter()
            .enumerate()
            .fold(
                (0, 0.0),
                |(bi, bv), (i, v)| {
                    if v.abs() > bv {
                        (i, v.abs())
                    } else {
                        (bi, bv)
                    }
                },
            )
            .0
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.response.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Frozen-weight response for one network and one warm-up seed.
pub fn irf_single(
    params: &ModelParams,
    market: &Market<'_>,
    config: &IrfConfig,
) -> Result<IrfResult, ExperimentError> {
    let steps = config.horizon + 1;
    let mut base_market = market.clone();
    base_market.reset_keeping_emas();
    base_market.freeze_emas();
    let mut shocked_market = base_market.clone();

    let baseline = continue_run(&mut base_market, steps, &mut NoShocks, 0)?.price;
    let size = config.shock_size;
    let (tau, target) = (config.tau, config.shock_target);
    let (sigma_eta, sigma_nu) = (params.sigma_eta, params.sigma_nu);
    let mut impulse = |t: usize| {
        let mut s = Shocks::default();
        if t == tau {
            match target {
                ShockTarget::Information => s.eta = size * sigma_eta,
                ShockTarget::Misinformation => s.nu = size * sigma_nu,
            }
        }
        s
    };
    let shocked = continue_run(&mut shocked_market, steps, &mut impulse, 0)?.price;
    Ok(IrfResult {
        response: shocked.iter().zip(&baseline).map(|(s, b)| s - b).collect(),
        baseline,
    })
}

/// Average frozen-weight response over seeds.
pub fn run_irf(
    params: &ModelParams,
    network: NetworkSpec<'_>,
    config: &IrfConfig,
    seeds: &[u64],
) -> Result<IrfResult, ExperimentError> {
    config.validate()?;
    params.check().map_err(crate::market::SimError::from)?;
    if seeds.is_empty() {
        return Err(ExperimentError::NoSeeds);
    }
    let runs: Vec<IrfResult> = seeds
        .par_iter()
        .map(|&seed| {
            let net = network.for_seed(params, seed)?;
            let mut market = Market::new(params, &net)?;
            let mut shocks = GaussianShocks::new(params, seed);
            for _ in 0..config.warmup_steps {
                market.step(&mut shocks)?;
            }
            irf_single(params, &market, config)
        })
        .collect::<Result<_, ExperimentError>>()?;

    let n = runs.len() as f64;
    let len = config.horizon + 1;
    let mut response = vec![0.0; len];
    let mut baseline = vec![0.0; len];
    for r in &runs {
        for t in 0..len {
            response[t] += r.response[t] / n;
            baseline[t] += r.baseline[t] / n;
        }
    }
    Ok(IrfResult { response, baseline })
}
