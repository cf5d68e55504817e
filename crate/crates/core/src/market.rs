//! Per-step market simulation.
//!
//! Each step `t` runs, in order:
//!
//! 1. forecast-error EMAs are refreshed with the last realised payoff
//!    `y_{t-1}` against the payoff forecast made for it, i.e. the one implied
//!    by the prior for `theta_{t-1}`;
//! 2. the processes advance, revealing `theta_{t+1}` and `gamma_{t+1}`;
//! 3. priors are formed per category;
//! 4. uninformed agents fuse their prior with their sources' prior means;
//! 5. the clearing price and demands are computed, the payoff
//!    `y_t = p_t + d_t` is realised and last step's positions are settled.
//!
//! Prices are computed as deviations `q_t = p_t - d/r` from the fundamental
//! price, which keeps demand and profit arithmetic free of cancellation
//! against the large constant `d/r`.

use crate::belief::{AgentCategory, GaussianBelief};
use crate::fusion::{fuse_many, FusionError, SignalVariance, SourceSignal};
use crate::network::SocialNetwork;
use crate::params::{ModelParams, ParamError};
use crate::rng::{stream_rng, Stream};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("network has {network} nodes but the model expects {agents} agents")]
    SizeMismatch { network: usize, agents: usize },
    #[error("fusion failed for agent {agent} at step {step}: {source}")]
    Fusion {
        agent: usize,
        step: usize,
        source: FusionError,
    },
    #[error("payoff variance {variance} of agent {agent} is not positive")]
    NonPositiveVariance { agent: usize, variance: f64 },
    #[error("no agents to clear the market")]
    EmptyMarket,
    #[error("source EMA {source_ema} cannot be compared against a zero own EMA")]
    ZeroOwnEma { source_ema: f64 },
}

/// Innovations entering one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Shocks {
    /// Information shock, added to theta.
    pub eta: f64,
    /// Misinformation shock, added to gamma.
    pub nu: f64,
    /// Unobservable dividend noise.
    pub eps: f64,
}

pub trait ShockSource {
    fn draw(&mut self, step: usize) -> Shocks;
}

/// Independent Gaussian streams for the three innovations.
pub struct GaussianShocks {
    info: ChaCha8Rng,
    misinfo: ChaCha8Rng,
    noise: ChaCha8Rng,
    sigma_eta: f64,
    sigma_nu: f64,
    sigma_eps: f64,
}

impl GaussianShocks {
    pub fn new(params: &ModelParams, seed: u64) -> Self {
        Self {
            info: stream_rng(seed, Stream::Information),
            misinfo: stream_rng(seed, Stream::Misinformation),
            noise: stream_rng(seed, Stream::DividendNoise),
            sigma_eta: params.sigma_eta,
            sigma_nu: params.sigma_nu,
            sigma_eps: params.sigma_eps,
        }
    }
}

impl ShockSource for GaussianShocks {
    fn draw(&mut self, _step: usize) -> Shocks {
        let z = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        Shocks {
            eta: self.sigma_eta * z(&mut self.info),
            nu: self.sigma_nu * z(&mut self.misinfo),
            eps: self.sigma_eps * z(&mut self.noise),
        }
    }
}

/// No innovations at all.
pub struct NoShocks;

impl ShockSource for NoShocks {
    fn draw(&mut self, _step: usize) -> Shocks {
        Shocks::default()
    }
}

impl<F: FnMut(usize) -> Shocks> ShockSource for F {
    fn draw(&mut self, step: usize) -> Shocks {
        self(step)
    }
}

/// One AR(1) step of both processes and the dividend they imply:
/// `theta' = beta theta + eta`, `gamma' = beta gamma + nu`,
/// `d' = d + theta' + eps`.
pub fn advance_processes(
    theta: f64,
    gamma: f64,
    shocks: Shocks,
    params: &ModelParams,
) -> (f64, f64, f64) {
    let theta_next = params.beta * theta + shocks.eta;
    let gamma_next = params.beta * gamma + shocks.nu;
    (
        theta_next,
        gamma_next,
        params.dividend + theta_next + shocks.eps,
    )
}

/// Subjective expected payoff `dR/r + R E(theta) / (R - beta)`.
pub fn expected_payoff(belief: &GaussianBelief, params: &ModelParams) -> f64 {
    params.dividend * params.gross_rate / params.net_rate()
        + excess_expectation(belief.mean, params)
}

/// Expected payoff above `dR/r`.
fn excess_expectation(mean: f64, params: &ModelParams) -> f64 {
    params.gross_rate * mean / params.belief_discount()
}

/// Subjective payoff variance by category. Informed and misinformed agents
/// use the variance of their own signal process pushed through the pricing
/// map; uninformed agents add their posterior variance to the dividend
/// noise.
pub fn payoff_variance(
    category: AgentCategory,
    posterior: &GaussianBelief,
    params: &ModelParams,
) -> f64 {
    let eps2 = params.sigma_eps * params.sigma_eps;
    let disc2 = params.belief_discount().powi(2);
    match category {
        AgentCategory::Informed => eps2 + params.sigma_eta.powi(2) / disc2,
        AgentCategory::Misinformed => eps2 + params.sigma_nu.powi(2) / disc2,
        AgentCategory::Uninformed => eps2 + posterior.variance,
    }
}

/// Variance attached to a source, scaling the prior variance by the ratio of
/// the source's forecast-error EMA to the observer's own.
pub fn implied_variance(
    source_ema: f64,
    own_ema: f64,
    params: &ModelParams,
) -> Result<SignalVariance, SimError> {
    let prior_var = params.sigma_eta * params.sigma_eta;
    if own_ema > 0.0 {
        return Ok(SignalVariance::Finite(prior_var * source_ema / own_ema));
    }
    if source_ema == 0.0 {
        Ok(SignalVariance::Finite(0.0))
    } else if own_ema == 0.0 && source_ema > 0.0 {
        // ratio diverges: the source is infinitely worse than the observer
        Ok(SignalVariance::Unbounded)
    } else {
        Err(SimError::ZeroOwnEma { source_ema })
    }
}

/// Exponential moving average update with weight `w` on the newest error.
pub fn ema_update(previous: f64, squared_error: f64, weight: f64) -> f64 {
    weight * squared_error + (1.0 - weight) * previous
}

/// Price solving zero net supply: `p = sum(E_i / V_i) / (R sum(1 / V_i))`.
pub fn clearing_price(
    expected_payoffs: &[f64],
    payoff_variances: &[f64],
    gross_rate: f64,
) -> Result<f64, SimError> {
    if expected_payoffs.is_empty() {
        return Err(SimError::EmptyMarket);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (agent, (&e, &v)) in expected_payoffs.iter().zip(payoff_variances).enumerate() {
        if !(v > 0.0) {
            return Err(SimError::NonPositiveVariance { agent, variance: v });
        }
        num += e / v;
        den += 1.0 / v;
    }
    Ok(num / (gross_rate * den))
}

/// CARA demand `(E - R p) / (a V)`.
pub fn demand(expected: f64, variance: f64, price: f64, params: &ModelParams) -> f64 {
    (expected - params.gross_rate * price) / (params.risk_aversion * variance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub category: AgentCategory,
    pub prior: GaussianBelief,
    pub posterior: GaussianBelief,
    /// EMA of this agent's squared payoff-forecast errors. Observers of the
    /// agent all see the same value, so one number per agent serves both as
    /// the self EMA and as the EMA its observers attach to it.
    pub ema: f64,
    /// Prior mean formed one step before `prior`; it carries the forecast
    /// of the most recently realised payoff.
    pub lagged_mean: f64,
    /// Position taken at the current step.
    pub holdings: f64,
    pub cum_profit: f64,
}

/// Quantities realised at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// theta_{t+1}, revealed at t.
    pub theta: f64,
    pub gamma: f64,
    /// Dividend d_t paid at t.
    pub dividend: f64,
    pub price: f64,
    pub payoff: f64,
    pub clearing_residual: f64,
    pub mean_belief_uninformed: f64,
}

/// Market state evolving step by step over a fixed network.
#[derive(Debug, Clone)]
pub struct Market<'a> {
    params: ModelParams,
    network: &'a SocialNetwork,
    agents: Vec<AgentState>,
    theta: f64,
    gamma: f64,
    /// d_{t} - d for the dividend paid at the next settlement.
    dividend_dev: f64,
    /// p_{t-1} - d/r
    last_price_dev: Option<f64>,
    /// y_{t-1} - dR/r
    last_payoff_dev: Option<f64>,
    step: usize,
    ema_frozen: bool,
    scratch: Vec<SourceSignal>,
}

impl<'a> Market<'a> {
    /// Initial state: processes at zero, uninformed posteriors `(0,
    /// sigma_eta^2)`, every EMA at `sigma_eta^2`.
    pub fn new(params: &ModelParams, network: &'a SocialNetwork) -> Result<Self, SimError> {
        params.check()?;
        if network.len() != params.agents {
            return Err(SimError::SizeMismatch {
                network: network.len(),
                agents: params.agents,
            });
        }
        let var = params.sigma_eta * params.sigma_eta;
        let agents = network
            .categories()
            .iter()
            .map(|&category| {
                let start = match category {
                    AgentCategory::Uninformed => GaussianBelief::new(0.0, var),
                    _ => GaussianBelief::certain(0.0),
                };
                AgentState {
                    category,
                    prior: start,
                    posterior: start,
                    ema: var,
                    lagged_mean: 0.0,
                    holdings: 0.0,
                    cum_profit: 0.0,
                }
            })
            .collect();
        Ok(Self {
            params: params.clone(),
            network,
            agents,
            theta: 0.0,
            gamma: 0.0,
            dividend_dev: 0.0,
            last_price_dev: None,
            last_payoff_dev: None,
            step: 0,
            ema_frozen: false,
            scratch: Vec::new(),
        })
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    /// Stops EMA updates, freezing every source weight at its current value.
    pub fn freeze_emas(&mut self) {
        self.ema_frozen = true;
    }

    /// Overwrites all EMAs. Used to impose a fixed weighting.
    pub fn set_emas(&mut self, emas: &[f64]) {
        assert_eq!(emas.len(), self.agents.len());
        for (a, &e) in self.agents.iter_mut().zip(emas) {
            a.ema = e;
        }
    }

    pub fn emas(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.ema).collect()
    }

    /// Resets processes, beliefs, positions and payoff history while keeping
    /// the EMAs.
    pub fn reset_keeping_emas(&mut self) {
        let var = self.params.sigma_eta * self.params.sigma_eta;
        for a in &mut self.agents {
            let start = match a.category {
                AgentCategory::Uninformed => GaussianBelief::new(0.0, var),
                _ => GaussianBelief::certain(0.0),
            };
            a.prior = start;
            a.posterior = start;
            a.lagged_mean = 0.0;
            a.holdings = 0.0;
            a.cum_profit = 0.0;
        }
        self.theta = 0.0;
        self.gamma = 0.0;
        self.dividend_dev = 0.0;
        self.last_price_dev = None;
        self.last_payoff_dev = None;
        self.step = 0;
    }

    /// Refreshes EMAs against the last realised payoff.
    pub fn update_emas(&mut self) {
        if self.ema_frozen {
            return;
        }
        let Some(y_dev) = self.last_payoff_dev else {
            return;
        };
        let w = self.params.ema_weight;
        for a in &mut self.agents {
            let err = y_dev - excess_expectation(a.lagged_mean, &self.params);
            a.ema = ema_update(a.ema, err * err, w);
        }
    }

    /// Category-specific priors for theta_{t+1}.
    pub fn step_priors(&mut self, theta_next: f64, gamma_next: f64) {
        let var = self.params.sigma_eta * self.params.sigma_eta;
        let beta = self.params.beta;
        for a in &mut self.agents {
            a.lagged_mean = a.prior.mean;
            a.prior = match a.category {
                AgentCategory::Informed => GaussianBelief::certain(theta_next),
                AgentCategory::Misinformed => GaussianBelief::certain(gamma_next),
                AgentCategory::Uninformed => GaussianBelief::new(beta * a.posterior.mean, var),
            };
        }
    }

    /// Posteriors: uninformed agents fuse; the others keep their prior.
    pub fn fuse_step(&mut self) -> Result<(), SimError> {
        let mut posteriors = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.iter().enumerate() {
            if a.category != AgentCategory::Uninformed {
                posteriors.push(a.prior);
                continue;
            }
            self.scratch.clear();
            for &j in self.network.sources_of(i) {
                let src = &self.agents[j];
                let variance = implied_variance(src.ema, a.ema, &self.params)?;
                self.scratch.push(SourceSignal {
                    mean: src.prior.mean,
                    variance,
                });
            }
            let post = fuse_many(a.prior, &self.scratch).map_err(|source| SimError::Fusion {
                agent: i,
                step: self.step,
                source,
            })?;
            posteriors.push(post);
        }
        for (a, p) in self.agents.iter_mut().zip(posteriors) {
            a.posterior = p;
        }
        Ok(())
    }

    /// Runs one full step.
    pub fn step<S: ShockSource + ?Sized>(
        &mut self,
        shocks: &mut S,
    ) -> Result<StepRecord, SimError> {
        self.update_emas();

        let draw = shocks.draw(self.step);
        let (theta_next, gamma_next, dividend_next) =
            advance_processes(self.theta, self.gamma, draw, &self.params);
        let dividend_dev = self.dividend_dev;

        self.step_priors(theta_next, gamma_next);
        self.fuse_step()?;

        let p = &self.params;
        let n = self.agents.len();
        let mut excess = Vec::with_capacity(n);
        let mut variances = Vec::with_capacity(n);
        for (i, a) in self.agents.iter().enumerate() {
            let v = payoff_variance(a.category, &a.posterior, p);
            if !(v > 0.0) {
                return Err(SimError::NonPositiveVariance {
                    agent: i,
                    variance: v,
                });
            }
            excess.push(excess_expectation(a.posterior.mean, p));
            variances.push(v);
        }
        let price_dev = clearing_price(&excess, &variances, p.gross_rate)?;

        // settle positions from the previous step: y_t - R p_{t-1}
        let payoff_dev = price_dev + dividend_dev;
        let settle = self
            .last_price_dev
            .map(|prev| price_dev - p.gross_rate * prev + dividend_dev);

        let mut residual = 0.0;
        let mut unin_sum = 0.0;
        let mut unin_n = 0usize;
        for (i, a) in self.agents.iter_mut().enumerate() {
            if let Some(excess_return) = settle {
                a.cum_profit += a.holdings * excess_return;
            }
            let x = (excess[i] - p.gross_rate * price_dev) / (p.risk_aversion * variances[i]);
            a.holdings = x;
            residual += x;
            if a.category == AgentCategory::Uninformed {
                unin_sum += a.posterior.mean;
                unin_n += 1;
            }
        }

        let fundamental = p.fundamental_price();
        let price = fundamental + price_dev;
        let dividend = p.dividend + dividend_dev;
        let record = StepRecord {
            theta: theta_next,
            gamma: gamma_next,
            dividend,
            price,
            payoff: price + dividend,
            clearing_residual: residual,
            mean_belief_uninformed: if unin_n > 0 {
                unin_sum / unin_n as f64
            } else {
                f64::NAN
            },
        };

        self.theta = theta_next;
        self.gamma = gamma_next;
        self.dividend_dev = dividend_next - p.dividend;
        self.last_price_dev = Some(price_dev);
        self.last_payoff_dev = Some(payoff_dev);
        self.step += 1;
        Ok(record)
    }

    /// Holdings, cumulative profits and posterior means.
    fn snapshot(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            self.agents.iter().map(|a| a.holdings).collect(),
            self.agents.iter().map(|a| a.cum_profit).collect(),
            self.agents.iter().map(|a| a.posterior.mean).collect(),
        )
    }
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub seed: u64,
    pub params: ModelParams,
    pub categories: Vec<AgentCategory>,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub dividend: Vec<f64>,
    pub price: Vec<f64>,
    pub payoff: Vec<f64>,
    pub mean_belief_uninformed: Vec<f64>,
    pub clearing_residual: Vec<f64>,
    /// `demand[t][i]`: position of agent `i` taken at step `t`.
    pub demand: Vec<Vec<f64>>,
    /// `profit[t][i]`: profit booked at step `t`, from the position held since `t - 1`.
    pub profit: Vec<Vec<f64>>,
    pub posterior_mean: Vec<Vec<f64>>,
}

impl SimPath {
    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    pub fn cum_profit(&self) -> Vec<f64> {
        let n = self.categories.len();
        let mut total = vec![0.0; n];
        for row in &self.profit {
            for (t, p) in total.iter_mut().zip(row) {
                *t += p;
            }
        }
        total
    }
}

fn record_path<S: ShockSource + ?Sized>(
    market: &mut Market<'_>,
    steps: usize,
    shocks: &mut S,
    seed: u64,
) -> Result<SimPath, SimError> {
    let n = market.agents.len();
    let mut path = SimPath {
        seed,
        params: market.params.clone(),
        categories: market.agents.iter().map(|a| a.category).collect(),
        theta: Vec::with_capacity(steps),
        gamma: Vec::with_capacity(steps),
        dividend: Vec::with_capacity(steps),
        price: Vec::with_capacity(steps),
        payoff: Vec::with_capacity(steps),
        mean_belief_uninformed: Vec::with_capacity(steps),
        clearing_residual: Vec::with_capacity(steps),
        demand: Vec::with_capacity(steps),
        profit: Vec::with_capacity(steps),
        posterior_mean: Vec::with_capacity(steps),
    };
    let mut prev_cum = vec![0.0; n];
    for _ in 0..steps {
        let rec = market.step(shocks)?;
        let (holdings, cum, means) = market.snapshot();
        let profit: Vec<f64> = cum.iter().zip(&prev_cum).map(|(c, p)| c - p).collect();
        prev_cum = cum;
        path.theta.push(rec.theta);
        path.gamma.push(rec.gamma);
        path.dividend.push(rec.dividend);
        path.price.push(rec.price);
        path.payoff.push(rec.payoff);
        path.mean_belief_uninformed.push(rec.mean_belief_uninformed);
        path.clearing_residual.push(rec.clearing_residual);
        path.demand.push(holdings);
        path.profit.push(profit);
        path.posterior_mean.push(means);
    }
    Ok(path)
}

/// Runs `params.steps` steps with Gaussian shocks drawn from `seed`.
pub fn run_simulation(
    params: &ModelParams,
    network: &SocialNetwork,
    seed: u64,
) -> Result<SimPath, SimError> {
    let mut market = Market::new(params, network)?;
    let mut shocks = GaussianShocks::new(params, seed);
    record_path(&mut market, params.steps, &mut shocks, seed)
}

/// Runs with an arbitrary shock source.
pub fn run_with_shocks<S: ShockSource + ?Sized>(
    params: &ModelParams,
    network: &SocialNetwork,
    shocks: &mut S,
    seed: u64,
) -> Result<SimPath, SimError> {
    let mut market = Market::new(params, network)?;
    record_path(&mut market, params.steps, shocks, seed)
}

/// Continues an existing market for `steps` more steps.
pub fn continue_run<S: ShockSource + ?Sized>(
    market: &mut Market<'_>,
    steps: usize,
    shocks: &mut S,
    seed: u64,
) -> Result<SimPath, SimError> {
    record_path(market, steps, shocks, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{small_world, SocialNetwork, TopologyTag};
    use crate::rng::stream_rng;

    fn calibrated() -> ModelParams {
        ModelParams::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    fn line(n: usize, cats: Vec<AgentCategory>) -> SocialNetwork {
        SocialNetwork::from_edges(n, (1..n).map(|i| (i - 1, i)), TopologyTag::Custom)
            .with_categories(cats)
    }

    #[test]
    fn priors_by_category() {
        let p = ModelParams {
            agents: 3,
            ..calibrated()
        };
        let net = line(
            3,
            vec![
                AgentCategory::Informed,
                AgentCategory::Misinformed,
                AgentCategory::Uninformed,
            ],
        );
        let mut m = Market::new(&p, &net).unwrap();
        m.agents[2].posterior.mean = 1.0;
        m.step_priors(0.3, -0.2);
        assert_eq!(m.agents[0].prior, GaussianBelief::certain(0.3));
        assert_eq!(m.agents[1].prior, GaussianBelief::certain(-0.2));
        assert_eq!(m.agents[2].prior, GaussianBelief::new(0.5, 0.84 * 0.84));
    }

    #[test]
    fn ema_examples() {
        assert!((ema_update(1.0, 4.0, 0.9) - 3.7).abs() < 1e-15);
        assert_eq!(ema_update(2.5, 2.5, 0.9), 2.5);
        let mut e = 3.0;
        for _ in 0..5 {
            e = ema_update(e, 0.0, 0.9);
        }
        assert!(rel(e, 0.1f64.powi(5) * 3.0) < 1e-12);
    }

    #[test]
    fn implied_variance_examples() {
        let p = ModelParams {
            sigma_eta: 0.84,
            ..calibrated()
        };
        let s2 = 0.84 * 0.84;
        assert_eq!(
            implied_variance(1.7, 1.7, &p).unwrap(),
            SignalVariance::Finite(s2)
        );
        assert_eq!(
            implied_variance(0.0, 1.0, &p).unwrap(),
            SignalVariance::Finite(0.0)
        );
        match implied_variance(2.0, 1.0, &p).unwrap() {
            SignalVariance::Finite(v) => assert!((v - 1.4112).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            implied_variance(0.0, 0.0, &p).unwrap(),
            SignalVariance::Finite(0.0)
        );
        assert_eq!(
            implied_variance(1.0, 0.0, &p).unwrap(),
            SignalVariance::Unbounded
        );
    }

    #[test]
    fn expected_payoff_examples() {
        let p = calibrated();
        let base = 0.021 * 1.0001 / 0.0001;
        assert!(rel(expected_payoff(&GaussianBelief::certain(0.0), &p), 210.021) < 1e-9);
        let unit = GaussianBelief::certain(p.gross_rate - p.beta);
        assert!(rel(expected_payoff(&unit, &p), base + p.gross_rate) < 1e-12);
        let b = GaussianBelief::certain(0.5001);
        assert!(rel(expected_payoff(&b, &p), base + 1.0001) < 1e-12);
    }

    #[test]
    fn payoff_variance_examples() {
        let p = calibrated();
        let any = GaussianBelief::certain(0.0);
        let vi = payoff_variance(AgentCategory::Informed, &any, &p);
        assert!((vi - (1.0 + 0.7056 / (0.5001f64 * 0.5001))).abs() < 1e-12);
        assert!((vi - 3.8211).abs() < 5e-4);
        let vm = payoff_variance(AgentCategory::Misinformed, &any, &p);
        assert!((vm - (1.0 + 1.8496 / (0.5001f64 * 0.5001))).abs() < 1e-12);
        assert!((vm - 8.3953).abs() < 5e-4);
        assert_eq!(payoff_variance(AgentCategory::Uninformed, &any, &p), 1.0);
    }

    #[test]
    fn clearing_price_examples() {
        let r = 1.0001;
        let p = clearing_price(&[5.0, 5.0, 5.0], &[2.0, 2.0, 2.0], r).unwrap();
        assert!(rel(p, 5.0 / r) < 1e-15);
        assert!(
            rel(
                clearing_price(&[2.0, 0.0], &[1.0, 1.0], 2.0 / 2.0 + 0.0).unwrap(),
                1.0
            ) < 1e-15
        );
        let params = calibrated();
        let e = expected_payoff(&GaussianBelief::certain(0.0), &params);
        let price = clearing_price(&[e, e], &[3.0, 1.0], params.gross_rate).unwrap();
        assert!(rel(price, params.fundamental_price()) < 1e-12);
        assert!(matches!(
            clearing_price(&[1.0], &[0.0], r),
            Err(SimError::NonPositiveVariance { .. })
        ));
        assert!(matches!(
            clearing_price(&[], &[], r),
            Err(SimError::EmptyMarket)
        ));
    }

    #[test]
    fn two_agent_symmetric_price() {
        // (E = 2R, V = 1) and (E = 0, V = 1) clear at p = 1
        let r = 1.05;
        let p = clearing_price(&[2.0 * r, 0.0], &[1.0, 1.0], r).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn demand_examples() {
        let p = calibrated();
        assert_eq!(demand(p.gross_rate * 3.0, 2.0, 3.0, &p), 0.0);
        let x = 2.0;
        let price = 10.0;
        let profit = x * ((p.gross_rate * price + 1.0) - p.gross_rate * price);
        assert!((profit - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_processes() {
        let p = calibrated();
        let (t, g, d) = advance_processes(1.0, 1.0, Shocks::default(), &p);
        assert_eq!((t, g), (0.5, 0.5));
        assert!((d - (p.dividend + 0.5)).abs() < 1e-15);
        let (t, _, d) = advance_processes(0.0, 0.0, Shocks::default(), &p);
        assert_eq!((t, d), (0.0, p.dividend));
    }

    #[test]
    fn ema_tracks_payoff_forecast_error() {
        // all informed: the error on y_{t-1} is eta_t / (R - beta) + eps_{t-1}
        let p = ModelParams {
            agents: 3,
            lambda: 1.0,
            xi: 0.0,
            ..calibrated()
        };
        let net = SocialNetwork::complete(3).with_categories(vec![AgentCategory::Informed; 3]);
        let eta = |s: usize| 0.1 * (s as f64 + 1.0);
        let eps = |s: usize| -0.05 * s as f64 + 0.2;
        let mut shocks = |s: usize| Shocks {
            eta: eta(s),
            nu: 0.0,
            eps: eps(s),
        };
        let mut market = Market::new(&p, &net).unwrap();
        let w = p.ema_weight;
        let mut expected = p.sigma_eta * p.sigma_eta;
        // d_0 = d, so eps_{-1} = 0
        for t in 0..12 {
            market.step(&mut shocks).unwrap();
            if t >= 1 {
                let e = if t >= 2 { eps(t - 2) } else { 0.0 };
                let err = eta(t - 1) / p.belief_discount() + e;
                expected = w * err * err + (1.0 - w) * expected;
            }
            assert!(rel(market.emas()[0], expected) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn stationary_theta_variance() {
        let p = calibrated();
        let mut shocks = GaussianShocks::new(&p, 5);
        let mut theta = 0.0;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let n = 400_000;
        for i in 0..n + 100 {
            let s = shocks.draw(i);
            theta = p.beta * theta + s.eta;
            if i >= 100 {
                sum += theta;
                sum2 += theta * theta;
            }
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let expected = 0.84f64.powi(2) / (1.0 - 0.25);
        assert!((expected - 0.9408).abs() < 1e-12);
        assert!((var - expected).abs() / expected < 0.02, "var {var}");
    }

    #[test]
    fn isolated_uninformed_keeps_prior() {
        let p = ModelParams {
            agents: 2,
            ..calibrated()
        };
        let net = SocialNetwork::from_edges(2, [], TopologyTag::Custom)
            .with_categories(vec![AgentCategory::Informed, AgentCategory::Uninformed]);
        let mut m = Market::new(&p, &net).unwrap();
        m.step_priors(0.7, 0.0);
        m.fuse_step().unwrap();
        assert_eq!(m.agents[1].posterior, m.agents[1].prior);
        assert_eq!(m.agents[0].posterior, GaussianBelief::certain(0.7));
    }

    #[test]
    fn single_informed_source_at_equal_ema_halves() {
        let p = ModelParams {
            agents: 2,
            ..calibrated()
        };
        let net = line(2, vec![AgentCategory::Informed, AgentCategory::Uninformed]);
        let mut m = Market::new(&p, &net).unwrap();
        m.step_priors(0.8, 0.0);
        m.fuse_step().unwrap();
        let s2 = p.sigma_eta.powi(2);
        let gain = crate::fusion::kalman_gain(s2, s2).unwrap();
        assert_eq!(gain, 0.5);
        let post = m.agents[1].posterior;
        assert!((post.mean - gain * 0.8).abs() < 1e-15);
        assert!((post.variance - s2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn informed_ignore_neighbours() {
        let p = ModelParams {
            agents: 3,
            ..calibrated()
        };
        let net = SocialNetwork::complete(3).with_categories(vec![
            AgentCategory::Informed,
            AgentCategory::Misinformed,
            AgentCategory::Uninformed,
        ]);
        let mut m = Market::new(&p, &net).unwrap();
        m.step_priors(0.4, -1.0);
        m.fuse_step().unwrap();
        assert_eq!(m.agents[0].posterior, GaussianBelief::certain(0.4));
        assert_eq!(m.agents[1].posterior, GaussianBelief::certain(-1.0));
    }

    fn small_net(seed: u64, p: &ModelParams) -> SocialNetwork {
        let g = small_world(p.agents, 0.1, 0.01, &mut stream_rng(seed, Stream::Network)).unwrap();
        crate::network::assign_categories(
            g,
            p.lambda,
            p.xi,
            crate::network::Placement::Random,
            &mut stream_rng(seed, Stream::Placement),
        )
        .unwrap()
    }

    #[test]
    fn fully_informed_prices_at_benchmark() {
        let p = ModelParams {
            lambda: 1.0,
            xi: 0.0,
            steps: 300,
            agents: 50,
            ..calibrated()
        };
        let net = small_net(1, &p);
        let path = run_simulation(&p, &net, 9).unwrap();
        for t in 0..path.len() {
            let bench = p.fundamental_price() + path.theta[t] / p.belief_discount();
            assert!((path.price[t] - bench).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn no_shocks_constant_price() {
        let p = ModelParams {
            steps: 500,
            agents: 40,
            ..calibrated()
        };
        let net = small_net(2, &p);
        let path = run_with_shocks(&p, &net, &mut NoShocks, 0).unwrap();
        assert!(path.price.iter().all(|&x| x == p.fundamental_price()));
    }

    #[test]
    fn micro_invariants_hold_every_step() {
        let p = ModelParams {
            steps: 400,
            ..calibrated()
        };
        let net = small_net(3, &p);
        let path = run_simulation(&p, &net, 3).unwrap();
        let mut cum = vec![0.0; p.agents];
        for t in 0..path.len() {
            assert!(path.clearing_residual[t].abs() < 1e-8);
            assert_eq!(path.payoff[t], path.price[t] + path.dividend[t]);
            let step_sum: f64 = path.profit[t].iter().sum();
            let step_abs: f64 = path.profit[t].iter().map(|x| x.abs()).sum();
            assert!(step_sum.abs() <= 1e-6 * step_abs.max(1e-12));
            for (c, x) in cum.iter_mut().zip(&path.profit[t]) {
                *c += x;
            }
            let total: f64 = cum.iter().sum();
            let scale: f64 = cum.iter().map(|x| x.abs()).sum();
            assert!(total.abs() <= 1e-6 * scale.max(1e-12));
        }
    }

    #[test]
    fn uninformed_variance_bounded_by_prior() {
        let p = ModelParams {
            steps: 300,
            ..calibrated()
        };
        let net = small_net(4, &p);
        let mut m = Market::new(&p, &net).unwrap();
        let mut shocks = GaussianShocks::new(&p, 4);
        let s2 = p.sigma_eta.powi(2);
        for _ in 0..300 {
            m.step(&mut shocks).unwrap();
            for a in m.agents() {
                match a.category {
                    AgentCategory::Uninformed => assert!(a.posterior.variance <= s2),
                    _ => assert_eq!(a.posterior.variance, 0.0),
                }
                assert!(a.ema > 0.0);
            }
        }
    }

    #[test]
    fn informed_dividend_forecast_error_is_noise() {
        let p = ModelParams {
            steps: 200,
            agents: 40,
            ..calibrated()
        };
        let net = small_net(5, &p);
        let path = run_simulation(&p, &net, 5).unwrap();
        let mut noise = GaussianShocks::new(&p, 5);
        let eps: Vec<f64> = (0..p.steps).map(|i| noise.draw(i).eps).collect();
        let informed = path
            .categories
            .iter()
            .position(|c| *c == AgentCategory::Informed)
            .unwrap();
        for (t, e) in eps.iter().enumerate().take(p.steps - 1) {
            let forecast = p.dividend + path.posterior_mean[t][informed];
            assert!((path.dividend[t + 1] - forecast - e).abs() < 1e-12);
        }
    }

    #[test]
    fn runs_are_bit_identical() {
        let p = ModelParams {
            steps: 200,
            ..calibrated()
        };
        let net = small_net(6, &p);
        let a = run_simulation(&p, &net, 77).unwrap();
        let b = run_simulation(&p, &net, 77).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&p, &net, 78).unwrap();
        assert_ne!(a.price, c.price);
    }

    #[test]
    fn size_mismatch_rejected() {
        let p = calibrated();
        let net = SocialNetwork::complete(3);
        assert!(matches!(
            Market::new(&p, &net),
            Err(SimError::SizeMismatch { .. })
        ));
    }
}
