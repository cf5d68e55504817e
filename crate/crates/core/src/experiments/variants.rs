//! Nested benchmark models without network learning.
//!
//! Both take aligned paths where `theta[t]` and `gamma[t]` hold the values
//! revealed at step `t` (that is, `theta_{t+1}` and `gamma_{t+1}`).

use crate::market::{advance_processes, GaussianShocks, ShockSource};
use crate::params::ModelParams;

/// Agents hold their prior expectations:
/// `p_t = d/r + (lambda theta_{t+1} + xi gamma_{t+1}) / (R - beta)`.
pub fn no_learning_prices(params: &ModelParams, theta: &[f64], gamma: &[f64]) -> Vec<f64> {
    let base = params.fundamental_price();
    let disc = params.belief_discount();
    theta
        .iter()
        .zip(gamma)
        .map(|(th, g)| base + (params.lambda * th + params.xi * g) / disc)
        .collect()
}

/// Fully connected equal-weight learning. Uninformed agents share the mean
/// `m_t = lambda theta_{t+1} + xi gamma_{t+1} + (1 - lambda - xi) m_{t-1}`
/// with variance `sigma_eta^2 / I`, and the price clears across the three
/// groups.
pub fn degroot_prices(params: &ModelParams, theta: &[f64], gamma: &[f64]) -> Vec<f64> {
    degroot_prices_with_carry(params, theta, gamma, 1.0).0
}

/// DeGroot prices with the previous shared mean scaled by `carry` before
/// mixing. `carry = beta` is the recursion the full simulator follows on a
/// complete network with equal weights, since uninformed priors are
/// `beta` times the last posterior mean. Returns prices and the shared
/// uninformed means.
pub fn degroot_prices_with_carry(
    params: &ModelParams,
    theta: &[f64],
    gamma: &[f64],
    carry: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (lambda, xi) = (params.lambda, params.xi);
    let u = 1.0 - lambda - xi;
    let disc = params.belief_discount();
    let eps2 = params.sigma_eps.powi(2);
    let v_i = eps2 + params.sigma_eta.powi(2) / disc.powi(2);
    let v_m = eps2 + params.sigma_nu.powi(2) / disc.powi(2);
    let v_u = eps2 + params.sigma_eta.powi(2) / params.agents as f64;
    let r = params.gross_rate;
    let base = params.fundamental_price();

    let mut m = 0.0;
    let mut prices = Vec::with_capacity(theta.len());
    let mut means = Vec::with_capacity(theta.len());
    for (&th, &g) in theta.iter().zip(gamma) {
        m = lambda * th + xi * g + u * carry * m;
        // expectations above dR/r
        let (e_i, e_m, e_u) = (r * th / disc, r * g / disc, r * m / disc);
        let num = lambda * e_i / v_i + xi * e_m / v_m + u * e_u / v_u;
        let den = lambda / v_i + xi / v_m + u / v_u;
        prices.push(base + num / (r * den));
        means.push(m);
    }
    (prices, means)
}

/// The `theta` and `gamma` paths a seed produces under Gaussian shocks, in
/// the same order as the full simulator draws them.
pub fn shock_paths(params: &ModelParams, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut shocks = GaussianShocks::new(params, seed);
    let (mut th, mut g) = (0.0, 0.0);
    let mut theta = Vec::with_capacity(params.steps);
    let mut gamma = Vec::with_capacity(params.steps);
    for t in 0..params.steps {
        let (next_th, next_g, _) = advance_processes(th, g, shocks.draw(t), params);
        th = next_th;
        g = next_g;
        theta.push(th);
        gamma.push(g);
    }
    (theta, gamma)
}
