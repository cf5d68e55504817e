//! Gaussian multi-source belief fusion.
//!
//! A prior `N(mu_0, s_0)` combined with `K` independent Gaussian signals
//! `N(mu_k, s_k)` yields a Gaussian posterior whose mean weights each input
//! by the product of all *other* variances:
//!
//! ```text
//! mu_P  = sum_k mu_k * prod_{j != k} s_j / e_K(s_0..s_K)
//! var_P = prod_j s_j / e_K(s_0..s_K)
//! ```
//!
//! where `e_K` is the elementary symmetric polynomial of degree `K` over the
//! `K + 1` variances. This is algebraically identical to precision pooling,
//! which is what [`fuse_many`] evaluates. [`fuse_combinatorial`] keeps the
//! product form as a reference route.
//!
//! A zero variance makes its source decisive; an [`SignalVariance::Unbounded`]
//! source is dropped as if it had never been received.

use crate::belief::GaussianBelief;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalVariance {
    Finite(f64),
    /// Limit of infinite variance: the source carries no weight.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSignal {
    pub mean: f64,
    pub variance: SignalVariance,
}

impl SourceSignal {
    pub const fn new(mean: f64, variance: f64) -> Self {
        Self {
            mean,
            variance: SignalVariance::Finite(variance),
        }
    }

    pub const fn unbounded(mean: f64) -> Self {
        Self {
            mean,
            variance: SignalVariance::Unbounded,
        }
    }

    fn finite(&self) -> Option<(f64, f64)> {
        match self.variance {
            SignalVariance::Finite(v) => Some((self.mean, v)),
            SignalVariance::Unbounded => None,
        }
    }
}

impl From<GaussianBelief> for SourceSignal {
    fn from(b: GaussianBelief) -> Self {
        SourceSignal::new(b.mean, b.variance)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("sources with zero variance disagree: {first} vs {second}")]
    Contradiction { first: f64, second: f64 },
    #[error("invalid variance {0}")]
    InvalidVariance(f64),
    #[error("subset size {size} out of range for {len} values")]
    SizeOutOfRange { size: usize, len: usize },
    #[error("gain undefined when both variances are zero")]
    ZeroGainDenominator,
}

fn check_variance(v: f64) -> Result<(), FusionError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(FusionError::InvalidVariance(v))
    }
}

/// Collects the inputs that carry weight, prior first.
fn weighted_inputs(
    prior: GaussianBelief,
    signals: &[SourceSignal],
) -> Result<Vec<(f64, f64)>, FusionError> {
    check_variance(prior.variance)?;
    let mut inputs = Vec::with_capacity(signals.len() + 1);
    inputs.push((prior.mean, prior.variance));
    for s in signals {
        if let Some((m, v)) = s.finite() {
            check_variance(v)?;
            inputs.push((m, v));
        }
    }
    Ok(inputs)
}

/// Resolves inputs containing a zero variance. `None` when all are positive.
fn certain_input(inputs: &[(f64, f64)]) -> Result<Option<GaussianBelief>, FusionError> {
    let mut certain: Option<f64> = None;
    for &(m, v) in inputs {
        if v == 0.0 {
            match certain {
                None => certain = Some(m),
                Some(first) if first != m => {
                    return Err(FusionError::Contradiction { first, second: m })
                }
                Some(_) => {}
            }
        }
    }
    Ok(certain.map(GaussianBelief::certain))
}

/// Two-source posterior.
pub fn fuse_two(
    prior: GaussianBelief,
    signal: SourceSignal,
) -> Result<GaussianBelief, FusionError> {
    let inputs = weighted_inputs(prior, std::slice::from_ref(&signal))?;
    if let Some(b) = certain_input(&inputs)? {
        return Ok(b);
    }
    if inputs.len() == 1 {
        return Ok(prior);
    }
    let (m0, v0) = inputs[0];
    let (m1, v1) = inputs[1];
    let total = v0 + v1;
    Ok(GaussianBelief::new(
        (m0 * v1 + m1 * v0) / total,
        v0 * v1 / total,
    ))
}

/// Posterior of a prior combined with any number of signals, by precision
/// pooling.
pub fn fuse_many(
    prior: GaussianBelief,
    signals: &[SourceSignal],
) -> Result<GaussianBelief, FusionError> {
    let inputs = weighted_inputs(prior, signals)?;
    if let Some(b) = certain_input(&inputs)? {
        return Ok(b);
    }
    Ok(pool(&inputs))
}

fn pool(inputs: &[(f64, f64)]) -> GaussianBelief {
    if inputs.len() == 1 {
        return GaussianBelief::new(inputs[0].0, inputs[0].1);
    }
    let mut precision = 0.0;
    let mut weighted = 0.0;
    for &(m, v) in inputs {
        let p = 1.0 / v;
        precision += p;
        weighted += p * m;
    }
    GaussianBelief::new(weighted / precision, 1.0 / precision)
}

/// Weight each input receives in the posterior mean, prior first.
///
/// Unbounded signals get weight 0. With zero-variance inputs the weight is
/// split evenly among them.
pub fn fusion_weights(
    prior: GaussianBelief,
    signals: &[SourceSignal],
) -> Result<Vec<f64>, FusionError> {
    // validates and detects contradictions
    fuse_many(prior, signals)?;
    let all: Vec<Option<f64>> = std::iter::once(Some(prior.variance))
        .chain(signals.iter().map(|s| s.finite().map(|(_, v)| v)))
        .collect();
    let zeros = all.iter().filter(|v| **v == Some(0.0)).count();
    if zeros > 0 {
        return Ok(all
            .iter()
            .map(|v| {
                if *v == Some(0.0) {
                    1.0 / zeros as f64
                } else {
                    0.0
                }
            })
            .collect());
    }
    let total: f64 = all.iter().flatten().map(|v| 1.0 / v).sum();
    Ok(all
        .iter()
        .map(|v| v.map_or(0.0, |v| 1.0 / v / total))
        .collect())
}

/// Sum over all `size`-subsets of `values` of the product of their elements
/// (the elementary symmetric polynomial). `size = 0` gives 1.
pub fn elementary_symmetric_sum(values: &[f64], size: usize) -> Result<f64, FusionError> {
    if size > values.len() {
        return Err(FusionError::SizeOutOfRange {
            size,
            len: values.len(),
        });
    }
    // e[j] after processing a prefix holds the degree-j polynomial of that prefix.
    let mut e = vec![0.0; size + 1];
    e[0] = 1.0;
    for (seen, &x) in values.iter().enumerate() {
        let top = size.min(seen + 1);
        for j in (1..=top).rev() {
            e[j] += x * e[j - 1];
        }
    }
    Ok(e[size])
}

/// Posterior evaluated through the product form instead of precision pooling.
///
/// Cost grows with the number of inputs squared; meant for checking and for
/// small source counts.
pub fn fuse_combinatorial(
    prior: GaussianBelief,
    signals: &[SourceSignal],
) -> Result<GaussianBelief, FusionError> {
    let inputs = weighted_inputs(prior, signals)?;
    if let Some(b) = certain_input(&inputs)? {
        return Ok(b);
    }
    let variances: Vec<f64> = inputs.iter().map(|&(_, v)| v).collect();
    let n = variances.len();
    let denom = elementary_symmetric_sum(&variances, n - 1)?;
    let mut numer = 0.0;
    for (k, &(m, _)) in inputs.iter().enumerate() {
        let others: f64 = variances
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, v)| v)
            .product();
        numer += m * others;
    }
    let product: f64 = variances.iter().product();
    Ok(GaussianBelief::new(numer / denom, product / denom))
}

/// Scalar Kalman gain for a prior variance `sigma_eta_sq` and a measurement
/// variance `sigma_j_sq`.
pub fn kalman_gain(sigma_eta_sq: f64, sigma_j_sq: f64) -> Result<f64, FusionError> {
    check_variance(sigma_eta_sq)?;
    check_variance(sigma_j_sq)?;
    let denom = sigma_eta_sq + sigma_j_sq;
    if denom == 0.0 {
        return Err(FusionError::ZeroGainDenominator);
    }
    Ok(sigma_eta_sq / denom)
}
