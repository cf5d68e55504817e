//! Variance-based sensitivity indices.
//!
//! Two `N x k` matrices `A` and `B` come from one scrambled Sobol sequence
//! in `2k` dimensions. For each parameter `i` the matrix `AB_i` is `A` with
//! column `i` taken from `B`. With `V` the variance of all `f(A)` and `f(B)`
//! values:
//!
//! - first order: `S_i = mean(f(B) (f(AB_i) - f(A))) / V`
//! - total effect: `S_Ti = mean((f(A) - f(AB_i))^2) / (2 V)`
//!
//! Both are defined as 0 when `V = 0`.

use super::{ExperimentError, NetworkSpec};
use crate::market::run_simulation;
use crate::network::{Topology, TopologyConfig};
use crate::params::ModelParams;
use crate::stats::{excess_price_variance, moments, post_burn_in_returns};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolParameter {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl SobolParameter {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolOutput {
    ExcessVariance,
    Skewness,
    Kurtosis,
}

impl SobolOutput {
    pub fn name(self) -> &'static str {
        match self {
            SobolOutput::ExcessVariance => "excess_variance",
            SobolOutput::Skewness => "skewness",
            SobolOutput::Kurtosis => "kurtosis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolSpec {
    pub parameters: Vec<SobolParameter>,
    /// Base sample size `N`, a power of two.
    pub base_samples: usize,
    /// Seeds averaged at every parameter point.
    pub seeds_per_point: usize,
    pub outputs: Vec<SobolOutput>,
    /// Scramble seed of the Sobol sequence.
    pub design_seed: u32,
}

impl Default for SobolSpec {
    fn default() -> Self {
        Self {
            parameters: default_parameters(),
            base_samples: 128,
            seeds_per_point: 30,
            outputs: vec![
                SobolOutput::ExcessVariance,
                SobolOutput::Skewness,
                SobolOutput::Kurtosis,
            ],
            design_seed: 0,
        }
    }
}

/// The nine explored model parameters and their ranges.
pub fn default_parameters() -> Vec<SobolParameter> {
    vec![
        SobolParameter::new("sigma_eps", 0.0001, 2.0),
        SobolParameter::new("ema_weight", 0.1, 0.9),
        SobolParameter::new("lambda", 0.01, 0.3),
        SobolParameter::new("xi", 0.01, 0.3),
        SobolParameter::new("beta", 0.1, 0.9),
        SobolParameter::new("sigma_eta", 0.1, 2.0),
        SobolParameter::new("sigma_nu", 0.1, 2.0),
        SobolParameter::new("density", 0.05, 0.2),
        SobolParameter::new("p_rewire", 0.0, 0.1),
    ]
}

impl SobolSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        check_design(&self.parameters, self.base_samples)?;
        if self.seeds_per_point == 0 {
            return Err(ExperimentError::NoSeeds);
        }
        if self.outputs.is_empty() {
            return Err(ExperimentError::Invalid("no outputs selected".into()));
        }
        Ok(())
    }
}

fn check_design(parameters: &[SobolParameter], n: usize) -> Result<(), ExperimentError> {
    if parameters.is_empty() {
        return Err(ExperimentError::Invalid("no parameters to vary".into()));
    }
    for p in parameters {
        if !(p.lo.is_finite() && p.hi.is_finite() && p.lo < p.hi) {
            return Err(ExperimentError::Invalid(format!(
                "range of {} is empty: [{}, {}]",
                p.name, p.lo, p.hi
            )));
        }
    }
    if n == 0 || !n.is_power_of_two() {
        return Err(ExperimentError::Invalid(format!(
            "base sample size {n} is not a power of two"
        )));
    }
    if n > 1 << 16 {
        return Err(ExperimentError::Invalid(format!(
            "base sample size {n} exceeds 65536"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolIndices {
    pub output: String,
    pub parameters: Vec<String>,
    pub first_order: Vec<f64>,
    pub total_order: Vec<f64>,
}

impl SobolIndices {
    /// Parameter names sorted by decreasing total-order index.
    pub fn ranked_by_total(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.parameters.len()).collect();
        idx.sort_by(|&a, &b| self.total_order[b].total_cmp(&self.total_order[a]));
        idx.iter().map(|&i| self.parameters[i].as_str()).collect()
    }
}

/// `A` and `B` matrices scaled to the parameter ranges.
pub fn saltelli_matrices(
    parameters: &[SobolParameter],
    n: usize,
    design_seed: u32,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let k = parameters.len();
    let point = |row: usize, offset: usize| -> Vec<f64> {
        parameters
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let u = sobol_burley::sample(row as u32, (offset + j) as u32, design_seed) as f64;
                p.lo + u * (p.hi - p.lo)
            })
            .collect()
    };
    let a = (0..n).map(|r| point(r, 0)).collect();
    let b = (0..n).map(|r| point(r, k)).collect();
    (a, b)
}

/// Estimates first- and total-order indices of every output of `model`.
/// `model` maps a parameter vector to `output_names.len()` values.
pub fn sobol_indices<F>(
    parameters: &[SobolParameter],
    n: usize,
    design_seed: u32,
    output_names: &[&str],
    model: F,
) -> Result<Vec<SobolIndices>, ExperimentError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ExperimentError> + Sync,
{
    check_design(parameters, n)?;
    let k = parameters.len();
    let (a, b) = saltelli_matrices(parameters, n, design_seed);

    // rows: A, B, then AB_0 .. AB_{k-1}
    let mut points = Vec::with_capacity(n * (k + 2));
    points.extend(a.iter().cloned());
    points.extend(b.iter().cloned());
    for i in 0..k {
        for r in 0..n {
            let mut row = a[r].clone();
            row[i] = b[r][i];
            points.push(row);
        }
    }

    let values: Vec<Vec<f64>> = points
        .par_iter()
        .map(|x| {
            let y = model(x)?;
            if let Some(o) = y.iter().position(|v| !v.is_finite()) {
                return Err(ExperimentError::NonFinite {
                    output: output_names.get(o).unwrap_or(&"?").to_string(),
                    point: parameters
                        .iter()
                        .zip(x)
                        .map(|(p, v)| (p.name.clone(), *v))
                        .collect(),
                });
            }
            if y.len() != output_names.len() {
                return Err(ExperimentError::Invalid(format!(
                    "model returned {} outputs, expected {}",
                    y.len(),
                    output_names.len()
                )));
            }
            Ok(y)
        })
        .collect::<Result<_, _>>()?;

    let names: Vec<String> = parameters.iter().map(|p| p.name.clone()).collect();
    Ok(output_names
        .iter()
        .enumerate()
        .map(|(o, name)| {
            let col = |row: usize| values[row][o];
            let fa: Vec<f64> = (0..n).map(col).collect();
            let fb: Vec<f64> = (n..2 * n).map(col).collect();
            let all: Vec<f64> = fa.iter().chain(&fb).copied().collect();
            let var = crate::stats::variance(&all);
            let mut first = vec![0.0; k];
            let mut total = vec![0.0; k];
            if var > 0.0 {
                for i in 0..k {
                    let fab: Vec<f64> = ((2 + i) * n..(3 + i) * n).map(col).collect();
                    let mut s1 = 0.0;
                    let mut st = 0.0;
                    for r in 0..n {
                        s1 += fb[r] * (fab[r] - fa[r]);
                        st += (fa[r] - fab[r]).powi(2);
                    }
                    first[i] = s1 / n as f64 / var;
                    total[i] = st / (2.0 * n as f64) / var;
                }
            }
            SobolIndices {
                output: name.to_string(),
                parameters: names.clone(),
                first_order: first,
                total_order: total,
            }
        })
        .collect())
}

/// Sets one named model or small-world parameter.
pub fn apply_parameter(
    params: &mut ModelParams,
    topology: &mut TopologyConfig,
    name: &str,
    value: f64,
) -> Result<(), ExperimentError> {
    match name {
        "sigma_eps" => params.sigma_eps = value,
        "ema_weight" => params.ema_weight = value,
        "lambda" => params.lambda = value,
        "xi" => params.xi = value,
        "beta" => params.beta = value,
        "sigma_eta" => params.sigma_eta = value,
        "sigma_nu" => params.sigma_nu = value,
        "risk_aversion" => params.risk_aversion = value,
        "density" | "p_rewire" => match &mut topology.variant {
            Topology::SmallWorld { density, p_rewire } => {
                if name == "density" {
                    *density = value
                } else {
                    *p_rewire = value
                }
            }
            _ => {
                return Err(ExperimentError::Invalid(format!(
                    "{name} only applies to the small-world topology"
                )))
            }
        },
        other => {
            return Err(ExperimentError::Invalid(format!(
                "unknown sensitivity parameter {other}"
            )))
        }
    }
    Ok(())
}

/// Seed-averaged outputs of the full model at one parameter point.
pub fn model_outputs(
    base: &ModelParams,
    topology: &TopologyConfig,
    parameters: &[SobolParameter],
    point: &[f64],
    outputs: &[SobolOutput],
    seeds: &[u64],
    burn_in: usize,
) -> Result<Vec<f64>, ExperimentError> {
    let mut params = base.clone();
    let mut topo = *topology;
    for (p, &v) in parameters.iter().zip(point) {
        apply_parameter(&mut params, &mut topo, &p.name, v)?;
    }
    let spec = NetworkSpec::Generate(topo);
    let mut acc = vec![0.0; outputs.len()];
    for &seed in seeds {
        let net = spec.for_seed(&params, seed)?;
        let path = run_simulation(&params, &net, seed)?;
        let m = moments(&post_burn_in_returns(&path, burn_in)?)?;
        for (slot, out) in acc.iter_mut().zip(outputs) {
            *slot += match out {
                SobolOutput::ExcessVariance => excess_price_variance(&path, burn_in),
                SobolOutput::Skewness => m.skewness,
                SobolOutput::Kurtosis => m.kurtosis,
            };
        }
    }
    Ok(acc.iter().map(|v| v / seeds.len() as f64).collect())
}

/// Sensitivity of the model outputs, with one shared seed list for every
/// parameter point.
pub fn model_sensitivity(
    base: &ModelParams,
    topology: &TopologyConfig,
    spec: &SobolSpec,
    seeds: &[u64],
    burn_in: usize,
) -> Result<Vec<SobolIndices>, ExperimentError> {
    spec.validate()?;
    if seeds.len() < spec.seeds_per_point {
        return Err(ExperimentError::Invalid(format!(
            "{} seeds per point requested but only {} given",
            spec.seeds_per_point,
            seeds.len()
        )));
    }
    let seeds = &seeds[..spec.seeds_per_point];
    let names: Vec<&str> = spec.outputs.iter().map(|o| o.name()).collect();
    sobol_indices(
        &spec.parameters,
        spec.base_samples,
        spec.design_seed,
        &names,
        |x| {
            model_outputs(
                base,
                topology,
                &spec.parameters,
                x,
                &spec.outputs,
                seeds,
                burn_in,
            )
        },
    )
}

/// Ishigami function, a standard sensitivity benchmark on `[-pi, pi]^3`.
pub fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
    x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cube(k: usize, lo: f64, hi: f64) -> Vec<SobolParameter> {
        (0..k)
            .map(|i| SobolParameter::new(&format!("x{i}"), lo, hi))
            .collect()
    }

    fn ishigami_analytic(a: f64, b: f64) -> [f64; 3] {
        let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
        let v2 = a * a / 8.0;
        let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
        let v = v1 + v2 + v13;
        [v1 / v, v2 / v, 0.0]
    }

    #[test]
    fn ishigami_indices() {
        let expected = ishigami_analytic(7.0, 0.1);
        assert!((expected[0] - 0.3139).abs() < 1e-3);
        assert!((expected[1] - 0.4424).abs() < 1e-3);
        let res = sobol_indices(&cube(3, -PI, PI), 1024, 0, &["y"], |x| {
            Ok(vec![ishigami(x, 7.0, 0.1)])
        })
        .unwrap();
        for (i, want) in expected.iter().enumerate() {
            assert!(
                (res[0].first_order[i] - want).abs() < 0.05,
                "S{} = {}",
                i + 1,
                res[0].first_order[i]
            );
        }
    }

    #[test]
    fn additive_function_splits_evenly() {
        let res = sobol_indices(&cube(4, 0.0, 1.0), 1024, 3, &["y"], |x| {
            Ok(vec![x.iter().sum()])
        })
        .unwrap();
        for i in 0..4 {
            assert!((res[0].first_order[i] - 0.25).abs() < 0.02);
            assert!((res[0].total_order[i] - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn constant_function_has_zero_indices() {
        let res = sobol_indices(&cube(3, 0.0, 1.0), 64, 0, &["y"], |_| Ok(vec![2.5])).unwrap();
        assert!(res[0].first_order.iter().all(|v| *v == 0.0));
        assert!(res[0].total_order.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_designs() {
        let f = |_: &[f64]| Ok(vec![0.0]);
        assert!(sobol_indices(&cube(2, 0.0, 1.0), 100, 0, &["y"], f).is_err());
        assert!(sobol_indices(&cube(2, 1.0, 1.0), 64, 0, &["y"], f).is_err());
    }

    #[test]
    fn reports_non_finite_outputs() {
        let err = sobol_indices(&cube(2, 0.0, 1.0), 8, 0, &["y"], |x| {
            Ok(vec![if x[0] > 0.5 { f64::NAN } else { 0.0 }])
        })
        .unwrap_err();
        match err {
            ExperimentError::NonFinite { output, point } => {
                assert_eq!(output, "y");
                assert!(point[0].1 > 0.5);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_parameter_is_an_error() {
        let mut p = ModelParams::default();
        let mut t = TopologyConfig::small_world();
        assert!(apply_parameter(&mut p, &mut t, "bogus", 1.0).is_err());
        apply_parameter(&mut p, &mut t, "density", 0.2).unwrap();
        assert!(matches!(t.variant, Topology::SmallWorld { density, .. } if density == 0.2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn weighted_additive_bounds(w in proptest::collection::vec(0.1f64..3.0, 2..5)) {
            let k = w.len();
            let res = sobol_indices(&cube(k, 0.0, 1.0), 512, 1, &["y"], |x| {
                Ok(vec![x.iter().zip(&w).map(|(a, b)| a * b).sum()])
            }).unwrap();
            let s = &res[0];
            prop_assert!(s.first_order.iter().sum::<f64>() <= 1.05);
            for i in 0..k {
                prop_assert!(s.total_order[i] >= s.first_order[i] - 0.02);
            }
        }
    }
}
