//! Command-line front end. Every subcommand reads an optional TOML config,
//! runs one experiment and writes CSV, SVG and a manifest into the output
//! directory.

use crate::experiments::abc::{simulate_prior, PosteriorEstimator, RejectionAbc};
use crate::experiments::irf::{run_irf, IrfConfig, ShockTarget};
use crate::experiments::sobol::model_sensitivity;
use crate::experiments::variants::{degroot_prices, no_learning_prices, shock_paths};
use crate::experiments::{monte_carlo, scenario_suite, ExperimentError, NetworkSpec};
use crate::io::config::{load_config, ConfigError, RunConfig};
use crate::io::data::{ingest_series, DataError};
use crate::io::emit::{fmt_num, EmitError, OutputDir};
use crate::io::svg::{bar_chart, histogram, line_chart, scatter_chart, Series};
use crate::market::{run_simulation, SimError};
use crate::network::{NetworkError, SocialNetwork};
use crate::stats::{
    agent_summaries, moments, post_burn_in_returns, qq_points, returns_series, standardize,
    StatsError, DEFAULT_QQ_LEVELS,
};
use crate::AgentCategory;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "netmarket", version, about = "Networked market simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo runs of the configured topology.
    Simulate(Common),
    /// The four topology scenarios side by side.
    Scenarios(Common),
    /// Frozen-weight impulse responses to information and misinformation shocks.
    Irf(Common),
    /// Sobol sensitivity of excess variance, skewness and kurtosis.
    Sobol(Common),
    /// Rejection-ABC calibration of the two shock scales.
    Calibrate(Common),
    /// No-learning and DeGroot benchmarks against the full model.
    Variants(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds: a count `N` (0..N), a range `A..B`, or a list `1,2,3`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid --seeds {0:?}: expected N, A..B or a comma-separated list")]
    Seeds(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Seeds(_) | CliError::Read(..) => EXIT_CONFIG,
            CliError::Sim(e) | CliError::Experiment(ExperimentError::Sim(e))
                if matches!(e, SimError::Params(_) | SimError::SizeMismatch { .. }) =>
            {
                EXIT_CONFIG
            }
            CliError::Data(DataError::Io { .. })
            | CliError::Data(DataError::Row { .. })
            | CliError::Data(DataError::TooFew { .. }) => EXIT_CONFIG,
            CliError::Network(NetworkError::Parse { .. }) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Seeds(spec.to_string());
    let spec = spec.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        (a..b).collect()
    } else if spec.contains(',') {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    } else {
        let n: u64 = spec.parse().map_err(|_| bad())?;
        (0..n).collect()
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Config with command-line overrides applied and revalidated.
pub fn resolve_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &common.seeds {
        cfg.run.seeds = parse_seeds(s)?;
    }
    if let Some(out) = &common.out {
        cfg.run.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn num(x: f64) -> String {
    fmt_num(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn load_network(cfg: &RunConfig) -> Result<Option<SocialNetwork>, CliError> {
    match &cfg.topology.network_file {
        None => Ok(None),
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Read(path.clone(), e))?;
            Ok(Some(SocialNetwork::from_edge_list(&text)?))
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Scenarios(c) => ("scenarios", c),
        Command::Irf(c) => ("irf", c),
        Command::Sobol(c) => ("sobol", c),
        Command::Calibrate(c) => ("calibrate", c),
        Command::Variants(c) => ("variants", c),
    };
    let cfg = resolve_config(common)?;
    let fixed = load_network(&cfg)?;
    let network = match &fixed {
        Some(net) => NetworkSpec::Fixed(net),
        None => NetworkSpec::Generate(cfg.topology.to_config()),
    };
    let mut out = OutputDir::create(&cfg.run.out)?;
    match cli.command {
        Command::Simulate(_) => simulate(&cfg, network, &mut out)?,
        Command::Scenarios(_) => scenarios(&cfg, &mut out)?,
        Command::Irf(_) => irf(&cfg, network, &mut out)?,
        Command::Sobol(_) => sobol(&cfg, &mut out)?,
        Command::Calibrate(_) => calibrate(&cfg, &mut out)?,
        Command::Variants(_) => variants(&cfg, network, &mut out)?,
    }
    out.write("config.toml", cfg.to_toml().as_bytes())?;
    out.finish(name, &cfg.to_toml())?;
    Ok(())
}

fn simulate(
    cfg: &RunConfig,
    network: NetworkSpec<'_>,
    out: &mut OutputDir,
) -> Result<(), CliError> {
    let p = &cfg.model;
    let burn = cfg.run.burn_in;
    let seeds = &cfg.run.seeds;
    let res = monte_carlo(p, network, seeds, burn)?;

    let mut rows = vec![vec![
        "pooled".to_string(),
        num(res.pooled.mean),
        num(res.pooled.std),
        num(res.pooled.skewness),
        num(res.pooled.kurtosis),
        res.pooled.n_obs.to_string(),
        num(res.excess_variance.mean),
        opt(res.profit_informed.map(|m| m.mean)),
        opt(res.profit_misinformed.map(|m| m.mean)),
        opt(res.profit_uninformed.map(|m| m.mean)),
    ]];
    for s in &res.per_seed {
        rows.push(vec![
            s.seed.to_string(),
            num(s.moments.mean),
            num(s.moments.std),
            num(s.moments.skewness),
            num(s.moments.kurtosis),
            s.moments.n_obs.to_string(),
            num(s.excess_variance),
            opt(s.profit_informed),
            opt(s.profit_misinformed),
            opt(s.profit_uninformed),
        ]);
    }
    out.write_csv(
        "moments.csv",
        &[
            "seed",
            "mean",
            "std",
            "skewness",
            "kurtosis",
            "n_obs",
            "excess_variance",
            "profit_informed",
            "profit_misinformed",
            "profit_uninformed",
        ],
        rows,
    )?;

    // first seed in detail
    let seed = seeds[0];
    let net = network.for_seed(p, seed)?;
    out.write("network.edges", net.to_edge_list().as_bytes())?;
    let path = run_simulation(p, &net, seed)?;
    out.write_csv(
        "path.csv",
        &[
            "t",
            "theta",
            "gamma",
            "dividend",
            "price",
            "payoff",
            "mean_belief_uninformed",
        ],
        (0..path.len()).map(|t| {
            vec![
                t.to_string(),
                num(path.theta[t]),
                num(path.gamma[t]),
                num(path.dividend[t]),
                num(path.price[t]),
                num(path.payoff[t]),
                num(path.mean_belief_uninformed[t]),
            ]
        }),
    )?;
    let sums = agent_summaries(&path, burn);
    out.write_csv(
        "agents.csv",
        &["agent", "category", "cum_profit", "mean_abs_forecast_error"],
        sums.iter().map(|s| {
            vec![
                s.agent.to_string(),
                s.category.name().to_string(),
                num(s.cum_profit),
                num(s.mean_abs_forecast_error),
            ]
        }),
    )?;

    let mut pooled = Vec::new();
    for &s in seeds {
        let net = network.for_seed(p, s)?;
        let path = run_simulation(p, &net, s)?;
        pooled.extend(standardize(&post_burn_in_returns(&path, burn)?));
    }
    let qq = qq_points(&pooled, DEFAULT_QQ_LEVELS)?;
    out.write_csv(
        "qq.csv",
        &["theoretical", "empirical"],
        qq.iter().map(|(a, b)| vec![num(*a), num(*b)]),
    )?;

    out.write(
        "price.svg",
        line_chart(
            &format!("Price path, seed {seed}"),
            "t",
            "price",
            &[Series {
                name: "price",
                points: path
                    .price
                    .iter()
                    .enumerate()
                    .map(|(t, p)| (t as f64, *p))
                    .collect(),
            }],
        )
        .as_bytes(),
    )?;
    out.write(
        "returns_hist.svg",
        histogram("Standardized returns", "return", &pooled, 60).as_bytes(),
    )?;
    out.write(
        "qq.svg",
        scatter_chart(
            "QQ plot against fitted normal",
            "normal quantile",
            "empirical quantile",
            &[Series {
                name: "returns",
                points: qq,
            }],
            true,
        )
        .as_bytes(),
    )?;
    let by_cat: Vec<Series<'_>> = AgentCategory::ALL
        .iter()
        .map(|&c| Series {
            name: c.name(),
            points: sums
                .iter()
                .filter(|s| s.category == c)
                .map(|s| (s.mean_abs_forecast_error, s.cum_profit))
                .collect(),
        })
        .collect();
    out.write(
        "profit_error.svg",
        scatter_chart(
            "Cumulative profit against forecast error",
            "mean absolute forecast error",
            "cumulative profit",
            &by_cat,
            false,
        )
        .as_bytes(),
    )?;
    Ok(())
}

fn scenarios(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let rows = scenario_suite(&cfg.model, &cfg.run.seeds, cfg.run.burn_in)?;
    out.write_csv(
        "scenarios.csv",
        &[
            "scenario",
            "profit_misinformed",
            "profit_misinformed_se",
            "skewness",
            "kurtosis",
        ],
        rows.iter().map(|r| {
            vec![
                r.scenario.clone(),
                num(r.profit_misinformed),
                num(r.profit_misinformed_se),
                num(r.skewness),
                num(r.kurtosis),
            ]
        }),
    )?;
    let labels: Vec<String> = rows.iter().map(|r| r.scenario.clone()).collect();
    out.write(
        "scenarios.svg",
        bar_chart(
            "Return kurtosis by topology",
            &labels,
            &[("kurtosis", rows.iter().map(|r| r.kurtosis).collect())],
        )
        .as_bytes(),
    )?;
    Ok(())
}

fn irf(cfg: &RunConfig, network: NetworkSpec<'_>, out: &mut OutputDir) -> Result<(), CliError> {
    let run_one = |target| -> Result<Vec<f64>, ExperimentError> {
        let c = IrfConfig {
            shock_target: target,
            ..cfg.irf.clone()
        };
        Ok(run_irf(&cfg.model, network, &c, &cfg.run.seeds)?.response)
    };
    let info = run_one(ShockTarget::Information)?;
    let mis = run_one(ShockTarget::Misinformation)?;
    out.write_csv(
        "irf.csv",
        &["t", "info_irf", "misinfo_irf"],
        (0..info.len()).map(|t| vec![t.to_string(), num(info[t]), num(mis[t])]),
    )?;
    let pts = |v: &[f64]| v.iter().enumerate().map(|(t, x)| (t as f64, *x)).collect();
    out.write(
        "irf.svg",
        line_chart(
            &format!("Impulse response to a shock at t = {}", cfg.irf.tau),
            "t",
            "price deviation",
            &[
                Series {
                    name: "information",
                    points: pts(&info),
                },
                Series {
                    name: "misinformation",
                    points: pts(&mis),
                },
            ],
        )
        .as_bytes(),
    )?;
    Ok(())
}

fn sobol(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let topo = cfg.topology.to_config();
    let res = model_sensitivity(
        &cfg.model,
        &topo,
        &cfg.sobol,
        &cfg.run.seeds,
        cfg.run.burn_in,
    )?;
    let mut rows = Vec::new();
    for idx in &res {
        for (i, name) in idx.parameters.iter().enumerate() {
            rows.push(vec![
                idx.output.clone(),
                name.clone(),
                num(idx.first_order[i]),
                num(idx.total_order[i]),
            ]);
        }
    }
    out.write_csv(
        "sobol.csv",
        &["output", "parameter", "first_order", "total_order"],
        rows,
    )?;
    for idx in &res {
        out.write(
            &format!("sobol_{}.svg", idx.output),
            bar_chart(
                &format!("Sobol indices: {}", idx.output),
                &idx.parameters,
                &[
                    ("first order", idx.first_order.clone()),
                    ("total order", idx.total_order.clone()),
                ],
            )
            .as_bytes(),
        )?;
    }
    Ok(())
}

fn calibrate(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let target = match &cfg.calibrate.data {
        Some(path) => ingest_series(path, cfg.calibrate.data_kind)?.target()?,
        None => cfg.calibrate.target,
    };
    let topo = cfg.topology.to_config();
    let abc = cfg.calibrate.abc();
    let sims = simulate_prior(&cfg.model, &topo, &abc, &cfg.run.seeds, cfg.run.burn_in)?;
    let post = RejectionAbc {
        accept_q: abc.accept_q,
    }
    .estimate(&sims, target)?;
    out.write_csv(
        "abc_draws.csv",
        &["sigma_eta", "sigma_nu", "skewness", "kurtosis"],
        sims.draws
            .iter()
            .zip(&sims.moments)
            .map(|(d, m)| vec![num(d[0]), num(d[1]), num(m[0]), num(m[1])]),
    )?;
    out.write_csv(
        "abc_accepted.csv",
        &["sigma_eta", "sigma_nu", "distance"],
        post.accepted
            .iter()
            .zip(&post.distances)
            .map(|(d, dist)| vec![num(d[0]), num(d[1]), num(*dist)]),
    )?;
    out.write_csv(
        "posterior.csv",
        &[
            "parameter",
            "median",
            "mean",
            "std",
            "target_skewness",
            "target_kurtosis",
        ],
        ["sigma_eta", "sigma_nu"]
            .iter()
            .enumerate()
            .map(|(i, name)| {
                vec![
                    name.to_string(),
                    num(post.median[i]),
                    num(post.mean[i]),
                    num(post.std[i]),
                    num(target[0]),
                    num(target[1]),
                ]
            }),
    )?;
    out.write(
        "posterior.svg",
        scatter_chart(
            "Accepted draws",
            "sigma_eta",
            "sigma_nu",
            &[Series {
                name: "accepted",
                points: post.accepted.iter().map(|d| (d[0], d[1])).collect(),
            }],
            false,
        )
        .as_bytes(),
    )?;
    Ok(())
}

fn variants(
    cfg: &RunConfig,
    network: NetworkSpec<'_>,
    out: &mut OutputDir,
) -> Result<(), CliError> {
    let p = &cfg.model;
    let burn = cfg.run.burn_in;
    let mut no_learning = Vec::new();
    let mut degroot = Vec::new();
    for &s in &cfg.run.seeds {
        let (theta, gamma) = shock_paths(p, s);
        no_learning.extend(returns_series(
            &no_learning_prices(p, &theta, &gamma)[burn..],
        )?);
        degroot.extend(returns_series(&degroot_prices(p, &theta, &gamma)[burn..])?);
    }
    let full = monte_carlo(p, network, &cfg.run.seeds, burn)?.pooled;
    let rows = [
        ("no_learning", moments(&no_learning)?),
        ("degroot", moments(&degroot)?),
        ("full", full),
    ];
    out.write_csv(
        "variants.csv",
        &["variant", "std", "skewness", "kurtosis", "n_obs"],
        rows.iter().map(|(n, m)| {
            vec![
                n.to_string(),
                num(m.std),
                num(m.skewness),
                num(m.kurtosis),
                m.n_obs.to_string(),
            ]
        }),
    )?;
    out.write(
        "variants.svg",
        bar_chart(
            "Return kurtosis by model variant",
            &rows.iter().map(|(n, _)| n.to_string()).collect::<Vec<_>>(),
            &[("kurtosis", rows.iter().map(|(_, m)| m.kurtosis).collect())],
        )
        .as_bytes(),
    )?;
    Ok(())
}

/// Parses arguments, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
