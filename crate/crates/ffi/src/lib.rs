//! C ABI over the netmarket simulator.
//!
//! Objects are opaque handles created by `nm_*_new`/`nm_*` constructors and
//! released with the matching `nm_*_free`. Every fallible call returns an
//! [`NmStatus`]; on failure [`nm_last_error`] describes the problem for the
//! calling thread. Panics never cross the boundary.

use netmarket::fusion::{fuse_many, SignalVariance, SourceSignal};
use netmarket::market::{run_simulation, SimPath};
use netmarket::network::{Placement, SocialNetwork, TopologyConfig};
use netmarket::rng::{stream_rng, Stream};
use netmarket::stats::{moments, post_burn_in_returns};
use netmarket::{GaussianBelief, ModelParams};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    NetworkError = 4,
    SimulationError = 5,
    FusionError = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmTopology {
    SmallWorld = 0,
    StochasticBlock = 1,
    ScaleFreeHubsInformed = 2,
    ScaleFreeHubsMisinformed = 3,
}

/// Per-step series stored in a simulation result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmSeries {
    Theta = 0,
    Gamma = 1,
    Dividend = 2,
    Price = 3,
    Payoff = 4,
    MeanBeliefUninformed = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NmMoments {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub n_obs: u64,
}

/// Model parameters.
pub struct NmParams(ModelParams);
/// Social network with agent categories.
pub struct NmNetwork(SocialNetwork);
/// Recorded simulation path.
pub struct NmSimResult(SimPath);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("no interior nul"));
}

fn fail(status: NmStatus, msg: impl Into<String>) -> NmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> NmStatus) -> NmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == NmStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(NmStatus::Panic, "internal panic"),
    }
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn nm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// New parameter set holding the calibrated defaults.
#[no_mangle]
pub extern "C" fn nm_params_new() -> *mut NmParams {
    Box::into_raw(Box::new(NmParams(ModelParams::default())))
}

/// # Safety
/// `params` must come from `nm_params_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nm_params_free(params: *mut NmParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, NmStatus> {
    if s.is_null() {
        return Err(fail(NmStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(NmStatus::InvalidArgument, "string is not UTF-8"))
}

fn field<'a>(p: &'a mut ModelParams, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "gross_rate" => &mut p.gross_rate,
        "dividend" => &mut p.dividend,
        "risk_aversion" => &mut p.risk_aversion,
        "sigma_eps" => &mut p.sigma_eps,
        "ema_weight" => &mut p.ema_weight,
        "lambda" => &mut p.lambda,
        "xi" => &mut p.xi,
        "beta" => &mut p.beta,
        "sigma_eta" => &mut p.sigma_eta,
        "sigma_nu" => &mut p.sigma_nu,
        "endowment" => &mut p.endowment,
        _ => return None,
    })
}

/// Sets a parameter by name. `steps` and `agents` take whole numbers.
///
/// # Safety
/// `params` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nm_params_set(
    params: *mut NmParams,
    name: *const c_char,
    value: f64,
) -> NmStatus {
    guard(|| {
        let Some(p) = params.as_mut() else {
            return fail(NmStatus::NullPointer, "null params handle");
        };
        let name = match str_arg(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        match name {
            "steps" | "agents" => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return fail(
                        NmStatus::InvalidArgument,
                        format!("{name} must be a nonnegative whole number"),
                    );
                }
                if name == "steps" {
                    p.0.steps = value as usize;
                } else {
                    p.0.agents = value as usize;
                }
            }
            _ => match field(&mut p.0, name) {
                Some(slot) => *slot = value,
                None => {
                    return fail(
                        NmStatus::InvalidArgument,
                        format!("unknown parameter {name}"),
                    )
                }
            },
        }
        NmStatus::Ok
    })
}

/// Reads a parameter by name into `out`.
///
/// # Safety
/// `params` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nm_params_get(
    params: *const NmParams,
    name: *const c_char,
    out: *mut f64,
) -> NmStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return fail(NmStatus::NullPointer, "null argument");
        };
        let name = match str_arg(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let mut copy = p.0.clone();
        let v = match name {
            "steps" => copy.steps as f64,
            "agents" => copy.agents as f64,
            _ => match field(&mut copy, name) {
                Some(v) => *v,
                None => {
                    return fail(
                        NmStatus::InvalidArgument,
                        format!("unknown parameter {name}"),
                    )
                }
            },
        };
        *out = v;
        NmStatus::Ok
    })
}

/// Checks every parameter invariant.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_params_validate(params: *const NmParams) -> NmStatus {
    guard(|| {
        let Some(p) = params.as_ref() else {
            return fail(NmStatus::NullPointer, "null params handle");
        };
        match p.0.check() {
            Ok(()) => NmStatus::Ok,
            Err(e) => fail(NmStatus::InvalidParams, e.to_string()),
        }
    })
}

/// Generates a network with the standard settings of `topology`, drawing
/// from `seed`'s network and placement streams.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_network_generate(
    params: *const NmParams,
    topology: NmTopology,
    seed: u64,
    out: *mut *mut NmNetwork,
) -> NmStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return fail(NmStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        let cfg = match topology {
            NmTopology::SmallWorld => TopologyConfig::small_world(),
            NmTopology::StochasticBlock => TopologyConfig::stochastic_block(),
            NmTopology::ScaleFreeHubsInformed => {
                TopologyConfig::scale_free(Placement::HubsInformed)
            }
            NmTopology::ScaleFreeHubsMisinformed => {
                TopologyConfig::scale_free(Placement::HubsMisinformed)
            }
        };
        let p = &p.0;
        match cfg.generate(
            p.agents,
            p.lambda,
            p.xi,
            &mut stream_rng(seed, Stream::Network),
            &mut stream_rng(seed, Stream::Placement),
        ) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(NmNetwork(net)));
                NmStatus::Ok
            }
            Err(e) => fail(NmStatus::NetworkError, e.to_string()),
        }
    })
}

/// Parses a network from the edge-list text format.
///
/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_network_from_edge_list(
    text: *const c_char,
    out: *mut *mut NmNetwork,
) -> NmStatus {
    guard(|| {
        if out.is_null() {
            return fail(NmStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match SocialNetwork::from_edge_list(text) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(NmNetwork(net)));
                NmStatus::Ok
            }
            Err(e) => fail(NmStatus::NetworkError, e.to_string()),
        }
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `network` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_network_node_count(network: *const NmNetwork) -> u64 {
    network.as_ref().map_or(0, |n| n.0.len() as u64)
}

/// Number of directed observation edges, or 0 for a null handle.
///
/// # Safety
/// `network` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_network_edge_count(network: *const NmNetwork) -> u64 {
    network.as_ref().map_or(0, |n| n.0.edge_count() as u64)
}

/// # Safety
/// `network` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nm_network_free(network: *mut NmNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Runs one simulation with Gaussian shocks drawn from `seed`.
///
/// # Safety
/// `params` and `network` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_simulate(
    params: *const NmParams,
    network: *const NmNetwork,
    seed: u64,
    out: *mut *mut NmSimResult,
) -> NmStatus {
    guard(|| {
        let (Some(p), Some(n), false) = (params.as_ref(), network.as_ref(), out.is_null()) else {
            return fail(NmStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        match run_simulation(&p.0, &n.0, seed) {
            Ok(path) => {
                *out = Box::into_raw(Box::new(NmSimResult(path)));
                NmStatus::Ok
            }
            Err(netmarket::market::SimError::Params(e)) => {
                fail(NmStatus::InvalidParams, e.to_string())
            }
            Err(e) => fail(NmStatus::SimulationError, e.to_string()),
        }
    })
}

/// Number of recorded steps, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_result_len(result: *const NmSimResult) -> u64 {
    result.as_ref().map_or(0, |r| r.0.len() as u64)
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_result_agents(result: *const NmSimResult) -> u64 {
    result.as_ref().map_or(0, |r| r.0.categories.len() as u64)
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: u64) -> NmStatus {
    if (len as usize) < values.len() {
        return fail(
            NmStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        );
    }
    if buf.is_null() {
        return fail(NmStatus::NullPointer, "null buffer");
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    NmStatus::Ok
}

/// Copies one per-step series into `buf`, which must hold at least
/// `nm_result_len` values.
///
/// # Safety
/// `result` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn nm_result_series(
    result: *const NmSimResult,
    series: NmSeries,
    buf: *mut f64,
    len: u64,
) -> NmStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(NmStatus::NullPointer, "null result handle");
        };
        let p = &r.0;
        let values = match series {
            NmSeries::Theta => &p.theta,
            NmSeries::Gamma => &p.gamma,
            NmSeries::Dividend => &p.dividend,
            NmSeries::Price => &p.price,
            NmSeries::Payoff => &p.payoff,
            NmSeries::MeanBeliefUninformed => &p.mean_belief_uninformed,
        };
        copy_out(values, buf, len)
    })
}

/// Copies each agent's cumulative profit into `buf`, which must hold at
/// least `nm_result_agents` values.
///
/// # Safety
/// `result` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn nm_result_cum_profit(
    result: *const NmSimResult,
    buf: *mut f64,
    len: u64,
) -> NmStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(NmStatus::NullPointer, "null result handle");
        };
        copy_out(&r.0.cum_profit(), buf, len)
    })
}

/// Return moments after dropping the first `burn_in` prices.
///
/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_result_moments(
    result: *const NmSimResult,
    burn_in: u64,
    out: *mut NmMoments,
) -> NmStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), out.is_null()) else {
            return fail(NmStatus::NullPointer, "null argument");
        };
        let m = post_burn_in_returns(&r.0, burn_in as usize).and_then(|ret| moments(&ret));
        match m {
            Ok(m) => {
                *out = NmMoments {
                    mean: m.mean,
                    std: m.std,
                    skewness: m.skewness,
                    kurtosis: m.kurtosis,
                    n_obs: m.n_obs as u64,
                };
                NmStatus::Ok
            }
            Err(e) => fail(NmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `result` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nm_result_free(result: *mut NmSimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Fuses a Gaussian prior with `k` Gaussian signals. A signal variance of
/// `+inf` marks a signal to ignore; a zero variance is taken as certain.
///
/// # Safety
/// `means` and `variances` must be readable for `k` values (or `k` = 0) and
/// the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn nm_fuse(
    prior_mean: f64,
    prior_variance: f64,
    means: *const f64,
    variances: *const f64,
    k: u64,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> NmStatus {
    guard(|| {
        if out_mean.is_null() || out_variance.is_null() {
            return fail(NmStatus::NullPointer, "null output pointer");
        }
        if k > 0 && (means.is_null() || variances.is_null()) {
            return fail(NmStatus::NullPointer, "null signal arrays");
        }
        let k = k as usize;
        let (m, v) = if k == 0 {
            (&[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(means, k),
                std::slice::from_raw_parts(variances, k),
            )
        };
        let signals: Vec<SourceSignal> = m
            .iter()
            .zip(v)
            .map(|(&mean, &var)| SourceSignal {
                mean,
                variance: if var == f64::INFINITY {
                    SignalVariance::Unbounded
                } else {
                    SignalVariance::Finite(var)
                },
            })
            .collect();
        match fuse_many(GaussianBelief::new(prior_mean, prior_variance), &signals) {
            Ok(post) => {
                *out_mean = post.mean;
                *out_variance = post.variance;
                NmStatus::Ok
            }
            Err(e) => fail(NmStatus::FusionError, e.to_string()),
        }
    })
}
