//! Agent-based simulator of a single risky-asset market in which informed,
//! misinformed and uninformed traders exchange beliefs over a social
//! network.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod cli;
pub mod experiments;
pub mod fusion;
pub mod io;
pub mod market;
pub mod network;
pub mod params;
pub mod rng;
pub mod stats;

pub use belief::{AgentCategory, GaussianBelief};
pub use market::{run_simulation, SimPath};
pub use network::{Placement, SocialNetwork, Topology, TopologyConfig};
pub use params::ModelParams;
