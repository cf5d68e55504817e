//! Configuration files, empirical data ingestion and result files.

pub mod config;
pub mod data;
pub mod emit;
pub mod svg;

pub use config::{load_config, save_config, ConfigError, RunConfig};
pub use data::{ingest_series, EmpiricalSeries, SeriesKind};
pub use emit::{fmt_num, sha256_hex, Manifest, OutputDir};
