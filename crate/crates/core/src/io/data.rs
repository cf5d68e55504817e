use crate::stats::{moments, MomentReport, StatsError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Minimum observations for moment targets.
pub const MIN_OBSERVATIONS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Prices,
    Returns,
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("need at least {needed} observations, found {got}")]
    TooFew { needed: usize, got: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// A user-supplied series, converted to returns.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSeries {
    /// Dates of the returns, when the file had a date column.
    pub dates: Option<Vec<String>>,
    pub returns: Vec<f64>,
    pub kind: SeriesKind,
}

impl EmpiricalSeries {
    pub fn moments(&self) -> Result<MomentReport, DataError> {
        Ok(moments(&self.returns)?)
    }

    /// `(skewness, kurtosis)` calibration target.
    pub fn target(&self) -> Result<[f64; 2], DataError> {
        let m = self.moments()?;
        Ok([m.skewness, m.kurtosis])
    }
}

/// Simple returns of a price series, without positivity checks.
pub fn simple_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

/// Parses CSV text with one value column and an optional leading date
/// column. A first row whose value does not parse is taken as a header.
pub fn parse_series(text: &str, kind: SeriesKind) -> Result<EmpiricalSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut with_dates = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| DataError::Row {
            line,
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let dated = match record.len() {
            1 => false,
            2 => true,
            n => {
                return Err(DataError::Row {
                    line,
                    message: format!("expected 1 or 2 columns, found {n}"),
                })
            }
        };
        let raw = &record[record.len() - 1];
        let value = match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ if values.is_empty() && with_dates.is_none() => {
                // header row
                with_dates = Some(dated);
                continue;
            }
            _ => {
                return Err(DataError::Row {
                    line,
                    message: format!("value {raw:?} is not a finite number"),
                })
            }
        };
        match with_dates {
            None => with_dates = Some(dated),
            Some(d) if d != dated => {
                return Err(DataError::Row {
                    line,
                    message: "inconsistent column count".into(),
                })
            }
            _ => {}
        }
        if dated {
            dates.push(record[0].to_string());
        }
        values.push(value);
    }

    let (returns, dates) = match kind {
        SeriesKind::Returns => (values, dates),
        SeriesKind::Prices => {
            if let Some(i) = values.iter().position(|p| *p <= 0.0) {
                return Err(DataError::Row {
                    line: i + 1,
                    message: "prices must be positive".into(),
                });
            }
            let d = if dates.is_empty() {
                dates
            } else {
                dates[1..].to_vec()
            };
            (simple_returns(&values), d)
        }
    };
    Ok(EmpiricalSeries {
        dates: (!dates.is_empty()).then_some(dates),
        returns,
        kind,
    })
}

/// Reads a series file and checks it is long enough for moment targets.
pub fn ingest_series(path: &Path, kind: SeriesKind) -> Result<EmpiricalSeries, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let series = parse_series(&text, kind)?;
    if series.returns.len() < MIN_OBSERVATIONS {
        return Err(DataError::TooFew {
            needed: MIN_OBSERVATIONS,
            got: series.returns.len(),
        });
    }
    Ok(series)
}
