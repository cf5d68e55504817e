use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Gaussian belief over the next value of the observable dividend component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianBelief {
    pub const fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    /// Degenerate belief: the holder treats `mean` as certain.
    pub const fn certain(mean: f64) -> Self {
        Self {
            mean,
            variance: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mean.is_finite() && self.variance.is_finite() && self.variance >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentCategory {
    Informed,
    Misinformed,
    Uninformed,
}

impl AgentCategory {
    pub const ALL: [AgentCategory; 3] = [
        AgentCategory::Informed,
        AgentCategory::Misinformed,
        AgentCategory::Uninformed,
    ];

    pub fn code(self) -> char {
        match self {
            AgentCategory::Informed => 'I',
            AgentCategory::Misinformed => 'M',
            AgentCategory::Uninformed => 'U',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentCategory::Informed => "informed",
            AgentCategory::Misinformed => "misinformed",
            AgentCategory::Uninformed => "uninformed",
        }
    }
}

impl fmt::Display for AgentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for AgentCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" => Ok(AgentCategory::Informed),
            "M" => Ok(AgentCategory::Misinformed),
            "U" => Ok(AgentCategory::Uninformed),
            other => Err(format!("unknown category code {other:?}")),
        }
    }
}
