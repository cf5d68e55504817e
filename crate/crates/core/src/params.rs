//! Model constants and their validation.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of initial steps excluded from every reported statistic.
pub const DEFAULT_BURN_IN: usize = 100;

/// Scalar constants of the market model.
///
/// Defaults are the calibrated values: 1500 steps, 200 agents, daily gross
/// rate 1.0001, constant dividend 0.021, unit risk aversion and dividend
/// noise, EMA memory 0.9, 5% informed, 5% misinformed, persistence 0.5 and
/// the posterior-median shock scales 0.84 (information) and 1.36
/// (misinformation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Time steps per run.
    pub steps: usize,
    /// Number of agents.
    pub agents: usize,
    /// Gross risk-free rate per step.
    pub gross_rate: f64,
    /// Constant component of the dividend.
    pub dividend: f64,
    /// CARA coefficient.
    pub risk_aversion: f64,
    /// Std of the unobservable dividend noise.
    pub sigma_eps: f64,
    /// Weight on the newest squared error in the forecast-error EMA.
    pub ema_weight: f64,
    /// Fraction of informed agents.
    pub lambda: f64,
    /// Fraction of misinformed agents.
    pub xi: f64,
    /// AR(1) persistence of the observable dividend component.
    pub beta: f64,
    /// Std of the information shock.
    pub sigma_eta: f64,
    /// Std of the misinformation shock.
    pub sigma_nu: f64,
    /// Initial endowment. Only enters wealth reporting.
    pub endowment: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            steps: 1500,
            agents: 200,
            gross_rate: 1.0001,
            dividend: 0.021,
            risk_aversion: 1.0,
            sigma_eps: 1.0,
            ema_weight: 0.9,
            lambda: 0.05,
            xi: 0.05,
            beta: 0.5,
            sigma_eta: 0.84,
            sigma_nu: 1.36,
            endowment: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

/// Every invariant a parameter set breaks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ParamError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters:")?;
        for v in &self.violations {
            write!(f, " {}: {};", v.field, v.message)?;
        }
        Ok(())
    }
}

impl ParamError {
    pub fn fields(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.field).collect()
    }
}

impl ModelParams {
    /// Returns the parameters unchanged when every invariant holds.
    pub fn validate(self) -> Result<Self, ParamError> {
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<(), ParamError> {
        let mut violations = Vec::new();
        let mut bad = |field: &'static str, message: &str| {
            violations.push(Violation {
                field,
                message: message.to_string(),
            })
        };

        let finite = [
            ("gross_rate", self.gross_rate),
            ("dividend", self.dividend),
            ("risk_aversion", self.risk_aversion),
            ("sigma_eps", self.sigma_eps),
            ("ema_weight", self.ema_weight),
            ("lambda", self.lambda),
            ("xi", self.xi),
            ("beta", self.beta),
            ("sigma_eta", self.sigma_eta),
            ("sigma_nu", self.sigma_nu),
            ("endowment", self.endowment),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                bad(field, "must be finite");
            }
        }

        if self.steps == 0 {
            bad("steps", "must be at least 1");
        }
        if self.agents < 2 {
            bad("agents", "must be at least 2");
        }
        if !(self.gross_rate > 1.0) {
            bad("gross_rate", "must exceed 1");
        }
        if !(self.risk_aversion > 0.0) {
            bad("risk_aversion", "must be positive");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            bad("beta", "persistence must lie in (0, 1)");
        }
        if !(self.ema_weight > 0.0 && self.ema_weight < 1.0) {
            bad("ema_weight", "must lie in (0, 1)");
        }
        for (field, value) in [
            ("sigma_eps", self.sigma_eps),
            ("sigma_eta", self.sigma_eta),
            ("sigma_nu", self.sigma_nu),
        ] {
            if value < 0.0 {
                bad(field, "standard deviation must be nonnegative");
            }
        }
        if self.lambda < 0.0 {
            bad("lambda", "must be nonnegative");
        }
        if self.xi < 0.0 {
            bad("xi", "must be nonnegative");
        }
        if self.lambda + self.xi > 1.0 {
            bad("lambda", "lambda + xi exceeds 1");
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(ParamError { violations })
        }
    }

    /// Net rate r = R - 1.
    pub fn net_rate(&self) -> f64 {
        self.gross_rate - 1.0
    }

    /// Fundamental price d / r.
    pub fn fundamental_price(&self) -> f64 {
        self.dividend / self.net_rate()
    }

    pub fn derived_constants(&self) -> (f64, f64) {
        (self.net_rate(), self.fundamental_price())
    }

    /// R - beta, the discount applied to beliefs about the observable component.
    pub fn belief_discount(&self) -> f64 {
        self.gross_rate - self.beta
    }

    pub fn informed_count(&self) -> usize {
        (self.lambda * self.agents as f64).round() as usize
    }

    pub fn misinformed_count(&self) -> usize {
        (self.xi * self.agents as f64).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_defaults_are_valid() {
        let p = ModelParams::default();
        assert_eq!(p.clone().validate().unwrap(), p);
        assert_eq!(p.steps, 1500);
        assert_eq!(p.agents, 200);
        assert_eq!(p.informed_count(), 10);
        assert_eq!(p.misinformed_count(), 10);
    }

    #[test]
    fn unit_persistence_rejected() {
        let p = ModelParams {
            beta: 1.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().fields(), vec!["beta"]);
    }

    #[test]
    fn proportions_exceeding_population_rejected() {
        let p = ModelParams {
            lambda: 0.6,
            xi: 0.6,
            ..Default::default()
        };
        let err = p.validate().unwrap_err();
        assert!(err.fields().contains(&"lambda"));
    }

    #[test]
    fn every_violation_is_reported() {
        let p = ModelParams {
            gross_rate: 0.9,
            agents: 1,
            sigma_nu: -1.0,
            ema_weight: 1.0,
            risk_aversion: 0.0,
            ..Default::default()
        };
        let fields = p.validate().unwrap_err().fields();
        for f in [
            "gross_rate",
            "agents",
            "sigma_nu",
            "ema_weight",
            "risk_aversion",
        ] {
            assert!(fields.contains(&f), "missing {f}");
        }
    }

    #[test]
    fn derived_constants_calibrated() {
        let (r, p) = ModelParams::default().derived_constants();
        assert!((r - 0.0001).abs() < 1e-15);
        assert!((p - 210.0).abs() < 1e-8);
    }

    #[test]
    fn derived_constants_trivial() {
        let p = ModelParams {
            gross_rate: 2.0,
            dividend: 1.0,
            ..Default::default()
        };
        assert_eq!(p.derived_constants(), (1.0, 1.0));
        let p = ModelParams {
            gross_rate: 1.05,
            dividend: 0.0,
            ..Default::default()
        };
        assert_eq!(p.fundamental_price(), 0.0);
    }

    #[test]
    fn fundamental_price_linear_in_dividend() {
        let base = ModelParams::default();
        let doubled = ModelParams {
            dividend: 2.0 * base.dividend,
            ..base.clone()
        };
        assert!((doubled.fundamental_price() - 2.0 * base.fundamental_price()).abs() < 1e-9);
    }

    #[test]
    fn validate_is_idempotent() {
        let p = ModelParams::default();
        let once = p.clone().validate().unwrap();
        assert_eq!(once.clone().validate().unwrap(), once);
    }
}
