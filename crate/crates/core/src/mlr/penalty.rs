use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prox::GroupNorm;

use super::MlrError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `η(s) = 1 − exp(−αs)`
    Exponential,
    /// `η(s) = min(1, αs)`
    CappedL1,
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyKind::Exponential => "exponential",
            PenaltyKind::CappedL1 => "capped_l1",
        })
    }
}

impl FromStr for PenaltyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exponential" | "exp" => Ok(PenaltyKind::Exponential),
            "capped_l1" | "cappedl1" | "capl1" | "cap" | "capped" => Ok(PenaltyKind::CappedL1),
            other => Err(format!("unknown penalty `{other}` (expected exponential or capped_l1)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    pub alpha: f64,
    pub lambda: f64,
    pub q: GroupNorm,
}

impl PenaltyConfig {
    pub fn new(kind: PenaltyKind, alpha: f64, lambda: f64, q: GroupNorm) -> Result<Self, MlrError> {
        let cfg = PenaltyConfig { kind, alpha, lambda, q };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MlrError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(MlrError::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(MlrError::Config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        PenaltyConfig { lambda, ..self }
    }

    /// `η_α(t)`; also defined for `t < 0`, where `−η` stays convex.
    pub fn eta(&self, t: f64) -> f64 {
        match self.kind {
            PenaltyKind::Exponential => 1.0 - (-self.alpha * t).exp(),
            PenaltyKind::CappedL1 => (self.alpha * t).min(1.0),
        }
    }

    /// The `t`-coordinate of the subgradient of `−λη`: `−λα·exp(−αt)` or
    /// `−λα` while `αt <= 1` and `0` beyond.
    pub fn slope(&self, t: f64) -> f64 {
        match self.kind {
            PenaltyKind::Exponential => -self.lambda * self.alpha * (-self.alpha * t).exp(),
            PenaltyKind::CappedL1 => {
                if self.alpha * t <= 1.0 {
                    -self.lambda * self.alpha
                } else {
                    0.0
                }
            }
        }
    }
}

/// `η_α(t)` for `t >= 0`, a value in `[0, 1]`.
pub fn penalty_value(t: f64, cfg: &PenaltyConfig) -> f64 {
    cfg.eta(t)
}
