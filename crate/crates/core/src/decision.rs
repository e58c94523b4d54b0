//! Decision rules mapping estimates to discrete policy decisions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regression::Interval;

#[derive(Debug, Error, PartialEq)]
pub enum DecisionError {
    #[error("estimate {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error("cannot compare decisions from different rule families ({0} vs {1})")]
    MixedFamilies(Decision, Decision),
    #[error("unknown decision label `{0}`")]
    UnknownLabel(String),
}

/// Ordered so that `ChallengerWins < Unclear < IncumbentWins`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElectionDecision {
    ChallengerWins,
    Unclear,
    IncumbentWins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InterventionDecision {
    DontIntervene,
    Intervene,
}

/// A decision from either rule family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Election(ElectionDecision),
    Intervention(InterventionDecision),
}

impl Decision {
    pub fn label(self) -> &'static str {
        match self {
            Decision::Election(ElectionDecision::IncumbentWins) => "incumbent",
            Decision::Election(ElectionDecision::Unclear) => "unclear",
            Decision::Election(ElectionDecision::ChallengerWins) => "challenger",
            Decision::Intervention(InterventionDecision::Intervene) => "intervene",
            Decision::Intervention(InterventionDecision::DontIntervene) => "no-intervene",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Decision {
    type Err = DecisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "incumbent" => Decision::Election(ElectionDecision::IncumbentWins),
            "unclear" => Decision::Election(ElectionDecision::Unclear),
            "challenger" => Decision::Election(ElectionDecision::ChallengerWins),
            "intervene" => Decision::Intervention(InterventionDecision::Intervene),
            "no-intervene" => Decision::Intervention(InterventionDecision::DontIntervene),
            other => return Err(DecisionError::UnknownLabel(other.to_string())),
        })
    }
}

impl From<ElectionDecision> for Decision {
    fn from(d: ElectionDecision) -> Self {
        Decision::Election(d)
    }
}

impl From<InterventionDecision> for Decision {
    fn from(d: InterventionDecision) -> Self {
        Decision::Intervention(d)
    }
}

/// Intervene when the estimated proportion is strictly above `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    threshold: f64,
}

impl ThresholdRule {
    pub const DEFAULT_THRESHOLD: f64 = 0.20;

    pub fn new(threshold: f64) -> Result<Self, DecisionError> {
        if threshold > 0.0 && threshold < 1.0 {
            Ok(Self { threshold })
        } else {
            Err(DecisionError::InvalidThreshold(threshold))
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Default for ThresholdRule {
    fn default() -> Self {
        Self {
            threshold: Self::DEFAULT_THRESHOLD,
        }
    }
}

/// Default election boundary: a 50% vote share.
pub const ELECTION_BOUNDARY: f64 = 50.0;

/// Intervals touching the boundary are `Unclear`.
pub fn decide_election(interval: &Interval, boundary: f64) -> ElectionDecision {
    if boundary < interval.lower {
        ElectionDecision::IncumbentWins
    } else if interval.upper < boundary {
        ElectionDecision::ChallengerWins
    } else {
        ElectionDecision::Unclear
    }
}

pub fn decide_intervention(
    theta_hat: f64,
    rule: &ThresholdRule,
) -> Result<InterventionDecision, DecisionError> {
    if !(0.0..=1.0).contains(&theta_hat) {
        return Err(DecisionError::OutOfDomain(theta_hat));
    }
    Ok(if theta_hat > rule.threshold {
        InterventionDecision::Intervene
    } else {
        InterventionDecision::DontIntervene
    })
}

/// `1` when the candidate decision matches the reference, `0` otherwise.
pub fn decision_indicator(reference: Decision, candidate: Decision) -> Result<u8, DecisionError> {
    match (reference, candidate) {
        (Decision::Election(a), Decision::Election(b)) => Ok(u8::from(a == b)),
        (Decision::Intervention(a), Decision::Intervention(b)) => Ok(u8::from(a == b)),
        (a, b) => Err(DecisionError::MixedFamilies(a, b)),
    }
}
