//! Confidence-in-decision metrics.
//!
//! Two families are provided: an interval-overlap metric gated by a
//! decision-change indicator (values in `{0} ∪ [1, 2]`), and a cost-based
//! metric for threshold decisions scaled to `[0, 1]` by the maximum
//! attainable cost.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regression::Interval;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("invalid counts: high={high}, observed={observed}, total={total}")]
    InvalidCounts { high: u64, observed: u64, total: u64 },
    #[error("invalid cost parameters: {0}")]
    InvalidCosts(String),
    #[error("estimate {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("perturbed estimate {theta_t} exceeds the worst case {theta_wc}")]
    AboveWorstCase { theta_t: f64, theta_wc: f64 },
    #[error("degenerate scaling: maximum attainable cost is zero")]
    DegenerateScaling,
}

/// Overlap of two intervals: the mean of the intersection length relative to
/// each interval's length. 1 for identical intervals, 0 for disjoint ones.
pub fn interval_overlap(first: &Interval, second: &Interval) -> f64 {
    let lo = first.lower.max(second.lower);
    let hi = first.upper.min(second.upper);
    let overlap = (hi - lo).max(0.0);
    let w1 = first.width();
    let w2 = second.width();
    if w1 <= 0.0 || w2 <= 0.0 {
        // Point intervals: only an exact match counts as overlap.
        let same = first.lower == second.lower && first.upper == second.upper;
        return if same { 1.0 } else { 0.0 };
    }
    (0.5 * (overlap / w1 + overlap / w2)).clamp(0.0, 1.0)
}

/// `d_t * (1 + j_t)`.
pub fn cid_general(d_t: u8, j_t: f64) -> f64 {
    f64::from(d_t.min(1)) * (1.0 + j_t)
}

/// Fraction above the cutoff if every unobserved unit were above it.
pub fn worst_case_theta(
    observed_high_count: u64,
    n_observed: u64,
    n_total: u64,
) -> Result<f64, MetricError> {
    if observed_high_count > n_observed || n_observed > n_total || n_total == 0 {
        return Err(MetricError::InvalidCounts {
            high: observed_high_count,
            observed: n_observed,
            total: n_total,
        });
    }
    Ok((observed_high_count + (n_total - n_observed)) as f64 / n_total as f64)
}

/// Costs per unit proportion: `a` for intervening unnecessarily, `b` for
/// missing the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub a: f64,
    pub b: f64,
    pub threshold: f64,
    pub theta_wc: f64,
}

impl CostParams {
    pub fn new(a: f64, b: f64, threshold: f64, theta_wc: f64) -> Result<Self, MetricError> {
        let p = Self {
            a,
            b,
            threshold,
            theta_wc,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        let bad = |m: &str| Err(MetricError::InvalidCosts(m.to_string()));
        if !(self.a >= 0.0 && self.b >= 0.0) || !(self.a.is_finite() && self.b.is_finite()) {
            return bad("a and b must be finite and nonnegative");
        }
        if self.a == 0.0 && self.b == 0.0 {
            return bad("a and b cannot both be zero");
        }
        if !(self.threshold < self.theta_wc && self.theta_wc <= 1.0) {
            return bad("require threshold < theta_wc <= 1");
        }
        Ok(())
    }

    /// Maximum attainable cost given the reference estimate.
    pub fn scaling(&self, theta_ref: f64) -> f64 {
        let over = (theta_ref - self.threshold) * self.a;
        let under = (self.theta_wc - theta_ref.max(self.threshold)) * self.b;
        over.max(under)
    }
}

/// Cost-based CID in `[0, 1]` for a threshold decision.
///
/// When the reference estimate is above the threshold, overestimates cost `a`
/// per unit (capped at the distance to the threshold) and underestimates cost
/// `b` per unit. Otherwise only a changed decision (`d_t = 0`) incurs cost,
/// `b` per unit above the threshold.
pub fn cid_lead(
    theta_ref: f64,
    theta_t: f64,
    d_t: u8,
    params: &CostParams,
) -> Result<f64, MetricError> {
    params.validate()?;
    for v in [theta_ref, theta_t] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricError::OutOfDomain(v));
        }
    }
    if theta_t > params.theta_wc {
        return Err(MetricError::AboveWorstCase {
            theta_t,
            theta_wc: params.theta_wc,
        });
    }
    let c = params.scaling(theta_ref);
    if !(c > 0.0) {
        return Err(MetricError::DegenerateScaling);
    }
    let thr = params.threshold;
    let cost = if theta_ref > thr {
        if theta_ref >= theta_t {
            (theta_ref - thr).min(theta_ref - theta_t) * params.a
        } else {
            (theta_t - theta_ref) * params.b
        }
    } else {
        f64::from(1 - d_t.min(1)) * (theta_t - thr) * params.b
    };
    Ok(1.0 - cost / c)
}
