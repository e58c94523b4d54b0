//! Knob sweeps, change-point brackets, plausible-region summaries and
//! expected CID under a knob distribution.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{
    decide_election, decide_intervention, decision_indicator, Decision, DecisionError, ThresholdRule,
    ELECTION_BOUNDARY,
};
use crate::imputation::{
    impute_theta, CategoricalDistribution, ImputationConfig, ImputationError, LeadPopulation, MnarMechanism,
};
use crate::metrics::{cid_general, cid_lead, interval_overlap, worst_case_theta, CostParams, MetricError};
use crate::regression::{interval_with_quantile, t_quantile, FittedLine, Interval, IntervalKind, RegressionError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid knob distribution: {0}")]
    InvalidDistribution(String),
    #[error("support point {0} is farther than half a step from every grid point")]
    SupportOffGrid(f64),
    #[error("invalid plausible region: lower {0} must be below upper {1}")]
    InvalidRegion(f64, f64),
    #[error("regression: {0}")]
    Regression(#[from] RegressionError),
    #[error("imputation: {0}")]
    Imputation(#[from] ImputationError),
    #[error("metric: {0}")]
    Metric(#[from] MetricError),
    #[error("decision: {0}")]
    Decision(#[from] DecisionError),
}

/// Evenly spaced knob values laid out symmetrically around the reference `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnobGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    pub t0: f64,
}

impl KnobGrid {
    pub const ELECTION_STEP: f64 = 0.02;
    pub const LEAD_STEP: f64 = 0.05;

    pub fn new(t_min: f64, t_max: f64, step: f64, t0: f64) -> Result<Self, SweepError> {
        let g = Self { t_min, t_max, step, t0 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if ![self.t_min, self.t_max, self.step, self.t0].iter().all(|v| v.is_finite()) {
            return Err(SweepError::InvalidGrid("values must be finite".into()));
        }
        if !(self.step > 0.0) {
            return Err(SweepError::InvalidGrid(format!("step must be positive, got {}", self.step)));
        }
        if !(self.t_min <= self.t0 && self.t0 <= self.t_max) {
            return Err(SweepError::InvalidGrid(format!(
                "reference {} must lie within [{}, {}]",
                self.t0, self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    /// Grid values `t0 + i * step`, ascending, with `t0` included exactly.
    pub fn points(&self) -> Vec<f64> {
        let (lo, hi) = self.index_range();
        (lo..=hi)
            .map(|i| {
                if i == 0 {
                    self.t0
                } else {
                    round_knob(self.t0 + i as f64 * self.step)
                }
            })
            .collect()
    }

    /// Position of `t0` within [`KnobGrid::points`].
    pub fn reference_index(&self) -> usize {
        (-self.index_range().0) as usize
    }

    fn index_range(&self) -> (i64, i64) {
        const SLACK: f64 = 1e-9;
        let lo = ((self.t_min - self.t0) / self.step - SLACK).ceil() as i64;
        let hi = ((self.t_max - self.t0) / self.step + SLACK).floor() as i64;
        (lo.min(0), hi.max(0))
    }

    /// Same bounds with a different step.
    pub fn with_step(&self, step: f64) -> Result<Self, SweepError> {
        Self::new(self.t_min, self.t_max, step, self.t0)
    }
}

/// Drops accumulated binary noise so grid values print cleanly.
fn round_knob(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// `D_t (1 + J_t)`, maximum 2.
    IntervalOverlap,
    /// Cost-scaled, maximum 1.
    Cost,
}

impl MetricKind {
    pub fn maximum(self) -> f64 {
        match self {
            MetricKind::IntervalOverlap => 2.0,
            MetricKind::Cost => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub estimate: f64,
    pub interval: Option<Interval>,
    pub decision: Decision,
    pub d_t: u8,
    pub j_t: Option<f64>,
    pub cid: f64,
    /// Completed-data level frequencies (lead sweeps only).
    pub frequencies: Option<CategoricalDistribution>,
}

/// Grid-adjacent pair whose decisions differ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub t_low: f64,
    pub t_high: f64,
    pub from: Decision,
    pub to: Decision,
}

impl ChangePoint {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_low + self.t_high)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.t_low <= t && t <= self.t_high
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CidCurve {
    pub grid: KnobGrid,
    pub metric: MetricKind,
    /// Interval kind used by regression sweeps.
    pub interval_kind: Option<IntervalKind>,
    pub reference_decision: Decision,
    pub points: Vec<CurvePoint>,
    pub change_points: Vec<ChangePoint>,
}

impl CidCurve {
    fn assemble(
        grid: KnobGrid,
        metric: MetricKind,
        interval_kind: Option<IntervalKind>,
        points: Vec<CurvePoint>,
    ) -> Self {
        let reference_decision = points[grid.reference_index()].decision;
        let change_points = points
            .windows(2)
            .filter(|w| w[0].decision != w[1].decision)
            .map(|w| ChangePoint {
                t_low: w[0].t,
                t_high: w[1].t,
                from: w[0].decision,
                to: w[1].decision,
            })
            .collect();
        Self {
            grid,
            metric,
            interval_kind,
            reference_decision,
            points,
            change_points,
        }
    }

    pub fn reference(&self) -> &CurvePoint {
        &self.points[self.grid.reference_index()]
    }

    /// Point at the grid value nearest `t`, if within half a step.
    pub fn point_near(&self, t: f64) -> Option<&CurvePoint> {
        let first = self.points.first()?.t;
        let idx = ((t - first) / self.grid.step).round();
        if idx < 0.0 || idx as usize >= self.points.len() {
            return None;
        }
        let p = &self.points[idx as usize];
        ((p.t - t).abs() <= 0.5 * self.grid.step + 1e-9).then_some(p)
    }

    /// Extent of the contiguous run around `t0` where `J_t >= level`.
    pub fn overlap_region(&self, level: f64) -> Option<(f64, f64)> {
        let r = self.grid.reference_index();
        let ok = |p: &CurvePoint| p.j_t.is_some_and(|j| j >= level);
        if !ok(&self.points[r]) {
            return None;
        }
        let mut lo = r;
        while lo > 0 && ok(&self.points[lo - 1]) {
            lo -= 1;
        }
        let mut hi = r;
        while hi + 1 < self.points.len() && ok(&self.points[hi + 1]) {
            hi += 1;
        }
        Some((self.points[lo].t, self.points[hi].t))
    }

    /// Serializes as `t,estimate,lo,hi,decision,d_t,j_t,cid`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,estimate,lo,hi,decision,d_t,j_t,cid\n");
        for p in &self.points {
            let (lo, hi) = p
                .interval
                .map(|iv| (iv.lower.to_string(), iv.upper.to_string()))
                .unwrap_or_default();
            let j = p.j_t.map(|j| j.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.t, p.estimate, lo, hi, p.decision, p.d_t, j, p.cid
            );
        }
        out
    }
}

/// Perturbs the regression input by `t` and scores each interval against the
/// unperturbed one.
pub fn sweep_election(
    fit: &FittedLine,
    x0: f64,
    grid: &KnobGrid,
    level: f64,
    kind: IntervalKind,
) -> Result<CidCurve, SweepError> {
    grid.validate()?;
    if !(level > 0.0 && level < 1.0) {
        return Err(RegressionError::InvalidLevel(level).into());
    }
    let q = t_quantile(level, fit.degrees_of_freedom());
    let ts = grid.points();
    let reference_interval = interval_with_quantile(fit, x0 + grid.t0, level, q, kind);
    let reference_decision = Decision::from(decide_election(&reference_interval, ELECTION_BOUNDARY));
    let points = ts
        .into_iter()
        .map(|t| {
            let interval = interval_with_quantile(fit, x0 + t, level, q, kind);
            let decision = Decision::from(decide_election(&interval, ELECTION_BOUNDARY));
            let d_t = decision_indicator(reference_decision, decision)?;
            let j_t = interval_overlap(&reference_interval, &interval);
            Ok(CurvePoint {
                t,
                estimate: interval.center,
                interval: Some(interval),
                decision,
                d_t,
                j_t: Some(j_t),
                cid: cid_general(d_t, j_t),
                frequencies: None,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    Ok(CidCurve::assemble(*grid, MetricKind::IntervalOverlap, Some(kind), points))
}

/// Cost parameters with the worst case derived from the population.
pub fn lead_cost_params(pop: &LeadPopulation, a: f64, b: f64, rule: &ThresholdRule) -> Result<CostParams, SweepError> {
    let theta_wc = worst_case_theta(pop.observed_high(), pop.n_observed(), pop.n_total())?;
    Ok(CostParams::new(a, b, rule.threshold(), theta_wc)?)
}

/// Multiple-imputation estimate at every knob value, scored with the cost
/// metric against the estimate at `t0`.
///
/// Grid points run in parallel. Every point reuses the same per-imputation
/// random substreams, so the output is deterministic and the estimate curve
/// is free of point-to-point Monte Carlo jitter.
pub fn sweep_lead(
    pop: &LeadPopulation,
    mech: &MnarMechanism,
    grid: &KnobGrid,
    cfg: &ImputationConfig,
    rule: &ThresholdRule,
    costs: &CostParams,
) -> Result<CidCurve, SweepError> {
    grid.validate()?;
    costs.validate()?;
    let ts = grid.points();
    let results = ts
        .par_iter()
        .map(|&t| impute_theta(pop, mech, t, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let theta_ref = results[grid.reference_index()].theta_hat;
    let reference_decision = Decision::from(decide_intervention(theta_ref, rule)?);
    let points = ts
        .into_iter()
        .zip(results)
        .map(|(t, r)| {
            let decision = Decision::from(decide_intervention(r.theta_hat, rule)?);
            let d_t = decision_indicator(reference_decision, decision)?;
            let cid = cid_lead(theta_ref, r.theta_hat, d_t, costs)?;
            Ok(CurvePoint {
                t,
                estimate: r.theta_hat,
                interval: None,
                decision,
                d_t,
                j_t: None,
                cid,
                frequencies: Some(r.completed_freqs),
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    Ok(CidCurve::assemble(*grid, MetricKind::Cost, None, points))
}

/// Discrete distribution over knob values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnobDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl KnobDistribution {
    /// Normalizes nonnegative weights to sum to one.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self, SweepError> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(SweepError::InvalidDistribution(
                "support and weights must be nonempty and of equal length".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || support.iter().any(|t| !t.is_finite()) {
            return Err(SweepError::InvalidDistribution("entries must be finite, weights nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(SweepError::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self {
            support,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn point_mass(t: f64) -> Self {
        Self {
            support: vec![t],
            weights: vec![1.0],
        }
    }

    pub fn uniform(support: Vec<f64>) -> Result<Self, SweepError> {
        let n = support.len();
        Self::new(support, vec![1.0; n])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Weighted average of the curve's CID over the distribution's support.
pub fn expected_cid(curve: &CidCurve, dist: &KnobDistribution) -> Result<f64, SweepError> {
    dist.support
        .iter()
        .zip(&dist.weights)
        .map(|(&t, &w)| {
            curve
                .point_near(t)
                .map(|p| w * p.cid)
                .ok_or(SweepError::SupportOffGrid(t))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibleRegion {
    pub lower: f64,
    pub upper: f64,
    pub rationale: String,
}

impl PlausibleRegion {
    pub fn new(lower: f64, upper: f64, rationale: impl Into<String>) -> Result<Self, SweepError> {
        if !(lower < upper) {
            return Err(SweepError::InvalidRegion(lower, upper));
        }
        Ok(Self {
            lower,
            upper,
            rationale: rationale.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSummary {
    pub region: PlausibleRegion,
    pub points_inside: usize,
    pub min_cid: Option<f64>,
    pub max_cid: Option<f64>,
    /// Brackets that intersect the region.
    pub change_points_inside: Vec<ChangePoint>,
    pub warning: Option<String>,
}

impl RegionSummary {
    pub fn has_change_point(&self) -> bool {
        !self.change_points_inside.is_empty()
    }
}

pub fn annotate_plausible_region(curve: &CidCurve, region: &PlausibleRegion) -> RegionSummary {
    let inside: Vec<&CurvePoint> = curve
        .points
        .iter()
        .filter(|p| region.lower <= p.t && p.t <= region.upper)
        .collect();
    if inside.is_empty() {
        return RegionSummary {
            region: region.clone(),
            points_inside: 0,
            min_cid: None,
            max_cid: None,
            change_points_inside: Vec::new(),
            warning: Some(format!(
                "region ({}, {}) contains no grid points",
                region.lower, region.upper
            )),
        };
    }
    let min_cid = inside.iter().map(|p| p.cid).fold(f64::INFINITY, f64::min);
    let max_cid = inside.iter().map(|p| p.cid).fold(f64::NEG_INFINITY, f64::max);
    let change_points_inside = curve
        .change_points
        .iter()
        .filter(|c| c.t_low < region.upper && c.t_high > region.lower)
        .copied()
        .collect();
    RegionSummary {
        region: region.clone(),
        points_inside: inside.len(),
        min_cid: Some(min_cid),
        max_cid: Some(max_cid),
        change_points_inside,
        warning: None,
    }
}
