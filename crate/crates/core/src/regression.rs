//! Simple linear regression with mean-response and new-observation intervals.
//!
//! The fitted line keeps the sufficient statistics (`n`, `x_mean`, `sxx`,
//! residual variance) needed to build intervals at any input value, so the
//! measurement-error sweep can perturb the input without refitting.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("insufficient data: need at least 3 records, got {0}")]
    InsufficientData(usize),
    #[error("singular design: growth values have zero variance")]
    SingularDesign,
    #[error("non-finite value in record {0}")]
    NonFinite(usize),
    #[error("interval level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("failed to read dataset: {0}")]
    Csv(#[from] csv::Error),
}

/// One election: weighted-average income growth and incumbent-party vote share, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectionRecord {
    pub year: i32,
    pub growth: f64,
    #[serde(rename = "vote")]
    pub vote_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectionDataset {
    records: Vec<ElectionRecord>,
}

impl ElectionDataset {
    pub fn new(records: Vec<ElectionRecord>) -> Result<Self, RegressionError> {
        if records.len() < 3 {
            return Err(RegressionError::InsufficientData(records.len()));
        }
        for (i, r) in records.iter().enumerate() {
            if !(r.growth.is_finite() && r.vote_share.is_finite()) {
                return Err(RegressionError::NonFinite(i));
            }
        }
        let first = records[0].growth;
        if records.iter().all(|r| r.growth == first) {
            return Err(RegressionError::SingularDesign);
        }
        Ok(Self { records })
    }

    /// Reads a `year,growth,vote` CSV.
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self, RegressionError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let records = rdr.deserialize().collect::<Result<Vec<ElectionRecord>, _>>()?;
        Self::new(records)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, RegressionError> {
        let rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let records = rdr.into_deserialize().collect::<Result<Vec<ElectionRecord>, _>>()?;
        Self::new(records)
    }

    pub fn records(&self) -> &[ElectionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedLine {
    pub intercept: f64,
    pub slope: f64,
    /// Residual sum of squares over `n - 2`.
    pub sigma2: f64,
    pub n: usize,
    pub x_mean: f64,
    /// Sum of squared deviations of x from its mean.
    pub sxx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalKind {
    MeanResponse,
    NewObservation,
}

impl IntervalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IntervalKind::MeanResponse => "mean-response",
            IntervalKind::NewObservation => "new-observation",
        }
    }
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A two-sided interval around a point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub center: f64,
}

impl Interval {
    /// Builds an interval from explicit bounds; the center is the midpoint.
    pub fn from_bounds(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            level: f64::NAN,
            center: 0.5 * (lower + upper),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width()
    }
}

pub fn fit_simple_ols(data: &ElectionDataset) -> Result<FittedLine, RegressionError> {
    let recs = data.records();
    let n = recs.len();
    if n < 3 {
        return Err(RegressionError::InsufficientData(n));
    }
    let nf = n as f64;
    let x_mean = recs.iter().map(|r| r.growth).sum::<f64>() / nf;
    let y_mean = recs.iter().map(|r| r.vote_share).sum::<f64>() / nf;
    let (sxx, sxy) = recs.iter().fold((0.0, 0.0), |(sxx, sxy), r| {
        let dx = r.growth - x_mean;
        (sxx + dx * dx, sxy + dx * (r.vote_share - y_mean))
    });
    if !(sxx > 0.0) {
        return Err(RegressionError::SingularDesign);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = recs
        .iter()
        .map(|r| {
            let e = r.vote_share - intercept - slope * r.growth;
            e * e
        })
        .sum();
    Ok(FittedLine {
        intercept,
        slope,
        sigma2: rss / (nf - 2.0),
        n,
        x_mean,
        sxx,
    })
}

/// Two-sided Student-t quantile: returns `q` with `P(|T| <= q) = level`.
pub fn t_quantile(level: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df must be positive");
    dist.inverse_cdf(0.5 + 0.5 * level)
}

impl FittedLine {
    pub fn predict(&self, x0: f64) -> f64 {
        self.intercept + self.slope * x0
    }

    pub fn degrees_of_freedom(&self) -> f64 {
        self.n as f64 - 2.0
    }

    fn standard_error(&self, x0: f64, kind: IntervalKind) -> f64 {
        let delta = match kind {
            IntervalKind::MeanResponse => 0.0,
            IntervalKind::NewObservation => 1.0,
        };
        let dx = x0 - self.x_mean;
        (self.sigma2 * (delta + 1.0 / self.n as f64 + dx * dx / self.sxx)).sqrt()
    }
}

pub fn predict_interval(
    fit: &FittedLine,
    x0: f64,
    level: f64,
    kind: IntervalKind,
) -> Result<Interval, RegressionError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(RegressionError::InvalidLevel(level));
    }
    let q = t_quantile(level, fit.degrees_of_freedom());
    Ok(interval_with_quantile(fit, x0, level, q, kind))
}

/// Same as [`predict_interval`] with a precomputed quantile, for sweeps.
pub(crate) fn interval_with_quantile(
    fit: &FittedLine,
    x0: f64,
    level: f64,
    q: f64,
    kind: IntervalKind,
) -> Interval {
    let center = fit.predict(x0);
    let half = q * fit.standard_error(x0, kind);
    Interval {
        lower: center - half,
        upper: center + half,
        level,
        center,
    }
}
