//! Multiple imputation of missing categorical levels.
//!
//! Each completed dataset draws category probabilities from the Dirichlet
//! posterior of the observed counts (flat prior), tilts them on the log-odds
//! scale with an MNAR mechanism `alpha = t * w` (level 1 as baseline), and
//! fills the `N - n` missing units with one multinomial draw. Missing units are
//! exchangeable given the tilted probabilities, so the count draw has the same
//! distribution as imputing record by record.

use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::{substream, StreamPurpose};

#[derive(Debug, Error)]
pub enum ImputationError {
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("mechanism has {got} weights but the population has {expected} levels")]
    WeightLength { expected: usize, got: usize },
    #[error("baseline category empty: log-odds undefined when p_1 = 0")]
    EmptyBaseline,
    #[error("knob value must be finite, got {0}")]
    NonFiniteKnob(f64),
    #[error("number of imputations must be at least 1")]
    NoImputations,
    #[error("failed to read population: {0}")]
    Csv(#[from] csv::Error),
}

/// Observed level counts plus the population size.
///
/// Levels are numbered `1..=K`; a unit is "high" when its level exceeds
/// `cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadPopulation {
    observed_counts: Vec<u64>,
    n_total: u64,
    cutoff: usize,
}

#[derive(Debug, Deserialize)]
struct LevelRow {
    level: usize,
    count: u64,
}

impl LeadPopulation {
    pub const DEFAULT_CUTOFF: usize = 3;

    pub fn new(observed_counts: Vec<u64>, n_total: u64, cutoff: usize) -> Result<Self, ImputationError> {
        let k = observed_counts.len();
        if k < 2 {
            return Err(ImputationError::InvalidPopulation(format!("need at least 2 levels, got {k}")));
        }
        let n: u64 = observed_counts.iter().sum();
        if n > n_total {
            return Err(ImputationError::InvalidPopulation(format!(
                "observed count {n} exceeds population size {n_total}"
            )));
        }
        if n_total == 0 {
            return Err(ImputationError::InvalidPopulation("population size is zero".into()));
        }
        if cutoff == 0 || cutoff >= k {
            return Err(ImputationError::InvalidPopulation(format!(
                "cutoff {cutoff} must lie in 1..{k}"
            )));
        }
        Ok(Self {
            observed_counts,
            n_total,
            cutoff,
        })
    }

    /// Synthesizes integer counts summing exactly to `n_observed` from level
    /// probabilities, using largest-remainder apportionment.
    pub fn from_probabilities(
        probs: &[f64],
        n_observed: u64,
        n_total: u64,
        cutoff: usize,
    ) -> Result<Self, ImputationError> {
        let counts = apportion(probs, n_observed)?;
        Self::new(counts, n_total, cutoff)
    }

    /// Reads a `level,count` CSV. Levels must be `1..=K` in order.
    pub fn from_reader<R: std::io::Read>(reader: R, n_total: u64, cutoff: usize) -> Result<Self, ImputationError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let rows = rdr.deserialize().collect::<Result<Vec<LevelRow>, _>>()?;
        Self::from_rows(rows, n_total, cutoff)
    }

    pub fn from_path(path: impl AsRef<Path>, n_total: u64, cutoff: usize) -> Result<Self, ImputationError> {
        let rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let rows = rdr.into_deserialize().collect::<Result<Vec<LevelRow>, _>>()?;
        Self::from_rows(rows, n_total, cutoff)
    }

    fn from_rows(rows: Vec<LevelRow>, n_total: u64, cutoff: usize) -> Result<Self, ImputationError> {
        for (i, row) in rows.iter().enumerate() {
            if row.level != i + 1 {
                return Err(ImputationError::InvalidPopulation(format!(
                    "row {} has level {}, expected {}",
                    i + 1,
                    row.level,
                    i + 1
                )));
            }
        }
        Self::new(rows.into_iter().map(|r| r.count).collect(), n_total, cutoff)
    }

    pub fn observed_counts(&self) -> &[u64] {
        &self.observed_counts
    }

    pub fn levels(&self) -> usize {
        self.observed_counts.len()
    }

    pub fn n_observed(&self) -> u64 {
        self.observed_counts.iter().sum()
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn n_missing(&self) -> u64 {
        self.n_total - self.n_observed()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn observed_high(&self) -> u64 {
        self.observed_counts[self.cutoff..].iter().sum()
    }

    /// Fraction above the cutoff among observed units.
    pub fn observed_fraction_high(&self) -> f64 {
        self.observed_high() as f64 / self.n_observed().max(1) as f64
    }
}

fn apportion(probs: &[f64], total: u64) -> Result<Vec<u64>, ImputationError> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || !(sum > 0.0) {
        return Err(ImputationError::InvalidDistribution(
            "probabilities must be finite, nonnegative and not all zero".into(),
        ));
    }
    let quotas: Vec<f64> = probs.iter().map(|p| p / sum * total as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = quotas[i] - quotas[i].floor();
        let rj = quotas[j] - quotas[j].floor();
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// Probability vector over `K` ordered levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalDistribution {
    probs: Vec<f64>,
}

impl CategoricalDistribution {
    const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self, ImputationError> {
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ImputationError::InvalidDistribution(
                "entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(ImputationError::InvalidDistribution(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self, ImputationError> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !(sum > 0.0) {
            return Err(ImputationError::InvalidDistribution(
                "weights must be finite, nonnegative and not all zero".into(),
            ));
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / sum).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Mass on levels strictly above `cutoff` (1-based levels).
    pub fn mass_above(&self, cutoff: usize) -> f64 {
        self.probs.iter().skip(cutoff).sum()
    }

    /// Log-odds against level 1: `(0, log(p_2/p_1), ..., log(p_K/p_1))`.
    pub fn log_odds(&self) -> Result<Vec<f64>, ImputationError> {
        let base = self.probs[0];
        if !(base > 0.0) {
            return Err(ImputationError::EmptyBaseline);
        }
        Ok(self.probs.iter().map(|p| (p / base).ln()).collect())
    }
}

/// Per-level MNAR weights `w`; the tilt at knob `t` is `alpha = t * w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnarMechanism {
    pub name: String,
    pub weights: Vec<f64>,
}

impl MnarMechanism {
    pub fn new(name: impl Into<String>, weights: Vec<f64>) -> Result<Self, ImputationError> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ImputationError::InvalidDistribution("mechanism weights must be finite".into()));
        }
        Ok(Self {
            name: name.into(),
            weights,
        })
    }

    /// All-zero weights: missing at random.
    pub fn mar(levels: usize) -> Self {
        Self {
            name: "mar".into(),
            weights: vec![0.0; levels],
        }
    }

    pub fn is_mar(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    /// Looks up a built-in mechanism by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "accordion" => Some(accordion_mechanism()),
            "parametric" => Some(parametric_mechanism()),
            "mar" => Some(Self::mar(10)),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["accordion", "parametric", "mar"]
    }
}

/// Shifts the three lowest of ten levels by `t`.
pub fn accordion_mechanism() -> MnarMechanism {
    MnarMechanism {
        name: "accordion".into(),
        weights: vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    }
}

/// Graded weights over ten levels, favoring the lowest levels for `t > 0`.
pub fn parametric_mechanism() -> MnarMechanism {
    MnarMechanism {
        name: "parametric".into(),
        weights: vec![1.0, 0.9, 0.8, 0.6, 0.4, 0.0, 0.0, 0.0, -0.2, -0.25],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationConfig {
    pub m: usize,
    pub seed: u64,
}

impl ImputationConfig {
    pub const DEFAULT_M: usize = 5;
    pub const DEFAULT_SEED: u64 = 20240101;

    pub fn new(m: usize, seed: u64) -> Result<Self, ImputationError> {
        if m == 0 {
            return Err(ImputationError::NoImputations);
        }
        Ok(Self { m, seed })
    }
}

impl Default for ImputationConfig {
    fn default() -> Self {
        Self {
            m: Self::DEFAULT_M,
            seed: Self::DEFAULT_SEED,
        }
    }
}

/// Gamma(shape, 1) variate by the Marsaglia–Tsang squeeze method; shapes
/// below 1 are boosted through `Gamma(shape + 1) * U^(1/shape)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u: f64 = rng.gen();
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.gen();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from `Dirichlet(alphas)` by normalizing gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(alphas: &[f64], rng: &mut R) -> CategoricalDistribution {
    let draws: Vec<f64> = alphas.iter().map(|&a| sample_gamma(a, rng)).collect();
    let sum: f64 = draws.iter().sum();
    CategoricalDistribution {
        probs: draws.into_iter().map(|g| g / sum).collect(),
    }
}

/// Posterior draw under a flat prior: `Dirichlet(1 + n_1, ..., 1 + n_K)`.
pub fn draw_dirichlet_posterior<R: Rng + ?Sized>(pop: &LeadPopulation, rng: &mut R) -> CategoricalDistribution {
    let alphas: Vec<f64> = pop.observed_counts.iter().map(|&n| 1.0 + n as f64).collect();
    sample_dirichlet(&alphas, rng)
}

/// Adds `t * w` to the log-odds of `p` and maps back through softmax.
pub fn tilt_distribution(
    p: &CategoricalDistribution,
    mech: &MnarMechanism,
    t: f64,
) -> Result<CategoricalDistribution, ImputationError> {
    if !t.is_finite() {
        return Err(ImputationError::NonFiniteKnob(t));
    }
    if mech.weights.len() != p.len() {
        return Err(ImputationError::WeightLength {
            expected: p.len(),
            got: mech.weights.len(),
        });
    }
    let beta = p.log_odds()?;
    let shifted: Vec<f64> = beta.iter().zip(&mech.weights).map(|(b, w)| b + t * w).collect();
    let max = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = shifted.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(CategoricalDistribution {
        probs: exps.into_iter().map(|e| e / sum).collect(),
    })
}

/// Multinomial counts for `trials` units via a chain of conditional binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(trials: u64, p: &CategoricalDistribution, rng: &mut R) -> Vec<u64> {
    let k = p.len();
    let mut counts = vec![0u64; k];
    let mut remaining = trials;
    let mut mass = 1.0;
    for (i, &pi) in p.probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == k - 1 {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 1.0 };
        let x = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("probability in (0, 1)").sample(rng)
        };
        counts[i] = x;
        remaining -= x;
        mass -= pi;
    }
    counts
}

/// Output of one multiple-imputation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    /// Mean of the per-dataset estimates.
    pub theta_hat: f64,
    /// Per-dataset fraction above the cutoff.
    pub per_imputation: Vec<f64>,
    /// Mean completed-data level frequencies.
    pub completed_freqs: CategoricalDistribution,
}

/// Point-estimate combining across completed datasets: the plain average.
pub fn combine_point_estimates(estimates: &[f64]) -> f64 {
    estimates.iter().sum::<f64>() / estimates.len() as f64
}

/// One completed dataset: posterior draw, tilt, multinomial fill.
fn complete_once(
    pop: &LeadPopulation,
    mech: &MnarMechanism,
    t: f64,
    seed: u64,
    m: usize,
) -> Result<Vec<u64>, ImputationError> {
    let mut counts = pop.observed_counts.clone();
    let missing = pop.n_missing();
    if missing == 0 {
        return Ok(counts);
    }
    let p = draw_dirichlet_posterior(pop, &mut substream(seed, m, StreamPurpose::Posterior));
    let p_t = tilt_distribution(&p, mech, t)?;
    let imputed = sample_multinomial(missing, &p_t, &mut substream(seed, m, StreamPurpose::Imputation));
    for (c, x) in counts.iter_mut().zip(imputed) {
        *c += x;
    }
    Ok(counts)
}

/// Multiple-imputation estimate of the fraction above the cutoff under the
/// mechanism tilted by `t`.
///
/// Dataset `m` always uses the same random substreams for a given seed, so
/// repeated calls at different `t` share common random numbers.
pub fn impute_theta(
    pop: &LeadPopulation,
    mech: &MnarMechanism,
    t: f64,
    cfg: &ImputationConfig,
) -> Result<ImputationResult, ImputationError> {
    if cfg.m == 0 {
        return Err(ImputationError::NoImputations);
    }
    if !t.is_finite() {
        return Err(ImputationError::NonFiniteKnob(t));
    }
    if mech.weights.len() != pop.levels() {
        return Err(ImputationError::WeightLength {
            expected: pop.levels(),
            got: mech.weights.len(),
        });
    }
    let n_total = pop.n_total as f64;
    let mut per_imputation = Vec::with_capacity(cfg.m);
    let mut freq_sum = vec![0.0; pop.levels()];
    for m in 0..cfg.m {
        let counts = complete_once(pop, mech, t, cfg.seed, m)?;
        let high: u64 = counts[pop.cutoff..].iter().sum();
        per_imputation.push(high as f64 / n_total);
        for (s, c) in freq_sum.iter_mut().zip(&counts) {
            *s += *c as f64 / n_total;
        }
    }
    let theta_hat = combine_point_estimates(&per_imputation);
    let completed_freqs = CategoricalDistribution::from_weights(&freq_sum)?;
    Ok(ImputationResult {
        theta_hat,
        per_imputation,
        completed_freqs,
    })
}
