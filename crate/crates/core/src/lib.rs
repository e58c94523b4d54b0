//! Confidence-in-decision (CID) sensitivity analysis.
//!
//! Quantifies how a policy decision derived from a statistical estimate
//! changes as a sensitivity knob moves away from the analyst's baseline
//! assumptions. Two pipelines are included: additive measurement error in a
//! simple-regression input scored by interval overlap, and log-odds MNAR
//! tilts in multiply-imputed categorical data scored by decision costs.

// NaN-rejecting guards are written as `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod decision;
pub mod imputation;
pub mod metrics;
pub mod pipeline;
pub mod regression;
pub mod render;
pub mod stream;
pub mod sweep;

pub use decision::{Decision, ElectionDecision, InterventionDecision, ThresholdRule};
pub use imputation::{CategoricalDistribution, ImputationConfig, LeadPopulation, MnarMechanism};
pub use metrics::CostParams;
pub use regression::{ElectionDataset, FittedLine, Interval, IntervalKind};
pub use sweep::{CidCurve, KnobDistribution, KnobGrid, PlausibleRegion};
