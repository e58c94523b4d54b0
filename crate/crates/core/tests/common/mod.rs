#![allow(dead_code)]

use std::path::PathBuf;

use cid_core::imputation::LeadPopulation;
use cid_core::regression::{fit_simple_ols, ElectionDataset, FittedLine};

pub const OBSERVED_PROBS: [f64; 10] = [0.22, 0.31, 0.22, 0.13, 0.04, 0.03, 0.02, 0.01, 0.01, 0.01];
pub const ACCORDION_ROW: [f64; 10] = [0.24, 0.34, 0.24, 0.10, 0.03, 0.02, 0.02, 0.007, 0.008, 0.008];
pub const PARAMETRIC_ROW: [f64; 10] = [0.26, 0.33, 0.22, 0.11, 0.03, 0.02, 0.01, 0.006, 0.006, 0.005];

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn hibbs_path() -> PathBuf {
    repo_root().join("data/hibbs.csv")
}

pub fn hibbs_fit() -> FittedLine {
    fit_simple_ols(&ElectionDataset::from_path(hibbs_path()).unwrap()).unwrap()
}

/// Observed level probabilities apportioned to n = 110,000 observed of N = 400,000.
pub fn lead_population() -> LeadPopulation {
    LeadPopulation::from_probabilities(&OBSERVED_PROBS, 110_000, 400_000, 3).unwrap()
}

/// Parses a `"lo hi"` attribute pair.
pub fn pair(s: &str) -> (f64, f64) {
    let mut it = s.split_whitespace().map(|v| v.parse::<f64>().unwrap());
    (it.next().unwrap(), it.next().unwrap())
}

pub struct PanelAxes {
    pub x_domain: (f64, f64),
    pub x_range: (f64, f64),
    pub y_domain: (f64, f64),
    pub y_range: (f64, f64),
}

impl PanelAxes {
    pub fn from_node(node: roxmltree::Node) -> Self {
        Self {
            x_domain: pair(node.attribute("data-x-domain").unwrap()),
            x_range: pair(node.attribute("data-x-range").unwrap()),
            y_domain: pair(node.attribute("data-y-domain").unwrap()),
            y_range: pair(node.attribute("data-y-range").unwrap()),
        }
    }

    pub fn x_to_px(&self, v: f64) -> f64 {
        lerp(self.x_domain, self.x_range, v)
    }

    pub fn y_to_px(&self, v: f64) -> f64 {
        lerp(self.y_domain, self.y_range, v)
    }

    pub fn px_to_x(&self, px: f64) -> f64 {
        lerp(self.x_range, self.x_domain, px)
    }

    pub fn px_to_y(&self, px: f64) -> f64 {
        lerp(self.y_range, self.y_domain, px)
    }
}

fn lerp(from: (f64, f64), to: (f64, f64), v: f64) -> f64 {
    to.0 + (v - from.0) / (from.1 - from.0) * (to.1 - to.0)
}

pub fn has_class(node: &roxmltree::Node, class: &str) -> bool {
    node.attribute("class")
        .is_some_and(|c| c.split_whitespace().any(|x| x == class))
}

pub fn f(node: &roxmltree::Node, attr: &str) -> f64 {
    node.attribute(attr).unwrap().parse().unwrap()
}

/// Polyline vertices as (x, y) pixel pairs.
pub fn polyline_points(node: &roxmltree::Node) -> Vec<(f64, f64)> {
    node.attribute("points")
        .unwrap()
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}
