//! End-to-end execution of a configured analysis.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{AnalysisConfig, ElectionSettings, LeadSettings, Study};
use crate::imputation::{ImputationError, LeadPopulation};
use crate::regression::{fit_simple_ols, ElectionDataset, RegressionError};
use crate::render::{render_election_figure, render_lead_figure, snapshots_from_curve, FigureSpec, RenderError};
use crate::sweep::{
    annotate_plausible_region, expected_cid, lead_cost_params, sweep_election, sweep_lead, ChangePoint, CidCurve,
    RegionSummary, SweepError,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("dataset {}: {source}", path.display())]
    Election {
        path: PathBuf,
        #[source]
        source: RegressionError,
    },
    #[error("dataset {}: {source}", path.display())]
    Population {
        path: PathBuf,
        #[source]
        source: ImputationError,
    },
    #[error("dataset has {got} levels but the config expects {expected}")]
    LevelMismatch { expected: usize, got: usize },
    #[error("regression: {0}")]
    Regression(#[from] RegressionError),
    #[error("sweep: {0}")]
    Sweep(#[from] SweepError),
    #[error("render: {0}")]
    Render(#[from] RenderError),
    #[error("writing {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Everything a run produces before anything touches the filesystem.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub curve: CidCurve,
    pub csv: String,
    pub svg: String,
    pub region: Option<RegionSummary>,
    pub expected_cid: Option<f64>,
    pub verdict: String,
}

pub fn analyze(config: &AnalysisConfig) -> Result<Analysis, RunError> {
    match &config.study {
        Study::Election(e) => analyze_election(config, e),
        Study::Lead(l) => analyze_lead(config, l),
    }
}

fn analyze_election(config: &AnalysisConfig, e: &ElectionSettings) -> Result<Analysis, RunError> {
    let path = &config.dataset_path;
    let data = ElectionDataset::from_path(path).map_err(|source| RunError::Election {
        path: path.clone(),
        source,
    })?;
    let fit = fit_simple_ols(&data)?;
    let curve = sweep_election(&fit, e.x0, &config.grid, e.level, e.interval_kind)?;
    let region = e
        .plausible_region
        .as_ref()
        .map(|r| annotate_plausible_region(&curve, r));
    let spec = FigureSpec::election(
        format!(
            "CID under additive input error ({} interval, level {})",
            e.interval_kind, e.level
        ),
        config.grid.t0,
        e.plausible_region.as_ref().map(|r| (r.lower, r.upper)),
    );
    let svg = render_election_figure(&curve, &spec)?;
    let verdict = verdict(&curve, region.as_ref(), None);
    Ok(Analysis {
        csv: curve.to_csv(),
        svg,
        curve,
        region,
        expected_cid: None,
        verdict,
    })
}

fn analyze_lead(config: &AnalysisConfig, l: &LeadSettings) -> Result<Analysis, RunError> {
    let path = &config.dataset_path;
    let pop = LeadPopulation::from_path(path, l.n_total, l.cutoff).map_err(|source| RunError::Population {
        path: path.clone(),
        source,
    })?;
    if pop.levels() != l.levels {
        return Err(RunError::LevelMismatch {
            expected: l.levels,
            got: pop.levels(),
        });
    }
    let costs = lead_cost_params(&pop, l.a, l.b, &l.rule)?;
    let curve = sweep_lead(&pop, &l.mechanism, &config.grid, &l.imputation, &l.rule, &costs)?;
    let expected = l
        .knob_distribution
        .as_ref()
        .map(|d| expected_cid(&curve, d))
        .transpose()?;
    let ts = if l.snapshot_ts.is_empty() {
        default_snapshots(&curve)
    } else {
        l.snapshot_ts.clone()
    };
    let snapshots = snapshots_from_curve(&curve, &ts)?;
    let spec = FigureSpec::lead(
        format!("CID under the {} mechanism (M = {})", l.mechanism.name, l.imputation.m),
        config.grid.t0,
    );
    let svg = render_lead_figure(&curve, &snapshots, &spec)?;
    let verdict = verdict(&curve, None, expected);
    Ok(Analysis {
        csv: curve.to_csv(),
        svg,
        curve,
        region: None,
        expected_cid: expected,
        verdict,
    })
}

/// Five grid values spread evenly across the curve.
fn default_snapshots(curve: &CidCurve) -> Vec<f64> {
    let n = curve.points.len();
    let mut idx: Vec<usize> = (0..5).map(|i| i * (n - 1) / 4).collect();
    idx.dedup();
    idx.into_iter().map(|i| curve.points[i].t).collect()
}

fn format_bracket(c: &ChangePoint) -> String {
    format!("[{:.2}, {:.2}]", c.t_low, c.t_high)
}

/// One-line summary: reference decision, change brackets, and optional
/// region and expectation figures.
pub fn verdict(curve: &CidCurve, region: Option<&RegionSummary>, expected: Option<f64>) -> String {
    let mut out = curve.reference_decision.to_string();
    match curve.change_points.len() {
        0 => out.push_str("; no change points"),
        1 => {
            let _ = write!(out, "; change point ≈ {}", format_bracket(&curve.change_points[0]));
        }
        _ => {
            let all: Vec<String> = curve.change_points.iter().map(format_bracket).collect();
            let _ = write!(out, "; change points ≈ {}", all.join(", "));
        }
    }
    if let Some(r) = region {
        match r.min_cid {
            Some(min) => {
                let _ = write!(
                    out,
                    "; min CID in plausible region ({}, {}) = {:.3}{}",
                    r.region.lower,
                    r.region.upper,
                    min,
                    if r.has_change_point() { " (decision changes inside)" } else { "" }
                );
            }
            None => {
                let _ = write!(out, "; plausible region ({}, {}) off grid", r.region.lower, r.region.upper);
            }
        }
    }
    if let Some(e) = expected {
        let _ = write!(out, "; expected CID = {e:.3}");
    }
    out
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Writes all files or none: each goes to a temp file beside its target and is
/// renamed into place only after every temp file was written.
pub fn write_atomically(files: &[(PathBuf, &str)]) -> Result<(), RunError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let io = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.flush().map_err(io)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file()
                .set_permissions(std::fs::Permissions::from_mode(0o644))
                .map_err(io)?;
        }
        staged.push((tmp, path.clone()));
    }
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| RunError::Io {
            path: path.clone(),
            source: e.error,
        })?;
    }
    Ok(())
}

/// Runs the analysis and writes CSV and SVG under `out_dir`.
pub fn run(config: &AnalysisConfig, out_dir: &Path) -> Result<(Analysis, PathBuf, PathBuf), RunError> {
    let analysis = analyze(config)?;
    let csv_path = resolve(out_dir, &config.outputs.csv);
    let svg_path = resolve(out_dir, &config.outputs.svg);
    write_atomically(&[
        (csv_path.clone(), analysis.csv.as_str()),
        (svg_path.clone(), analysis.svg.as_str()),
    ])?;
    Ok((analysis, csv_path, svg_path))
}
