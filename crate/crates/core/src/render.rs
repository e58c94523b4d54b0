//! SVG figures for CID curves.
//!
//! Documents use only `rect`, `line`, `polyline` and `text` elements. Each
//! panel is a `<g class="panel ...">` that declares its axis transform through
//! `data-x-domain`, `data-x-range`, `data-y-domain` and `data-y-range`
//! attributes (`"lo hi"` pairs). Data coordinates map linearly from domain to
//! range, so plotted values can be recovered by inverting the transform.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::ELECTION_BOUNDARY;
use crate::imputation::CategoricalDistribution;
use crate::sweep::CidCurve;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("curve has no points")]
    EmptyCurve,
    #[error("figure needs at least one panel and positive dimensions")]
    InvalidFigure,
    #[error("curve point at t = {0} has no interval")]
    MissingInterval(f64),
    #[error("no distribution snapshots supplied")]
    NoSnapshots,
    #[error("snapshot t = {0} is not on the curve's grid")]
    SnapshotOffGrid(f64),
    #[error("panel {0:?} is not available for this figure")]
    UnsupportedPanel(PanelKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelKind {
    CidCurve,
    IntervalBars,
    DistributionBars,
}

impl PanelKind {
    fn class(self) -> &'static str {
        match self {
            PanelKind::CidCurve => "cid-curve",
            PanelKind::IntervalBars => "interval-bars",
            PanelKind::DistributionBars => "distribution-bars",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub curve: String,
    pub reference: String,
    pub region: String,
    pub reference_interval: String,
    pub interval: String,
    pub bar: String,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            curve: "#222222".into(),
            reference: "#d62728".into(),
            region: "#7b3294".into(),
            reference_interval: "#1f4e9c".into(),
            interval: "#9a9a9a".into(),
            bar: "#5a7d9a".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub width_px: u32,
    pub height_px: u32,
    pub panels: Vec<PanelKind>,
    pub reference_line: Option<f64>,
    pub region_lines: Option<(f64, f64)>,
    pub title: String,
    pub palette: Palette,
}

impl FigureSpec {
    /// CID curve above interval bars.
    pub fn election(title: impl Into<String>, reference: f64, region: Option<(f64, f64)>) -> Self {
        Self {
            width_px: 800,
            height_px: 640,
            panels: vec![PanelKind::CidCurve, PanelKind::IntervalBars],
            reference_line: Some(reference),
            region_lines: region,
            title: title.into(),
            palette: Palette::default(),
        }
    }

    /// CID curve above completed-data frequency bars.
    pub fn lead(title: impl Into<String>, reference: f64) -> Self {
        Self {
            width_px: 900,
            height_px: 640,
            panels: vec![PanelKind::CidCurve, PanelKind::DistributionBars],
            reference_line: Some(reference),
            region_lines: None,
            title: title.into(),
            palette: Palette::default(),
        }
    }

    fn validate(&self) -> Result<(), RenderError> {
        if self.panels.is_empty() || self.width_px == 0 || self.height_px == 0 {
            return Err(RenderError::InvalidFigure);
        }
        Ok(())
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 24.0;
const TITLE_BAND: f64 = 36.0;
const PANEL_PAD_TOP: f64 = 14.0;
const PANEL_PAD_BOTTOM: f64 = 42.0;

/// Linear map from a data interval to a pixel interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub domain: (f64, f64),
    pub range: (f64, f64),
}

impl Axis {
    fn new(domain: (f64, f64), range: (f64, f64)) -> Self {
        let domain = if domain.1 > domain.0 {
            domain
        } else {
            (domain.0 - 1.0, domain.0 + 1.0)
        };
        Self { domain, range }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.range.0 + (v - self.domain.0) / (self.domain.1 - self.domain.0) * (self.range.1 - self.range.0)
    }

    pub fn invert(&self, px: f64) -> f64 {
        self.domain.0 + (px - self.range.0) / (self.range.1 - self.range.0) * (self.domain.1 - self.domain.0)
    }
}

/// Round-number ticks covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Svg {
    buf: String,
}

impl Svg {
    fn begin(spec: &FigureSpec) -> Self {
        let mut buf = String::new();
        let (w, h) = (spec.width_px, spec.height_px);
        let _ = writeln!(buf, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(buf, r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##);
        if !spec.title.is_empty() {
            let _ = writeln!(
                buf,
                r#"<text class="title" x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
                w as f64 / 2.0,
                escape(&spec.title)
            );
        }
        Self { buf }
    }

    fn open_panel(&mut self, kind: PanelKind, x: &Axis, y: &Axis) {
        let _ = writeln!(
            self.buf,
            r#"<g class="panel {}" data-x-domain="{} {}" data-x-range="{} {}" data-y-domain="{} {}" data-y-range="{} {}">"#,
            kind.class(),
            x.domain.0,
            x.domain.1,
            x.range.0,
            x.range.1,
            y.domain.0,
            y.domain.1,
            y.range.0,
            y.range.1
        );
    }

    fn close_group(&mut self) {
        self.buf.push_str("</g>\n");
    }

    #[allow(clippy::too_many_arguments)]
    fn line(&mut self, class: &str, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.buf,
            r#"<line class="{class}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }

    fn rect(&mut self, class: &str, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.buf,
            r#"<rect class="{class}" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            w.max(0.0),
            h.max(0.0)
        );
    }

    fn text(&mut self, class: &str, x: f64, y: f64, anchor: &str, body: &str) {
        let _ = writeln!(
            self.buf,
            r#"<text class="{class}" x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            escape(body)
        );
    }

    fn axes(&mut self, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
        let (left, right) = x.range;
        let (bottom, top) = y.range;
        self.line("axis", left, bottom, right, bottom, "#000000", 1.0);
        self.line("axis", left, bottom, left, top, "#000000", 1.0);
        for t in nice_ticks(x.domain.0, x.domain.1, 8) {
            let px = x.map(t);
            self.line("tick", px, bottom, px, bottom + 5.0, "#000000", 1.0);
            self.text("tick-label", px, bottom + 18.0, "middle", &fmt_tick(t));
        }
        for v in nice_ticks(y.domain.0, y.domain.1, 4) {
            let py = y.map(v);
            self.line("tick", left - 5.0, py, left, py, "#000000", 1.0);
            self.text("tick-label", left - 8.0, py + 4.0, "end", &fmt_tick(v));
        }
        self.text("axis-label", 0.5 * (left + right), bottom + 34.0, "middle", x_label);
        let mid = 0.5 * (top + bottom);
        let _ = writeln!(
            self.buf,
            r#"<text class="axis-label" x="16" y="{mid:.2}" text-anchor="middle" transform="rotate(-90 16 {mid:.2})">{}</text>"#,
            escape(y_label)
        );
    }

    fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// Vertical band `(top, bottom)` in pixels for panel `i` of `n`.
fn panel_band(spec: &FigureSpec, i: usize, n: usize) -> (f64, f64) {
    let h = (spec.height_px as f64 - TITLE_BAND) / n as f64;
    let top = TITLE_BAND + i as f64 * h + PANEL_PAD_TOP;
    let bottom = TITLE_BAND + (i + 1) as f64 * h - PANEL_PAD_BOTTOM;
    (top, bottom.max(top + 1.0))
}

fn x_span(spec: &FigureSpec) -> (f64, f64) {
    (MARGIN_LEFT, spec.width_px as f64 - MARGIN_RIGHT)
}

fn t_domain(curve: &CidCurve) -> (f64, f64) {
    let first = curve.points.first().map_or(0.0, |p| p.t);
    let last = curve.points.last().map_or(0.0, |p| p.t);
    (first, last)
}

fn draw_cid_panel(svg: &mut Svg, curve: &CidCurve, spec: &FigureSpec, band: (f64, f64)) {
    let x = Axis::new(t_domain(curve), x_span(spec));
    let y = Axis::new((0.0, curve.metric.maximum()), (band.1, band.0));
    svg.open_panel(PanelKind::CidCurve, &x, &y);
    svg.axes(&x, &y, "t", "CID");
    if let Some((lo, hi)) = spec.region_lines {
        for t in [lo, hi] {
            let px = x.map(t);
            svg.line("region-line", px, band.0, px, band.1, &spec.palette.region, 1.5);
        }
    }
    if let Some(t) = spec.reference_line {
        let px = x.map(t);
        svg.line("reference-line", px, band.0, px, band.1, &spec.palette.reference, 1.5);
    }
    if curve.points.len() == 1 {
        let p = &curve.points[0];
        let (cx, cy) = (x.map(p.t), y.map(p.cid));
        svg.rect("cid-marker", cx - 3.0, cy - 3.0, 6.0, 6.0, &spec.palette.curve);
    } else {
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x.map(p.t), y.map(p.cid)))
            .collect();
        let _ = writeln!(
            svg.buf,
            r#"<polyline class="cid" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            spec.palette.curve
        );
    }
    svg.close_group();
}

fn draw_interval_panel(svg: &mut Svg, curve: &CidCurve, spec: &FigureSpec, band: (f64, f64)) -> Result<(), RenderError> {
    let intervals = curve
        .points
        .iter()
        .map(|p| p.interval.map(|iv| (p.t, iv)).ok_or(RenderError::MissingInterval(p.t)))
        .collect::<Result<Vec<_>, _>>()?;
    let lo = intervals.iter().map(|(_, iv)| iv.lower).fold(f64::INFINITY, f64::min);
    let hi = intervals.iter().map(|(_, iv)| iv.upper).fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1.0);
    let x = Axis::new(t_domain(curve), x_span(spec));
    let y = Axis::new((lo - pad, hi + pad), (band.1, band.0));
    svg.open_panel(PanelKind::IntervalBars, &x, &y);
    svg.axes(&x, &y, "t", "interval");
    if (y.domain.0..=y.domain.1).contains(&ELECTION_BOUNDARY) {
        let py = y.map(ELECTION_BOUNDARY);
        let _ = writeln!(
            svg.buf,
            r##"<line class="boundary" x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#000000" stroke-width="1" stroke-dasharray="4 3"/>"##,
            x.range.0, x.range.1
        );
    }
    let t0 = curve.grid.t0;
    for (t, iv) in &intervals {
        let is_ref = *t == t0;
        let (class, color, width) = if is_ref {
            ("interval reference-interval", spec.palette.reference_interval.as_str(), 2.5)
        } else {
            ("interval", spec.palette.interval.as_str(), 1.0)
        };
        let px = x.map(*t);
        svg.line(class, px, y.map(iv.lower), px, y.map(iv.upper), color, width);
    }
    svg.close_group();
    Ok(())
}

fn draw_distribution_panel(
    svg: &mut Svg,
    snapshots: &[(f64, CategoricalDistribution)],
    spec: &FigureSpec,
    band: (f64, f64),
) {
    let (left, right) = x_span(spec);
    let n = snapshots.len() as f64;
    let gap = 16.0;
    let group_w = ((right - left) - gap * (n - 1.0)) / n;
    let ymax = snapshots
        .iter()
        .flat_map(|(_, d)| d.probs().iter().copied())
        .fold(0.0, f64::max)
        .max(1e-9);
    let ymax = nice_ticks(0.0, ymax * 1.1, 4).last().copied().filter(|v| *v >= ymax).unwrap_or(ymax * 1.1);
    let y = Axis::new((0.0, ymax), (band.1, band.0));
    let x = Axis::new((0.0, 1.0), (left, right));
    svg.open_panel(PanelKind::DistributionBars, &x, &y);
    for v in nice_ticks(0.0, ymax, 4) {
        let py = y.map(v);
        svg.line("tick", left - 5.0, py, left, py, "#000000", 1.0);
        svg.text("tick-label", left - 8.0, py + 4.0, "end", &fmt_tick(v));
    }
    svg.line("axis", left, band.1, left, band.0, "#000000", 1.0);
    for (i, (t, dist)) in snapshots.iter().enumerate() {
        let g_left = left + i as f64 * (group_w + gap);
        let k = dist.len() as f64;
        let bar_w = group_w / k;
        let _ = writeln!(
            svg.buf,
            r#"<g class="snapshot" data-t="{t}" data-x="{g_left:.2}" data-bar-width="{bar_w:.4}">"#
        );
        svg.line("axis", g_left, band.1, g_left + group_w, band.1, "#000000", 1.0);
        for (j, p) in dist.probs().iter().enumerate() {
            let top = y.map(*p);
            svg.rect(
                "bar",
                g_left + j as f64 * bar_w + 0.1 * bar_w,
                top,
                0.8 * bar_w,
                band.1 - top,
                &spec.palette.bar,
            );
            if j == 0 || j + 1 == dist.len() {
                svg.text(
                    "bar-label",
                    g_left + (j as f64 + 0.5) * bar_w,
                    band.1 + 14.0,
                    "middle",
                    &(j + 1).to_string(),
                );
            }
        }
        svg.text(
            "snapshot-label",
            g_left + 0.5 * group_w,
            band.1 + 30.0,
            "middle",
            &format!("t = {}", fmt_tick(*t)),
        );
        svg.close_group();
    }
    svg.close_group();
}

/// CID curve over knob values with interval bars beneath.
pub fn render_election_figure(curve: &CidCurve, spec: &FigureSpec) -> Result<String, RenderError> {
    spec.validate()?;
    if curve.points.is_empty() {
        return Err(RenderError::EmptyCurve);
    }
    let mut svg = Svg::begin(spec);
    let n = spec.panels.len();
    for (i, kind) in spec.panels.iter().enumerate() {
        let band = panel_band(spec, i, n);
        match kind {
            PanelKind::CidCurve => draw_cid_panel(&mut svg, curve, spec, band),
            PanelKind::IntervalBars => draw_interval_panel(&mut svg, curve, spec, band)?,
            PanelKind::DistributionBars => return Err(RenderError::UnsupportedPanel(*kind)),
        }
    }
    Ok(svg.finish())
}

/// CID curve with one frequency bar group per snapshot.
pub fn render_lead_figure(
    curve: &CidCurve,
    snapshots: &[(f64, CategoricalDistribution)],
    spec: &FigureSpec,
) -> Result<String, RenderError> {
    spec.validate()?;
    if snapshots.is_empty() {
        return Err(RenderError::NoSnapshots);
    }
    if curve.points.is_empty() {
        return Err(RenderError::EmptyCurve);
    }
    if let Some((t, _)) = snapshots.iter().find(|(t, _)| curve.point_near(*t).is_none()) {
        return Err(RenderError::SnapshotOffGrid(*t));
    }
    let mut svg = Svg::begin(spec);
    let n = spec.panels.len();
    for (i, kind) in spec.panels.iter().enumerate() {
        let band = panel_band(spec, i, n);
        match kind {
            PanelKind::CidCurve => draw_cid_panel(&mut svg, curve, spec, band),
            PanelKind::DistributionBars => draw_distribution_panel(&mut svg, snapshots, spec, band),
            PanelKind::IntervalBars => return Err(RenderError::UnsupportedPanel(*kind)),
        }
    }
    Ok(svg.finish())
}

/// Snapshots taken from the curve's stored completed-data frequencies.
pub fn snapshots_from_curve(curve: &CidCurve, ts: &[f64]) -> Result<Vec<(f64, CategoricalDistribution)>, RenderError> {
    ts.iter()
        .map(|&t| {
            let p = curve.point_near(t).ok_or(RenderError::SnapshotOffGrid(t))?;
            let freqs = p.frequencies.clone().ok_or(RenderError::SnapshotOffGrid(t))?;
            Ok((p.t, freqs))
        })
        .collect()
}
