mod common;

use cid_core::imputation::{accordion_mechanism, ImputationConfig};
use cid_core::regression::IntervalKind;
use cid_core::render::{render_election_figure, render_lead_figure, snapshots_from_curve, FigureSpec, RenderError};
use cid_core::sweep::{lead_cost_params, sweep_election, sweep_lead, CidCurve, KnobGrid};
use cid_core::ThresholdRule;

use common::*;

fn election_curve(t_min: f64, t_max: f64) -> CidCurve {
    let grid = KnobGrid::new(t_min, t_max, 0.02, 0.0).unwrap();
    sweep_election(&hibbs_fit(), -0.728, &grid, 0.95, IntervalKind::MeanResponse).unwrap()
}

fn election_svg(curve: &CidCurve) -> String {
    let spec = FigureSpec::election("Bread & <Peace>", 0.0, Some((-0.635, 0.728)));
    render_election_figure(curve, &spec).unwrap()
}

fn lead_curve(m: usize) -> CidCurve {
    let pop = lead_population();
    let rule = ThresholdRule::default();
    let costs = lead_cost_params(&pop, 1.0, 1.0, &rule).unwrap();
    let grid = KnobGrid::new(-2.0, 4.0, 0.05, 0.0).unwrap();
    sweep_lead(&pop, &accordion_mechanism(), &grid, &ImputationConfig::new(m, 7).unwrap(), &rule, &costs).unwrap()
}

fn panel<'a>(doc: &'a roxmltree::Document, class: &str) -> roxmltree::Node<'a, 'a> {
    doc.descendants()
        .find(|n| n.has_tag_name("g") && has_class(n, "panel") && has_class(n, class))
        .unwrap()
}

#[test]
fn election_figure_structure() {
    let curve = election_curve(-4.0, 4.0);
    let svg = election_svg(&curve);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let count = |tag: &str, class: &str| {
        doc.descendants()
            .filter(|n| n.has_tag_name(tag) && has_class(n, class))
            .count()
    };
    assert_eq!(count("polyline", "cid"), 1);
    assert_eq!(count("line", "reference-line"), 1);
    assert_eq!(count("line", "region-line"), 2);
    assert_eq!(count("line", "reference-interval"), 1);
    assert_eq!(count("line", "interval"), curve.points.len());

    let cid = panel(&doc, "cid-curve");
    let axes = PanelAxes::from_node(cid);
    let reference = cid.descendants().find(|n| has_class(n, "reference-line")).unwrap();
    assert!((axes.px_to_x(f(&reference, "x1")) - 0.0).abs() * (axes.x_to_px(1.0) - axes.x_to_px(0.0)) < 0.5);
    let mut region: Vec<f64> = cid
        .descendants()
        .filter(|n| has_class(n, "region-line"))
        .map(|n| axes.px_to_x(f(&n, "x1")))
        .collect();
    region.sort_by(f64::total_cmp);
    assert!((region[0] + 0.635).abs() < 0.01);
    assert!((region[1] - 0.728).abs() < 0.01);
    let title = doc.descendants().find(|n| has_class(n, "title")).unwrap();
    assert_eq!(title.text(), Some("Bread & <Peace>"));
}

#[test]
fn election_coordinates_parse_back() {
    let curve = election_curve(-4.0, 4.0);
    let svg = election_svg(&curve);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let cid = panel(&doc, "cid-curve");
    let axes = PanelAxes::from_node(cid);
    let poly = cid.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
    let pts = polyline_points(&poly);
    assert_eq!(pts.len(), curve.points.len());
    for ((x, y), p) in pts.iter().zip(&curve.points) {
        assert!((x - axes.x_to_px(p.t)).abs() <= 0.5);
        assert!((y - axes.y_to_px(p.cid)).abs() <= 0.5);
    }

    let bars = panel(&doc, "interval-bars");
    let axes = PanelAxes::from_node(bars);
    let lines: Vec<_> = bars.descendants().filter(|n| has_class(n, "interval")).collect();
    for (line, p) in lines.iter().zip(&curve.points) {
        let iv = p.interval.unwrap();
        assert!((f(line, "y1") - axes.y_to_px(iv.lower)).abs() <= 0.5);
        assert!((f(line, "y2") - axes.y_to_px(iv.upper)).abs() <= 0.5);
        assert!((f(line, "x1") - axes.x_to_px(p.t)).abs() <= 0.5);
    }
}

#[test]
fn cid_polyline_touches_zero_at_change_point() {
    let curve = election_curve(-4.0, 4.0);
    let svg = election_svg(&curve);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let cid = panel(&doc, "cid-curve");
    let axes = PanelAxes::from_node(cid);
    let pts = polyline_points(&cid.descendants().find(|n| n.has_tag_name("polyline")).unwrap());
    let first = curve.change_points[0];
    let (x, y) = pts
        .iter()
        .copied()
        .find(|(x, _)| (axes.px_to_x(*x) - first.t_high).abs() < 1e-3)
        .unwrap();
    assert!(axes.px_to_y(y).abs() < 1e-3, "cid at {} is {}", axes.px_to_x(x), axes.px_to_y(y));
    let before = pts
        .iter()
        .find(|(x, _)| (axes.px_to_x(*x) - first.t_low).abs() < 1e-3)
        .unwrap();
    assert!(axes.px_to_y(before.1) >= 1.0);
}

#[test]
fn single_point_curve_draws_marker() {
    let curve = election_curve(0.0, 0.0);
    let svg = election_svg(&curve);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 0);
    let marker = doc.descendants().find(|n| has_class(n, "cid-marker")).unwrap();
    let axes = PanelAxes::from_node(panel(&doc, "cid-curve"));
    let cy = f(&marker, "y") + 0.5 * f(&marker, "height");
    assert!((axes.px_to_y(cy) - 2.0).abs() < 0.01);
}

#[test]
fn rendering_is_deterministic() {
    let curve = election_curve(-4.0, 4.0);
    assert_eq!(election_svg(&curve), election_svg(&curve));
}

#[test]
fn empty_curve_is_an_error() {
    let mut curve = election_curve(0.0, 0.0);
    curve.points.clear();
    let spec = FigureSpec::election("", 0.0, None);
    assert_eq!(render_election_figure(&curve, &spec), Err(RenderError::EmptyCurve));
}

#[test]
fn lead_figure_has_five_bar_groups() {
    let curve = lead_curve(5);
    let snaps = snapshots_from_curve(&curve, &[-1.0, 0.0, 0.5, 1.0, 2.0]).unwrap();
    let svg = render_lead_figure(&curve, &snaps, &FigureSpec::lead("accordion", 0.0)).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let groups: Vec<_> = doc.descendants().filter(|n| has_class(n, "snapshot")).collect();
    assert_eq!(groups.len(), 5);
    for g in &groups {
        assert_eq!(g.children().filter(|n| has_class(n, "bar")).count(), 10);
    }
    assert_eq!(doc.descendants().filter(|n| has_class(n, "cid")).count(), 1);
}

#[test]
fn reference_snapshot_bars_recover_observed_distribution() {
    let curve = lead_curve(20);
    let snaps = snapshots_from_curve(&curve, &[0.0]).unwrap();
    let svg = render_lead_figure(&curve, &snaps, &FigureSpec::lead("", 0.0)).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let bars_panel = panel(&doc, "distribution-bars");
    let axes = PanelAxes::from_node(bars_panel);
    let heights: Vec<f64> = bars_panel
        .descendants()
        .filter(|n| has_class(n, "bar"))
        .map(|n| axes.px_to_y(f(&n, "y")))
        .collect();
    assert_eq!(heights.len(), 10);
    for ((h, expected), drawn) in heights.iter().zip(OBSERVED_PROBS).zip(snaps[0].1.probs()) {
        assert!((h - expected).abs() < 0.01, "{h} vs {expected}");
        // 0.5 px recovery of the plotted value.
        let scale = (axes.y_to_px(0.0) - axes.y_to_px(1.0)).abs();
        assert!((h - drawn).abs() * scale <= 0.5);
    }
}

#[test]
fn lead_figure_errors() {
    let curve = lead_curve(2);
    let spec = FigureSpec::lead("", 0.0);
    assert_eq!(render_lead_figure(&curve, &[], &spec), Err(RenderError::NoSnapshots));
    let mut snaps = snapshots_from_curve(&curve, &[0.0]).unwrap();
    snaps[0].0 = 9.0;
    assert_eq!(render_lead_figure(&curve, &snaps, &spec), Err(RenderError::SnapshotOffGrid(9.0)));
    assert!(snapshots_from_curve(&curve, &[-7.0]).is_err());
    let election = election_curve(-1.0, 1.0);
    assert!(matches!(
        render_lead_figure(&election, &snapshots_from_curve(&curve, &[0.0]).unwrap(), &FigureSpec::election("", 0.0, None)),
        Err(RenderError::UnsupportedPanel(_))
    ));
}
