use std::fmt::Write as _;

use crate::aggregation::PredictionSet;
use crate::centerlines::enumerate_sequences;
use crate::geometry::Vec2;
use crate::scene::Scene;

const MARGIN: f64 = 15.0;
const PX_PER_M: f64 = 6.0;
const CENTERLINE: &str = "#2ca02c";
const HISTORY: &str = "#e6b800";
const PREDICTION: &str = "#1f77b4";
const GROUND_TRUTH: &str = "#d62728";

fn path_data(points: impl IntoIterator<Item = Vec2>) -> String {
    let mut d = String::new();
    for (i, p) in points.into_iter().enumerate() {
        let _ = write!(d, "{}{:.3},{:.3}", if i == 0 { "M" } else { " L" }, p.x, p.y);
    }
    d
}

/// SVG drawing of a Cartesian scene: lane corridors in grey, centerline
/// sequences in green, TV history in yellow, predictions in blue (opacity
/// by probability) and ground truth in red. North is up.
///
/// The view is fitted to the TV history, ground truth and predictions;
/// output bytes depend only on the inputs.
pub fn render_svg(scene: &Scene, preds: Option<&PredictionSet>) -> String {
    let history: Vec<Vec2> = scene.tv().states.iter().map(|s| s.position()).collect();
    let gt = scene.gt_future.clone().unwrap_or_default();
    let mut focus: Vec<Vec2> = history.iter().chain(&gt).copied().collect();
    if let Some(p) = preds {
        focus.extend(p.trajectories.iter().flat_map(|t| t.waypoints.iter().copied()));
    }
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in &focus {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    lo -= Vec2::repeat(MARGIN);
    hi += Vec2::repeat(MARGIN);
    let size = hi - lo;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{:.3} {:.3} {:.3} {:.3}">"#,
        size.x * PX_PER_M,
        size.y * PX_PER_M,
        lo.x,
        -hi.y,
        size.x,
        size.y
    );
    let _ = writeln!(svg, "<title>{}</title>", xml_escape(&scene.scene_id));
    let _ = writeln!(svg, r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="white"/>"#, lo.x, -hi.y, size.x, size.y);
    svg.push_str("<g transform=\"scale(1,-1)\" fill=\"none\" stroke-linejoin=\"round\">\n");

    svg.push_str("<g id=\"lanes\">\n");
    for lane in &scene.lanes {
        let d = path_data(lane.points());
        let _ = writeln!(svg, r##"<path d="{d}" stroke="#e4e4e4" stroke-width="{:.3}"/>"##, lane.width);
        let _ = writeln!(svg, r##"<path d="{d}" stroke="#9a9a9a" stroke-width="0.1" stroke-dasharray="1,1"/>"##);
    }
    svg.push_str("</g>\n<g id=\"centerlines\">\n");
    if let Ok(seqs) = enumerate_sequences(scene) {
        for seq in seqs {
            let _ = writeln!(
                svg,
                r#"<path d="{}" stroke="{CENTERLINE}" stroke-width="0.35" stroke-opacity="0.8"/>"#,
                path_data(seq.polyline.points().iter().copied())
            );
        }
    }
    svg.push_str("</g>\n<g id=\"agents\">\n");
    for agent in scene.agents.iter().filter(|a| a.agent_id != scene.tv_id) {
        let p = agent.current().position();
        let _ = writeln!(svg, r##"<circle cx="{:.3}" cy="{:.3}" r="0.8" fill="#777777"/>"##, p.x, p.y);
    }
    svg.push_str("</g>\n<g id=\"history\">\n");
    let _ = writeln!(svg, r#"<path d="{}" stroke="{HISTORY}" stroke-width="0.5"/>"#, path_data(history.iter().copied()));
    if let Some(p) = history.last() {
        let _ = writeln!(svg, r#"<circle cx="{:.3}" cy="{:.3}" r="0.9" fill="{HISTORY}"/>"#, p.x, p.y);
    }
    svg.push_str("</g>\n<g id=\"predictions\">\n");
    if let Some(preds) = preds {
        let pmax = preds.trajectories.iter().map(|t| t.probability).fold(0.0, f64::max);
        let start = history.last().copied();
        for t in &preds.trajectories {
            let alpha = if pmax > 0.0 { 0.25 + 0.75 * t.probability / pmax } else { 1.0 };
            let pts = start.into_iter().chain(t.waypoints.iter().copied());
            let _ = writeln!(
                svg,
                r#"<path d="{}" stroke="{PREDICTION}" stroke-width="0.4" stroke-opacity="{alpha:.3}"/>"#,
                path_data(pts)
            );
            let e = t.endpoint();
            let _ = writeln!(svg, r#"<circle cx="{:.3}" cy="{:.3}" r="0.5" fill="{PREDICTION}" fill-opacity="{alpha:.3}"/>"#, e.x, e.y);
        }
    }
    svg.push_str("</g>\n<g id=\"ground-truth\">\n");
    if !gt.is_empty() {
        let pts = history.last().copied().into_iter().chain(gt.iter().copied());
        let _ = writeln!(svg, r#"<path d="{}" stroke="{GROUND_TRUTH}" stroke-width="0.4"/>"#, path_data(pts));
    }
    svg.push_str("</g>\n</g>\n</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
