//! SVG rendering of trajectories over the region layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use svg::node::element::{Circle, Definitions, Group, Line, Marker, Path as SvgPath, Polyline};
use svg::Document;

use ltlnav_core::planner::Plan;
use ltlnav_core::workspace::{Point, Scenario};

use crate::output::TrajectoryRow;
use crate::CliError;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Xy,
    Xz,
    /// Orthographic view along (1, 1, 1).
    Ortho,
}

impl FromStr for Projection {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xy" => Ok(Projection::Xy),
            "xz" => Ok(Projection::Xz),
            "ortho" => Ok(Projection::Ortho),
            other => Err(CliError::Input(format!("unknown projection {other:?} (expected xy, xz or ortho)"))),
        }
    }
}

impl Projection {
    /// Screen coordinates, second axis pointing up. Orthonormal, so sphere
    /// radii carry over unchanged.
    pub fn apply(self, p: &Point) -> (f64, f64) {
        match self {
            Projection::Xy => (p.x, p.y),
            Projection::Xz => (p.x, p.z),
            Projection::Ortho => (
                (p.x - p.y) / 2f64.sqrt(),
                (2.0 * p.z - p.x - p.y) / 6f64.sqrt(),
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub trajectory: PathBuf,
    pub projection: Projection,
    pub out: PathBuf,
    pub regions: bool,
    /// Agent bounding balls at their last recorded positions.
    pub bounds: bool,
    pub arrows: bool,
}

/// Maps world coordinates onto the canvas.
struct Frame {
    min: (f64, f64),
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(extent: &[(f64, f64, f64)]) -> Self {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y, r) in extent {
            lo = (lo.0.min(x - r), lo.1.min(y - r));
            hi = (hi.0.max(x + r), hi.1.max(y + r));
        }
        if !lo.0.is_finite() {
            lo = (-1.0, -1.0);
            hi = (1.0, 1.0);
        }
        let pad = 0.05 * (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9);
        let (lo, hi) = ((lo.0 - pad, lo.1 - pad), (hi.0 + pad, hi.1 + pad));
        let scale = WIDTH / (hi.0 - lo.0);
        Frame { min: lo, scale, height: (hi.1 - lo.1) * scale }
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (round2((x - self.min.0) * self.scale), round2(self.height - (y - self.min.1) * self.scale))
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn colour(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Builds the SVG document. Region and workspace geometry come from the
/// scenario when one is given; `plans` are keyed by agent id.
pub fn render(
    spec: &PlotSpec,
    rows: &[TrajectoryRow],
    scenario: Option<&Scenario>,
    plans: &BTreeMap<u32, Plan>,
) -> Document {
    let proj = spec.projection;
    let mut tracks: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    let mut last: BTreeMap<u32, Point> = BTreeMap::new();
    for r in rows {
        tracks.entry(r.agent).or_default().push(proj.apply(&r.position()));
        last.insert(r.agent, r.position());
    }

    let mut extent: Vec<(f64, f64, f64)> = tracks.values().flatten().map(|&(x, y)| (x, y, 0.0)).collect();
    if let Some(s) = scenario {
        let (x, y) = proj.apply(&s.workspace.center);
        extent.push((x, y, s.workspace.radius));
    }
    let frame = Frame::fit(&extent);
    let px = |r: f64| round2(r * frame.scale);

    let mut doc = Document::new()
        .set("xmlns", "http://www.w3.org/2000/svg")
        .set("width", WIDTH)
        .set("height", frame.height.round())
        .set("viewBox", (0.0, 0.0, WIDTH, frame.height.round()));

    if let Some(s) = scenario {
        let (cx, cy) = frame.map(proj.apply(&s.workspace.center));
        doc = doc.add(
            Circle::new()
                .set("class", "workspace")
                .set("cx", cx)
                .set("cy", cy)
                .set("r", px(s.workspace.radius))
                .set("fill", "none")
                .set("stroke", "#444"),
        );
        if spec.regions {
            let mut g = Group::new().set("class", "regions");
            for region in &s.regions {
                let (cx, cy) = frame.map(proj.apply(&region.center));
                g = g.add(
                    Circle::new()
                        .set("class", "region")
                        .set("data-id", region.id)
                        .set("cx", cx)
                        .set("cy", cy)
                        .set("r", px(region.radius))
                        .set("fill", "#ddd")
                        .set("stroke", "#888"),
                );
            }
            doc = doc.add(g);
        }
    }

    if spec.arrows {
        if let Some(s) = scenario {
            doc = doc.add(
                Definitions::new().add(
                    Marker::new()
                        .set("id", "head")
                        .set("viewBox", "0 0 10 10")
                        .set("refX", 10)
                        .set("refY", 5)
                        .set("markerWidth", 6)
                        .set("markerHeight", 6)
                        .set("orient", "auto")
                        .add(SvgPath::new().set("d", "M 0 0 L 10 5 L 0 10 z")),
                ),
            );
            for (k, (_, plan)) in plans.iter().enumerate() {
                let seq: Vec<u32> = plan.prefix.iter().chain(&plan.suffix).copied().chain(plan.suffix.first().copied()).collect();
                for w in seq.windows(2).filter(|w| w[0] != w[1]) {
                    let (Some(a), Some(b)) = (s.region(w[0]), s.region(w[1])) else { continue };
                    let (x1, y1) = frame.map(proj.apply(&a.center));
                    let (x2, y2) = frame.map(proj.apply(&b.center));
                    doc = doc.add(
                        Line::new()
                            .set("class", "plan")
                            .set("x1", x1)
                            .set("y1", y1)
                            .set("x2", x2)
                            .set("y2", y2)
                            .set("stroke", colour(k))
                            .set("stroke-dasharray", "4 3")
                            .set("marker-end", "url(#head)"),
                    );
                }
            }
        }
    }

    let index: BTreeMap<u32, usize> = tracks.keys().enumerate().map(|(k, &id)| (id, k)).collect();
    for (id, pts) in &tracks {
        let mut points = String::new();
        for &p in pts {
            let (x, y) = frame.map(p);
            let _ = write!(points, "{x:.2},{y:.2} ");
        }
        doc = doc.add(
            Polyline::new()
                .set("class", "trajectory")
                .set("data-agent", *id)
                .set("points", points.trim_end())
                .set("fill", "none")
                .set("stroke", colour(index[id]))
                .set("stroke-width", 1.5),
        );
    }

    if spec.bounds {
        if let Some(s) = scenario {
            for (id, p) in &last {
                let Some(agent) = s.agents.iter().find(|a| a.id == *id) else { continue };
                let (cx, cy) = frame.map(proj.apply(p));
                doc = doc.add(
                    Circle::new()
                        .set("class", "agent")
                        .set("cx", cx)
                        .set("cy", cy)
                        .set("r", px(agent.radius))
                        .set("fill", "none")
                        .set("stroke", colour(index[id])),
                );
            }
        }
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projections() {
        let p = Point::new(1.0, 2.0, 3.0);
        assert_eq!(Projection::Xy.apply(&p), (1.0, 2.0));
        assert_eq!(Projection::Xz.apply(&p), (1.0, 3.0));
        let (u, v) = Projection::Ortho.apply(&Point::new(1.0, 1.0, 1.0));
        assert!(u.abs() < 1e-15 && v.abs() < 1e-15);
        let (u, v) = Projection::Ortho.apply(&Point::new(0.0, 0.0, 1.0));
        assert!((u * u + v * v - 2.0 / 3.0).abs() < 1e-15);
        assert!("yz".parse::<Projection>().is_err());
    }

    #[test]
    fn frame_flips_vertical_axis() {
        let f = Frame::fit(&[(0.0, 0.0, 1.0)]);
        let (_, top) = f.map((0.0, 1.0));
        let (_, bottom) = f.map((0.0, -1.0));
        assert!(top < bottom);
    }
}
