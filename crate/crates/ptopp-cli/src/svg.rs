//! Deterministic SVG rendering of scenarios, detection results and paths,
//! mirroring the usual figure styling: obstacles gray, passage regions
//! blue dashed, passage segments red dashed, cells numbered.

use ptopp::cells::CellComplex;
use ptopp::env::Scenario;
use ptopp::geom::{Point2, Point3};
use ptopp::passages::Passage;
use std::fmt::Write;

pub struct PathOverlay<'a> {
    pub points: &'a [Point3],
    pub color: &'a str,
    pub label: &'a str,
}

pub fn render(
    scenario: &Scenario,
    passages: &[Passage],
    complex: Option<&CellComplex>,
    paths: &[PathOverlay],
) -> String {
    let w = scenario.extent.width;
    let h = scenario.extent.height;
    let mut out = String::new();
    let flip = |p: Point2| (p.x, h - p.y);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-5 -5 {} {}" width="{}" height="{}">"#,
        w + 10.0,
        h + 10.0,
        (w + 10.0) as i64,
        (h + 10.0) as i64
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black" stroke-width="1"/>"#
    )
    .unwrap();
    // passage regions under everything else
    for p in passages {
        let pts: String = p
            .region
            .polygon
            .vertices()
            .iter()
            .map(|v| {
                let (x, y) = flip(*v);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            out,
            r#"<polygon points="{pts}" fill="none" stroke="#3b6fd4" stroke-width="0.8" stroke-dasharray="4 3"/>"#
        )
        .unwrap();
    }
    // obstacles
    for o in &scenario.obstacles {
        let pts: String = o
            .footprint
            .vertices()
            .iter()
            .map(|v| {
                let (x, y) = flip(*v);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        let fill = if o.is_wall { "#555555" } else { "#9a9a9a" };
        writeln!(
            out,
            r#"<polygon points="{pts}" fill="{fill}" stroke="#333333" stroke-width="0.6"/>"#
        )
        .unwrap();
    }
    // passage segments
    for p in passages {
        let (x1, y1) = flip(p.seg.a);
        let (x2, y2) = flip(p.seg.b);
        writeln!(
            out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#d43b3b" stroke-width="1" stroke-dasharray="3 2"/>"#
        )
        .unwrap();
    }
    // cell numbers at polygon vertex averages
    if let Some(complex) = complex {
        for cell in &complex.cells {
            if cell.is_obstacle_cell {
                continue;
            }
            let n = cell.polygon.len().max(1) as f64;
            let cx = cell.polygon.iter().map(|p| p.x).sum::<f64>() / n;
            let cy = cell.polygon.iter().map(|p| p.y).sum::<f64>() / n;
            let (x, y) = flip(Point2::new(cx, cy));
            writeln!(
                out,
                r##"<text x="{x:.2}" y="{y:.2}" font-size="10" fill="#444444" text-anchor="middle">{}</text>"##,
                cell.id
            )
            .unwrap();
        }
    }
    // paths with start and goal markers
    for overlay in paths {
        if overlay.points.is_empty() {
            continue;
        }
        let pts: String = overlay
            .points
            .iter()
            .map(|p| {
                let (x, y) = flip(p.xy());
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            out,
            r#"<polyline points="{pts}" fill="none" stroke="{}" stroke-width="2"/>"#,
            overlay.color
        )
        .unwrap();
        let (sx, sy) = flip(overlay.points[0].xy());
        let (gx, gy) = flip(overlay.points[overlay.points.len() - 1].xy());
        writeln!(
            out,
            r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="4" fill="{}"/>"#,
            overlay.color
        )
        .unwrap();
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="{}"/>"#,
            gx - 4.0,
            gy - 4.0,
            overlay.color
        )
        .unwrap();
        if !overlay.label.is_empty() {
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{}">{}</text>"#,
                sx + 6.0,
                sy - 6.0,
                overlay.color,
                overlay.label
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}
