//! SVG body plans.

use crate::error::Result;
use crate::geometry::{from_point_cloud, GridSpec, HullGrid, HullPointCloud};
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 60.0;

/// Body plan of `h`: one polyline per station from the waterline centre out
/// along the section and back to the keel centre, in metres.
pub fn lineplan_svg(h: &HullGrid<f64>) -> String {
    let grid = &h.grid;
    let draft = h.draft_nominal;
    let half_beam = h.max_half_breadth();
    let extent_y = half_beam.max(f64::MIN_POSITIVE);
    let scale = (WIDTH - 2.0 * MARGIN) / extent_y.max(draft);
    let height = (draft * scale + 2.0 * MARGIN).ceil();
    let px = |y: f64| MARGIN + y * scale;
    let py = |z: f64| MARGIN - z * scale;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(s, r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, px(0.0), py(0.0), px(extent_y), py(0.0));
    let _ = writeln!(s, r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, px(0.0), py(0.0), px(0.0), py(-draft));
    let ticks = 4;
    for k in 0..=ticks {
        let y = extent_y * k as f64 / ticks as f64;
        let z = -draft * k as f64 / ticks as f64;
        let _ = writeln!(s, r#"<line x1="{0:.3}" y1="{1:.3}" x2="{0:.3}" y2="{2:.3}"/>"#, px(y), py(0.0), py(0.0) - 5.0);
        let _ = writeln!(s, r#"<line x1="{0:.3}" y1="{1:.3}" x2="{2:.3}" y2="{1:.3}"/>"#, px(0.0), py(z), px(0.0) - 5.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11" fill="black">"#);
    for k in 0..=ticks {
        let y = extent_y * k as f64 / ticks as f64;
        let z = -draft * k as f64 / ticks as f64;
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{y:.2}</text>"#, px(y), py(0.0) - 8.0);
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{z:.2}</text>"#, px(0.0) - 8.0, py(z) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}">y [m] (half-breadth {half_beam:.3} m), z [m] (draft {draft:.3} m), L = {:.2} m</text>"#,
        MARGIN,
        height - 15.0,
        h.length
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g stroke="navy" stroke-width="1" fill="none">"#);
    let zs = grid.z_stations();
    for i in 0..grid.nx() {
        let mut pts = format!("{:.3},{:.3}", px(0.0), py(0.0));
        for (j, &zeta) in zs.iter().enumerate() {
            let _ = write!(pts, " {:.3},{:.3}", px(h.at(i, j)), py(-draft * zeta));
        }
        let _ = write!(pts, " {:.3},{:.3}", px(0.0), py(-draft));
        let _ = writeln!(s, r#"<polyline data-station="{i}" points="{pts}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

pub fn emit_lineplan_svg(h: &HullGrid<f64>, path: &Path) -> Result<()> {
    std::fs::write(path, lineplan_svg(h))?;
    Ok(())
}

pub fn emit_cloud_lineplan_svg(c: &HullPointCloud<f64>, grid: &GridSpec<f64>, path: &Path) -> Result<()> {
    emit_lineplan_svg(&from_point_cloud(c, grid)?, path)
}
