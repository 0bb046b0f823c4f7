//! Deterministic SVG drawings of 2-D instances: polytope outlines, the
//! realized tour polyline through the waypoints, and dotted bounded-witness
//! segments per tour edge, annotated with both costs.

use gcs_tsp::geometry::Polytope;
use gcs_tsp::instance::Instance;

use crate::report::SolveReport;
use crate::CliError;

/// Vertices of a 2-D polytope in counterclockwise order, via pairwise
/// boundary intersections filtered by feasibility.
pub fn polygon_vertices(p: &Polytope) -> Vec<(f64, f64)> {
    assert_eq!(p.dim(), 2);
    let m = p.rows();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..m {
        let (hi, gi) = p.halfspace(i);
        for j in i + 1..m {
            let (hj, gj) = p.halfspace(j);
            let det = hi[0] * hj[1] - hi[1] * hj[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (gi * hj[1] - gj * hi[1]) / det;
            let y = (hi[0] * gj - hj[0] * gi) / det;
            if p.max_violation(&[x, y]) <= 1e-7 {
                pts.push((x, y));
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
    if pts.len() < 3 {
        return pts;
    }
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    pts.sort_by(|a, b| {
        let aa = (a.1 - cy).atan2(a.0 - cx);
        let bb = (b.1 - cy).atan2(b.0 - cx);
        aa.partial_cmp(&bb).unwrap_or(std::cmp::Ordering::Equal)
    });
    pts
}

pub fn render_svg(inst: &Instance, report: &SolveReport) -> Result<String, CliError> {
    if inst.d != 2 {
        return Err(CliError::Guard(format!("render supports d=2 instances, got d={}", inst.d)));
    }
    let polygons: Vec<Vec<(f64, f64)>> = inst.sets.iter().map(polygon_vertices).collect();
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for &(x, y) in polygons.iter().flatten() {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    for w in &report.waypoints {
        min_x = min_x.min(w[0]);
        min_y = min_y.min(w[1]);
        max_x = max_x.max(w[0]);
        max_y = max_y.max(w[1]);
    }
    let pad = 0.6 + 0.02 * (max_x - min_x).max(max_y - min_y);
    min_x -= pad;
    min_y -= pad;
    max_x += pad;
    max_y += pad;
    let fy = |y: f64| max_y + min_y - y; // flip into SVG's downward y
    let fmt = |v: f64| format!("{v:.4}");

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        fmt(min_x),
        fmt(min_y),
        fmt(max_x - min_x),
        fmt(max_y - min_y)
    ));
    let sw = fmt(0.012 * (max_x - min_x).max(max_y - min_y));
    for (i, poly) in polygons.iter().enumerate() {
        let pts: Vec<String> = poly.iter().map(|&(x, y)| format!("{},{}", fmt(x), fmt(fy(y)))).collect();
        out.push_str(&format!(
            "  <polygon id=\"set{i}\" points=\"{}\" fill=\"#dce9f5\" stroke=\"#4a6785\" stroke-width=\"{sw}\"/>\n",
            pts.join(" ")
        ));
    }
    // Bounded-cost witness segments, one per tour edge, dotted.
    let n = report.order.len();
    let mut bounded_total = 0.0;
    if n >= 3 {
        for k in 0..n {
            let (u, v) = (report.order[k], report.order[(k + 1) % n]);
            let md = inst.sets[u]
                .min_distance(&inst.sets[v], 1e-7)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            bounded_total += md.cost;
            out.push_str(&format!(
                "  <line class=\"bounded\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#7a4a9a\" stroke-width=\"{sw}\" stroke-dasharray=\"0.08,0.08\"/>\n",
                fmt(md.witness_a.coords[0]),
                fmt(fy(md.witness_a.coords[1])),
                fmt(md.witness_b.coords[0]),
                fmt(fy(md.witness_b.coords[1])),
            ));
        }
    }
    // Realized tour: a closed polyline through the waypoints.
    if !report.waypoints.is_empty() {
        let mut pts: Vec<String> = report
            .order
            .iter()
            .map(|&v| {
                let w = &report.waypoints[v];
                format!("{},{}", fmt(w[0]), fmt(fy(w[1])))
            })
            .collect();
        pts.push(pts[0].clone());
        out.push_str(&format!(
            "  <polyline class=\"realized\" points=\"{}\" fill=\"none\" stroke=\"#2b5dd7\" stroke-width=\"{sw}\"/>\n",
            pts.join(" ")
        ));
        for (v, w) in report.waypoints.iter().enumerate() {
            out.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#2b5dd7\"><title>{v}</title></circle>\n",
                fmt(w[0]),
                fmt(fy(w[1])),
                fmt(0.02 * (max_x - min_x).max(max_y - min_y)),
            ));
        }
    }
    let th = fmt(0.035 * (max_x - min_x).max(max_y - min_y));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"{th}\" fill=\"#2b5dd7\">RC {}</text>\n",
        fmt(min_x + 0.2),
        fmt(min_y + 0.45),
        fmt(report.realized_cost)
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"{th}\" fill=\"#7a4a9a\">BC {}</text>\n",
        fmt(min_x + 0.2),
        fmt(min_y + 0.95),
        fmt(bounded_total)
    ));
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_vertices() {
        let b = Polytope::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let v = polygon_vertices(&b);
        assert_eq!(v.len(), 4);
        // Counterclockwise order around the centroid.
        let area: f64 = (0..4)
            .map(|i| {
                let (x1, y1) = v[i];
                let (x2, y2) = v[(i + 1) % 4];
                x1 * y2 - x2 * y1
            })
            .sum::<f64>()
            / 2.0;
        assert!((area - 1.0).abs() < 1e-9);
    }
}
