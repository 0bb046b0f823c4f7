//! Solve reports: the JSON machine format plus the aligned human table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Comparison tolerance for percent errors: values within this relative
/// band of the reference count as exact.
pub const DELTA_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub format_version: u32,
    pub instance: String,
    pub method: String,
    pub n: usize,
    pub realized_cost: f64,
    pub bounded_cost: f64,
    pub wall_time_s: f64,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proved_optimal_on_matrix: Option<bool>,
    /// Lower bounds computed alongside the solve, keyed by scheme name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lower_bounds: BTreeMap<String, f64>,
    /// Optimum used for the delta columns, when supplied or computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_cost: Option<f64>,
    /// `(optimal - best lower bound) / optimal * 100`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_lower_pct: Option<f64>,
    /// `(realized - optimal) / optimal * 100`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_upper_pct: Option<f64>,
    pub order: Vec<usize>,
    pub waypoints: Vec<Vec<f64>>,
}

/// Heuristic percent error vs the optimum, zeroed inside the tolerance band.
pub fn delta_upper(heuristic: f64, optimal: f64) -> f64 {
    if (heuristic - optimal).abs() <= DELTA_TOLERANCE * optimal.abs() {
        return 0.0;
    }
    (heuristic - optimal) / optimal * 100.0
}

/// Lower-bound percent error vs the optimum, zeroed inside the tolerance
/// band.
pub fn delta_lower(lower: f64, optimal: f64) -> f64 {
    if (optimal - lower).abs() <= DELTA_TOLERANCE * optimal.abs() {
        return 0.0;
    }
    (optimal - lower) / optimal * 100.0
}

impl SolveReport {
    pub fn attach_oracle(&mut self, optimal: f64) {
        self.oracle_cost = Some(optimal);
        self.delta_upper_pct = Some(delta_upper(self.realized_cost, optimal));
        if let Some(best_lower) = self
            .lower_bounds
            .values()
            .copied()
            .fold(None::<f64>, |acc, v| Some(acc.map_or(v, |a| a.max(v))))
        {
            self.delta_lower_pct = Some(delta_lower(best_lower, optimal));
        }
    }

    pub fn human_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("instance".into(), self.instance.clone()),
            ("method".into(), self.method.clone()),
            ("targets".into(), self.n.to_string()),
            ("realized cost".into(), format!("{:.6}", self.realized_cost)),
            ("bounded cost".into(), format!("{:.6}", self.bounded_cost)),
            ("wall time [s]".into(), format!("{:.3}", self.wall_time_s)),
            ("nodes".into(), self.nodes.to_string()),
        ];
        if let Some(p) = self.proved_optimal_on_matrix {
            rows.push(("proved on matrix".into(), p.to_string()));
        }
        for (k, v) in &self.lower_bounds {
            rows.push((format!("bound {k}"), format!("{v:.6}")));
        }
        if let Some(o) = self.oracle_cost {
            rows.push(("oracle cost".into(), format!("{o:.6}")));
        }
        if let Some(d) = self.delta_lower_pct {
            rows.push(("delta lower [%]".into(), format!("{d:.4}")));
        }
        if let Some(d) = self.delta_upper_pct {
            rows.push(("delta upper [%]".into(), format!("{d:.4}")));
        }
        rows.push((
            "tour".into(),
            self.order.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
        ));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:width$}  {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas_follow_the_definitions() {
        assert_eq!(delta_upper(11.0, 10.0), 10.0);
        assert_eq!(delta_lower(9.0, 10.0), 10.0);
        // Inside the tolerance band both collapse to exactly zero.
        assert_eq!(delta_upper(10.0 + 5e-4, 10.0), 0.0);
        assert_eq!(delta_lower(10.0 - 5e-4, 10.0), 0.0);
        assert!(delta_upper(10.003, 10.0) > 0.0);
    }

    #[test]
    fn report_round_trips_through_json() {
        let mut r = SolveReport {
            format_version: 1,
            instance: "foo.txt".into(),
            method: "bbb".into(),
            n: 5,
            realized_cost: 12.5,
            bounded_cost: 11.0,
            wall_time_s: 0.25,
            nodes: 42,
            proved_optimal_on_matrix: Some(true),
            lower_bounds: BTreeMap::from([("WOT-B".to_string(), 11.5)]),
            oracle_cost: None,
            delta_lower_pct: None,
            delta_upper_pct: None,
            order: vec![0, 2, 1, 3, 4],
            waypoints: vec![vec![0.0, 1.0]; 5],
        };
        r.attach_oracle(12.0);
        let text = serde_json::to_string_pretty(&r).unwrap();
        let back: SolveReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.order, r.order);
        assert_eq!(back.delta_upper_pct, r.delta_upper_pct);
        assert!(r.human_table().contains("delta upper"));
    }
}
