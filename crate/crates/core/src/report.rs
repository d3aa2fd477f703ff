//! Structured output of the verification harnesses: per-cube rows, summary
//! statistics, CSV and JSON emission.
//!
//! Serialized artifacts are deterministic: same inputs and seed give
//! byte-identical CSV and JSON regardless of thread count. Wall-clock
//! runtime is kept in memory only and never serialized.

use serde::{Deserialize, Serialize};

use crate::grid::CubeSpec;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Degenerate-ratio markers for a single row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowFlag {
    /// Finite ratio.
    Ok,
    /// lhs = rhs = 0; ratio reported as 0, the inequality is trivially
    /// satisfiable on this cube.
    ZeroOverZero,
    /// lhs > 0 with rhs = 0; excluded from the max but counted. Indicates an
    /// invalid (u, mu) pairing for Poincaré-type scans.
    InfiniteRatio,
    /// Gradient domination violation marker: a zero right side with a
    /// nonzero left side where the theory forbids it.
    Impossible,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::ZeroOverZero => "zero-over-zero",
            RowFlag::InfiniteRatio => "infinite",
            RowFlag::Impossible => "impossible",
        }
    }
}

/// One evaluated cube (or cell, for pointwise checks: side 1 and the cell
/// index as anchor).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub anchor: Vec<i64>,
    pub side: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Finite value, or +inf for flagged rows (never serialized to JSON).
    pub ratio: f64,
    pub flag: RowFlag,
}

impl ReportRow {
    /// Apply the ratio conventions: 0/0 -> 0 (flagged), x/0 -> +inf
    /// (flagged), else the plain quotient.
    pub fn evaluate(cube: &CubeSpec, lhs: f64, rhs: f64) -> Self {
        let (ratio, flag) = ratio_with_flags(lhs, rhs);
        ReportRow {
            anchor: cube.anchor.clone(),
            side: cube.side,
            lhs,
            rhs,
            ratio,
            flag,
        }
    }
}

pub fn ratio_with_flags(lhs: f64, rhs: f64) -> (f64, RowFlag) {
    if rhs == 0.0 {
        if lhs == 0.0 {
            (0.0, RowFlag::ZeroOverZero)
        } else {
            (f64::INFINITY, RowFlag::InfiniteRatio)
        }
    } else {
        (lhs / rhs, RowFlag::Ok)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportSummary {
    pub rows: usize,
    /// Maximum over rows with a finite ratio; 0 when no finite row exists.
    pub max_finite_ratio: f64,
    /// Cube attaining the max, as (anchor, side).
    pub argmax_anchor: Option<Vec<i64>>,
    pub argmax_side: Option<usize>,
    pub infinite_flags: usize,
    pub zero_over_zero: usize,
    pub impossible_flags: usize,
    /// For norm-ratio checks (BMO, Hölder): sup-norm of the output over
    /// sup-norm of the input. Distinct from the rowwise max ratio.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_ratio: Option<f64>,
}

impl ReportSummary {
    pub fn from_rows(rows: &[ReportRow]) -> Self {
        let mut s = ReportSummary { rows: rows.len(), ..Default::default() };
        for row in rows {
            match row.flag {
                RowFlag::Ok => {
                    if row.ratio > s.max_finite_ratio {
                        s.max_finite_ratio = row.ratio;
                        s.argmax_anchor = Some(row.anchor.clone());
                        s.argmax_side = Some(row.side);
                    }
                }
                RowFlag::ZeroOverZero => s.zero_over_zero += 1,
                RowFlag::InfiniteRatio => s.infinite_flags += 1,
                RowFlag::Impossible => s.impossible_flags += 1,
            }
        }
        s
    }
}

/// Full result of one verification scenario.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub scenario: String,
    pub ndim: usize,
    pub shape: Vec<usize>,
    pub cell_width: f64,
    /// Resolved configuration, embedded so the artifact is self-describing.
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub summary: ReportSummary,
    /// Pre-flight empirical Poincaré constant of the input pair, when the
    /// harness computes one.
    pub input_constant: Option<f64>,
    /// summary.max_finite_ratio / input_constant.
    pub constant_ratio: Option<f64>,
    /// The operators act on |u|; set when the input had negative cells.
    pub negative_input: bool,
    /// In-memory only; excluded from CSV/JSON so reruns are byte-identical.
    pub runtime_ms: Option<u64>,
}

impl VerificationReport {
    pub fn new(
        scenario: impl Into<String>,
        ndim: usize,
        shape: Vec<usize>,
        cell_width: f64,
        rows: Vec<ReportRow>,
    ) -> Self {
        let summary = ReportSummary::from_rows(&rows);
        VerificationReport {
            scenario: scenario.into(),
            ndim,
            shape,
            cell_width,
            config: serde_json::Value::Null,
            rows,
            summary,
            input_constant: None,
            constant_ratio: None,
            negative_input: false,
            runtime_ms: None,
        }
    }

    /// CSV rows: anchor (space-separated), side, lhs, rhs, ratio, flag.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str("anchor,side,lhs,rhs,ratio,flag\n");
        for row in &self.rows {
            let anchor = row
                .anchor
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let ratio = if row.ratio.is_finite() {
                format_float(row.ratio)
            } else {
                "inf".to_string()
            };
            out.push_str(&format!(
                "{anchor},{side},{lhs},{rhs},{ratio},{flag}\n",
                side = row.side,
                lhs = format_float(row.lhs),
                rhs = format_float(row.rhs),
                flag = row.flag.as_str(),
            ));
        }
        out
    }

    /// Summary as a JSON value; keys are sorted by the serializer, floats
    /// print shortest-roundtrip, so the text is reproducible.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "scenario": self.scenario,
            "ndim": self.ndim,
            "shape": self.shape,
            "cell_width": self.cell_width,
            "config": self.config,
            "summary": self.summary,
            "input_constant": self.input_constant,
            "constant_ratio": self.constant_ratio,
            "negative_input": self.negative_input,
        })
    }

    pub fn summary_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.summary_json()).expect("report serialization")
    }
}

/// Shortest-roundtrip decimal form; the same bits always print the same text.
pub fn format_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// One point of a refinement series: grid extent and the tracked metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub extent: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementSeries {
    pub metric: String,
    pub points: Vec<RefinementPoint>,
    /// Relative change between the last two points.
    pub last_pair_drift: Option<f64>,
}

impl RefinementSeries {
    pub fn new(metric: impl Into<String>, points: Vec<RefinementPoint>) -> Self {
        let last_pair_drift = match points.len() {
            0 | 1 => None,
            n => {
                let a = points[n - 2].value;
                let b = points[n - 1].value;
                Some(relative_drift(a, b))
            }
        };
        RefinementSeries { metric: metric.into(), points, last_pair_drift }
    }
}

/// |b - a| / |a|; 0 when both vanish, +inf when only `a` does.
pub fn relative_drift(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        if b == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (b - a).abs() / a.abs()
    }
}
