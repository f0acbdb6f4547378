//! Predictions against oracle success rates over a suite of circuits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::CalibrationSnapshot;
use crate::circuit::CompiledCircuit;
use crate::error::Result;
use crate::estimators::{esp, CqvPlan};
use crate::oracle::{run_with_noise, NoiseSpec, SrResult};
use crate::pipeline::analyze;
use crate::weight::WeightModel;

#[derive(Debug, Clone)]
pub struct SuiteCircuit {
    pub id: String,
    pub circuit: CompiledCircuit,
    pub expected: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub shots: u64,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { shots: 8192, seed: 1 }
    }
}

#[derive(Debug, Clone)]
pub enum WeightChoice {
    Fixed(f64),
    Model(WeightModel),
}

impl WeightChoice {
    pub fn weight_for(&self, depth: usize) -> f64 {
        match self {
            WeightChoice::Fixed(w) => *w,
            WeightChoice::Model(m) => m.choose(depth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub id: String,
    pub depth: usize,
    pub cx_count: usize,
    pub oracle: SrResult,
    pub esp: f64,
    pub one_minus_cqv: f64,
    pub weight: f64,
    pub esp_abs_error: f64,
    pub cqv_abs_error: f64,
    /// Absolute error over the oracle rate; absent when the rate is zero.
    pub esp_rel_error: Option<f64>,
    pub cqv_rel_error: Option<f64>,
    /// The oracle's confidence interval contains both predictions, so the
    /// row cannot tell them apart.
    pub ambiguous: bool,
}

impl CompareRow {
    pub fn cqv_wins(&self) -> bool {
        self.cqv_abs_error < self.esp_abs_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub rows: Vec<CompareRow>,
    pub mean_esp_abs_error: f64,
    pub mean_cqv_abs_error: f64,
    /// Means over rows with a defined relative error.
    pub mean_esp_rel_error: Option<f64>,
    pub mean_cqv_rel_error: Option<f64>,
    pub cqv_wins: usize,
    pub decisive_rows: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl CompareSummary {
    pub fn from_rows(rows: Vec<CompareRow>) -> Self {
        let decisive: Vec<&CompareRow> = rows.iter().filter(|r| !r.ambiguous).collect();
        CompareSummary {
            mean_esp_abs_error: mean(rows.iter().map(|r| r.esp_abs_error)).unwrap_or(0.0),
            mean_cqv_abs_error: mean(rows.iter().map(|r| r.cqv_abs_error)).unwrap_or(0.0),
            mean_esp_rel_error: mean(rows.iter().filter_map(|r| r.esp_rel_error)),
            mean_cqv_rel_error: mean(rows.iter().filter_map(|r| r.cqv_rel_error)),
            cqv_wins: decisive.iter().filter(|r| r.cqv_wins()).count(),
            decisive_rows: decisive.len(),
            rows,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "id",
            "depth",
            "cx_count",
            "oracle_sr",
            "oracle_ci",
            "esp",
            "one_minus_cqv",
            "weight",
            "esp_abs_error",
            "cqv_abs_error",
            "esp_rel_error",
            "cqv_rel_error",
            "ambiguous",
        ])?;
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        for r in &self.rows {
            w.write_record([
                r.id.clone(),
                r.depth.to_string(),
                r.cx_count.to_string(),
                r.oracle.sr.to_string(),
                r.oracle.ci_half_width.to_string(),
                r.esp.to_string(),
                r.one_minus_cqv.to_string(),
                r.weight.to_string(),
                r.esp_abs_error.to_string(),
                r.cqv_abs_error.to_string(),
                opt(r.esp_rel_error),
                opt(r.cqv_rel_error),
                r.ambiguous.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn compare_row(
    item: &SuiteCircuit,
    snapshot: &CalibrationSnapshot,
    settings: OracleSettings,
    weight: &WeightChoice,
) -> Result<CompareRow> {
    let analysis = analyze(&item.circuit, None)?;
    let schedule = analysis.table.schedule();
    let noise = NoiseSpec::from_snapshot(schedule, snapshot)?;
    let oracle = run_with_noise(schedule, &noise, settings.shots, settings.seed, &item.expected)?;
    let esp = esp(&item.circuit, snapshot)?;
    let depth = analysis.table.depth();
    let w = weight.weight_for(depth);
    let one_minus_cqv = CqvPlan::new(&analysis.ace, &analysis.table, snapshot)?.evaluate(w)?;
    let esp_abs_error = (esp - oracle.sr).abs();
    let cqv_abs_error = (one_minus_cqv - oracle.sr).abs();
    let rel = |abs: f64| (oracle.sr > 0.0).then(|| abs / oracle.sr);
    let (lo, hi) = oracle.interval();
    let inside = |p: f64| lo <= p && p <= hi;
    Ok(CompareRow {
        id: item.id.clone(),
        depth,
        cx_count: item.circuit.cx_count(),
        esp,
        one_minus_cqv,
        weight: w,
        esp_abs_error,
        cqv_abs_error,
        esp_rel_error: rel(esp_abs_error),
        cqv_rel_error: rel(cqv_abs_error),
        ambiguous: inside(esp) && inside(one_minus_cqv),
        oracle,
    })
}

/// Rows come back in suite order whatever the worker count.
pub fn compare_suite(
    suite: &[SuiteCircuit],
    snapshot: &CalibrationSnapshot,
    settings: OracleSettings,
    weight: &WeightChoice,
) -> Result<CompareSummary> {
    let rows = suite
        .par_iter()
        .map(|item| compare_row(item, snapshot, settings, weight))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareSummary::from_rows(rows))
}
