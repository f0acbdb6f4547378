//! Best-weight sweeps and the depth-binned heuristic weight.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ace::AceMap;
use crate::calib::CalibrationSnapshot;
use crate::cycle::BookingTable;
use crate::error::{Error, Result};
use crate::estimators::CqvPlan;

/// Sweep resolution: weights k / 100 for k in 0..=100.
pub const SWEEP_STEPS: usize = 100;
/// Weight used when no model is available.
pub const DEFAULT_WEIGHT: f64 = 0.1;
pub const DEFAULT_BIN_WIDTH: usize = 25;
/// Clamp for zero best weights before taking logarithms.
pub const WEIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub weight: f64,
    pub prediction: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub real_sr: f64,
    pub best_weight: f64,
    pub points: Vec<SweepPoint>,
}

impl Sweep {
    pub fn best(&self) -> &SweepPoint {
        self.points
            .iter()
            .find(|p| p.weight == self.best_weight)
            .expect("best weight is one of the points")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["weight", "prediction", "abs_error"])?;
        for p in &self.points {
            w.write_record([
                format!("{:.2}", p.weight),
                p.prediction.to_string(),
                p.abs_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sweep_weights() -> impl Iterator<Item = f64> {
    (0..=SWEEP_STEPS).map(|k| k as f64 / SWEEP_STEPS as f64)
}

/// Evaluates every grid weight; the first minimum of the absolute error
/// wins, so ties resolve toward the smaller weight.
pub fn sweep_plan(plan: &CqvPlan, real_sr: f64) -> Result<Sweep> {
    if !(0.0..=1.0).contains(&real_sr) {
        return Err(Error::WeightModel(format!(
            "measured success rate {real_sr} outside [0, 1]"
        )));
    }
    let mut points = Vec::with_capacity(SWEEP_STEPS + 1);
    let mut best: Option<(f64, f64)> = None;
    for weight in sweep_weights() {
        let prediction = plan.evaluate(weight)?;
        let abs_error = (prediction - real_sr).abs();
        if best.is_none_or(|(_, e)| abs_error < e) {
            best = Some((weight, abs_error));
        }
        points.push(SweepPoint {
            weight,
            prediction,
            abs_error,
        });
    }
    Ok(Sweep {
        real_sr,
        best_weight: best.expect("non-empty grid").0,
        points,
    })
}

pub fn sweep_best_weight(
    ace: &AceMap,
    table: &BookingTable,
    snapshot: &CalibrationSnapshot,
    real_sr: f64,
) -> Result<Sweep> {
    sweep_plan(&CqvPlan::new(ace, table, snapshot)?, real_sr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: String,
    pub depth: usize,
    pub best_weight: f64,
}

/// Cycles `lo..=hi`; the last bin of a model has no upper end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthBin {
    pub lo: usize,
    pub hi: Option<usize>,
    pub weight: f64,
    /// Experiments that landed in this bin; zero when the weight was
    /// borrowed from the nearest populated bin.
    pub experiments: usize,
}

impl DepthBin {
    pub fn contains(&self, depth: usize) -> bool {
        depth >= self.lo && self.hi.is_none_or(|hi| depth <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightModel {
    pub machine: String,
    pub bin_width: usize,
    pub bins: Vec<DepthBin>,
    pub experiments: Vec<Experiment>,
}

fn bin_index(depth: usize, width: usize) -> usize {
    (depth.max(1) - 1) / width
}

impl WeightModel {
    pub fn fit(machine: &str, experiments: &[Experiment]) -> Result<Self> {
        Self::fit_with_width(machine, experiments, DEFAULT_BIN_WIDTH)
    }

    pub fn fit_with_width(machine: &str, experiments: &[Experiment], bin_width: usize) -> Result<Self> {
        if experiments.is_empty() {
            return Err(Error::WeightModel("no experiments to fit".into()));
        }
        if bin_width == 0 {
            return Err(Error::WeightModel("bin width must be positive".into()));
        }
        if let Some(e) = experiments.iter().find(|e| !(0.0..=1.0).contains(&e.best_weight)) {
            return Err(Error::WeightOutOfRange(e.best_weight));
        }
        let last = experiments.iter().map(|e| bin_index(e.depth, bin_width)).max().unwrap();
        let mut log_sum = vec![0.0; last + 1];
        let mut count = vec![0usize; last + 1];
        for e in experiments {
            let i = bin_index(e.depth, bin_width);
            log_sum[i] += e.best_weight.max(WEIGHT_FLOOR).ln();
            count[i] += 1;
        }
        let own: Vec<Option<f64>> = (0..=last)
            .map(|i| (count[i] > 0).then(|| (log_sum[i] / count[i] as f64).exp()))
            .collect();
        let populated: Vec<usize> = (0..=last).filter(|&i| own[i].is_some()).collect();
        let bins = (0..=last)
            .map(|i| {
                let src = own[i].map_or_else(
                    || *populated.iter().min_by_key(|&&j| (j.abs_diff(i), j)).unwrap(),
                    |_| i,
                );
                DepthBin {
                    lo: i * bin_width + 1,
                    hi: (i < last).then_some((i + 1) * bin_width),
                    weight: own[src].unwrap().min(1.0),
                    experiments: count[i],
                }
            })
            .collect();
        Ok(WeightModel {
            machine: machine.to_string(),
            bin_width,
            bins,
            experiments: experiments.to_vec(),
        })
    }

    pub fn choose(&self, depth: usize) -> f64 {
        let d = depth.max(1);
        self.bins
            .iter()
            .find(|b| b.contains(d))
            .or(self.bins.last())
            .map_or(DEFAULT_WEIGHT, |b| b.weight)
    }

    pub fn bin_for(&self, depth: usize) -> Option<&DepthBin> {
        let d = depth.max(1);
        self.bins.iter().find(|b| b.contains(d))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: WeightModel = serde_json::from_str(text)?;
        if model.bins.is_empty() {
            return Err(Error::WeightModel("model has no depth bins".into()));
        }
        if let Some(b) = model.bins.iter().find(|b| !(0.0..=1.0).contains(&b.weight)) {
            return Err(Error::WeightOutOfRange(b.weight));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn choose_weight(model: Option<&WeightModel>, depth: usize) -> f64 {
    model.map_or(DEFAULT_WEIGHT, |m| m.choose(depth))
}
