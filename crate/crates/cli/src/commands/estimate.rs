use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use qvul_core::weight::DEFAULT_WEIGHT;
use qvul_core::{analyze, estimate_report, EstimateReport, WeightModel};
use serde::Serialize;

use super::emit_json;
use crate::inputs::{label_for, load_calibration, load_circuit, DeviceArgs};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Compiled circuits; each one becomes a row of the plot CSV.
    #[arg(long, required = true, num_args = 1..)]
    pub circuit: Vec<PathBuf>,
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Calibration snapshot JSON.
    #[arg(long)]
    pub calib: PathBuf,
    /// Fixed CQV weight in [0, 1].
    #[arg(long, conflicts_with = "model")]
    pub weight: Option<f64>,
    /// Weight model from `qvul weight fit`; the weight follows circuit depth.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Measured success rates, one per circuit, for the plot CSV.
    #[arg(long, num_args = 1..)]
    pub real_sr: Vec<f64>,
    /// Row labels, one per circuit (file stems by default).
    #[arg(long, num_args = 1..)]
    pub label: Vec<String>,
    /// Keep per-qubit success traces in the JSON report.
    #[arg(long)]
    pub traces: bool,
    /// Per-qubit traces as CSV (label, virtual_qubit, cycle, success).
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
    /// Plot-ready CSV: label, real_sr, esp, one_minus_cqv.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// JSON report (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Estimate {
    label: String,
    circuit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    real_sr: Option<f64>,
    #[serde(flatten)]
    report: EstimateReport,
}

#[derive(Serialize)]
struct EstimateOutput {
    manifest: RunManifest,
    estimates: Vec<Estimate>,
}

pub fn run(args: EstimateArgs) -> Result<()> {
    let n = args.circuit.len();
    if !args.real_sr.is_empty() && args.real_sr.len() != n {
        bail!(qvul_core::Error::InvalidCircuit(format!(
            "{} --real-sr values for {n} circuits",
            args.real_sr.len()
        )));
    }
    if !args.label.is_empty() && args.label.len() != n {
        bail!(qvul_core::Error::InvalidCircuit(format!(
            "{} labels for {n} circuits",
            args.label.len()
        )));
    }
    if let Some(w) = args.weight {
        if !(0.0..=1.0).contains(&w) {
            bail!(qvul_core::Error::WeightOutOfRange(w));
        }
    }
    let keep_traces = args.traces || args.trace_csv.is_some();
    let config = serde_json::json!({
        "device": args.device.describe(),
        "weight": args.weight,
        "model": args.model.as_ref().map(|p| p.display().to_string()),
        "traces": keep_traces,
    });
    let mut manifest = RunManifest::new("estimate", config, None);
    let snapshot = load_calibration(&args.calib, &mut manifest)?;
    let model = match &args.model {
        Some(p) => {
            let text = manifest.read(p)?;
            Some(WeightModel::from_json(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };

    let mut estimates = Vec::with_capacity(n);
    for (i, path) in args.circuit.iter().enumerate() {
        let (circuit, _) = load_circuit(path, &args.device, &mut manifest)?;
        let analysis = analyze(&circuit, None)?;
        let depth = analysis.table.depth();
        let w = match (&model, args.weight) {
            (Some(m), _) => m.choose(depth),
            (None, Some(w)) => w,
            (None, None) => DEFAULT_WEIGHT,
        };
        let report = estimate_report(&analysis.ace, &analysis.table, &snapshot, w, keep_traces)
            .with_context(|| format!("estimating {}", path.display()))?;
        estimates.push(Estimate {
            label: args.label.get(i).cloned().unwrap_or_else(|| label_for(path)),
            circuit: path.display().to_string(),
            real_sr: args.real_sr.get(i).copied(),
            report,
        });
    }

    if let Some(path) = &args.plot {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["label", "real_sr", "esp", "one_minus_cqv"])?;
        for e in &estimates {
            w.write_record([
                e.label.clone(),
                e.real_sr.map_or_else(String::new, |v| v.to_string()),
                e.report.esp.to_string(),
                e.report.one_minus_cqv.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if let Some(path) = &args.trace_csv {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["label", "virtual_qubit", "cycle", "success"])?;
        for e in &estimates {
            for trace in e.report.traces.iter().flatten() {
                for (t, v) in trace.values.iter().enumerate() {
                    w.write_record([
                        e.label.clone(),
                        trace.virtual_qubit.to_string(),
                        t.to_string(),
                        v.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
    }
    if !args.traces {
        for e in &mut estimates {
            e.report.traces = None;
        }
    }
    emit_json(args.out.as_deref(), &EstimateOutput { manifest, estimates })
}
