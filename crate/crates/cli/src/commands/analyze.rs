use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use qvul_core::{analyze, EntanglementIntervals, QubitClass};
use serde::Serialize;

use super::emit_json;
use crate::inputs::{load_circuit, DeviceArgs};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Compiled OpenQASM circuit.
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Entanglement annotations `{"groups": [{"members": [...], "start", "end"}]}`.
    #[arg(long)]
    pub entanglement: Option<PathBuf>,
    /// Booking table as CSV, one row per (qubit, cycle).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON report (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ClassCounts {
    outputting: usize,
    assisting: usize,
    used_ancilla: usize,
    unused_ancilla: usize,
}

#[derive(Serialize)]
struct AnalyzeReport {
    manifest: RunManifest,
    depth: usize,
    num_physical: usize,
    cx_count: usize,
    ace_cells: usize,
    unace_cells: usize,
    fixpoint_sweeps: usize,
    classes: ClassCounts,
    booking: serde_json::Value,
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    let config = serde_json::json!({ "device": args.device.describe() });
    let mut manifest = RunManifest::new("analyze", config, None);
    let (circuit, _) = load_circuit(&args.circuit, &args.device, &mut manifest)?;
    let annotations = match &args.entanglement {
        Some(p) => {
            let text = manifest.read(p)?;
            Some(EntanglementIntervals::from_json(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let analysis = analyze(&circuit, annotations.as_ref())?;
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        analysis
            .table
            .write_csv(std::io::BufWriter::new(file), Some(&analysis.ace))?;
    }
    let classes = analysis.table.classes();
    let report = AnalyzeReport {
        manifest,
        depth: analysis.table.depth(),
        num_physical: analysis.table.num_physical(),
        cx_count: circuit.cx_count(),
        ace_cells: analysis.ace.ace_count(),
        unace_cells: analysis.ace.unace_count(),
        fixpoint_sweeps: analysis.ace.sweeps(),
        classes: ClassCounts {
            outputting: classes.count(QubitClass::OutputtingLogical),
            assisting: classes.count(QubitClass::AssistingLogical),
            used_ancilla: classes.count(QubitClass::UsedAncilla),
            unused_ancilla: classes.count(QubitClass::UnusedAncilla),
        },
        booking: analysis.table.to_json(Some(&analysis.ace)),
    };
    emit_json(args.out.as_deref(), &report)
}
