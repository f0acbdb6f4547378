use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use qvul_core::oracle::NoiseSpec;
use qvul_core::weight::{sweep_plan, DEFAULT_BIN_WIDTH};
use qvul_core::{analyze, CqvPlan, Experiment, WeightModel};
use serde::{Deserialize, Serialize};

use super::emit_json;
use super::oracle::expected_output;
use crate::inputs::{label_for, load_calibration, load_circuit, DeviceArgs};
use crate::manifest::RunManifest;

#[derive(Debug, Subcommand)]
pub enum WeightCommand {
    /// Evaluate 1-CQV over the 101-point weight grid against a measured SR.
    Sweep(SweepArgs),
    /// Fit a depth-binned weight model from sweep results.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[arg(long)]
    pub calib: PathBuf,
    /// Measured success rate; the oracle supplies it when omitted.
    #[arg(long)]
    pub real_sr: Option<f64>,
    /// Oracle shots when no SR is given.
    #[arg(long, default_value_t = 8192)]
    pub shots: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Correct output for the oracle (else the `// expected:` comment).
    #[arg(long)]
    pub expected: Option<String>,
    /// Experiment id recorded in the runs file (file stem by default).
    #[arg(long)]
    pub id: Option<String>,
    /// Sweep CSV: weight, prediction, abs_error.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Runs file to add this experiment to; created when missing.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// JSON summary (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Runs file: a JSON array of `{id, depth, best_weight}`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Machine name stored in the model.
    #[arg(long, default_value = "unknown")]
    pub machine: String,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SweepSummary {
    manifest: RunManifest,
    id: String,
    depth: usize,
    real_sr: f64,
    real_sr_source: &'static str,
    best_weight: f64,
    best_prediction: f64,
    best_abs_error: f64,
}

#[derive(Serialize)]
struct ModelOutput<'a> {
    #[serde(flatten)]
    model: &'a WeightModel,
    manifest: RunManifest,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RunsFile {
    List(Vec<Experiment>),
    Wrapped { experiments: Vec<Experiment> },
}

fn read_runs(text: &str) -> Result<Vec<Experiment>> {
    let runs: RunsFile = serde_json::from_str(text).map_err(qvul_core::Error::from)?;
    Ok(match runs {
        RunsFile::List(v) | RunsFile::Wrapped { experiments: v } => v,
    })
}

fn append_run(path: &Path, exp: Experiment) -> Result<()> {
    let mut runs = if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        read_runs(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        Vec::new()
    };
    match runs.iter_mut().find(|e| e.id == exp.id) {
        Some(slot) => *slot = exp,
        None => runs.push(exp),
    }
    let mut text = serde_json::to_string_pretty(&runs)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cmd: WeightCommand) -> Result<()> {
    match cmd {
        WeightCommand::Sweep(a) => sweep(a),
        WeightCommand::Fit(a) => fit(a),
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let config = serde_json::json!({
        "device": args.device.describe(),
        "real_sr": args.real_sr,
        "shots": args.shots,
        "expected": args.expected,
    });
    let seed = args.real_sr.is_none().then_some(args.seed);
    let mut manifest = RunManifest::new("weight sweep", config, seed);
    let (circuit, text) = load_circuit(&args.circuit, &args.device, &mut manifest)?;
    let snapshot = load_calibration(&args.calib, &mut manifest)?;
    let analysis = analyze(&circuit, None)?;

    let (real_sr, source) = match args.real_sr {
        Some(sr) => (sr, "given"),
        None => {
            let expected = expected_output(args.expected.as_deref(), &text)?;
            let schedule = analysis.table.schedule();
            let noise = NoiseSpec::from_snapshot(schedule, &snapshot)?;
            let r = qvul_core::oracle::run_with_noise(schedule, &noise, args.shots, args.seed, &expected)?;
            (r.sr, "oracle")
        }
    };
    if !(0.0..=1.0).contains(&real_sr) {
        bail!(qvul_core::Error::WeightModel(format!(
            "success rate {real_sr} outside [0, 1]"
        )));
    }
    let plan = CqvPlan::new(&analysis.ace, &analysis.table, &snapshot)?;
    let result = sweep_plan(&plan, real_sr)?;
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        result.write_csv(std::io::BufWriter::new(file))?;
    }
    let id = args.id.clone().unwrap_or_else(|| label_for(&args.circuit));
    let depth = analysis.table.depth();
    if let Some(path) = &args.runs {
        append_run(
            path,
            Experiment {
                id: id.clone(),
                depth,
                best_weight: result.best_weight,
            },
        )?;
    }
    let best = result.best();
    emit_json(
        args.out.as_deref(),
        &SweepSummary {
            manifest,
            id,
            depth,
            real_sr,
            real_sr_source: source,
            best_weight: best.weight,
            best_prediction: best.prediction,
            best_abs_error: best.abs_error,
        },
    )
}

fn fit(args: FitArgs) -> Result<()> {
    let config = serde_json::json!({ "machine": args.machine, "bin_width": args.bin_width });
    let mut manifest = RunManifest::new("weight fit", config, None);
    let text = manifest.read(&args.input)?;
    let runs = read_runs(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    let model = WeightModel::fit_with_width(&args.machine, &runs, args.bin_width)?;
    emit_json(
        args.out.as_deref(),
        &ModelOutput {
            model: &model,
            manifest,
        },
    )
}
