use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use qvul_core::oracle::{run_with_noise, NoiseSpec};
use qvul_core::{
    compare_suite, schedule, CompareSummary, Error, OracleSettings, SrResult, SuiteCircuit, WeightChoice, WeightModel,
};
use serde::{Deserialize, Serialize};

use super::emit_json;
use crate::inputs::{comment_value, label_for, load_calibration, load_circuit, DeviceArgs};
use crate::manifest::RunManifest;

/// The `--expected` flag, else the circuit's `// expected:` comment.
pub fn expected_output(flag: Option<&str>, qasm: &str) -> Result<String> {
    flag.or_else(|| comment_value(qasm, "expected"))
        .map(str::to_string)
        .ok_or_else(|| {
            Error::Oracle("no expected output: pass --expected or add a `// expected:` comment".into()).into()
        })
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Calibration snapshot JSON; noiseless when omitted.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long, default_value_t = 8192)]
    pub shots: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Correct output bit string, clbit 0 first.
    #[arg(long)]
    pub expected: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct OracleOutput {
    manifest: RunManifest,
    label: String,
    expected: String,
    #[serde(flatten)]
    result: SrResult,
}

pub fn run_oracle(args: OracleArgs) -> Result<()> {
    let config = serde_json::json!({
        "device": args.device.describe(),
        "shots": args.shots,
        "expected": args.expected,
    });
    let mut manifest = RunManifest::new("oracle", config, Some(args.seed));
    let (circuit, text) = load_circuit(&args.circuit, &args.device, &mut manifest)?;
    let expected = expected_output(args.expected.as_deref(), &text)?;
    let sched = schedule(&circuit);
    let noise = match &args.calib {
        Some(p) => NoiseSpec::from_snapshot(&sched, &load_calibration(p, &mut manifest)?)?,
        None => NoiseSpec::noiseless(&sched),
    };
    let result = run_with_noise(&sched, &noise, args.shots, args.seed, &expected)?;
    emit_json(
        args.out.as_deref(),
        &OracleOutput {
            manifest,
            label: label_for(&args.circuit),
            expected,
            result,
        },
    )
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Suite manifest JSON; paths inside are relative to it.
    #[arg(long)]
    pub suite: PathBuf,
    /// Per-circuit table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn default_shots() -> u64 {
    OracleSettings::default().shots
}

fn default_seed() -> u64 {
    OracleSettings::default().seed
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub calibration: PathBuf,
    #[serde(default)]
    pub device: Option<String>,
    #[serde(default)]
    pub topology: Option<PathBuf>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    pub circuits: Vec<SuiteEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    #[serde(default)]
    pub id: Option<String>,
    pub path: PathBuf,
    #[serde(default)]
    pub expected: Option<String>,
}

#[derive(Serialize)]
struct CompareOutput {
    manifest: RunManifest,
    #[serde(flatten)]
    summary: CompareSummary,
}

pub fn run_compare(args: CompareArgs) -> Result<()> {
    let suite_text =
        std::fs::read_to_string(&args.suite).with_context(|| format!("reading {}", args.suite.display()))?;
    let suite: SuiteFile = serde_json::from_str(&suite_text)
        .map_err(Error::from)
        .with_context(|| format!("parsing {}", args.suite.display()))?;
    if suite.weight.is_some() && suite.model.is_some() {
        return Err(Error::WeightModel("suite sets both `weight` and `model`".into()).into());
    }
    let base = args.suite.parent().map(|p| p.to_path_buf()).unwrap_or_default();
    let config = serde_json::to_value(&suite)?;
    let mut manifest = RunManifest::new("compare", config, Some(suite.seed));
    manifest.base = Some(base.clone());
    manifest.record(&args.suite, suite_text.as_bytes());

    let device = DeviceArgs {
        device: suite.device.clone(),
        topology: suite.topology.as_ref().map(|p| base.join(p)),
    };
    let snapshot = load_calibration(&base.join(&suite.calibration), &mut manifest)?;
    let weight = match (&suite.model, suite.weight) {
        (Some(p), _) => {
            let text = manifest.read(&base.join(p))?;
            WeightChoice::Model(WeightModel::from_json(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        (None, Some(w)) if !(0.0..=1.0).contains(&w) => return Err(Error::WeightOutOfRange(w).into()),
        (None, w) => WeightChoice::Fixed(w.unwrap_or(qvul_core::weight::DEFAULT_WEIGHT)),
    };
    let mut items = Vec::with_capacity(suite.circuits.len());
    for entry in &suite.circuits {
        let (circuit, text) = load_circuit(&base.join(&entry.path), &device, &mut manifest)?;
        let expected = expected_output(entry.expected.as_deref(), &text)
            .with_context(|| format!("suite entry {}", entry.path.display()))?;
        items.push(SuiteCircuit {
            id: entry.id.clone().unwrap_or_else(|| label_for(&entry.path)),
            circuit,
            expected,
        });
    }
    let settings = OracleSettings {
        shots: suite.shots,
        seed: suite.seed,
    };
    let summary = compare_suite(&items, &snapshot, settings, &weight)?;
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        summary.write_csv(std::io::BufWriter::new(file))?;
    }
    emit_json(args.out.as_deref(), &CompareOutput { manifest, summary })
}
