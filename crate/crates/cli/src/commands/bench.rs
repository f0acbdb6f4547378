use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use qvul_core::{
    correct_output, generate, parse_qasm, serialize_compiled, serialize_qasm, transpile, BenchmarkSpec, CompileConfig,
    DjOracle, LayoutMethod, RoutingMethod,
};

use crate::inputs::{comment_value, write_output, DeviceArgs};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Bv,
    Dj,
    Qft,
    Qpe,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub name: Family,
    /// Total qubits, including the assisting qubit where the family has one.
    #[arg(long)]
    pub size: usize,
    /// BV hidden string or balanced DJ mask (size - 1 bits).
    #[arg(long)]
    pub secret: Option<String>,
    /// Constant DJ oracle with this output bit.
    #[arg(long, conflicts_with = "secret")]
    pub constant: Option<u8>,
    /// QFT input bit string (size bits).
    #[arg(long)]
    pub input: Option<String>,
    /// Run the QFT in the forward direction.
    #[arg(long)]
    pub forward: bool,
    /// QPE eigenphase numerator over 2^(size - 1).
    #[arg(long)]
    pub phase: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BenchArgs {
    fn spec(&self) -> BenchmarkSpec {
        let size = self.size;
        match self.name {
            Family::Bv => match &self.secret {
                Some(hidden) => BenchmarkSpec::Bv {
                    size,
                    hidden: hidden.clone(),
                },
                None => BenchmarkSpec::bv(size),
            },
            Family::Dj => match (&self.secret, self.constant) {
                (Some(mask), _) => BenchmarkSpec::Dj {
                    size,
                    oracle: DjOracle::Balanced { mask: mask.clone() },
                },
                (None, Some(v)) => BenchmarkSpec::Dj {
                    size,
                    oracle: DjOracle::Constant { value: v != 0 },
                },
                (None, None) => BenchmarkSpec::dj_balanced(size),
            },
            Family::Qft => {
                let mut spec = BenchmarkSpec::qft(size);
                if let BenchmarkSpec::Qft { input, inverse, .. } = &mut spec {
                    if let Some(i) = &self.input {
                        *input = i.clone();
                    }
                    *inverse = !self.forward;
                }
                spec
            }
            Family::Qpe => match self.phase {
                Some(phase) => BenchmarkSpec::Qpe { size, phase },
                None => BenchmarkSpec::qpe(size),
            },
        }
    }
}

pub fn run_bench(args: BenchArgs) -> Result<()> {
    let spec = args.spec();
    let circuit = generate(&spec)?;
    let expected = correct_output(&spec)?;
    let text = format!(
        "// benchmark: {}\n// expected: {expected}\n{}",
        spec.label(),
        serialize_qasm(&circuit)
    );
    write_output(args.out.as_deref(), &text)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Layout {
    Trivial,
    Dense,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Routing {
    Greedy,
    Lookahead,
}

#[derive(Debug, Args)]
pub struct TranspileArgs {
    /// Logical OpenQASM circuit.
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[arg(long, value_enum, default_value = "trivial")]
    pub layout: Layout,
    #[arg(long, value_enum, default_value = "greedy")]
    pub routing: Routing,
    /// Optimization level 0-2.
    #[arg(long, default_value_t = 1)]
    pub opt: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn compile_config(layout: Layout, routing: Routing, opt: u8, seed: u64) -> CompileConfig {
    CompileConfig::new(
        match layout {
            Layout::Trivial => LayoutMethod::Trivial,
            Layout::Dense => LayoutMethod::Dense,
        },
        match routing {
            Routing::Greedy => RoutingMethod::GreedyNearest,
            Routing::Lookahead => RoutingMethod::Lookahead,
        },
        opt,
        seed,
    )
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn run_transpile(args: TranspileArgs) -> Result<()> {
    let text = read(&args.circuit)?;
    let logical = parse_qasm(&text).with_context(|| format!("parsing {}", args.circuit.display()))?;
    let mut scratch = RunManifest::new("transpile", serde_json::Value::Null, None);
    let device = args
        .device
        .resolve(&mut scratch, None)?
        .context("transpile needs --device or --topology")?;
    let config = compile_config(args.layout, args.routing, args.opt, args.seed);
    let compiled = transpile(&logical, &device, &config)?;
    let mut out = String::new();
    for key in ["benchmark", "expected"] {
        if let Some(v) = comment_value(&text, key) {
            out.push_str(&format!("// {key}: {v}\n"));
        }
    }
    out.push_str(&format!("// config: {}\n", config.label()));
    out.push_str(&serialize_compiled(&compiled));
    write_output(args.out.as_deref(), &out)
}
