//! Loading circuits, devices and calibrations from disk.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use qvul_core::{parse_compiled, parse_qasm, CalibrationSnapshot, CompiledCircuit, DeviceTopology};

use crate::manifest::RunManifest;

#[derive(Debug, Clone, Default, Args)]
pub struct DeviceArgs {
    /// Built-in device: line-N, full-N, grid-RxC, hexagon-27, heavy-hex-127.
    #[arg(long, conflicts_with = "topology")]
    pub device: Option<String>,
    /// Topology JSON file `{name, n, edges}`.
    #[arg(long)]
    pub topology: Option<PathBuf>,
}

impl DeviceArgs {
    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "device": self.device,
            "topology": self.topology.as_ref().map(|p| p.display().to_string()),
        })
    }

    /// Explicit flags first, then the circuit's `// device:` comment.
    pub fn resolve(&self, manifest: &mut RunManifest, qasm: Option<&str>) -> Result<Option<DeviceTopology>> {
        if let Some(name) = &self.device {
            return Ok(Some(DeviceTopology::by_name(name)?));
        }
        if let Some(path) = &self.topology {
            let text = manifest.read(path)?;
            let topo: DeviceTopology = serde_json::from_str(&text)
                .map_err(qvul_core::Error::from)
                .with_context(|| format!("parsing {}", path.display()))?;
            return Ok(Some(topo));
        }
        match qasm.and_then(|q| comment_value(q, "device")) {
            Some(name) => Ok(Some(DeviceTopology::by_name(name)?)),
            None => Ok(None),
        }
    }
}

/// Value of a `// key: value` comment line.
pub fn comment_value<'a>(qasm: &'a str, key: &str) -> Option<&'a str> {
    qasm.lines().find_map(|line| {
        let rest = line.trim().strip_prefix("//")?.trim_start();
        let value = rest.strip_prefix(key)?.trim_start().strip_prefix(':')?;
        Some(value.trim())
    })
}

/// A compiled circuit on the resolved device, or on a fully connected
/// device sized to the register when none is known.
pub fn load_circuit(path: &Path, device: &DeviceArgs, manifest: &mut RunManifest) -> Result<(CompiledCircuit, String)> {
    let text = manifest.read(path)?;
    let topo = match device.resolve(manifest, Some(&text))? {
        Some(topo) => topo,
        None => {
            let n = parse_qasm(&text)
                .with_context(|| format!("parsing {}", path.display()))?
                .num_qubits();
            DeviceTopology::fully_connected(n)
        }
    };
    let circuit = parse_compiled(&text, &topo).with_context(|| format!("parsing {}", path.display()))?;
    Ok((circuit, text))
}

/// Entries the circuit never touches may be absent; missing ones surface
/// when an estimator asks for them.
pub fn load_calibration(path: &Path, manifest: &mut RunManifest) -> Result<CalibrationSnapshot> {
    let text = manifest.read(path)?;
    let snapshot = CalibrationSnapshot::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    for w in snapshot.warnings() {
        log::warn!("{}: {w}", path.display());
    }
    Ok(snapshot)
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

pub fn label_for(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments() {
        let q = "// device: grid-3x3\n// expected:0101\nOPENQASM 2.0;";
        assert_eq!(comment_value(q, "device"), Some("grid-3x3"));
        assert_eq!(comment_value(q, "expected"), Some("0101"));
        assert_eq!(comment_value(q, "seed"), None);
    }
}
