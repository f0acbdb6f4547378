//! Device calibration snapshots.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, GateKind};
use crate::error::{Error, Result};
use crate::topology::DeviceTopology;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GateErrors {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rz: Option<f64>,
    /// Falls back to `sx` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Falls back to `rz` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub id: usize,
    pub errors: GateErrors,
    pub meas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCalibration {
    pub pair: [usize; 2],
    pub cx: f64,
}

/// `victim_edge` loses success by `multiplier` whenever `edge` runs a CNOT
/// in the same cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkEntry {
    pub edge: [usize; 2],
    pub victim_edge: [usize; 2],
    pub multiplier: f64,
}

/// Ranges for [`CalibrationSnapshot::synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub single: (f64, f64),
    /// Per-cycle error of an idling qubit.
    pub idle: (f64, f64),
    pub cx: (f64, f64),
    pub meas: (f64, f64),
    /// Fraction of adjacent edge pairs with crosstalk.
    pub crosstalk_share: f64,
    /// Success lost by a victim edge while its aggressor runs.
    pub crosstalk_penalty: (f64, f64),
}

impl SyntheticProfile {
    /// Magnitudes typical of a 27-qubit heavy-hex machine, with idle error
    /// reflecting decoherence over a two-qubit-gate-long cycle.
    pub fn montreal_like() -> Self {
        SyntheticProfile {
            single: (2e-4, 1e-3),
            idle: (4e-3, 2e-2),
            cx: (8e-3, 3e-2),
            meas: (1e-2, 5e-2),
            crosstalk_share: 0.2,
            crosstalk_penalty: (5e-3, 3e-2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SnapshotJson {
    date: String,
    qubits: Vec<QubitCalibration>,
    #[serde(default)]
    edges: Vec<EdgeCalibration>,
    #[serde(default)]
    crosstalk: Vec<CrosstalkEntry>,
}

/// Validated calibration data: every single-qubit kind is filled in for
/// every listed qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SnapshotJson", into = "SnapshotJson")]
pub struct CalibrationSnapshot {
    date: String,
    qubits: BTreeMap<usize, QubitCalibration>,
    cx: BTreeMap<(usize, usize), f64>,
    // victim edge -> (aggressor edge, multiplier)
    crosstalk: BTreeMap<Edge, Vec<(Edge, f64)>>,
    raw_crosstalk: Vec<CrosstalkEntry>,
    warnings: Vec<String>,
}

type Edge = (usize, usize);

fn key(e: [usize; 2]) -> (usize, usize) {
    (e[0].min(e[1]), e[0].max(e[1]))
}

fn check_rate(what: &str, p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Calibration(format!("{what} error {p} outside [0, 1)")));
    }
    Ok(())
}

impl TryFrom<SnapshotJson> for CalibrationSnapshot {
    type Error = Error;

    fn try_from(raw: SnapshotJson) -> Result<Self> {
        let mut warnings = Vec::new();
        let mut qubits = BTreeMap::new();
        for q in raw.qubits {
            if qubits.contains_key(&q.id) {
                return Err(Error::Calibration(format!("qubit {} listed twice", q.id)));
            }
            let e = &q.errors;
            for (name, v) in [
                ("id", e.id),
                ("x", e.x),
                ("sx", e.sx),
                ("rz", e.rz),
                ("h", e.h),
                ("z", e.z),
            ] {
                if let Some(v) = v {
                    check_rate(&format!("qubit {} {name}", q.id), v)?;
                }
            }
            check_rate(&format!("qubit {} measurement", q.id), q.meas)?;
            qubits.insert(q.id, q);
        }

        // fill missing kinds from the device average of that kind
        type Field = fn(&mut GateErrors) -> &mut Option<f64>;
        let fields: [(&str, Field); 4] = [
            ("id", |e| &mut e.id),
            ("x", |e| &mut e.x),
            ("sx", |e| &mut e.sx),
            ("rz", |e| &mut e.rz),
        ];
        for (name, field) in fields {
            let known: Vec<f64> = qubits.values_mut().filter_map(|q| *field(&mut q.errors)).collect();
            let avg = if known.is_empty() {
                0.0
            } else {
                known.iter().sum::<f64>() / known.len() as f64
            };
            for q in qubits.values_mut() {
                let slot = field(&mut q.errors);
                if slot.is_none() {
                    *slot = Some(avg);
                    let msg = if known.is_empty() {
                        format!("qubit {}: no `{name}` error anywhere, using 0", q.id)
                    } else {
                        format!("qubit {}: missing `{name}` error, using device average {avg:.3e}", q.id)
                    };
                    warn!("{msg}");
                    warnings.push(msg);
                }
            }
        }

        let mut cx = BTreeMap::new();
        for e in raw.edges {
            if e.pair[0] == e.pair[1] {
                return Err(Error::Calibration(format!("edge {:?} is a self-loop", e.pair)));
            }
            check_rate(&format!("cx {:?}", e.pair), e.cx)?;
            if cx.insert(key(e.pair), e.cx).is_some() {
                return Err(Error::Calibration(format!("edge {:?} listed twice", e.pair)));
            }
        }

        let mut crosstalk: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for c in &raw.crosstalk {
            let (a, v) = (key(c.edge), key(c.victim_edge));
            for e in [a, v] {
                if !cx.contains_key(&e) {
                    return Err(Error::Calibration(format!("crosstalk names unknown edge {e:?}")));
                }
            }
            if !(c.multiplier > 0.0 && c.multiplier <= 1.0) {
                return Err(Error::Calibration(format!(
                    "crosstalk multiplier {} outside (0, 1]",
                    c.multiplier
                )));
            }
            let disjoint = a.0 != v.0 && a.0 != v.1 && a.1 != v.0 && a.1 != v.1;
            let joined = [a.0, a.1]
                .iter()
                .any(|&x| [v.0, v.1].iter().any(|&y| cx.contains_key(&(x.min(y), x.max(y)))));
            if !disjoint || !joined {
                return Err(Error::Calibration(format!(
                    "crosstalk pair {a:?}/{v:?} is not two physically adjacent edges"
                )));
            }
            crosstalk.entry(v).or_default().push((a, c.multiplier));
        }

        Ok(CalibrationSnapshot {
            date: raw.date,
            qubits,
            cx,
            crosstalk,
            raw_crosstalk: raw.crosstalk,
            warnings,
        })
    }
}

impl From<CalibrationSnapshot> for SnapshotJson {
    fn from(s: CalibrationSnapshot) -> Self {
        SnapshotJson {
            date: s.date,
            qubits: s.qubits.into_values().collect(),
            edges: s
                .cx
                .into_iter()
                .map(|((a, b), cx)| EdgeCalibration { pair: [a, b], cx })
                .collect(),
            crosstalk: s.raw_crosstalk,
        }
    }
}

impl CalibrationSnapshot {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SnapshotJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    /// Same error rates on every qubit and edge of a device.
    pub fn uniform(device: &DeviceTopology, single: f64, cx: f64, meas: f64) -> Result<Self> {
        Self::uniform_with_idle(device, single, single, cx, meas)
    }

    /// Like [`uniform`](Self::uniform) with a separate identity (idle) error;
    /// `rz` is virtual and error-free.
    pub fn uniform_with_idle(device: &DeviceTopology, single: f64, idle: f64, cx: f64, meas: f64) -> Result<Self> {
        let raw = SnapshotJson {
            date: "1970-01-01".into(),
            qubits: (0..device.num_qubits())
                .map(|id| QubitCalibration {
                    id,
                    errors: GateErrors {
                        id: Some(idle),
                        x: Some(single),
                        sx: Some(single),
                        rz: Some(0.0),
                        h: None,
                        z: None,
                    },
                    meas,
                })
                .collect(),
            edges: device
                .edges()
                .iter()
                .map(|&(a, b)| EdgeCalibration { pair: [a, b], cx })
                .collect(),
            crosstalk: Vec::new(),
        };
        raw.try_into()
    }

    /// Randomized calibration: every rate is drawn log-uniformly from its
    /// profile range, and a share of physically adjacent edge pairs gets a
    /// crosstalk multiplier in both directions.
    pub fn synthetic(device: &DeviceTopology, profile: &SyntheticProfile, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo.ln()..hi.ln()).exp()
            }
        }
        let qubits = (0..device.num_qubits())
            .map(|id| {
                let single = draw(&mut rng, profile.single);
                QubitCalibration {
                    id,
                    errors: GateErrors {
                        id: Some(draw(&mut rng, profile.idle)),
                        x: Some(single),
                        sx: Some(single),
                        rz: Some(0.0),
                        h: None,
                        z: None,
                    },
                    meas: draw(&mut rng, profile.meas),
                }
            })
            .collect();
        let edges: Vec<EdgeCalibration> = device
            .edges()
            .iter()
            .map(|&(a, b)| EdgeCalibration {
                pair: [a, b],
                cx: draw(&mut rng, profile.cx),
            })
            .collect();
        let mut crosstalk = Vec::new();
        let list = device.edges();
        for (i, &(a, b)) in list.iter().enumerate() {
            for &(c, d) in &list[i + 1..] {
                let disjoint = a != c && a != d && b != c && b != d;
                let joined = [a, b].iter().any(|&x| [c, d].iter().any(|&y| device.has_edge(x, y)));
                if disjoint && joined && rng.gen::<f64>() < profile.crosstalk_share {
                    let m = 1.0 - draw(&mut rng, profile.crosstalk_penalty);
                    for (edge, victim_edge) in [([a, b], [c, d]), ([c, d], [a, b])] {
                        crosstalk.push(CrosstalkEntry {
                            edge,
                            victim_edge,
                            multiplier: m,
                        });
                    }
                }
            }
        }
        SnapshotJson {
            date: "1970-01-01".into(),
            qubits,
            edges,
            crosstalk,
        }
        .try_into()
    }

    /// Add a crosstalk entry, re-validating the snapshot.
    pub fn with_crosstalk(self, edge: [usize; 2], victim_edge: [usize; 2], multiplier: f64) -> Result<Self> {
        let mut raw: SnapshotJson = self.into();
        raw.crosstalk.push(CrosstalkEntry {
            edge,
            victim_edge,
            multiplier,
        });
        raw.try_into()
    }

    /// Multiply every error rate by `factor` (clamped below 1).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let clamp = |p: f64| (p * factor).clamp(0.0, 0.999_999);
        let mut raw: SnapshotJson = self.clone().into();
        for q in &mut raw.qubits {
            let e = &mut q.errors;
            for v in [&mut e.id, &mut e.x, &mut e.sx, &mut e.rz, &mut e.h, &mut e.z]
                .into_iter()
                .flatten()
            {
                *v = clamp(*v);
            }
            q.meas = clamp(q.meas);
        }
        for e in &mut raw.edges {
            e.cx = clamp(e.cx);
        }
        raw.try_into()
    }

    pub fn date(&self) -> &str {
        &self.date
    }

    /// Messages about values filled in during loading.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn qubit(&self, q: usize) -> Result<&QubitCalibration> {
        self.qubits
            .get(&q)
            .ok_or_else(|| Error::MissingCalibration(format!("qubit {q}")))
    }

    /// Error rate of a single-qubit gate kind on a qubit.
    pub fn single_error(&self, kind: GateKind, q: usize) -> Result<f64> {
        let e = &self.qubit(q)?.errors;
        let filled = |v: Option<f64>| v.expect("filled at load");
        Ok(match kind {
            GateKind::Id => filled(e.id),
            GateKind::X => filled(e.x),
            GateKind::Sx => filled(e.sx),
            GateKind::Rz => filled(e.rz),
            GateKind::H => e.h.unwrap_or(filled(e.sx)),
            GateKind::Z => e.z.unwrap_or(filled(e.rz)),
            GateKind::Measure => self.qubit(q)?.meas,
            other => {
                return Err(Error::Calibration(format!(
                    "{} is not a single-qubit gate",
                    other.name()
                )));
            }
        })
    }

    pub fn meas_error(&self, q: usize) -> Result<f64> {
        Ok(self.qubit(q)?.meas)
    }

    pub fn cx_error(&self, a: usize, b: usize) -> Result<f64> {
        self.cx
            .get(&(a.min(b), a.max(b)))
            .copied()
            .ok_or_else(|| Error::MissingCalibration(format!("edge ({a},{b})")))
    }

    /// Error of one gate occurrence ignoring crosstalk. A swap marker counts
    /// as its three CNOTs; barriers are free.
    pub fn gate_error(&self, gate: &Gate) -> Result<f64> {
        match gate {
            Gate::Barrier(_) => Ok(0.0),
            Gate::Cx(a, b) => self.cx_error(*a, *b),
            Gate::Swap(a, b) => Ok(1.0 - (1.0 - self.cx_error(*a, *b)?).powi(3)),
            Gate::Measure { qubit, .. } => self.meas_error(*qubit),
            g => self.single_error(g.kind(), g.qubits()[0]),
        }
    }

    /// Product of crosstalk multipliers a CNOT on `edge` suffers from the
    /// other CNOT edges active in the same cycle.
    pub fn crosstalk_factor(&self, edge: (usize, usize), simultaneous: &[(usize, usize)]) -> f64 {
        let edge = (edge.0.min(edge.1), edge.0.max(edge.1));
        let Some(entries) = self.crosstalk.get(&edge) else {
            return 1.0;
        };
        entries
            .iter()
            .filter(|(aggressor, _)| simultaneous.iter().any(|&(a, b)| (a.min(b), a.max(b)) == *aggressor))
            .map(|&(_, m)| m)
            .product()
    }

    pub fn has_crosstalk(&self) -> bool {
        !self.crosstalk.is_empty()
    }

    /// Check that every device qubit and edge is calibrated.
    pub fn check_device(&self, device: &DeviceTopology) -> Result<()> {
        for q in 0..device.num_qubits() {
            self.qubit(q)?;
        }
        for &(a, b) in device.edges() {
            self.cx_error(a, b)?;
        }
        Ok(())
    }
}

/// Success probability of one gate occurrence: `1 - error`, further
/// multiplied by the crosstalk penalty from CNOT edges scheduled in the same
/// cycle. Measurements use the readout error.
pub fn gate_success(snapshot: &CalibrationSnapshot, gate: &Gate, simultaneous_cx: &[(usize, usize)]) -> Result<f64> {
    let base = 1.0 - snapshot.gate_error(gate)?;
    Ok(match gate {
        Gate::Cx(a, b) => base * snapshot.crosstalk_factor((*a, *b), simultaneous_cx),
        _ => base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> DeviceTopology {
        DeviceTopology::line(4)
    }

    #[test]
    fn montreal_averages_load() {
        let s = CalibrationSnapshot::uniform(&DeviceTopology::hexagon27(), 5.04e-4, 2.11e-2, 3.05e-2).unwrap();
        assert_eq!(s.cx_error(0, 1).unwrap(), 2.11e-2);
        let m = gate_success(&s, &Gate::Measure { qubit: 3, clbit: 0 }, &[]).unwrap();
        assert!((m - 0.9695).abs() < 1e-15);
    }

    #[test]
    fn range_violation() {
        let text = r#"{"date":"2022-04-12","qubits":[{"id":0,"errors":{"x":0.001},"meas":0.02},
            {"id":1,"errors":{"x":0.001},"meas":0.02}],"edges":[{"pair":[0,1],"cx":1.2}]}"#;
        assert!(matches!(
            CalibrationSnapshot::from_json(text),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn missing_kinds_use_device_average() {
        let text = r#"{"date":"2022-04-12","qubits":[
            {"id":0,"errors":{"x":0.001,"sx":0.002},"meas":0.02},
            {"id":1,"errors":{"x":0.003},"meas":0.02}],
            "edges":[{"pair":[0,1],"cx":0.02}]}"#;
        let s = CalibrationSnapshot::from_json(text).unwrap();
        assert_eq!(s.single_error(GateKind::Sx, 1).unwrap(), 0.002);
        assert_eq!(s.single_error(GateKind::Id, 0).unwrap(), 0.0);
        assert_eq!(s.single_error(GateKind::H, 0).unwrap(), 0.002);
        assert!(!s.warnings().is_empty());
        assert!(s.meas_error(5).is_err());
    }

    #[test]
    fn crosstalk_product_rule() {
        let s = CalibrationSnapshot::uniform(&line3(), 0.0, 0.02, 0.0)
            .unwrap()
            .with_crosstalk([2, 3], [0, 1], 0.95)
            .unwrap();
        let cx = Gate::Cx(0, 1);
        assert!((gate_success(&s, &cx, &[]).unwrap() - 0.98).abs() < 1e-15);
        assert!((gate_success(&s, &cx, &[(3, 2)]).unwrap() - 0.931).abs() < 1e-12);
        // aggressor itself is not a victim
        assert!((gate_success(&s, &Gate::Cx(2, 3), &[(0, 1)]).unwrap() - 0.98).abs() < 1e-15);
    }

    #[test]
    fn crosstalk_requires_adjacent_edges() {
        let s = CalibrationSnapshot::uniform(&DeviceTopology::line(6), 0.0, 0.02, 0.0).unwrap();
        assert!(s.clone().with_crosstalk([0, 1], [1, 2], 0.9).is_err());
        assert!(s.clone().with_crosstalk([0, 1], [4, 5], 0.9).is_err());
        assert!(s.with_crosstalk([0, 1], [2, 3], 1.5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = CalibrationSnapshot::uniform(&line3(), 1e-3, 1e-2, 2e-2).unwrap();
        let back = CalibrationSnapshot::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
