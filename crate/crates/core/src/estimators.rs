//! ESP, QVF/UQVF and CQV.

use serde::{Deserialize, Serialize};

use crate::ace::AceMap;
use crate::calib::{gate_success, CalibrationSnapshot};
use crate::circuit::{CompiledCircuit, Gate, GateKind, QubitClass};
use crate::cycle::{BookingTable, CycleSchedule, Slot};
use crate::error::{Error, Result};

/// Estimated success probability: the plain product of every gate and
/// measurement success rate in the compiled op list. Scheduler idle fill and
/// barriers contribute nothing; crosstalk is ignored.
pub fn esp(circuit: &CompiledCircuit, snapshot: &CalibrationSnapshot) -> Result<f64> {
    circuit
        .ops()
        .iter()
        .try_fold(1.0, |acc, op| Ok(acc * (1.0 - snapshot.gate_error(op)?)))
}

/// Calibrated error of every (qubit, cycle) slot, cycle-major. Idle slots
/// carry the identity error, CNOT slots the full crosstalk-adjusted CNOT
/// error on both operands.
pub fn slot_errors(schedule: &CycleSchedule, snapshot: &CalibrationSnapshot) -> Result<Vec<f64>> {
    let n = schedule.num_physical();
    let mut out = vec![0.0; schedule.total_slots()];
    let mut edges = Vec::new();
    for t in 0..schedule.depth() {
        let slots = schedule.cycle_slots(t);
        edges.clear();
        if snapshot.has_crosstalk() {
            for (q, slot) in slots.iter().enumerate() {
                if !matches!(slot, Slot::Idle) {
                    if let Some(Gate::Cx(a, b)) = schedule.gate_at(q, t) {
                        if a == q {
                            edges.push((a, b));
                        }
                    }
                }
            }
        }
        for (q, slot) in slots.iter().enumerate() {
            let err = match slot {
                Slot::Idle => snapshot.single_error(GateKind::Id, q)?,
                _ => {
                    let gate = schedule.gate_at(q, t).expect("non-idle slot");
                    1.0 - gate_success(snapshot, &gate, &edges)?
                }
            };
            out[t * n + q] = err;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvfResult {
    pub per_cycle: Vec<f64>,
    pub qvf: f64,
    pub uqvf: f64,
}

/// Average calibrated error mass over ACE cells, per cycle and for the whole
/// circuit. UQVF divides by the used virtual qubits instead of the device.
pub fn qvf(ace: &AceMap, table: &BookingTable, snapshot: &CalibrationSnapshot) -> Result<QvfResult> {
    let errors = slot_errors(table.schedule(), snapshot)?;
    Ok(qvf_from_errors(ace, table, &errors))
}

pub fn qvf_from_errors(ace: &AceMap, table: &BookingTable, errors: &[f64]) -> QvfResult {
    let n = table.num_physical();
    let depth = table.depth();
    let per_cycle: Vec<f64> = (0..depth)
        .map(|t| {
            // fold from +0.0: an empty f64 sum is -0.0
            let mass = (0..n)
                .filter(|&q| ace.is_ace(q, t))
                .map(|q| errors[t * n + q])
                .fold(0.0, |a, b| a + b);
            mass / n as f64
        })
        .collect();
    let total = per_cycle.iter().fold(0.0, |a, b| a + b) * n as f64;
    let used = table.classes().used_count();
    let ratio = |d: usize| if d == 0 { 0.0 } else { total / d as f64 };
    QvfResult {
        qvf: ratio(n * depth),
        uqvf: ratio(used * depth),
        per_cycle,
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Single {
        v: u32,
        g: f64,
    },
    Pair {
        a: u32,
        b: u32,
        g: f64,
        a_ace: bool,
        b_ace: bool,
    },
}

/// Per-virtual-qubit cumulative success after each cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessTrace {
    pub virtual_qubit: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqvOutcome {
    pub one_minus_cqv: f64,
    pub traces: Option<Vec<SuccessTrace>>,
}

/// Precomputed CQV accumulation for one analyzed circuit; evaluating it for
/// a weight is linear in the number of ACE cells.
#[derive(Debug, Clone)]
pub struct CqvPlan {
    num_virtual: usize,
    events: Vec<Event>,
    // events[cycle_start[t]..cycle_start[t + 1]] belong to cycle t
    cycle_start: Vec<usize>,
    outputs: Vec<usize>,
}

impl CqvPlan {
    pub fn new(ace: &AceMap, table: &BookingTable, snapshot: &CalibrationSnapshot) -> Result<Self> {
        let errors = slot_errors(table.schedule(), snapshot)?;
        Ok(Self::from_errors(ace, table, &errors))
    }

    pub fn from_errors(ace: &AceMap, table: &BookingTable, errors: &[f64]) -> Self {
        let s = table.schedule();
        let n = s.num_physical();
        let classes = table.classes();
        let mut events = Vec::new();
        let mut cycle_start = Vec::with_capacity(s.depth() + 1);
        for t in 0..s.depth() {
            cycle_start.push(events.len());
            for (q, slot) in s.cycle_slots(t).iter().enumerate() {
                let g = 1.0 - errors[t * n + q];
                let v = s.virtual_at(q, t);
                let pair = match *slot {
                    Slot::Idle => None,
                    Slot::SwapStep { op, step } => match s.swap_step_gate(op, step) {
                        Gate::Cx(a, b) => Some((a, b)),
                        _ => unreachable!(),
                    },
                    Slot::Op(op) => match s.circuit().ops()[op as usize] {
                        Gate::Cx(a, b) => Some((a, b)),
                        Gate::Measure { .. } => {
                            if ace.is_ace(q, t) && classes.get(v) == QubitClass::OutputtingLogical {
                                events.push(Event::Single { v: v as u32, g });
                            }
                            continue;
                        }
                        _ => None,
                    },
                };
                match pair {
                    None => {
                        if ace.is_ace(q, t) {
                            events.push(Event::Single { v: v as u32, g });
                        }
                    }
                    Some((a, b)) => {
                        if q != a {
                            continue;
                        }
                        let (a_ace, b_ace) = (ace.is_ace(a, t), ace.is_ace(b, t));
                        if a_ace || b_ace {
                            events.push(Event::Pair {
                                a: s.virtual_at(a, t) as u32,
                                b: s.virtual_at(b, t) as u32,
                                g,
                                a_ace,
                                b_ace,
                            });
                        }
                    }
                }
            }
        }
        cycle_start.push(events.len());
        let outputs = (0..n)
            .filter(|&v| classes.get(v) == QubitClass::OutputtingLogical)
            .collect();
        CqvPlan {
            num_virtual: n,
            events,
            cycle_start,
            outputs,
        }
    }

    pub fn depth(&self) -> usize {
        self.cycle_start.len() - 1
    }

    /// Predicted success rate `1 - CQV` for weight `w`.
    pub fn evaluate(&self, w: f64) -> Result<f64> {
        Ok(self.run(w, false)?.one_minus_cqv)
    }

    pub fn evaluate_with_traces(&self, w: f64) -> Result<CqvOutcome> {
        self.run(w, true)
    }

    fn run(&self, w: f64, keep_traces: bool) -> Result<CqvOutcome> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::WeightOutOfRange(w));
        }
        let mut s = vec![1.0f64; self.num_virtual];
        let mut traces = keep_traces.then(|| vec![Vec::with_capacity(self.depth()); self.num_virtual]);
        for t in 0..self.depth() {
            for ev in &self.events[self.cycle_start[t]..self.cycle_start[t + 1]] {
                match *ev {
                    Event::Single { v, g } => s[v as usize] *= g,
                    Event::Pair { a, b, g, a_ace, b_ace } => {
                        let (sa, sb) = (s[a as usize], s[b as usize]);
                        if a_ace {
                            let flow = if b_ace { 1.0 - w * (1.0 - sb) } else { 1.0 };
                            s[a as usize] = sa * g * flow;
                        }
                        if b_ace {
                            let flow = if a_ace { 1.0 - w * (1.0 - sa) } else { 1.0 };
                            s[b as usize] = sb * g * flow;
                        }
                    }
                }
            }
            if let Some(tr) = traces.as_mut() {
                for (v, value) in s.iter().enumerate() {
                    tr[v].push(*value);
                }
            }
        }
        let one_minus_cqv = self.outputs.iter().map(|&v| s[v]).product();
        Ok(CqvOutcome {
            one_minus_cqv,
            traces: traces.map(|tr| {
                tr.into_iter()
                    .enumerate()
                    .map(|(virtual_qubit, values)| SuccessTrace { virtual_qubit, values })
                    .collect()
            }),
        })
    }
}

/// One-shot CQV evaluation; see [`CqvPlan`] for repeated weights.
pub fn cqv(ace: &AceMap, table: &BookingTable, snapshot: &CalibrationSnapshot, w: f64) -> Result<CqvOutcome> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::WeightOutOfRange(w));
    }
    CqvPlan::new(ace, table, snapshot)?.evaluate_with_traces(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub esp: f64,
    pub qvf_per_cycle: Vec<f64>,
    pub qvf: f64,
    pub uqvf: f64,
    pub one_minus_cqv: f64,
    pub weight_used: f64,
    pub depth: usize,
    pub cx_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<SuccessTrace>>,
}

/// All estimators over an analyzed circuit.
pub fn estimate_report(
    ace: &AceMap,
    table: &BookingTable,
    snapshot: &CalibrationSnapshot,
    w: f64,
    keep_traces: bool,
) -> Result<EstimateReport> {
    let circuit = table.schedule().circuit();
    let errors = slot_errors(table.schedule(), snapshot)?;
    let q = qvf_from_errors(ace, table, &errors);
    let plan = CqvPlan::from_errors(ace, table, &errors);
    let outcome = plan.run(w, keep_traces)?;
    Ok(EstimateReport {
        esp: esp(circuit, snapshot)?,
        qvf_per_cycle: q.per_cycle,
        qvf: q.qvf,
        uqvf: q.uqvf,
        one_minus_cqv: outcome.one_minus_cqv,
        weight_used: w,
        depth: table.depth(),
        cx_count: circuit.cx_count(),
        traces: outcome.traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::analyze;
    use crate::topology::DeviceTopology;

    fn m(q: usize, c: usize) -> Gate {
        Gate::Measure { qubit: q, clbit: c }
    }

    #[test]
    fn esp_direct_product() {
        let d = DeviceTopology::line(2);
        let snap = CalibrationSnapshot::from_json(
            r#"{"date":"2022-04-12","qubits":[
                {"id":0,"errors":{"x":0.01,"sx":0.001,"rz":0,"id":0},"meas":0.02},
                {"id":1,"errors":{"x":0.01,"sx":0.001,"rz":0,"id":0},"meas":0.02}],
                "edges":[{"pair":[0,1],"cx":0.05}]}"#,
        )
        .unwrap();
        let c = CompiledCircuit::new(d, vec![Gate::X(0), Gate::Sx(1), m(0, 0), m(1, 1)], vec![0, 1], 2, 2).unwrap();
        let expected = 0.99 * 0.999 * 0.98 * 0.98;
        assert!((esp(&c, &snap).unwrap() - expected).abs() < 1e-15);
        let empty = CompiledCircuit::new(DeviceTopology::line(2), vec![], vec![0, 1], 2, 2).unwrap();
        assert_eq!(esp(&empty, &snap).unwrap(), 1.0);
    }

    #[test]
    fn qvf_single_qubit_arithmetic() {
        let d = DeviceTopology::line(1);
        let snap = CalibrationSnapshot::from_json(
            r#"{"date":"d","qubits":[{"id":0,"errors":{"x":0.001,"sx":0,"rz":0,"id":0},"meas":0.02}]}"#,
        )
        .unwrap();
        let c = CompiledCircuit::new(d, vec![Gate::X(0), m(0, 0)], vec![0], 1, 1).unwrap();
        let a = analyze(&c, None).unwrap();
        let r = qvf(&a.ace, &a.table, &snap).unwrap();
        assert!((r.qvf - 0.0105).abs() < 1e-15);
        assert_eq!(r.per_cycle.len(), 2);
    }

    #[test]
    fn cqv_chain_without_flow() {
        let d = DeviceTopology::line(1);
        let snap = CalibrationSnapshot::from_json(
            r#"{"date":"d","qubits":[{"id":0,"errors":{"x":0.01,"sx":0,"rz":0,"id":0},"meas":0.02}]}"#,
        )
        .unwrap();
        let c = CompiledCircuit::new(d, vec![Gate::X(0), m(0, 0)], vec![0], 1, 1).unwrap();
        let a = analyze(&c, None).unwrap();
        let out = cqv(&a.ace, &a.table, &snap, 0.0).unwrap();
        assert!((out.one_minus_cqv - 0.9702).abs() < 1e-15);
        assert!(cqv(&a.ace, &a.table, &snap, 1.5).is_err());
    }
}
