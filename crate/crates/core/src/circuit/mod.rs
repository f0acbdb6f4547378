//! Circuit intermediate representation.
//!
//! A [`LogicalCircuit`] is what the benchmark generators emit and what the
//! QASM parser produces: gates over virtual qubit indices with all-to-all
//! connectivity assumed. A [`CompiledCircuit`] is the transpiled form: gates
//! over physical qubits of a [`DeviceTopology`] together with the initial
//! virtual-to-physical layout, so virtual identities can be tracked through
//! SWAPs.

mod qasm;

pub use qasm::{parse_compiled, parse_qasm, serialize_compiled, serialize_qasm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::DeviceTopology;

/// Gate kinds, used for calibration lookup and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Id,
    X,
    Sx,
    Rz,
    H,
    Z,
    Cx,
    Swap,
    Measure,
    Barrier,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Id => "id",
            GateKind::X => "x",
            GateKind::Sx => "sx",
            GateKind::Rz => "rz",
            GateKind::H => "h",
            GateKind::Z => "z",
            GateKind::Cx => "cx",
            GateKind::Swap => "swap",
            GateKind::Measure => "measure",
            GateKind::Barrier => "barrier",
        }
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Id(usize),
    X(usize),
    Sx(usize),
    /// Z rotation by an angle in radians.
    Rz(usize, f64),
    H(usize),
    Z(usize),
    /// `Cx(control, target)`
    Cx(usize, usize),
    Swap(usize, usize),
    Measure {
        qubit: usize,
        clbit: usize,
    },
    Barrier(Vec<usize>),
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Id(_) => GateKind::Id,
            Gate::X(_) => GateKind::X,
            Gate::Sx(_) => GateKind::Sx,
            Gate::Rz(..) => GateKind::Rz,
            Gate::H(_) => GateKind::H,
            Gate::Z(_) => GateKind::Z,
            Gate::Cx(..) => GateKind::Cx,
            Gate::Swap(..) => GateKind::Swap,
            Gate::Measure { .. } => GateKind::Measure,
            Gate::Barrier(_) => GateKind::Barrier,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Id(q) | Gate::X(q) | Gate::Sx(q) | Gate::Rz(q, _) | Gate::H(q) | Gate::Z(q) => {
                vec![*q]
            }
            Gate::Measure { qubit, .. } => vec![*qubit],
            Gate::Cx(a, b) | Gate::Swap(a, b) => vec![*a, *b],
            Gate::Barrier(qs) => qs.clone(),
        }
    }

    /// True for gates that can change a qubit's state (everything except
    /// identity and barrier).
    pub fn is_nontrivial(&self) -> bool {
        !matches!(self, Gate::Id(_) | Gate::Barrier(_))
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx(..) | Gate::Swap(..))
    }

    /// Relabel qubit operands; classical bits are untouched.
    pub fn map_qubits(&self, f: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::Id(q) => Gate::Id(f(*q)),
            Gate::X(q) => Gate::X(f(*q)),
            Gate::Sx(q) => Gate::Sx(f(*q)),
            Gate::Rz(q, a) => Gate::Rz(f(*q), *a),
            Gate::H(q) => Gate::H(f(*q)),
            Gate::Z(q) => Gate::Z(f(*q)),
            Gate::Cx(a, b) => Gate::Cx(f(*a), f(*b)),
            Gate::Swap(a, b) => Gate::Swap(f(*a), f(*b)),
            Gate::Measure { qubit, clbit } => Gate::Measure {
                qubit: f(*qubit),
                clbit: *clbit,
            },
            Gate::Barrier(qs) => Gate::Barrier(qs.iter().map(|&q| f(q)).collect()),
        }
    }

    pub fn validate(&self, num_qubits: usize, num_clbits: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= num_qubits {
                return Err(Error::OperandOutOfRange(format!(
                    "qubit {q} in `{}` (circuit has {num_qubits})",
                    self.kind()
                )));
            }
        }
        match self {
            Gate::Cx(a, b) | Gate::Swap(a, b) if a == b => Err(Error::InvalidGate(format!(
                "{} with duplicate operands {a},{b}",
                self.kind()
            ))),
            Gate::Rz(_, angle) if !angle.is_finite() => {
                Err(Error::InvalidGate(format!("rz angle {angle} is not finite")))
            }
            Gate::Measure { clbit, .. } if *clbit >= num_clbits => Err(Error::OperandOutOfRange(format!(
                "clbit {clbit} (circuit has {num_clbits})"
            ))),
            _ => Ok(()),
        }
    }
}

/// A circuit over virtual qubits, connectivity unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalCircuit {
    num_qubits: usize,
    num_clbits: usize,
    ops: Vec<Gate>,
}

impl LogicalCircuit {
    pub fn new(num_qubits: usize, num_clbits: usize, ops: Vec<Gate>) -> Result<Self> {
        for op in &ops {
            op.validate(num_qubits, num_clbits)?;
        }
        Ok(LogicalCircuit {
            num_qubits,
            num_clbits,
            ops,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_clbits(&self) -> usize {
        self.num_clbits
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn cx_count(&self) -> usize {
        count_cx(&self.ops)
    }
}

/// Number of CNOTs, counting each SWAP as three.
pub fn count_cx(ops: &[Gate]) -> usize {
    ops.iter()
        .map(|g| match g {
            Gate::Cx(..) => 1,
            Gate::Swap(..) => 3,
            _ => 0,
        })
        .sum()
}

/// A circuit over the physical qubits of a device.
///
/// Virtual qubits `0..num_logical` are the logical qubits of the source
/// circuit; the remaining `num_logical..num_physical` are ancillas the
/// compiler added to fill the device. `initial_layout[v]` is the physical
/// qubit hosting virtual qubit `v` before the first gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledCircuit {
    device: DeviceTopology,
    ops: Vec<Gate>,
    initial_layout: Vec<usize>,
    num_logical: usize,
    num_output_bits: usize,
}

impl CompiledCircuit {
    pub fn new(
        device: DeviceTopology,
        ops: Vec<Gate>,
        initial_layout: Vec<usize>,
        num_logical: usize,
        num_output_bits: usize,
    ) -> Result<Self> {
        let n = device.num_qubits();
        if initial_layout.len() != n {
            return Err(Error::InvalidCircuit(format!(
                "layout has {} entries, device has {n} qubits",
                initial_layout.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in &initial_layout {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidCircuit(
                    "initial layout is not a permutation of the physical qubits".into(),
                ));
            }
        }
        if num_logical > n {
            return Err(Error::InvalidCircuit(format!(
                "{num_logical} logical qubits exceed {n} physical qubits"
            )));
        }
        for op in &ops {
            op.validate(n, num_output_bits)?;
            if let Gate::Cx(a, b) | Gate::Swap(a, b) = op {
                if !device.has_edge(*a, *b) {
                    return Err(Error::InvalidCircuit(format!(
                        "{} on ({a},{b}) is not a coupling edge of {}",
                        op.kind(),
                        device.name()
                    )));
                }
            }
        }
        Ok(CompiledCircuit {
            device,
            ops,
            initial_layout,
            num_logical,
            num_output_bits,
        })
    }

    /// Treat a logical circuit as already compiled onto an all-to-all device
    /// with the trivial layout.
    pub fn from_logical(circuit: &LogicalCircuit) -> Self {
        let n = circuit.num_qubits();
        CompiledCircuit {
            device: DeviceTopology::fully_connected(n),
            ops: circuit.ops().to_vec(),
            initial_layout: (0..n).collect(),
            num_logical: n,
            num_output_bits: circuit.num_clbits(),
        }
    }

    pub fn device(&self) -> &DeviceTopology {
        &self.device
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn initial_layout(&self) -> &[usize] {
        &self.initial_layout
    }

    pub fn num_physical(&self) -> usize {
        self.device.num_qubits()
    }

    pub fn num_logical(&self) -> usize {
        self.num_logical
    }

    pub fn num_output_bits(&self) -> usize {
        self.num_output_bits
    }

    pub fn cx_count(&self) -> usize {
        count_cx(&self.ops)
    }

    /// Virtual qubit hosted by each physical qubit before the first gate.
    pub fn initial_occupancy(&self) -> Vec<usize> {
        let mut at = vec![0; self.num_physical()];
        for (v, &p) in self.initial_layout.iter().enumerate() {
            at[p] = v;
        }
        at
    }

    /// For each op, whether it is the final writer of an output bit.
    pub fn output_measurements(&self) -> Vec<bool> {
        output_measurements(&self.ops, self.num_output_bits)
    }
}

pub(crate) fn output_measurements(ops: &[Gate], num_clbits: usize) -> Vec<bool> {
    let mut last = vec![None; num_clbits];
    for (i, op) in ops.iter().enumerate() {
        if let Gate::Measure { clbit, .. } = op {
            last[*clbit] = Some(i);
        }
    }
    let mut out = vec![false; ops.len()];
    for i in last.into_iter().flatten() {
        out[i] = true;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitClass {
    OutputtingLogical,
    AssistingLogical,
    UsedAncilla,
    UnusedAncilla,
}

impl QubitClass {
    /// Used ancillas are analyzed exactly like assisting logical qubits.
    pub fn is_assisting(self) -> bool {
        matches!(self, QubitClass::AssistingLogical | QubitClass::UsedAncilla)
    }
}

/// Class of every virtual qubit of a compiled circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualQubitClass {
    classes: Vec<QubitClass>,
}

impl VirtualQubitClass {
    pub fn get(&self, virtual_qubit: usize) -> QubitClass {
        self.classes[virtual_qubit]
    }

    pub fn as_slice(&self) -> &[QubitClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn count(&self, class: QubitClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Virtual qubits that are not unused ancillas.
    pub fn used_count(&self) -> usize {
        self.len() - self.count(QubitClass::UnusedAncilla)
    }
}

/// Assign each virtual qubit to exactly one of the four classes.
///
/// Virtual identities are followed through SWAP markers. A qubit is
/// outputting when it performs the final write of some output bit; it is an
/// unused ancilla when it is never swapped and sees nothing but identities and
/// barriers.
pub fn classify_virtual_qubits(circuit: &CompiledCircuit) -> VirtualQubitClass {
    let n = circuit.num_physical();
    let mut at = circuit.initial_occupancy();
    let mut touched = vec![false; n];
    let mut outputting = vec![false; n];
    let final_writer = circuit.output_measurements();

    for (op, &is_output) in circuit.ops().iter().zip(&final_writer) {
        match op {
            Gate::Id(_) | Gate::Barrier(_) => {}
            Gate::Swap(a, b) => {
                touched[at[*a]] = true;
                touched[at[*b]] = true;
                at.swap(*a, *b);
            }
            Gate::Measure { qubit, .. } => {
                touched[at[*qubit]] = true;
                if is_output {
                    outputting[at[*qubit]] = true;
                }
            }
            other => {
                for q in other.qubits() {
                    touched[at[q]] = true;
                }
            }
        }
    }

    let classes = (0..n)
        .map(|v| {
            if outputting[v] {
                QubitClass::OutputtingLogical
            } else if !touched[v] {
                QubitClass::UnusedAncilla
            } else if v < circuit.num_logical() {
                QubitClass::AssistingLogical
            } else {
                QubitClass::UsedAncilla
            }
        })
        .collect();
    VirtualQubitClass { classes }
}
