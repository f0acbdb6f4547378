//! Static vulnerability analysis and success-rate estimation for compiled
//! quantum circuits.

pub mod ace;
pub mod benchmarks;
pub mod calib;
pub mod circuit;
pub mod compare;
pub mod cycle;
pub mod entanglement;
pub mod error;
pub mod estimators;
pub mod fixtures;
pub mod oracle;
pub mod pipeline;
pub mod router;
pub mod topology;
pub mod weight;

pub use ace::{mark_unace, AceMap, UnaceReason};
pub use benchmarks::{correct_output, generate, BenchmarkSpec, DjOracle};
pub use calib::{gate_success, CalibrationSnapshot};
pub use circuit::{
    classify_virtual_qubits, CompiledCircuit, Gate, GateKind, LogicalCircuit, QubitClass, VirtualQubitClass,
};
pub use circuit::{parse_compiled, parse_qasm, serialize_compiled, serialize_qasm};
pub use compare::{compare_suite, CompareRow, CompareSummary, OracleSettings, SuiteCircuit, WeightChoice};
pub use cycle::{book, schedule, BookingCell, BookingTable, CycleSchedule, Slot};
pub use entanglement::{EntangledGroup, EntanglementIntervals};
pub use error::{Error, Result};
pub use estimators::{cqv, esp, estimate_report, qvf, CqvOutcome, CqvPlan, EstimateReport, QvfResult};
pub use oracle::{inject_at, run_fault_injection, simulate_noiseless, Distribution, NoiseSpec, Pauli, SrResult};
pub use pipeline::{analyze, Analysis};
pub use router::{transpile, CompileConfig, LayoutMethod, RoutingMethod};
pub use topology::DeviceTopology;
pub use weight::{choose_weight, sweep_best_weight, Experiment, Sweep, WeightModel};
