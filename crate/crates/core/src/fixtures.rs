//! Small hand-built circuits covering each way a slot can stop mattering,
//! plus the error-placement circuits used to contrast ESP with CQV.

use crate::calib::CalibrationSnapshot;
use crate::circuit::{parse_compiled, CompiledCircuit};
use crate::error::Result;
use crate::topology::DeviceTopology;

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub device: &'static str,
    pub qasm: &'static str,
}

impl Fixture {
    pub fn circuit(&self) -> Result<CompiledCircuit> {
        parse_compiled(self.qasm, &DeviceTopology::by_name(self.device)?)
    }
}

/// The assisting qubit 1 hands its state over at cycle 1 and is dead from
/// cycle 2 on.
pub const FIRST_LEVEL: Fixture = Fixture {
    name: "first_level",
    device: "full-2",
    qasm: "OPENQASM 2.0;
qreg q[2];
creg c[1];
x q[1];
cx q[1],q[0];
h q[1];
x q[0];
measure q[0] -> c[0];
",
};

/// Qubits 1 and 2 talk to each other only after qubit 1 last fed qubit 0;
/// qubit 0 is measured early and then carries on unobserved.
pub const SECOND_LEVEL: Fixture = Fixture {
    name: "second_level",
    device: "full-3",
    qasm: "OPENQASM 2.0;
qreg q[3];
creg c[1];
h q[0];
x q[1];
cx q[1],q[0];
measure q[0] -> c[0];
cx q[1],q[2];
h q[2];
x q[1];
x q[0];
",
};

pub const BELL: Fixture = Fixture {
    name: "bell",
    device: "full-2",
    qasm: "OPENQASM 2.0;
qreg q[2];
creg c[1];
h q[0];
cx q[0],q[1];
x q[1];
h q[0];
measure q[0] -> c[0];
",
};

pub const GHZ: Fixture = Fixture {
    name: "ghz",
    device: "full-3",
    qasm: "OPENQASM 2.0;
qreg q[3];
creg c[2];
h q[0];
cx q[0],q[1];
cx q[1],q[2];
x q[2];
measure q[0] -> c[0];
measure q[1] -> c[1];
",
};

/// An assisting qubit in superposition is the target of a CNOT from an
/// entangled member: its earlier cells stay live through phase kickback.
pub const KICKBACK_TARGET: Fixture = Fixture {
    name: "kickback_target",
    device: "full-3",
    qasm: "OPENQASM 2.0;
qreg q[3];
creg c[2];
h q[0];
x q[2];
cx q[0],q[1];
h q[2];
cx q[1],q[2];
h q[2];
h q[0];
measure q[0] -> c[0];
measure q[1] -> c[1];
",
};

/// An assisting qubit controls a CNOT onto an entangled member.
pub const ASSISTING_CONTROL: Fixture = Fixture {
    name: "assisting_control",
    device: "full-3",
    qasm: "OPENQASM 2.0;
qreg q[3];
creg c[2];
h q[0];
h q[2];
cx q[0],q[1];
cx q[2],q[1];
x q[2];
measure q[0] -> c[0];
measure q[1] -> c[1];
",
};

/// Two assisting qubits interact after feeding an entangled pair.
pub const ENTANGLED_SECOND_LEVEL: Fixture = Fixture {
    name: "entangled_second_level",
    device: "full-4",
    qasm: "OPENQASM 2.0;
qreg q[4];
creg c[2];
h q[0];
x q[2];
cx q[0],q[1];
cx q[2],q[1];
h q[3];
cx q[2],q[3];
h q[3];
measure q[0] -> c[0];
measure q[1] -> c[1];
",
};

pub const UNUSED_ANCILLA: Fixture = Fixture {
    name: "unused_ancilla",
    device: "line-3",
    qasm: "OPENQASM 2.0;
// qvul:logical 2
qreg q[3];
creg c[2];
h q[0];
barrier q[0],q[1],q[2];
cx q[0],q[1];
id q[2];
measure q[0] -> c[0];
measure q[1] -> c[1];
",
};

/// Routing swap through an ancilla; the error on the moved state follows it.
pub const SWAP_THROUGH_ANCILLA: Fixture = Fixture {
    name: "swap_through_ancilla",
    device: "line-3",
    qasm: "OPENQASM 2.0;
// qvul:logical 2
// qvul:layout 0,2,1
qreg q[3];
creg c[2];
h q[0];
x q[2];
swap q[0],q[1];
cx q[1],q[2];
h q[1];
measure q[1] -> c[0];
measure q[2] -> c[1];
",
};

/// An intermediate measurement overwritten by a later one.
pub const REMEASURED: Fixture = Fixture {
    name: "remeasured",
    device: "full-2",
    qasm: "OPENQASM 2.0;
qreg q[2];
creg c[2];
h q[0];
measure q[0] -> c[0];
cx q[0],q[1];
h q[0];
measure q[0] -> c[0];
x q[1];
measure q[1] -> c[1];
",
};

pub fn unace_cases() -> [Fixture; 10] {
    [
        FIRST_LEVEL,
        SECOND_LEVEL,
        BELL,
        GHZ,
        KICKBACK_TARGET,
        ASSISTING_CONTROL,
        ENTANGLED_SECOND_LEVEL,
        UNUSED_ANCILLA,
        SWAP_THROUGH_ANCILLA,
        REMEASURED,
    ]
}

/// A z gate on qubit 1 after it stopped mattering.
pub const DEAD_GATE: Fixture = Fixture {
    name: "dead_gate",
    device: "full-2",
    qasm: "OPENQASM 2.0;
qreg q[2];
creg c[1];
x q[1];
cx q[1],q[0];
z q[1];
measure q[0] -> c[0];
",
};

/// `DEAD_GATE` without the z gate.
pub const DEAD_GATE_REMOVED: Fixture = Fixture {
    name: "dead_gate_removed",
    device: "full-2",
    qasm: "OPENQASM 2.0;
qreg q[2];
creg c[1];
x q[1];
cx q[1],q[0];
measure q[0] -> c[0];
",
};

/// One noisy h whose error reaches both measured outputs through a CNOT.
pub const SHARED_ERROR: Fixture = Fixture {
    name: "shared_error",
    device: "full-2",
    qasm: "OPENQASM 2.0;
qreg q[2];
creg c[2];
h q[0];
cx q[0],q[1];
measure q[0] -> c[0];
measure q[1] -> c[1];
",
};

/// Calibration for two fully connected qubits where only `h` on qubit 0
/// and `z` on qubit 1 carry error.
pub fn two_qubit_calibration(h_error: f64, z_error: f64) -> Result<CalibrationSnapshot> {
    CalibrationSnapshot::from_json(&format!(
        r#"{{
  "date": "1970-01-01",
  "qubits": [
    {{"id": 0, "errors": {{"id": 0, "x": 0, "sx": 0, "rz": 0, "h": {h_error}, "z": 0}}, "meas": 0}},
    {{"id": 1, "errors": {{"id": 0, "x": 0, "sx": 0, "rz": 0, "h": 0, "z": {z_error}}}, "meas": 0}}
  ],
  "edges": [{{"pair": [0, 1], "cx": 0}}]
}}"#
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_load() {
        for f in unace_cases()
            .iter()
            .chain(&[DEAD_GATE, DEAD_GATE_REMOVED, SHARED_ERROR])
        {
            f.circuit().unwrap_or_else(|e| panic!("{}: {e}", f.name));
        }
        two_qubit_calibration(0.1, 0.05).unwrap();
    }
}
