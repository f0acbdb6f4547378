//! Workloads shared by the criterion benches.

use qvul_core::calib::SyntheticProfile;
use qvul_core::{
    correct_output, generate, transpile, BenchmarkSpec, CalibrationSnapshot, CompileConfig, CompiledCircuit,
    DeviceTopology,
};

pub struct Workload {
    pub label: String,
    pub circuit: CompiledCircuit,
    pub expected: String,
    pub snapshot: CalibrationSnapshot,
}

/// `spec` routed onto `device` with the default configuration and a
/// synthetic calibration.
pub fn workload(spec: &BenchmarkSpec, device: &DeviceTopology) -> Workload {
    let logical = generate(spec).expect("valid benchmark");
    let circuit = transpile(&logical, device, &CompileConfig::default()).expect("routable");
    Workload {
        label: spec.label(),
        expected: correct_output(spec).expect("valid benchmark"),
        snapshot: CalibrationSnapshot::synthetic(device, &SyntheticProfile::montreal_like(), 1).expect("calibration"),
        circuit,
    }
}

/// QFT sizes measured for the linear-scaling claim.
pub const QFT_SIZES: [usize; 7] = [5, 10, 15, 20, 50, 100, 120];

pub fn qft_on_heavy_hex(size: usize) -> Workload {
    workload(&BenchmarkSpec::qft(size), &DeviceTopology::heavy_hex127())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_build() {
        let w = qft_on_heavy_hex(5);
        assert_eq!(w.label, "qft_5");
        assert_eq!(w.circuit.num_physical(), 127);
    }
}
