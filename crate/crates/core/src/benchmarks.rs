//! BV, DJ, QFT and QPE generators with a unique correct output.
//!
//! Bitstrings are written with character `i` holding classical bit `i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, LogicalCircuit};
use crate::error::{Error, Result};

pub const MIN_SIZE: usize = 2;
pub const MAX_SIZE: usize = 16;
/// The scaling study runs QFT up to the width of a 127-qubit device.
pub const MAX_QFT_SIZE: usize = 127;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DjOracle {
    Constant { value: bool },
    Balanced { mask: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BenchmarkSpec {
    /// `size - 1` data qubits plus one assisting qubit.
    Bv { size: usize, hidden: String },
    /// `size - 1` input qubits plus one assisting qubit.
    Dj { size: usize, oracle: DjOracle },
    /// Recovers `input` from its Fourier-encoded product state. With
    /// `inverse` the circuit runs the transform in the direction opposite to
    /// the one QPE uses.
    Qft { size: usize, input: String, inverse: bool },
    /// `size - 1` counting qubits and one eigenstate qubit, all measured;
    /// the eigenphase is `phase / 2^(size - 1)`.
    Qpe { size: usize, phase: u64 },
}

fn alternating(len: usize) -> String {
    (0..len).map(|i| if i % 2 == 0 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, len: usize, what: &str) -> Result<Vec<bool>> {
    if s.len() != len || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::Benchmark(format!(
            "{what} must be {len} binary digits, got `{s}`"
        )));
    }
    Ok(s.chars().map(|c| c == '1').collect())
}

impl BenchmarkSpec {
    pub fn bv(size: usize) -> Self {
        BenchmarkSpec::Bv {
            size,
            hidden: alternating(size.saturating_sub(1)),
        }
    }

    pub fn dj_constant(size: usize) -> Self {
        BenchmarkSpec::Dj {
            size,
            oracle: DjOracle::Constant { value: false },
        }
    }

    pub fn dj_balanced(size: usize) -> Self {
        BenchmarkSpec::Dj {
            size,
            oracle: DjOracle::Balanced {
                mask: alternating(size.saturating_sub(1)),
            },
        }
    }

    pub fn qft(size: usize) -> Self {
        BenchmarkSpec::Qft {
            size,
            input: alternating(size),
            inverse: true,
        }
    }

    pub fn qpe(size: usize) -> Self {
        let bits = size.saturating_sub(1);
        let phase = (0..bits).filter(|i| i % 2 == 1).map(|i| 1u64 << (bits - 1 - i)).sum();
        BenchmarkSpec::Qpe { size, phase }
    }

    /// Default spec for a family name (`bv`, `dj`, `qft`, `qpe`).
    pub fn by_name(name: &str, size: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bv" => Ok(Self::bv(size)),
            "dj" => Ok(Self::dj_balanced(size)),
            "qft" => Ok(Self::qft(size)),
            "qpe" => Ok(Self::qpe(size)),
            other => Err(Error::Benchmark(format!("unknown benchmark `{other}`"))),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            BenchmarkSpec::Bv { size, .. }
            | BenchmarkSpec::Dj { size, .. }
            | BenchmarkSpec::Qft { size, .. }
            | BenchmarkSpec::Qpe { size, .. } => *size,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            BenchmarkSpec::Bv { .. } => "bv",
            BenchmarkSpec::Dj { .. } => "dj",
            BenchmarkSpec::Qft { .. } => "qft",
            BenchmarkSpec::Qpe { .. } => "qpe",
        }
    }

    /// Short identifier such as `qft_5`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.family(), self.size())
    }

    fn validate(&self) -> Result<()> {
        let size = self.size();
        let max = if matches!(self, BenchmarkSpec::Qft { .. }) {
            MAX_QFT_SIZE
        } else {
            MAX_SIZE
        };
        if !(MIN_SIZE..=max).contains(&size) {
            return Err(Error::Benchmark(format!(
                "{} size {size} outside {MIN_SIZE}..={max}",
                self.family()
            )));
        }
        match self {
            BenchmarkSpec::Bv { hidden, .. } => {
                parse_bits(hidden, size - 1, "hidden string")?;
            }
            BenchmarkSpec::Dj { oracle, .. } => {
                if let DjOracle::Balanced { mask } = oracle {
                    if !parse_bits(mask, size - 1, "balanced mask")?.contains(&true) {
                        return Err(Error::Benchmark("a balanced oracle needs a nonzero mask".into()));
                    }
                }
            }
            BenchmarkSpec::Qft { input, .. } => {
                parse_bits(input, size, "input")?;
            }
            BenchmarkSpec::Qpe { phase, .. } => {
                if *phase >= 1u64 << (size - 1) {
                    return Err(Error::Benchmark(format!(
                        "phase numerator {phase} needs more than {} bits",
                        size - 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Controlled phase `diag(1, 1, 1, e^{i theta})` in `{rz, cx}`, exact up to
/// global phase.
fn controlled_phase(ops: &mut Vec<Gate>, control: usize, target: usize, theta: f64) {
    ops.push(Gate::Rz(control, theta / 2.0));
    ops.push(Gate::Rz(target, theta / 2.0));
    ops.push(Gate::Cx(control, target));
    ops.push(Gate::Rz(target, -theta / 2.0));
    ops.push(Gate::Cx(control, target));
}

/// QFT without the final qubit reversal: maps `|x>` (qubit 0 = most
/// significant bit) to the product state where qubit `j` carries phase
/// `2 pi x / 2^(m - j)`.
fn qft_core(m: usize, offset: usize) -> Vec<Gate> {
    let mut ops = Vec::new();
    for j in 0..m {
        ops.push(Gate::H(offset + j));
        for k in 2..=(m - j) {
            let control = offset + j + k - 1;
            controlled_phase(&mut ops, control, offset + j, 2.0 * PI / 2f64.powi(k as i32));
        }
    }
    ops
}

fn inverse(ops: &[Gate]) -> Vec<Gate> {
    ops.iter()
        .rev()
        .map(|g| match g {
            Gate::Rz(q, a) => Gate::Rz(*q, -a),
            Gate::Sx(_) => unreachable!("no sx in generated transforms"),
            other => other.clone(),
        })
        .collect()
}

fn bits_to_int(bits: &[bool]) -> u128 {
    bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128)
}

/// Phase `2 pi * numer / 2^shift` reduced into `[0, 2 pi)`.
fn dyadic_angle(numer: u128, shift: usize) -> f64 {
    if shift >= 128 {
        return 2.0 * PI * (numer as f64) / 2f64.powi(shift as i32);
    }
    let reduced = numer & ((1u128 << shift) - 1);
    2.0 * PI * (reduced as f64) / 2f64.powi(shift as i32)
}

pub fn generate(spec: &BenchmarkSpec) -> Result<LogicalCircuit> {
    spec.validate()?;
    let size = spec.size();
    let mut ops = Vec::new();
    match spec {
        BenchmarkSpec::Bv { hidden, .. } => {
            let s = parse_bits(hidden, size - 1, "hidden string")?;
            hadamard_oracle(&mut ops, size, |ops, anc| {
                for (i, _) in s.iter().enumerate().filter(|(_, b)| **b) {
                    ops.push(Gate::Cx(i, anc));
                }
            });
            LogicalCircuit::new(size, size - 1, ops)
        }
        BenchmarkSpec::Dj { oracle, .. } => {
            hadamard_oracle(&mut ops, size, |ops, anc| match oracle {
                DjOracle::Constant { value: true } => ops.push(Gate::X(anc)),
                DjOracle::Constant { value: false } => {}
                DjOracle::Balanced { mask } => {
                    for (i, c) in mask.chars().enumerate() {
                        if c == '1' {
                            ops.push(Gate::Cx(i, anc));
                        }
                    }
                }
            });
            LogicalCircuit::new(size, size - 1, ops)
        }
        BenchmarkSpec::Qft {
            input, inverse: flip, ..
        } => {
            let bits = parse_bits(input, size, "input")?;
            let m = size;
            let core = qft_core(m, 0);
            if !flip {
                // encode with qft_core's phases, decode with its inverse
                let x = bits_to_int(&bits);
                for j in 0..m {
                    ops.push(Gate::H(j));
                    ops.push(Gate::Rz(j, dyadic_angle(x, m - j)));
                }
                ops.extend(inverse(&core));
            } else {
                // encode the state qft_core maps onto |x>
                let reversed: Vec<bool> = bits.iter().rev().copied().collect();
                let xr = bits_to_int(&reversed);
                for j in 0..m {
                    ops.push(Gate::H(j));
                    ops.push(Gate::Rz(j, -dyadic_angle(xr, j + 1)));
                }
                ops.extend(core);
            }
            for j in 0..m {
                ops.push(Gate::Measure { qubit: j, clbit: j });
            }
            LogicalCircuit::new(m, m, ops)
        }
        BenchmarkSpec::Qpe { phase, .. } => {
            let m = size - 1;
            let eigen = m;
            ops.push(Gate::X(eigen));
            for j in 0..m {
                ops.push(Gate::H(j));
            }
            for j in 0..m {
                // counting qubit j controls U^(2^j)
                let theta = dyadic_angle((*phase as u128) << j, m);
                if theta != 0.0 {
                    controlled_phase(&mut ops, j, eigen, theta);
                }
            }
            ops.extend(inverse(&qft_core(m, 0)));
            for q in 0..=m {
                ops.push(Gate::Measure { qubit: q, clbit: q });
            }
            LogicalCircuit::new(size, size, ops)
        }
    }
}

/// Shared BV/DJ skeleton: ancilla in |->, data in |+>, oracle, decode.
fn hadamard_oracle(ops: &mut Vec<Gate>, size: usize, oracle: impl FnOnce(&mut Vec<Gate>, usize)) {
    let anc = size - 1;
    ops.push(Gate::X(anc));
    for q in 0..size {
        ops.push(Gate::H(q));
    }
    oracle(ops, anc);
    for q in 0..anc {
        ops.push(Gate::H(q));
    }
    for q in 0..anc {
        ops.push(Gate::Measure { qubit: q, clbit: q });
    }
}

/// The unique bitstring a noiseless run produces.
pub fn correct_output(spec: &BenchmarkSpec) -> Result<String> {
    spec.validate()?;
    Ok(match spec {
        BenchmarkSpec::Bv { hidden, .. } => hidden.clone(),
        BenchmarkSpec::Dj { size, oracle } => match oracle {
            DjOracle::Constant { .. } => "0".repeat(size - 1),
            DjOracle::Balanced { mask } => mask.clone(),
        },
        BenchmarkSpec::Qft { input, .. } => input.clone(),
        BenchmarkSpec::Qpe { size, phase } => {
            let m = size - 1;
            let mut s: String = (0..m)
                .map(|i| if (phase >> (m - 1 - i)) & 1 == 1 { '1' } else { '0' })
                .collect();
            s.push('1');
            s
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_limits() {
        assert!(generate(&BenchmarkSpec::bv(1)).is_err());
        assert!(generate(&BenchmarkSpec::bv(17)).is_err());
        assert!(generate(&BenchmarkSpec::qft(127)).is_ok());
        assert!(generate(&BenchmarkSpec::qpe(17)).is_err());
    }

    #[test]
    fn bv_hidden_101() {
        let spec = BenchmarkSpec::Bv {
            size: 4,
            hidden: "101".into(),
        };
        assert_eq!(correct_output(&spec).unwrap(), "101");
        let c = generate(&spec).unwrap();
        assert_eq!(c.num_qubits(), 4);
        assert_eq!(c.cx_count(), 2);
    }

    #[test]
    fn dj_constant_is_all_zero() {
        assert_eq!(correct_output(&BenchmarkSpec::dj_constant(4)).unwrap(), "000");
        let zero_mask = BenchmarkSpec::Dj {
            size: 3,
            oracle: DjOracle::Balanced { mask: "00".into() },
        };
        assert!(generate(&zero_mask).is_err());
    }

    #[test]
    fn qpe_quarter_phase() {
        let spec = BenchmarkSpec::Qpe { size: 5, phase: 4 };
        assert_eq!(correct_output(&spec).unwrap(), "01001");
    }

    #[test]
    fn spec_json_shape() {
        let text = serde_json::to_string(&BenchmarkSpec::qpe(4)).unwrap();
        assert_eq!(text, r#"{"name":"qpe","size":4,"phase":2}"#);
    }
}

#[cfg(test)]
mod simulation_tests {
    use super::*;
    use crate::oracle::simulate_logical;

    fn check(spec: &BenchmarkSpec) {
        let c = generate(spec).unwrap();
        let want = correct_output(spec).unwrap();
        let d = simulate_logical(&c).unwrap();
        let p = d.get(&want).copied().unwrap_or(0.0);
        assert!((p - 1.0).abs() < 1e-9, "{}: P({want}) = {p}, dist {d:?}", spec.label());
    }

    #[test]
    fn every_family_is_deterministic() {
        for size in 2..=8 {
            check(&BenchmarkSpec::bv(size));
            check(&BenchmarkSpec::dj_constant(size));
            check(&BenchmarkSpec::dj_balanced(size));
            check(&BenchmarkSpec::qft(size));
            check(&BenchmarkSpec::qpe(size));
        }
    }

    #[test]
    fn forward_qft_direction() {
        for size in 2..=6 {
            for x in 0..(1usize << size).min(8) {
                let input: String = (0..size).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect();
                check(&BenchmarkSpec::Qft {
                    size,
                    input: input.clone(),
                    inverse: false,
                });
                check(&BenchmarkSpec::Qft {
                    size,
                    input,
                    inverse: true,
                });
            }
        }
    }

    #[test]
    fn qpe_every_phase() {
        for size in 2..=6 {
            for phase in 0..(1u64 << (size - 1)) {
                check(&BenchmarkSpec::Qpe { size, phase });
            }
        }
    }
}
