//! Desk-scale ground truth: exact state-vector simulation of the cycle view
//! plus Monte Carlo fault injection.

pub mod statevec;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::CalibrationSnapshot;
use crate::circuit::{classify_virtual_qubits, CompiledCircuit, Gate, LogicalCircuit, QubitClass};
use crate::cycle::{schedule, CycleSchedule, Slot};
use crate::error::{Error, Result};
use crate::estimators::slot_errors;
use statevec::{Mat2, StateVector};

/// Largest number of simulated qubits.
pub const MAX_QUBITS: usize = 14;

/// Output bitstring (character `i` = classical bit `i`) → probability.
pub type Distribution = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn code(self) -> u8 {
        match self {
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }
}

/// Error probability of every (qubit, cycle) slot of a schedule. A slot
/// fires a depolarizing channel of its arity with that probability; a
/// measurement slot flips the recorded bit instead.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    slot_errors: Vec<f64>,
}

impl NoiseSpec {
    pub fn from_snapshot(schedule: &CycleSchedule, snapshot: &CalibrationSnapshot) -> Result<Self> {
        Ok(NoiseSpec {
            slot_errors: slot_errors(schedule, snapshot)?,
        })
    }

    /// Explicit per-slot probabilities, cycle-major; values in [0, 1].
    pub fn from_slot_errors(slot_errors: Vec<f64>) -> Result<Self> {
        if let Some(p) = slot_errors.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Oracle(format!("error probability {p} outside [0, 1]")));
        }
        Ok(NoiseSpec { slot_errors })
    }

    pub fn noiseless(schedule: &CycleSchedule) -> Self {
        NoiseSpec {
            slot_errors: vec![0.0; schedule.total_slots()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrResult {
    pub trials: u64,
    pub correct: u64,
    pub sr: f64,
    /// Half-width of the 95% normal-approximation binomial interval.
    pub ci_half_width: f64,
}

impl SrResult {
    pub fn new(trials: u64, correct: u64) -> Self {
        let sr = if trials == 0 {
            0.0
        } else {
            correct as f64 / trials as f64
        };
        let ci_half_width = if trials == 0 {
            0.0
        } else {
            1.96 * (sr * (1.0 - sr) / trials as f64).sqrt()
        };
        SrResult {
            trials,
            correct,
            sr,
            ci_half_width,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.sr - self.ci_half_width, self.sr + self.ci_half_width)
    }
}

#[derive(Debug, Clone)]
enum Step {
    Unitary {
        q: u8,
        m: Mat2,
    },
    Phase {
        q: u8,
        c: num_complex::Complex64,
    },
    Cx {
        c: u8,
        t: u8,
    },
    Pauli {
        q: u8,
        code: u8,
    },
    Noise1 {
        q: u8,
        p: f64,
    },
    Noise2 {
        a: u8,
        b: u8,
        p: f64,
    },
    Measure {
        q: u8,
        clbit: u32,
        flip: f64,
        terminal: bool,
    },
}

/// The schedule lowered onto the simulated (active) qubits.
#[derive(Debug, Clone)]
struct Program {
    num_qubits: usize,
    num_clbits: usize,
    steps: Vec<Step>,
}

/// Noiseless states every `stride` steps, the ideal final distribution, and
/// the noise sites, all shared read-only by the shots.
struct Prepared<'a> {
    program: &'a Program,
    stride: usize,
    checkpoints: Vec<StateVector>,
    ideal_cumulative: Vec<f64>,
    noise_sites: Vec<usize>,
    mid_measure: bool,
}

const CHECKPOINT_BYTES: usize = 64 << 20;

fn single_qubit_step(q: u8, g: &Gate) -> Step {
    match g {
        Gate::X(_) => Step::Pauli { q, code: 1 },
        Gate::Z(_) => Step::Pauli { q, code: 3 },
        // global phase dropped
        Gate::Rz(_, a) => Step::Phase {
            q,
            c: num_complex::Complex64::from_polar(1.0, *a),
        },
        Gate::Sx(_) => Step::Unitary { q, m: statevec::sx() },
        Gate::H(_) => Step::Unitary { q, m: statevec::h() },
        other => unreachable!("{other:?} is not a single-qubit unitary"),
    }
}

impl Program {
    fn build(
        s: &CycleSchedule,
        noise: Option<&NoiseSpec>,
        injection: Option<(usize, usize, Pauli)>,
    ) -> Result<Program> {
        let n = s.num_physical();
        let depth = s.depth();
        if let Some((q, t, _)) = injection {
            if q >= n || t >= depth {
                return Err(Error::Oracle(format!("cell ({q},{t}) outside the {n}x{depth} grid")));
            }
        }

        // unused ancillas never move, so their rows can be dropped
        let classes = classify_virtual_qubits(s.circuit());
        let occupancy = s.circuit().initial_occupancy();
        let mut sim_index = vec![usize::MAX; n];
        let mut k = 0;
        for p in 0..n {
            let keep =
                classes.get(occupancy[p]) != QubitClass::UnusedAncilla || injection.is_some_and(|(q, _, _)| q == p);
            if keep {
                sim_index[p] = k;
                k += 1;
            }
        }
        if k > MAX_QUBITS {
            return Err(Error::Oracle(format!(
                "{k} active qubits exceed the limit of {MAX_QUBITS}"
            )));
        }

        // a measurement is terminal when nothing but idling follows on its row
        let mut last_busy = vec![None; n];
        for t in 0..depth {
            for (q, slot) in s.cycle_slots(t).iter().enumerate() {
                let busy = match slot {
                    Slot::Idle => false,
                    Slot::Op(op) => !matches!(s.circuit().ops()[*op as usize], Gate::Id(_)),
                    Slot::SwapStep { .. } => true,
                };
                if busy {
                    last_busy[q] = Some(t);
                }
            }
        }

        let errors = noise.map(|ns| &ns.slot_errors);
        if let Some(e) = errors {
            if e.len() != s.total_slots() {
                return Err(Error::Oracle("noise spec does not match the schedule".into()));
            }
        }
        let mut steps = Vec::new();
        let mut finished = vec![false; n];
        for t in 0..depth {
            if let Some((q, ct, p)) = injection {
                // a measured-out row has already handed over its result
                if ct == t && !finished[q] {
                    steps.push(Step::Pauli {
                        q: sim_index[q] as u8,
                        code: p.code(),
                    });
                }
            }
            let mut noise_steps = Vec::new();
            for (q, slot) in s.cycle_slots(t).iter().enumerate() {
                if sim_index[q] == usize::MAX || finished[q] {
                    continue;
                }
                let sq = sim_index[q] as u8;
                let err = errors.map_or(0.0, |e| e[t * n + q]);
                match *slot {
                    Slot::Idle => {
                        if err > 0.0 {
                            noise_steps.push(Step::Noise1 { q: sq, p: err });
                        }
                    }
                    Slot::SwapStep { .. } | Slot::Op(_) => {
                        let gate = s.gate_at(q, t).expect("busy slot");
                        match gate {
                            Gate::Cx(c, tg) => {
                                if c == q {
                                    let (a, b) = (sim_index[c] as u8, sim_index[tg] as u8);
                                    steps.push(Step::Cx { c: a, t: b });
                                    if err > 0.0 {
                                        noise_steps.push(Step::Noise2 { a, b, p: err });
                                    }
                                }
                            }
                            Gate::Measure { clbit, .. } => {
                                let terminal = last_busy[q] == Some(t);
                                steps.push(Step::Measure {
                                    q: sq,
                                    clbit: clbit as u32,
                                    flip: err,
                                    terminal,
                                });
                                if terminal {
                                    finished[q] = true;
                                }
                            }
                            Gate::Id(_) => {
                                if err > 0.0 {
                                    noise_steps.push(Step::Noise1 { q: sq, p: err });
                                }
                            }
                            ref g => {
                                steps.push(single_qubit_step(sq, g));
                                if err > 0.0 {
                                    noise_steps.push(Step::Noise1 { q: sq, p: err });
                                }
                            }
                        }
                    }
                }
            }
            steps.extend(noise_steps);
        }
        Ok(Program {
            num_qubits: k,
            num_clbits: s.circuit().num_output_bits(),
            steps,
        })
    }

    fn apply_unitary_step(state: &mut StateVector, step: &Step) {
        match step {
            Step::Unitary { q, m } => state.apply(*q as usize, m),
            Step::Phase { q, c } => state.phase(*q as usize, *c),
            Step::Cx { c, t } => state.cx(*c as usize, *t as usize),
            Step::Pauli { q, code } => state.pauli_code(*q as usize, *code),
            _ => unreachable!(),
        }
    }

    /// Exact output distribution, ignoring noise steps; mid-circuit
    /// measurements branch.
    fn distribution(&self) -> Distribution {
        #[derive(Clone, Copy)]
        enum Source {
            Unset,
            Value(bool),
            Qubit(u8),
        }
        let mut out = Distribution::new();
        let mut stack = vec![(
            0usize,
            StateVector::new(self.num_qubits),
            vec![Source::Unset; self.num_clbits],
            1.0f64,
        )];
        while let Some((mut i, mut state, mut bits, weight)) = stack.pop() {
            let mut branched = false;
            while i < self.steps.len() {
                match &self.steps[i] {
                    Step::Noise1 { .. } | Step::Noise2 { .. } => {}
                    Step::Measure { q, clbit, terminal, .. } => {
                        if *terminal {
                            bits[*clbit as usize] = Source::Qubit(*q);
                        } else {
                            let p1 = state.prob_one(*q as usize);
                            for (outcome, p) in [(false, 1.0 - p1), (true, p1)] {
                                if p > 1e-14 {
                                    let mut st = state.clone();
                                    st.collapse(*q as usize, outcome, p);
                                    let mut b = bits.clone();
                                    b[*clbit as usize] = Source::Value(outcome);
                                    stack.push((i + 1, st, b, weight * p));
                                }
                            }
                            branched = true;
                            break;
                        }
                    }
                    step => Self::apply_unitary_step(&mut state, step),
                }
                i += 1;
            }
            if branched {
                continue;
            }
            for (idx, p) in state.probabilities().into_iter().enumerate() {
                if p < 1e-15 {
                    continue;
                }
                let key: String = bits
                    .iter()
                    .map(|s| match *s {
                        Source::Unset => '0',
                        Source::Value(v) => {
                            if v {
                                '1'
                            } else {
                                '0'
                            }
                        }
                        Source::Qubit(q) => {
                            if idx >> q & 1 == 1 {
                                '1'
                            } else {
                                '0'
                            }
                        }
                    })
                    .collect();
                *out.entry(key).or_insert(0.0) += weight * p;
            }
        }
        out
    }

    fn prepare(&self) -> Prepared<'_> {
        let mid_measure = self
            .steps
            .iter()
            .any(|s| matches!(s, Step::Measure { terminal: false, .. }));
        let noise_sites = self
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Step::Noise1 { .. } | Step::Noise2 { .. }))
            .map(|(i, _)| i)
            .collect();
        let mut stride = usize::MAX;
        let mut checkpoints = Vec::new();
        let mut ideal_cumulative = Vec::new();
        if !mid_measure {
            let state_bytes = (16usize << self.num_qubits).max(1);
            let budget = (CHECKPOINT_BYTES / state_bytes).max(1);
            stride = self.steps.len().div_ceil(budget).max(1);
            let mut state = StateVector::new(self.num_qubits);
            for (i, step) in self.steps.iter().enumerate() {
                if i % stride == 0 {
                    checkpoints.push(state.clone());
                }
                if matches!(
                    step,
                    Step::Unitary { .. } | Step::Phase { .. } | Step::Cx { .. } | Step::Pauli { .. }
                ) {
                    Self::apply_unitary_step(&mut state, step);
                }
            }
            let mut acc = 0.0;
            ideal_cumulative = state
                .probabilities()
                .into_iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
        }
        Prepared {
            program: self,
            stride,
            checkpoints,
            ideal_cumulative,
            noise_sites,
            mid_measure,
        }
    }
}

impl Prepared<'_> {
    /// One noisy trial; returns whether the recorded bits equal `expected`.
    /// Faults are drawn up front so a shot can resume from the noiseless
    /// checkpoint preceding its first fault.
    fn shot(&self, scratch: &mut Scratch, rng: &mut ChaCha8Rng, expected: &[bool]) -> bool {
        let program = self.program;
        let Scratch {
            state,
            bits,
            deferred,
            faults,
        } = scratch;
        faults.clear();
        for &i in &self.noise_sites {
            match program.steps[i] {
                Step::Noise1 { p, .. } => {
                    if rng.gen::<f64>() < p {
                        faults.push((i, rng.gen_range(0..4u8)));
                    }
                }
                Step::Noise2 { p, .. } => {
                    if rng.gen::<f64>() < p {
                        faults.push((i, rng.gen_range(0..16u8)));
                    }
                }
                _ => unreachable!(),
            }
        }
        bits.clear();
        bits.resize(program.num_clbits, None);
        deferred.clear();

        let start = if self.mid_measure {
            state.reset();
            0
        } else {
            let first = faults.first().map_or(program.steps.len(), |f| f.0);
            if faults.is_empty() {
                0
            } else {
                let k = first / self.stride;
                state.clone_from(&self.checkpoints[k]);
                k * self.stride
            }
        };
        let skip_evolution = !self.mid_measure && faults.is_empty();
        let mut cursor = 0;
        for (i, step) in program.steps.iter().enumerate().skip(start) {
            match step {
                Step::Noise1 { q, .. } => {
                    if cursor < faults.len() && faults[cursor].0 == i {
                        state.pauli_code(*q as usize, faults[cursor].1);
                        cursor += 1;
                    }
                }
                Step::Noise2 { a, b, .. } => {
                    if cursor < faults.len() && faults[cursor].0 == i {
                        let code = faults[cursor].1;
                        state.pauli_code(*a as usize, code & 3);
                        state.pauli_code(*b as usize, code >> 2);
                        cursor += 1;
                    }
                }
                Step::Measure {
                    q,
                    clbit,
                    flip,
                    terminal,
                } => {
                    if *terminal {
                        deferred.retain(|(c, _, _)| c != clbit);
                        deferred.push((*clbit, *q, *flip));
                        bits[*clbit as usize] = None;
                    } else {
                        let p1 = state.prob_one(*q as usize);
                        let outcome = rng.gen::<f64>() < p1;
                        state.collapse(*q as usize, outcome, if outcome { p1 } else { 1.0 - p1 });
                        let recorded = outcome ^ (rng.gen::<f64>() < *flip);
                        deferred.retain(|(c, _, _)| c != clbit);
                        bits[*clbit as usize] = Some(recorded);
                    }
                }
                other => {
                    if !skip_evolution {
                        Program::apply_unitary_step(state, other)
                    }
                }
            }
        }
        let r = rng.gen::<f64>();
        let idx = if skip_evolution {
            let i = self.ideal_cumulative.partition_point(|&c| c <= r);
            i.min(self.ideal_cumulative.len() - 1)
        } else {
            state.sample_index(r)
        };
        for &(clbit, q, flip) in deferred.iter() {
            let outcome = idx >> q & 1 == 1;
            bits[clbit as usize] = Some(outcome ^ (rng.gen::<f64>() < flip));
        }
        bits.iter().zip(expected).all(|(b, &e)| b.unwrap_or(false) == e)
    }
}

struct Scratch {
    state: StateVector,
    bits: Vec<Option<bool>>,
    deferred: Vec<(u32, u8, f64)>,
    faults: Vec<(usize, u8)>,
}

fn parse_expected(expected: &str, num_clbits: usize) -> Result<Vec<bool>> {
    if expected.len() != num_clbits || !expected.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::Oracle(format!(
            "expected output `{expected}` is not a {num_clbits}-bit string"
        )));
    }
    Ok(expected.chars().map(|c| c == '1').collect())
}

pub fn simulate_noiseless(circuit: &CompiledCircuit) -> Result<Distribution> {
    simulate_schedule(&schedule(circuit))
}

pub fn simulate_logical(circuit: &LogicalCircuit) -> Result<Distribution> {
    simulate_noiseless(&CompiledCircuit::from_logical(circuit))
}

pub fn simulate_schedule(s: &CycleSchedule) -> Result<Distribution> {
    Ok(Program::build(s, None, None)?.distribution())
}

/// Noiseless distribution with one Pauli applied just before the operation
/// at (`qubit`, `cycle`).
pub fn inject_at(circuit: &CompiledCircuit, qubit: usize, cycle: usize, pauli: Pauli) -> Result<Distribution> {
    inject_at_schedule(&schedule(circuit), qubit, cycle, pauli)
}

pub fn inject_at_schedule(s: &CycleSchedule, qubit: usize, cycle: usize, pauli: Pauli) -> Result<Distribution> {
    Ok(Program::build(s, None, Some((qubit, cycle, pauli)))?.distribution())
}

/// Monte Carlo fault injection against the calibrated noise of `snapshot`.
pub fn run_fault_injection(
    circuit: &CompiledCircuit,
    snapshot: &CalibrationSnapshot,
    shots: u64,
    seed: u64,
    expected: &str,
) -> Result<SrResult> {
    let s = schedule(circuit);
    let noise = NoiseSpec::from_snapshot(&s, snapshot)?;
    run_with_noise(&s, &noise, shots, seed, expected)
}

/// Each shot draws from its own ChaCha stream derived from `seed` and the
/// shot index, so counts do not depend on how shots are spread over threads.
pub fn run_with_noise(s: &CycleSchedule, noise: &NoiseSpec, shots: u64, seed: u64, expected: &str) -> Result<SrResult> {
    if shots == 0 {
        return Err(Error::Oracle("at least one shot is required".into()));
    }
    let program = Program::build(s, Some(noise), None)?;
    let expected = parse_expected(expected, program.num_clbits)?;
    let prepared = program.prepare();
    let correct: u64 = (0..shots)
        .into_par_iter()
        .map_init(
            || Scratch {
                state: StateVector::new(program.num_qubits),
                bits: Vec::new(),
                deferred: Vec::new(),
                faults: Vec::new(),
            },
            |scratch, shot| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(shot);
                prepared.shot(scratch, &mut rng, &expected) as u64
            },
        )
        .sum();
    Ok(SrResult::new(shots, correct))
}

/// Total-variation distance between two distributions.
pub fn tv_distance(a: &Distribution, b: &Distribution) -> f64 {
    let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::DeviceTopology;

    fn m(q: usize) -> Gate {
        Gate::Measure { qubit: q, clbit: q }
    }

    fn logical(n: usize, ops: Vec<Gate>) -> LogicalCircuit {
        LogicalCircuit::new(n, n, ops).unwrap()
    }

    #[test]
    fn bell_distribution() {
        let d = simulate_logical(&logical(2, vec![Gate::H(0), Gate::Cx(0, 1), m(0), m(1)])).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d["00"] - 0.5).abs() < 1e-12 && (d["11"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mid_circuit_measurement_branches() {
        let c = LogicalCircuit::new(
            2,
            2,
            vec![Gate::H(0), Gate::Measure { qubit: 0, clbit: 0 }, Gate::Cx(0, 1), m(1)],
        )
        .unwrap();
        let d = simulate_logical(&c).unwrap();
        assert!((d["00"] - 0.5).abs() < 1e-12 && (d["11"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn x_before_measurement_flips() {
        let c = CompiledCircuit::from_logical(&logical(1, vec![Gate::X(0), m(0)]));
        let d = inject_at(&c, 0, 1, Pauli::X).unwrap();
        assert!((d["0"] - 1.0).abs() < 1e-12);
        let z = inject_at(&c, 0, 1, Pauli::Z).unwrap();
        assert!((z["1"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kickback_visible_in_x_basis() {
        // Z on the target before cx does nothing; X on the target with the
        // control in |+> and measured in the X basis does nothing either,
        // but Z on the target kicks back when the target is in |->.
        let ops = vec![Gate::H(0), Gate::X(1), Gate::H(1), Gate::Cx(0, 1), Gate::H(0), m(0)];
        let c = CompiledCircuit::from_logical(&logical(2, ops));
        let clean = simulate_noiseless(&c).unwrap();
        assert!((clean["10"] - 1.0).abs() < 1e-12);
        let hit = inject_at(&c, 1, 2, Pauli::Z).unwrap();
        assert!(tv_distance(&clean, &hit) > 0.99);
    }

    #[test]
    fn zero_noise_is_perfect() {
        let c = CompiledCircuit::from_logical(&logical(2, vec![Gate::X(0), m(0), m(1)]));
        let snap = CalibrationSnapshot::uniform(c.device(), 0.0, 0.0, 0.0).unwrap();
        let r = run_fault_injection(&c, &snap, 200, 1, "10").unwrap();
        assert_eq!(r.correct, 200);
    }

    #[test]
    fn full_depolarizing_gives_half() {
        let c = CompiledCircuit::new(
            DeviceTopology::line(1),
            vec![Gate::H(0), Gate::H(0), m(0)],
            vec![0],
            1,
            1,
        )
        .unwrap();
        let s = schedule(&c);
        // only the first h is noisy, at probability 1
        let noise = NoiseSpec::from_slot_errors(vec![1.0, 0.0, 0.0]).unwrap();
        let r = run_with_noise(&s, &noise, 20_000, 3, "0").unwrap();
        assert!((r.sr - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt(), "{r:?}");
    }

    #[test]
    fn seeded_runs_repeat() {
        let c = CompiledCircuit::from_logical(&logical(2, vec![Gate::H(0), Gate::Cx(0, 1), Gate::H(0), m(0)]));
        let snap = CalibrationSnapshot::uniform(c.device(), 0.05, 0.1, 0.05).unwrap();
        let a = run_fault_injection(&c, &snap, 500, 9, "00").unwrap();
        let b = run_fault_injection(&c, &snap, 500, 9, "00").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn qubit_cap() {
        let c = CompiledCircuit::from_logical(&logical(15, (0..15).map(Gate::X).collect()));
        assert!(simulate_noiseless(&c).is_err());
    }
}
