//! Cycle view of a compiled circuit and the booking table built on it.

use std::io::Write;

use serde::Serialize;

use crate::ace::AceMap;
use crate::circuit::{classify_virtual_qubits, CompiledCircuit, Gate, QubitClass, VirtualQubitClass};
use crate::entanglement::{EntangledGroup, EntanglementIntervals};
use crate::error::{Error, Result};

/// What occupies one (physical qubit, cycle) slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Implicit identity inserted by the scheduler.
    Idle,
    /// Index into the compiled op list.
    Op(u32),
    /// One of the three CNOTs a SWAP marker expands to.
    SwapStep { op: u32, step: u8 },
}

/// ASAP schedule where each gate, measurement included, takes one cycle.
#[derive(Debug, Clone)]
pub struct CycleSchedule {
    circuit: CompiledCircuit,
    depth: usize,
    n: usize,
    // cycle-major: index t * n + q
    slots: Vec<Slot>,
    virtuals: Vec<u32>,
    final_occupancy: Vec<usize>,
    output_measure: Vec<bool>,
}

pub fn schedule(circuit: &CompiledCircuit) -> CycleSchedule {
    let n = circuit.num_physical();
    let mut ready = vec![0usize; n];
    let mut clbit_ready = vec![0usize; circuit.num_output_bits()];
    // (cycle, qubit, slot)
    let mut placed: Vec<(usize, usize, Slot)> = Vec::with_capacity(circuit.ops().len() * 2);

    for (i, op) in circuit.ops().iter().enumerate() {
        let idx = i as u32;
        match op {
            Gate::Barrier(qs) => {
                let fence = qs.iter().map(|&q| ready[q]).max().unwrap_or(0);
                for &q in qs {
                    ready[q] = fence;
                }
            }
            Gate::Swap(a, b) => {
                let t = ready[*a].max(ready[*b]);
                for step in 0..3u8 {
                    placed.push((t + step as usize, *a, Slot::SwapStep { op: idx, step }));
                    placed.push((t + step as usize, *b, Slot::SwapStep { op: idx, step }));
                }
                ready[*a] = t + 3;
                ready[*b] = t + 3;
            }
            Gate::Measure { qubit, clbit } => {
                let t = ready[*qubit].max(clbit_ready[*clbit]);
                placed.push((t, *qubit, Slot::Op(idx)));
                ready[*qubit] = t + 1;
                clbit_ready[*clbit] = t + 1;
            }
            other => {
                let qs = other.qubits();
                let t = qs.iter().map(|&q| ready[q]).max().unwrap_or(0);
                for &q in &qs {
                    placed.push((t, q, Slot::Op(idx)));
                    ready[q] = t + 1;
                }
            }
        }
    }

    let depth = placed.iter().map(|&(t, _, _)| t + 1).max().unwrap_or(0);
    let mut slots = vec![Slot::Idle; depth * n];
    for (t, q, s) in placed {
        slots[t * n + q] = s;
    }

    // virtual names exchange once the third CNOT of a swap has run
    let mut at: Vec<u32> = circuit.initial_occupancy().into_iter().map(|v| v as u32).collect();
    let mut virtuals = vec![0u32; depth * n];
    for t in 0..depth {
        let row = t * n;
        virtuals[row..row + n].copy_from_slice(&at);
        for q in 0..n {
            if let Slot::SwapStep { op, step: 2 } = slots[row + q] {
                if let Gate::Swap(a, b) = circuit.ops()[op as usize] {
                    if a == q {
                        at.swap(a, b);
                    }
                }
            }
        }
    }

    CycleSchedule {
        output_measure: circuit.output_measurements(),
        final_occupancy: at.into_iter().map(|v| v as usize).collect(),
        circuit: circuit.clone(),
        depth,
        n,
        slots,
        virtuals,
    }
}

impl CycleSchedule {
    pub fn circuit(&self) -> &CompiledCircuit {
        &self.circuit
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_physical(&self) -> usize {
        self.n
    }

    pub fn slot(&self, qubit: usize, cycle: usize) -> Slot {
        self.slots[cycle * self.n + qubit]
    }

    /// All slots of one cycle, indexed by physical qubit.
    pub fn cycle_slots(&self, cycle: usize) -> &[Slot] {
        &self.slots[cycle * self.n..(cycle + 1) * self.n]
    }

    /// The gate acting on a slot; swap steps come back as the CNOT they
    /// stand for. `None` for idle slots.
    pub fn gate_at(&self, qubit: usize, cycle: usize) -> Option<Gate> {
        match self.slot(qubit, cycle) {
            Slot::Idle => None,
            Slot::Op(i) => Some(self.circuit.ops()[i as usize].clone()),
            Slot::SwapStep { op, step } => Some(self.swap_step_gate(op, step)),
        }
    }

    pub(crate) fn swap_step_gate(&self, op: u32, step: u8) -> Gate {
        let Gate::Swap(a, b) = self.circuit.ops()[op as usize] else {
            unreachable!("swap step points at a non-swap op")
        };
        if step == 1 {
            Gate::Cx(b, a)
        } else {
            Gate::Cx(a, b)
        }
    }

    /// The other operand of a two-qubit slot.
    pub fn partner(&self, qubit: usize, cycle: usize) -> Option<usize> {
        let (a, b) = match self.gate_at(qubit, cycle)? {
            Gate::Cx(a, b) | Gate::Swap(a, b) => (a, b),
            _ => return None,
        };
        Some(if a == qubit { b } else { a })
    }

    pub fn is_swap_step(&self, qubit: usize, cycle: usize) -> bool {
        matches!(self.slot(qubit, cycle), Slot::SwapStep { .. })
    }

    /// Whether op `i` is a measurement that writes a final output bit.
    pub fn is_output_measure(&self, op: usize) -> bool {
        self.output_measure[op]
    }

    pub fn virtual_at(&self, qubit: usize, cycle: usize) -> usize {
        self.virtuals[cycle * self.n + qubit] as usize
    }

    /// Virtual qubit hosted by each physical qubit after the last cycle.
    pub fn final_occupancy(&self) -> &[usize] {
        &self.final_occupancy
    }

    pub fn total_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn identity_slots(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| match s {
                Slot::Idle => true,
                Slot::Op(op) => matches!(self.circuit.ops()[*op as usize], Gate::Id(_)),
                Slot::SwapStep { .. } => false,
            })
            .count()
    }
}

/// One cell of the booking table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BookingCell {
    pub virtual_qubit: usize,
    pub entangled_with: Option<usize>,
    pub swap: bool,
    pub output: bool,
    pub ace: bool,
}

/// Physical-qubit × cycle grid of virtual identities, entanglement partners,
/// swap/output flags and ACE status.
#[derive(Debug, Clone)]
pub struct BookingTable {
    schedule: CycleSchedule,
    classes: VirtualQubitClass,
    groups: Vec<EntangledGroup>,
    // per virtual qubit: indices into `groups`
    membership: Vec<Vec<usize>>,
    ace: Vec<bool>,
}

pub fn build_booking_table(
    schedule: CycleSchedule,
    classes: VirtualQubitClass,
    entanglement: &EntanglementIntervals,
) -> Result<BookingTable> {
    let n = schedule.num_physical();
    let mut membership = vec![Vec::new(); n];
    for (g, group) in entanglement.groups.iter().enumerate() {
        if group.start > group.end {
            return Err(Error::Entanglement(format!(
                "interval starts at {} after it ends at {}",
                group.start, group.end
            )));
        }
        for &v in &group.members {
            if v >= n {
                return Err(Error::Entanglement(format!("unknown virtual qubit q{v}")));
            }
            membership[v].push(g);
        }
    }
    let ace = vec![true; schedule.total_slots()];
    Ok(BookingTable {
        schedule,
        classes,
        groups: entanglement.groups.clone(),
        membership,
        ace,
    })
}

/// Schedule, classify and book a compiled circuit in one go.
pub fn book(circuit: &CompiledCircuit, entanglement: &EntanglementIntervals) -> Result<BookingTable> {
    build_booking_table(schedule(circuit), classify_virtual_qubits(circuit), entanglement)
}

impl BookingTable {
    pub fn schedule(&self) -> &CycleSchedule {
        &self.schedule
    }

    pub fn classes(&self) -> &VirtualQubitClass {
        &self.classes
    }

    pub fn groups(&self) -> &[EntangledGroup] {
        &self.groups
    }

    pub fn depth(&self) -> usize {
        self.schedule.depth()
    }

    pub fn num_physical(&self) -> usize {
        self.schedule.num_physical()
    }

    /// Indices of the groups containing `v` whose interval covers `cycle`.
    pub fn group_ids_at(&self, v: usize, cycle: usize) -> impl Iterator<Item = usize> + '_ {
        self.membership[v].iter().copied().filter(move |&g| {
            let g = &self.groups[g];
            g.start <= cycle && cycle <= g.end
        })
    }

    /// Groups containing `v` whose interval covers `cycle`.
    pub fn groups_at(&self, v: usize, cycle: usize) -> impl Iterator<Item = &EntangledGroup> {
        self.group_ids_at(v, cycle).map(|g| &self.groups[g])
    }

    pub fn cell(&self, qubit: usize, cycle: usize) -> BookingCell {
        let v = self.schedule.virtual_at(qubit, cycle);
        let entangled_with =
            self.groups_at(v, cycle)
                .next()
                .map(|g| if g.members[0] == v { g.members[1] } else { g.members[0] });
        BookingCell {
            virtual_qubit: v,
            entangled_with,
            swap: self.schedule.is_swap_step(qubit, cycle),
            output: self.classes.get(v) == QubitClass::OutputtingLogical,
            ace: self.ace[cycle * self.num_physical() + qubit],
        }
    }

    /// Copy the ACE status of every cell from an analysis result.
    pub fn apply_ace(&mut self, map: &AceMap) {
        for (i, a) in self.ace.iter_mut().enumerate() {
            *a = map.reason_at_index(i).is_none();
        }
    }

    /// CSV export, one row per cell in qubit-major order.
    pub fn write_csv<W: Write>(&self, out: W, ace: Option<&AceMap>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "qubit",
            "cycle",
            "virtual",
            "entangled_with",
            "S",
            "O",
            "ACE",
            "reason",
            "gate",
        ])?;
        for q in 0..self.num_physical() {
            for t in 0..self.depth() {
                let c = self.cell(q, t);
                let (ace_flag, reason) = match ace {
                    Some(m) => match m.reason(q, t) {
                        Some(r) => (false, r.as_str()),
                        None => (true, ""),
                    },
                    None => (c.ace, ""),
                };
                w.write_record([
                    q.to_string(),
                    t.to_string(),
                    format!("q{}", c.virtual_qubit),
                    c.entangled_with.map(|v| format!("q{v}")).unwrap_or_default(),
                    (c.swap as u8).to_string(),
                    (c.output as u8).to_string(),
                    (ace_flag as u8).to_string(),
                    reason.to_string(),
                    self.gate_label(q, t),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// JSON export: `{"depth", "num_physical", "rows": [[cell, ...], ...]}`.
    pub fn to_json(&self, ace: Option<&AceMap>) -> serde_json::Value {
        let rows: Vec<Vec<serde_json::Value>> = (0..self.num_physical())
            .map(|q| {
                (0..self.depth())
                    .map(|t| {
                        let c = self.cell(q, t);
                        let reason = ace.and_then(|m| m.reason(q, t));
                        serde_json::json!({
                            "virtual": format!("q{}", c.virtual_qubit),
                            "entangled_with": c.entangled_with.map(|v| format!("q{v}")),
                            "S": c.swap,
                            "O": c.output,
                            "ACE": match ace {
                                Some(_) => reason.is_none(),
                                None => c.ace,
                            },
                            "reason": reason.map(|r| r.as_str()),
                            "gate": self.gate_label(q, t),
                        })
                    })
                    .collect()
            })
            .collect();
        serde_json::json!({
            "depth": self.depth(),
            "num_physical": self.num_physical(),
            "rows": rows,
        })
    }

    fn gate_label(&self, q: usize, t: usize) -> String {
        match self.schedule.gate_at(q, t) {
            None => "id".to_string(),
            Some(Gate::Rz(_, a)) => format!("rz({a})"),
            Some(Gate::Cx(c, tg)) => format!("cx({c},{tg})"),
            Some(Gate::Measure { clbit, .. }) => format!("measure(c{clbit})"),
            Some(g) => g.kind().name().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::LogicalCircuit;
    use crate::topology::DeviceTopology;

    fn compiled(n: usize, ops: Vec<Gate>) -> CompiledCircuit {
        CompiledCircuit::new(DeviceTopology::line(n), ops, (0..n).collect(), n, n).unwrap()
    }

    #[test]
    fn parallel_ops_share_a_cycle() {
        let s = schedule(&compiled(2, vec![Gate::H(0), Gate::H(1)]));
        assert_eq!(s.depth(), 1);
    }

    #[test]
    fn dependency_chain() {
        let s = schedule(&compiled(2, vec![Gate::H(0), Gate::Cx(0, 1)]));
        assert_eq!(s.depth(), 2);
        assert_eq!(s.slot(1, 0), Slot::Idle);
        assert_eq!(s.identity_slots(), 1);
    }

    #[test]
    fn barrier_is_a_zero_width_fence() {
        let s = schedule(&compiled(
            2,
            vec![Gate::H(0), Gate::H(0), Gate::Barrier(vec![0, 1]), Gate::X(1)],
        ));
        assert_eq!(s.depth(), 3);
        assert_eq!(s.gate_at(1, 2), Some(Gate::X(1)));
    }

    #[test]
    fn measurements_on_one_clbit_are_ordered() {
        let c = CompiledCircuit::new(
            DeviceTopology::line(2),
            vec![
                Gate::H(0),
                Gate::Measure { qubit: 0, clbit: 0 },
                Gate::Measure { qubit: 1, clbit: 0 },
            ],
            vec![0, 1],
            2,
            1,
        )
        .unwrap();
        let s = schedule(&c);
        assert_eq!(s.depth(), 3);
        assert!(!s.is_output_measure(1));
        assert!(s.is_output_measure(2));
    }

    #[test]
    fn swap_expands_and_exchanges_names() {
        let s = schedule(&compiled(2, vec![Gate::X(0), Gate::Swap(0, 1), Gate::X(0)]));
        assert_eq!(s.depth(), 5);
        for t in 1..4 {
            assert!(s.is_swap_step(0, t) && s.is_swap_step(1, t));
            assert_eq!(s.virtual_at(0, t), 0);
        }
        assert_eq!(s.gate_at(0, 2), Some(Gate::Cx(1, 0)));
        assert_eq!(s.virtual_at(0, 4), 1);
        assert_eq!(s.virtual_at(1, 4), 0);
        assert_eq!(s.final_occupancy(), &[1, 0]);
    }

    #[test]
    fn booking_marks_groups_and_flags() {
        let logical = LogicalCircuit::new(
            3,
            3,
            vec![
                Gate::H(0),
                Gate::Cx(0, 1),
                Gate::Cx(1, 2),
                Gate::Measure { qubit: 0, clbit: 0 },
                Gate::Measure { qubit: 1, clbit: 1 },
                Gate::Measure { qubit: 2, clbit: 2 },
            ],
        )
        .unwrap();
        let c = CompiledCircuit::from_logical(&logical);
        let ent = crate::entanglement::detect_compiled(&c);
        let table = book(&c, &ent).unwrap();
        let cell = table.cell(2, 2);
        assert_eq!(cell.entangled_with, Some(0));
        assert_eq!(table.cell(0, 2).entangled_with, Some(1));
        assert!(cell.output && cell.ace && !cell.swap);
    }

    #[test]
    fn unknown_member_rejected() {
        let c = compiled(2, vec![Gate::H(0)]);
        let ent = EntanglementIntervals::annotated(vec![EntangledGroup {
            members: vec![0, 5],
            start: 0,
            end: 0,
        }]);
        assert!(book(&c, &ent).is_err());
    }
}
