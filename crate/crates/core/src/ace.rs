//! ACE / un-ACE marking of booking-table cells.
//!
//! A cell (q, t) stands for a single-qubit error striking physical qubit `q`
//! just before the operation scheduled there in cycle `t`. The cell is
//! un-ACE when no gate path carries anything from that point to an output
//! measurement: a local disturbance on a subsystem that never interacts with
//! the measured qubits again cannot change their statistics.
//!
//! The scan runs from the last cycle to the first. Entangled groups that
//! contain an outputting qubit pin their members to ACE for the whole
//! interval, and that pinning propagates backward like any other live cell.

use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, QubitClass};
use crate::cycle::{BookingTable, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaceReason {
    UnusedAncilla,
    PreInit,
    PostMeasure,
    Trashed,
    FirstLevelNonSpread,
    SecondLevelNonSpread,
}

impl UnaceReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UnaceReason::UnusedAncilla => "unused_ancilla",
            UnaceReason::PreInit => "pre_init",
            UnaceReason::PostMeasure => "post_measure",
            UnaceReason::Trashed => "trashed",
            UnaceReason::FirstLevelNonSpread => "first_level_non_spread",
            UnaceReason::SecondLevelNonSpread => "second_level_non_spread",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AceMap {
    n: usize,
    depth: usize,
    // cycle-major, None = ACE
    reasons: Vec<Option<UnaceReason>>,
    sweeps: usize,
}

impl AceMap {
    pub fn num_physical(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_ace(&self, qubit: usize, cycle: usize) -> bool {
        self.reason(qubit, cycle).is_none()
    }

    pub fn reason(&self, qubit: usize, cycle: usize) -> Option<UnaceReason> {
        self.reasons[cycle * self.n + qubit]
    }

    pub(crate) fn reason_at_index(&self, i: usize) -> Option<UnaceReason> {
        self.reasons[i]
    }

    pub fn ace_count(&self) -> usize {
        self.reasons.iter().filter(|r| r.is_none()).count()
    }

    pub fn unace_count(&self) -> usize {
        self.reasons.len() - self.ace_count()
    }

    /// Un-ACE cells as (qubit, cycle) pairs in cycle-major order.
    pub fn unace_cells(&self) -> Vec<(usize, usize)> {
        self.reasons
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_some())
            .map(|(i, _)| (i % self.n, i / self.n))
            .collect()
    }

    /// Backward sweeps run until nothing changed.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }
}

pub fn mark_unace(table: &BookingTable) -> AceMap {
    let s = table.schedule();
    let n = s.num_physical();
    let depth = s.depth();
    let classes = table.classes();

    let outputting_group: Vec<bool> = table
        .groups()
        .iter()
        .map(|g| {
            g.members
                .iter()
                .any(|&v| classes.get(v) == QubitClass::OutputtingLogical)
        })
        .collect();
    let mut pinned_cells = vec![false; n * depth];
    if !table.groups().is_empty() {
        for t in 0..depth {
            for q in 0..n {
                let v = s.virtual_at(q, t);
                pinned_cells[t * n + q] = table.group_ids_at(v, t).any(|g| outputting_group[g]);
            }
        }
    }

    let mut ace = vec![true; n * depth];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for t in (0..depth).rev() {
            for q in 0..n {
                let i = t * n + q;
                if !ace[i] {
                    continue;
                }
                let live = pinned_cells[i] || cell_live(table, &ace, q, t);
                if !live {
                    ace[i] = false;
                    changed = true;
                }
            }
        }
        if !changed || sweeps > depth {
            break;
        }
    }

    let reasons = label(table, &ace);
    AceMap {
        n,
        depth,
        reasons,
        sweeps,
    }
}

/// Liveness of the point just after cycle `t` on physical qubit `q`.
fn successor_live(table: &BookingTable, ace: &[bool], q: usize, t: usize) -> bool {
    let s = table.schedule();
    let n = s.num_physical();
    if t + 1 >= s.depth() {
        return false;
    }
    match s.slot(q, t + 1) {
        // an error right before a swap travels with the swapped state
        Slot::SwapStep { op, step: 0 } => {
            let Gate::Swap(a, b) = s.circuit().ops()[op as usize] else {
                unreachable!()
            };
            let other = if a == q { b } else { a };
            ace[(t + 3) * n + other]
        }
        _ => ace[(t + 1) * n + q],
    }
}

fn cell_live(table: &BookingTable, ace: &[bool], q: usize, t: usize) -> bool {
    let s = table.schedule();
    match s.slot(q, t) {
        Slot::Idle => successor_live(table, ace, q, t),
        Slot::SwapStep { op, step } => match s.swap_step_gate(op, step) {
            Gate::Cx(a, b) => successor_live(table, ace, a, t) || successor_live(table, ace, b, t),
            _ => unreachable!(),
        },
        Slot::Op(op) => match &s.circuit().ops()[op as usize] {
            Gate::Measure { .. } => s.is_output_measure(op as usize) || successor_live(table, ace, q, t),
            Gate::Cx(a, b) => successor_live(table, ace, *a, t) || successor_live(table, ace, *b, t),
            _ => successor_live(table, ace, q, t),
        },
    }
}

#[derive(Clone, Copy)]
struct Milestones {
    first_op: usize,
    last_output_measure: Option<usize>,
    last_cx: Option<usize>,
    last_op: Option<usize>,
}

fn label(table: &BookingTable, ace: &[bool]) -> Vec<Option<UnaceReason>> {
    let s = table.schedule();
    let n = s.num_physical();
    let depth = s.depth();
    let mut ms = vec![
        Milestones {
            first_op: usize::MAX,
            last_output_measure: None,
            last_cx: None,
            last_op: None,
        };
        n
    ];
    for t in 0..depth {
        for q in 0..n {
            let v = s.virtual_at(q, t);
            let m = &mut ms[v];
            match s.slot(q, t) {
                Slot::Idle => continue,
                Slot::SwapStep { .. } => {}
                Slot::Op(op) => match &s.circuit().ops()[op as usize] {
                    Gate::Id(_) => continue,
                    Gate::Cx(..) => m.last_cx = Some(t),
                    Gate::Measure { .. } if s.is_output_measure(op as usize) => m.last_output_measure = Some(t),
                    _ => {}
                },
            }
            m.first_op = m.first_op.min(t);
            m.last_op = Some(t);
        }
    }

    let classes = table.classes();
    let mut reasons = vec![None; n * depth];
    for t in 0..depth {
        for q in 0..n {
            let i = t * n + q;
            if ace[i] {
                continue;
            }
            let v = s.virtual_at(q, t);
            let m = ms[v];
            let after = |x: Option<usize>| x.is_none_or(|c| t > c);
            reasons[i] = Some(if classes.get(v) == QubitClass::UnusedAncilla {
                UnaceReason::UnusedAncilla
            } else if t < m.first_op {
                UnaceReason::PreInit
            } else if m.last_output_measure.is_some_and(|c| t > c) {
                UnaceReason::PostMeasure
            } else if !after(m.last_cx) {
                UnaceReason::SecondLevelNonSpread
            } else if after(m.last_op) {
                UnaceReason::Trashed
            } else {
                UnaceReason::FirstLevelNonSpread
            });
        }
    }
    reasons
}
