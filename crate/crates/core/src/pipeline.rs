//! Schedule → entanglement → booking → ACE in one call.

use crate::ace::{mark_unace, AceMap};
use crate::circuit::{classify_virtual_qubits, CompiledCircuit};
use crate::cycle::{build_booking_table, schedule, BookingTable};
use crate::entanglement::{detect_scheduled, merge_annotations, EntanglementIntervals};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Analysis {
    pub table: BookingTable,
    pub ace: AceMap,
    pub entanglement: EntanglementIntervals,
}

/// Run the static analysis on a compiled circuit. User annotations, when
/// given, take precedence over detected groups they overlap.
pub fn analyze(circuit: &CompiledCircuit, annotations: Option<&EntanglementIntervals>) -> Result<Analysis> {
    let sched = schedule(circuit);
    let detected = detect_scheduled(&sched);
    let entanglement = match annotations {
        Some(user) => merge_annotations(&detected, user, circuit.num_physical())?,
        None => detected,
    };
    let mut table = build_booking_table(sched, classify_virtual_qubits(circuit), &entanglement)?;
    let ace = mark_unace(&table);
    table.apply_ace(&ace);
    Ok(Analysis {
        table,
        ace,
        entanglement,
    })
}
