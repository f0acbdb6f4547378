//! Bell/GHZ group detection and user-annotated entanglement intervals.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::circuit::{CompiledCircuit, Gate, LogicalCircuit};
use crate::cycle::{schedule, CycleSchedule, Slot};
use crate::error::{Error, Result};

/// A set of virtual qubits entangled over the cycles `start..=end`.
/// `members[0]` is the qubit that started the group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntangledGroup {
    #[serde(with = "qubit_names")]
    pub members: Vec<usize>,
    pub start: usize,
    pub end: usize,
}

impl EntangledGroup {
    fn overlaps(&self, other: &EntangledGroup) -> bool {
        self.start <= other.end && other.start <= self.end && self.members.iter().any(|m| other.members.contains(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalSource {
    Annotation,
    #[default]
    Detected,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntanglementIntervals {
    pub groups: Vec<EntangledGroup>,
    #[serde(default)]
    pub source: IntervalSource,
}

impl EntanglementIntervals {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn annotated(groups: Vec<EntangledGroup>) -> Self {
        EntanglementIntervals {
            groups,
            source: IntervalSource::Annotation,
        }
    }

    /// Parse the annotation format `{"groups": [{"members": ["q1", "q2"], "start": 3, "end": 17}]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut parsed: EntanglementIntervals = serde_json::from_str(text)?;
        parsed.source = IntervalSource::Annotation;
        Ok(parsed)
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

mod qubit_names {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(members: &[usize], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(members.iter().map(|v| format!("q{v}")))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names
            .iter()
            .map(|n| {
                n.strip_prefix('q')
                    .and_then(|i| i.parse().ok())
                    .ok_or_else(|| D::Error::custom(format!("bad qubit name `{n}`")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Prep {
    Fresh,
    // progress through rz(pi/2) sx rz(pi/2), the basis form of h
    HalfH(u8),
    Plus,
    Used,
}

fn is_quarter_turn(angle: f64) -> bool {
    (angle - FRAC_PI_2).abs() < 1e-9
}

/// Find Bell and GHZ construction patterns in a logical circuit.
pub fn detect(circuit: &LogicalCircuit) -> EntanglementIntervals {
    detect_compiled(&CompiledCircuit::from_logical(circuit))
}

pub fn detect_compiled(circuit: &CompiledCircuit) -> EntanglementIntervals {
    detect_scheduled(&schedule(circuit))
}

/// Pattern search over a cycle view, following virtual identities through
/// swaps. A fresh qubit that received only `h` and then controls a `cx` onto
/// another fresh qubit starts a Bell group; a `cx` from an active member onto
/// a fresh qubit extends it into a GHZ group. Groups persist until a member
/// is measured.
pub fn detect_scheduled(s: &CycleSchedule) -> EntanglementIntervals {
    let n = s.num_physical();
    let mut prep = vec![Prep::Fresh; n];
    let mut active: Vec<Option<usize>> = vec![None; n];
    let mut groups: Vec<EntangledGroup> = Vec::new();
    let mut open = Vec::new();

    for t in 0..s.depth() {
        // measurements go last so a same-cycle extension is still seen
        let slots = s.cycle_slots(t).iter().enumerate();
        let (measures, others): (Vec<_>, Vec<_>) = slots.partition(|(_, slot)| match slot {
            Slot::Op(op) => matches!(s.circuit().ops()[*op as usize], Gate::Measure { .. }),
            _ => false,
        });
        for (q, slot) in others.into_iter().chain(measures) {
            let Slot::Op(op) = *slot else { continue };
            let gate = &s.circuit().ops()[op as usize];
            match *gate {
                Gate::Id(_) | Gate::Barrier(_) => {}
                Gate::Cx(c, tg) => {
                    if q != c {
                        continue;
                    }
                    let (vc, vt) = (s.virtual_at(c, t), s.virtual_at(tg, t));
                    if prep[vt] == Prep::Fresh {
                        if prep[vc] == Prep::Plus {
                            groups.push(EntangledGroup {
                                members: vec![vc, vt],
                                start: t,
                                end: usize::MAX,
                            });
                            let g = groups.len() - 1;
                            open.push(g);
                            active[vc] = Some(g);
                            active[vt] = Some(g);
                        } else if let Some(g) = active[vc] {
                            groups[g].end = t - 1;
                            let mut members = groups[g].members.clone();
                            members.push(vt);
                            groups.push(EntangledGroup {
                                members,
                                start: t,
                                end: usize::MAX,
                            });
                            let new = groups.len() - 1;
                            open.retain(|&x| x != g);
                            open.push(new);
                            for &m in &groups[new].members {
                                active[m] = Some(new);
                            }
                        }
                    }
                    prep[vc] = Prep::Used;
                    prep[vt] = Prep::Used;
                }
                Gate::Measure { .. } => {
                    let v = s.virtual_at(q, t);
                    if let Some(g) = active[v] {
                        groups[g].end = t;
                        open.retain(|&x| x != g);
                        for &m in &groups[g].members {
                            active[m] = None;
                        }
                    }
                    prep[v] = Prep::Used;
                }
                ref single => {
                    let v = s.virtual_at(q, t);
                    prep[v] = match (prep[v], single) {
                        (Prep::Fresh, Gate::H(_)) => Prep::Plus,
                        (Prep::Fresh, Gate::Rz(_, a)) if is_quarter_turn(*a) => Prep::HalfH(1),
                        (Prep::HalfH(1), Gate::Sx(_)) => Prep::HalfH(2),
                        (Prep::HalfH(2), Gate::Rz(_, a)) if is_quarter_turn(*a) => Prep::Plus,
                        _ => Prep::Used,
                    };
                }
            }
        }
    }
    let last = s.depth().saturating_sub(1);
    for g in open {
        groups[g].end = last;
    }
    EntanglementIntervals {
        groups,
        source: IntervalSource::Detected,
    }
}

/// Union of detected and user groups; a user group replaces every detected
/// group it overlaps (shared member and intersecting interval).
pub fn merge_annotations(
    detected: &EntanglementIntervals,
    user: &EntanglementIntervals,
    num_virtual: usize,
) -> Result<EntanglementIntervals> {
    for g in &user.groups {
        if g.start > g.end {
            return Err(Error::Entanglement(format!(
                "annotated interval starts at {} after it ends at {}",
                g.start, g.end
            )));
        }
        if g.members.len() < 2 {
            return Err(Error::Entanglement("a group needs at least two members".into()));
        }
        if let Some(v) = g.members.iter().find(|&&v| v >= num_virtual) {
            return Err(Error::Entanglement(format!("unknown virtual qubit q{v}")));
        }
    }
    if user.is_empty() {
        return Ok(detected.clone());
    }
    let mut groups: Vec<EntangledGroup> = detected
        .groups
        .iter()
        .filter(|d| !user.groups.iter().any(|u| u.overlaps(d)))
        .cloned()
        .collect();
    groups.extend(user.groups.iter().cloned());
    groups.sort_by_key(|g| (g.start, g.members.clone()));
    Ok(EntanglementIntervals {
        groups,
        source: IntervalSource::Annotation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circuit(n: usize, ops: Vec<Gate>) -> LogicalCircuit {
        LogicalCircuit::new(n, n, ops).unwrap()
    }

    fn m(q: usize) -> Gate {
        Gate::Measure { qubit: q, clbit: q }
    }

    #[test]
    fn bell_pair() {
        let e = detect(&circuit(2, vec![Gate::H(0), Gate::Cx(0, 1)]));
        assert_eq!(
            e.groups,
            vec![EntangledGroup {
                members: vec![0, 1],
                start: 1,
                end: 1
            }]
        );
    }

    #[test]
    fn ghz_extension_closes_the_pair() {
        let e = detect(&circuit(
            3,
            vec![Gate::H(0), Gate::Cx(0, 1), Gate::Cx(1, 2), m(0), m(1), m(2)],
        ));
        assert_eq!(e.groups.len(), 2);
        assert_eq!(e.groups[0].end, 1);
        assert_eq!(e.groups[1].members, vec![0, 1, 2]);
        assert_eq!((e.groups[1].start, e.groups[1].end), (2, 2));
    }

    #[test]
    fn cx_without_h_is_not_a_pattern() {
        assert!(detect(&circuit(2, vec![Gate::Cx(0, 1)])).is_empty());
        // target must be fresh
        assert!(detect(&circuit(2, vec![Gate::H(0), Gate::X(1), Gate::Cx(0, 1)])).is_empty());
    }

    #[test]
    fn basis_form_of_h_counts() {
        let h = |q| [Gate::Rz(q, FRAC_PI_2), Gate::Sx(q), Gate::Rz(q, FRAC_PI_2)];
        let mut ops = h(0).to_vec();
        ops.push(Gate::Cx(0, 1));
        assert_eq!(detect(&circuit(2, ops)).groups.len(), 1);
    }

    #[test]
    fn swaps_keep_freshness() {
        let e = detect(&circuit(3, vec![Gate::H(0), Gate::Swap(1, 2), Gate::Cx(0, 1)]));
        assert_eq!(e.groups.len(), 1);
        assert_eq!(e.groups[0].members, vec![0, 2]);
    }

    #[test]
    fn merge_precedence() {
        let detected = detect(&circuit(2, vec![Gate::H(0), Gate::Cx(0, 1), Gate::X(0)]));
        assert_eq!(
            merge_annotations(&detected, &EntanglementIntervals::empty(), 2).unwrap(),
            detected
        );
        let user = EntanglementIntervals::annotated(vec![EntangledGroup {
            members: vec![0, 1],
            start: 1,
            end: 5,
        }]);
        let merged = merge_annotations(&detected, &user, 2).unwrap();
        assert_eq!(merged.groups, user.groups);
        let bogus = EntanglementIntervals::annotated(vec![EntangledGroup {
            members: vec![0, 9],
            start: 0,
            end: 1,
        }]);
        assert!(merge_annotations(&detected, &bogus, 2).is_err());
        let backwards = EntanglementIntervals::annotated(vec![EntangledGroup {
            members: vec![0, 1],
            start: 4,
            end: 1,
        }]);
        assert!(merge_annotations(&detected, &backwards, 2).is_err());
    }

    #[test]
    fn annotation_json() {
        let e = EntanglementIntervals::from_json(r#"{"groups":[{"members":["q1","q2"],"start":3,"end":17}]}"#).unwrap();
        assert_eq!(e.groups[0].members, vec![1, 2]);
        assert_eq!(e.source, IntervalSource::Annotation);
        let text = serde_json::to_string(&e.groups[0]).unwrap();
        assert_eq!(text, r#"{"members":["q1","q2"],"start":3,"end":17}"#);
    }
}
