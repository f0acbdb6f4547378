//! A small layout + SWAP-insertion transpiler.
//!
//! It exists to produce many structurally different compiled variants of
//! the same logical circuit; it makes no attempt at matching any vendor's
//! pass manager.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{CompiledCircuit, Gate, LogicalCircuit};
use crate::error::{Error, Result};
use crate::topology::DeviceTopology;

/// Number of upcoming CNOTs the lookahead router scores.
const LOOKAHEAD_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMethod {
    Trivial,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingMethod {
    GreedyNearest,
    Lookahead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct CompileConfig {
    pub layout: LayoutMethod,
    pub routing: RoutingMethod,
    pub optimization_level: u8,
    pub seed: u64,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            layout: LayoutMethod::Trivial,
            routing: RoutingMethod::GreedyNearest,
            optimization_level: 1,
            seed: 0,
        }
    }
}

impl CompileConfig {
    pub fn new(layout: LayoutMethod, routing: RoutingMethod, optimization_level: u8, seed: u64) -> Self {
        CompileConfig {
            layout,
            routing,
            optimization_level,
            seed,
        }
    }

    /// Short label such as `o1_dense_greedy_s7`.
    pub fn label(&self) -> String {
        let layout = match self.layout {
            LayoutMethod::Trivial => "trivial",
            LayoutMethod::Dense => "dense",
        };
        let routing = match self.routing {
            RoutingMethod::GreedyNearest => "greedy",
            RoutingMethod::Lookahead => "lookahead",
        };
        format!("o{}_{layout}_{routing}_s{}", self.optimization_level, self.seed)
    }

    /// Every layout/routing/level combination for one seed.
    pub fn all(seed: u64) -> Vec<CompileConfig> {
        let mut out = Vec::new();
        for level in 0..=2 {
            for layout in [LayoutMethod::Trivial, LayoutMethod::Dense] {
                for routing in [RoutingMethod::GreedyNearest, RoutingMethod::Lookahead] {
                    out.push(CompileConfig::new(layout, routing, level, seed));
                }
            }
        }
        out
    }
}

pub fn transpile(circuit: &LogicalCircuit, device: &DeviceTopology, config: &CompileConfig) -> Result<CompiledCircuit> {
    if config.optimization_level > 2 {
        return Err(Error::Routing(format!(
            "optimization level {} not in 0..=2",
            config.optimization_level
        )));
    }
    let k = circuit.num_qubits();
    let n = device.num_qubits();
    if k > n {
        return Err(Error::Routing(format!(
            "{k} virtual qubits do not fit on {} ({n} qubits)",
            device.name()
        )));
    }

    let layout = match config.layout {
        LayoutMethod::Trivial => (0..n).collect(),
        LayoutMethod::Dense => dense_layout(circuit, device, config.seed),
    };

    let mut ops = route(circuit, device, &layout, config.routing)?;
    if config.optimization_level >= 1 {
        ops = translate_to_basis(ops);
    }
    if config.optimization_level >= 2 {
        ops = peephole(ops, n);
    }
    CompiledCircuit::new(device.clone(), ops, layout, k, circuit.num_clbits())
}

/// Map logical qubits onto the best-connected BFS ball of the device;
/// ancillas fill the remaining physical qubits in index order.
fn dense_layout(circuit: &LogicalCircuit, device: &DeviceTopology, seed: u64) -> Vec<usize> {
    let k = circuit.num_qubits();
    let n = device.num_qubits();

    let mut best: Option<(usize, Vec<usize>)> = None;
    for step in 0..n {
        let start = (step + seed as usize) % n;
        let ball = bfs_prefix(device, start, k);
        if ball.len() < k {
            continue;
        }
        let inside = |q: usize| ball.contains(&q);
        let score = device.edges().iter().filter(|&&(a, b)| inside(a) && inside(b)).count();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, ball));
        }
    }
    let Some((_, ball)) = best else {
        // disconnected device; routing will report it
        return (0..n).collect();
    };

    let mut interactions = vec![0usize; k];
    for op in circuit.ops() {
        if let Gate::Cx(a, b) | Gate::Swap(a, b) = op {
            interactions[*a] += 1;
            interactions[*b] += 1;
        }
    }
    let mut logical: Vec<usize> = (0..k).collect();
    logical.sort_by_key(|&v| (std::cmp::Reverse(interactions[v]), v));

    let degree_in_ball = |p: usize| device.neighbors(p).iter().filter(|q| ball.contains(q)).count();
    let mut physical: Vec<(usize, usize)> = ball.iter().copied().enumerate().collect();
    physical.sort_by_key(|&(order, p)| (std::cmp::Reverse(degree_in_ball(p)), order));

    let mut layout = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (&v, &(_, p)) in logical.iter().zip(&physical) {
        layout[v] = p;
        taken[p] = true;
    }
    let mut free = (0..n).filter(|&p| !taken[p]);
    for slot in layout.iter_mut().skip(k) {
        *slot = free.next().expect("enough physical qubits");
    }
    layout
}

fn bfs_prefix(device: &DeviceTopology, start: usize, k: usize) -> Vec<usize> {
    let mut seen = vec![false; device.num_qubits()];
    let mut order = vec![start];
    seen[start] = true;
    let mut head = 0;
    while head < order.len() && order.len() < k {
        let u = order[head];
        head += 1;
        for &v in device.neighbors(u) {
            if !seen[v] && order.len() < k {
                seen[v] = true;
                order.push(v);
            }
        }
    }
    order
}

fn route(
    circuit: &LogicalCircuit,
    device: &DeviceTopology,
    layout: &[usize],
    method: RoutingMethod,
) -> Result<Vec<Gate>> {
    let n = device.num_qubits();
    let mut phys_of: Vec<usize> = layout.to_vec();
    let mut virt_at = vec![0; n];
    for (v, &p) in phys_of.iter().enumerate() {
        virt_at[p] = v;
    }

    let logical_ops = circuit.ops();
    let cx_positions: Vec<usize> = logical_ops
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_two_qubit())
        .map(|(i, _)| i)
        .collect();
    let window = match method {
        RoutingMethod::GreedyNearest => 1,
        RoutingMethod::Lookahead => LOOKAHEAD_WINDOW,
    };

    let mut out = Vec::with_capacity(logical_ops.len() * 2);
    let mut next_cx = 0;
    for op in logical_ops {
        let (a, b) = match op {
            Gate::Cx(a, b) | Gate::Swap(a, b) => (*a, *b),
            other => {
                out.push(other.map_qubits(|v| phys_of[v]));
                continue;
            }
        };
        let pending: Vec<(usize, usize)> = cx_positions[next_cx..]
            .iter()
            .take(window)
            .map(|&i| match &logical_ops[i] {
                Gate::Cx(x, y) | Gate::Swap(x, y) => (*x, *y),
                _ => unreachable!(),
            })
            .collect();
        next_cx += 1;

        loop {
            let (pa, pb) = (phys_of[a], phys_of[b]);
            let d = device.distance(pa, pb).ok_or_else(|| {
                Error::Routing(format!(
                    "physical qubits {pa} and {pb} are disconnected on {}",
                    device.name()
                ))
            })?;
            if d <= 1 {
                break;
            }
            let mut best: Option<(usize, (usize, usize))> = None;
            for (moving, other) in [(pa, pb), (pb, pa)] {
                for &x in device.neighbors(moving) {
                    if x == other || device.distance(x, other) >= Some(d) {
                        continue;
                    }
                    let edge = (moving.min(x), moving.max(x));
                    let score: usize = pending
                        .iter()
                        .map(|&(u, w)| {
                            let moved = |p: usize| {
                                if p == edge.0 {
                                    edge.1
                                } else if p == edge.1 {
                                    edge.0
                                } else {
                                    p
                                }
                            };
                            device.distance(moved(phys_of[u]), moved(phys_of[w])).unwrap_or(n)
                        })
                        .sum();
                    let better = match best {
                        None => true,
                        Some((s, e)) => score < s || (score == s && edge < e),
                    };
                    if better {
                        best = Some((score, edge));
                    }
                }
            }
            let (_, (x, y)) = best.expect("a neighbor on a shortest path always exists");
            out.push(Gate::Swap(x, y));
            let (vx, vy) = (virt_at[x], virt_at[y]);
            virt_at.swap(x, y);
            phys_of[vx] = y;
            phys_of[vy] = x;
        }
        out.push(op.map_qubits(|v| phys_of[v]));
    }
    Ok(out)
}

/// Rewrite `h` and `z` into the `{rz, sx, x, cx}` basis. SWAPs stay as
/// markers; the cycle view expands them into three CNOTs.
fn translate_to_basis(ops: Vec<Gate>) -> Vec<Gate> {
    let mut out = Vec::with_capacity(ops.len() * 2);
    for op in ops {
        match op {
            Gate::H(q) => {
                out.push(Gate::Rz(q, PI / 2.0));
                out.push(Gate::Sx(q));
                out.push(Gate::Rz(q, PI / 2.0));
            }
            Gate::Z(q) => out.push(Gate::Rz(q, PI)),
            other => out.push(other),
        }
    }
    out
}

/// Merge consecutive `rz` on a qubit, drop full-turn rotations and cancel
/// back-to-back `x`/`x` and identical `cx` pairs.
fn peephole(ops: Vec<Gate>, n: usize) -> Vec<Gate> {
    let mut out: Vec<Option<Gate>> = Vec::with_capacity(ops.len());
    // index into `out` of the latest surviving op on each qubit
    let mut last: Vec<Option<usize>> = vec![None; n];

    let set_last = |last: &mut Vec<Option<usize>>, g: &Gate, idx: Option<usize>| {
        for q in g.qubits() {
            last[q] = idx;
        }
    };
    // after removing op `i`, recover the previous surviving op for its qubits
    let rewind = |out: &Vec<Option<Gate>>, last: &mut Vec<Option<usize>>, qubits: &[usize], i: usize| {
        for &q in qubits {
            last[q] = (0..i)
                .rev()
                .find(|&j| out[j].as_ref().is_some_and(|g| g.qubits().contains(&q)));
        }
    };

    for op in ops {
        match &op {
            Gate::Rz(q, a) => {
                if let Some(i) = last[*q] {
                    if let Some(Gate::Rz(_, b)) = out[i] {
                        let total = (a + b).rem_euclid(2.0 * PI);
                        if total.abs() < 1e-12 || (2.0 * PI - total).abs() < 1e-12 {
                            out[i] = None;
                            rewind(&out, &mut last, &[*q], i);
                        } else {
                            out[i] = Some(Gate::Rz(*q, a + b));
                        }
                        continue;
                    }
                }
            }
            Gate::X(q) => {
                if let Some(i) = last[*q] {
                    if let Some(Gate::X(_)) = out[i] {
                        out[i] = None;
                        rewind(&out, &mut last, &[*q], i);
                        continue;
                    }
                }
            }
            Gate::Cx(c, t) => {
                if let (Some(i), Some(j)) = (last[*c], last[*t]) {
                    if i == j && out[i] == Some(Gate::Cx(*c, *t)) {
                        out[i] = None;
                        rewind(&out, &mut last, &[*c, *t], i);
                        continue;
                    }
                }
            }
            _ => {}
        }
        out.push(Some(op.clone()));
        let idx = out.len() - 1;
        set_last(&mut last, &op, Some(idx));
    }
    out.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logical(n: usize, ops: Vec<Gate>) -> LogicalCircuit {
        LogicalCircuit::new(n, n, ops).unwrap()
    }

    #[test]
    fn conforming_circuit_needs_no_swaps() {
        let c = logical(3, vec![Gate::H(0), Gate::Cx(0, 1), Gate::Cx(1, 2)]);
        let out = transpile(
            &c,
            &DeviceTopology::line(3),
            &CompileConfig::new(LayoutMethod::Trivial, RoutingMethod::GreedyNearest, 0, 0),
        )
        .unwrap();
        assert!(!out.ops().iter().any(|g| matches!(g, Gate::Swap(..))));
        assert_eq!(out.ops(), c.ops());
    }

    #[test]
    fn one_swap_on_a_line() {
        // cx between the ends of a 3-qubit line: exactly one SWAP (3 cx)
        let c = logical(3, vec![Gate::Cx(0, 2)]);
        let out = transpile(&c, &DeviceTopology::line(3), &CompileConfig::default()).unwrap();
        let swaps = out.ops().iter().filter(|g| matches!(g, Gate::Swap(..))).count();
        assert_eq!(swaps, 1);
        assert_eq!(out.cx_count(), 4);
        // lowest-index edge wins the tie
        assert_eq!(out.ops()[0], Gate::Swap(0, 1));
        assert_eq!(out.ops()[1], Gate::Cx(1, 2));
    }

    #[test]
    fn too_many_qubits() {
        let c = logical(4, vec![]);
        assert!(transpile(&c, &DeviceTopology::line(3), &CompileConfig::default()).is_err());
    }

    #[test]
    fn disconnected_routing_fails() {
        let device = DeviceTopology::new("split", 4, [(0, 1), (2, 3)]).unwrap();
        let c = logical(4, vec![Gate::Cx(0, 3)]);
        let err = transpile(&c, &device, &CompileConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Routing(_)));
    }

    #[test]
    fn level0_keeps_h_level1_translates() {
        let c = logical(1, vec![Gate::H(0), Gate::Z(0)]);
        let d = DeviceTopology::line(1);
        let l0 = transpile(
            &c,
            &d,
            &CompileConfig {
                optimization_level: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(l0.ops(), &[Gate::H(0), Gate::Z(0)]);
        let l1 = transpile(
            &c,
            &d,
            &CompileConfig {
                optimization_level: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(l1.ops().iter().all(|g| matches!(g, Gate::Rz(..) | Gate::Sx(_))));
    }

    #[test]
    fn peephole_cancels_pairs() {
        let ops = vec![
            Gate::Cx(0, 1),
            Gate::Cx(0, 1),
            Gate::X(2),
            Gate::X(2),
            Gate::Rz(0, 0.5),
            Gate::Rz(0, 0.25),
            Gate::Rz(1, PI),
            Gate::Rz(1, PI),
        ];
        assert_eq!(peephole(ops, 3), vec![Gate::Rz(0, 0.75)]);
    }

    #[test]
    fn peephole_respects_intervening_ops() {
        let ops = vec![Gate::Cx(0, 1), Gate::H(1), Gate::Cx(0, 1)];
        assert_eq!(peephole(ops.clone(), 2), ops);
    }

    #[test]
    fn dense_layout_is_a_permutation() {
        let c = logical(4, vec![Gate::Cx(0, 1), Gate::Cx(1, 2), Gate::Cx(2, 3)]);
        let d = DeviceTopology::hexagon27();
        for seed in 0..5 {
            let cfg = CompileConfig::new(LayoutMethod::Dense, RoutingMethod::Lookahead, 1, seed);
            let out = transpile(&c, &d, &cfg).unwrap();
            let mut l = out.initial_layout().to_vec();
            l.sort_unstable();
            assert_eq!(l, (0..27).collect::<Vec<_>>());
        }
    }
}
