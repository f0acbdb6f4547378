//! Device coupling graphs.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TopologyJson {
    name: String,
    n: usize,
    edges: Vec<[usize; 2]>,
}

/// Undirected coupling graph of a device. Serialized as
/// `{"name": ..., "n": ..., "edges": [[a, b], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TopologyJson", into = "TopologyJson")]
pub struct DeviceTopology {
    name: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    dist: Vec<u32>,
}

impl PartialEq for DeviceTopology {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.n == other.n && self.edges == other.edges
    }
}

impl TryFrom<TopologyJson> for DeviceTopology {
    type Error = Error;

    fn try_from(raw: TopologyJson) -> Result<Self> {
        DeviceTopology::new(raw.name, raw.n, raw.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<DeviceTopology> for TopologyJson {
    fn from(t: DeviceTopology) -> Self {
        TopologyJson {
            name: t.name,
            n: t.n,
            edges: t.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl DeviceTopology {
    pub fn new(name: impl Into<String>, n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Topology(format!(
                    "edge ({a},{b}) references a qubit outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::Topology(format!("self-loop on qubit {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let dist = all_pairs_bfs(n, &adjacency);
        Ok(DeviceTopology {
            name: name.into(),
            n,
            edges,
            adjacency,
            dist,
        })
    }

    pub fn line(n: usize) -> Self {
        Self::new(format!("line-{n}"), n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        Self::new(format!("grid-{rows}x{cols}"), rows * cols, edges).unwrap()
    }

    pub fn fully_connected(n: usize) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
        Self::new(format!("full-{n}"), n, edges).unwrap()
    }

    /// The 27-qubit heavy-hexagon lattice of the Falcon processors.
    pub fn hexagon27() -> Self {
        const EDGES: [(usize, usize); 28] = [
            (0, 1),
            (1, 2),
            (1, 4),
            (2, 3),
            (3, 5),
            (4, 7),
            (5, 8),
            (6, 7),
            (7, 10),
            (8, 9),
            (8, 11),
            (10, 12),
            (11, 14),
            (12, 13),
            (12, 15),
            (13, 14),
            (14, 16),
            (15, 18),
            (16, 19),
            (17, 18),
            (18, 21),
            (19, 20),
            (19, 22),
            (21, 23),
            (22, 25),
            (23, 24),
            (24, 25),
            (25, 26),
        ];
        Self::new("hexagon-27", 27, EDGES).unwrap()
    }

    /// The 127-qubit heavy-hexagon lattice of the Eagle processors: seven
    /// rows of data qubits joined by four bridge qubits between each pair of
    /// rows.
    pub fn heavy_hex127() -> Self {
        // (first column, last column) of each row
        const ROWS: [(usize, usize); 7] = [(0, 13), (0, 14), (0, 14), (0, 14), (0, 14), (0, 14), (1, 14)];
        let mut edges = Vec::new();
        let mut row_start = Vec::new();
        let mut next = 0;
        for (r, &(lo, hi)) in ROWS.iter().enumerate() {
            row_start.push(next);
            let len = hi - lo + 1;
            for i in 1..len {
                edges.push((next + i - 1, next + i));
            }
            next += len;
            if r + 1 < ROWS.len() {
                // bridges follow the row they hang under
                next += 4;
            }
        }
        let at = |r: usize, col: usize| row_start[r] + col - ROWS[r].0;
        for r in 0..ROWS.len() - 1 {
            let bridge_base = row_start[r] + (ROWS[r].1 - ROWS[r].0 + 1);
            let cols: [usize; 4] = if r % 2 == 0 { [0, 4, 8, 12] } else { [2, 6, 10, 14] };
            for (k, &col) in cols.iter().enumerate() {
                let bridge = bridge_base + k;
                edges.push((at(r, col), bridge));
                edges.push((bridge, at(r + 1, col)));
            }
        }
        Self::new("heavy-hex-127", next, edges).unwrap()
    }

    /// Built-in devices: `line-N`, `grid-RxC`, `full-N`, `hexagon-27`,
    /// `heavy-hex-127`.
    pub fn by_name(name: &str) -> Result<Self> {
        let bad = || Error::Topology(format!("unknown built-in device `{name}`"));
        match name {
            "hexagon-27" | "montreal" => return Ok(Self::hexagon27()),
            "heavy-hex-127" | "washington" => return Ok(Self::heavy_hex127()),
            _ => {}
        }
        if let Some(n) = name.strip_prefix("line-") {
            return Ok(Self::line(n.parse().map_err(|_| bad())?));
        }
        if let Some(n) = name.strip_prefix("full-") {
            return Ok(Self::fully_connected(n.parse().map_err(|_| bad())?));
        }
        if let Some(rc) = name.strip_prefix("grid-") {
            let (r, c) = rc.split_once('x').ok_or_else(bad)?;
            return Ok(Self::grid(r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?));
        }
        Err(bad())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Shortest-path hop count, `None` when disconnected.
    pub fn distance(&self, a: usize, b: usize) -> Option<usize> {
        match self.dist[a * self.n + b] {
            UNREACHABLE => None,
            d => Some(d as usize),
        }
    }
}

fn all_pairs_bfs(n: usize, adjacency: &[Vec<usize>]) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if row[v] == UNREACHABLE {
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sizes() {
        let h = DeviceTopology::hexagon27();
        assert_eq!(h.num_qubits(), 27);
        assert_eq!(h.edges().len(), 28);
        let e = DeviceTopology::heavy_hex127();
        assert_eq!(e.num_qubits(), 127);
        // 6*13 + ... row chains plus 6*4*2 bridge edges
        assert_eq!(e.edges().len(), 13 + 14 * 5 + 13 + 48);
        for q in 0..127 {
            assert!(e.neighbors(q).len() <= 3, "heavy-hex degree bound at {q}");
            assert!(e.distance(0, q).is_some(), "qubit {q} disconnected");
        }
    }

    #[test]
    fn rejects_self_loops_and_bad_indices() {
        assert!(DeviceTopology::new("x", 2, [(0, 0)]).is_err());
        assert!(DeviceTopology::new("x", 2, [(0, 2)]).is_err());
    }

    #[test]
    fn json_shape() {
        let t = DeviceTopology::line(3);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"name":"line-3","n":3,"edges":[[0,1],[1,2]]}"#);
        let back: DeviceTopology = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.distance(0, 2), Some(2));
    }

    #[test]
    fn disconnected_distance() {
        let t = DeviceTopology::new("pair", 3, [(0, 1)]).unwrap();
        assert_eq!(t.distance(0, 2), None);
    }

    #[test]
    fn by_name() {
        assert_eq!(DeviceTopology::by_name("grid-3x3").unwrap().num_qubits(), 9);
        assert!(DeviceTopology::by_name("nope").is_err());
    }
}
