//! Directed session graphs.
//!
//! Nodes are resources, edges are distinct within-session transitions.
//! Repeated transitions raise an edge's weight; consecutive requests for the
//! same resource are tallied as self-loops and kept out of the edge set.

mod components;
pub mod export;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sessionizer::Session;

pub use components::{component_summary, connected_components, ComponentMode, ComponentPartition, ComponentSummary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("metric needs at least {needed} nodes, graph has {nodes}")]
    DegenerateGraph { nodes: u64, needed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SessionGraph {
    resources: Vec<String>,
    requests: Vec<u64>,
    self_loops: Vec<u64>,
    /// Sorted by `(src, dst)`, no duplicates, no self-edges.
    edges: Vec<Edge>,
}

impl SessionGraph {
    /// Builds the graph of all sessions. Node indices follow the byte order
    /// of resource strings, so the result does not depend on session order.
    pub fn build(sessions: &[Session]) -> Self {
        let names: BTreeSet<&str> = sessions
            .iter()
            .flat_map(|s| s.requests.iter().map(|r| r.resource.as_str()))
            .collect();
        let index: HashMap<&str, u32> = names.iter().enumerate().map(|(i, &n)| (n, i as u32)).collect();
        let n = names.len();
        let mut requests = vec![0u64; n];
        let mut self_loops = vec![0u64; n];
        let mut weights: HashMap<(u32, u32), u64> = HashMap::new();
        for s in sessions {
            let mut prev: Option<u32> = None;
            for r in &s.requests {
                let v = index[r.resource.as_str()];
                requests[v as usize] += 1;
                if let Some(u) = prev {
                    if u == v {
                        self_loops[v as usize] += 1;
                    } else {
                        *weights.entry((u, v)).or_default() += 1;
                    }
                }
                prev = Some(v);
            }
        }
        let mut edges: Vec<Edge> = weights
            .into_iter()
            .map(|((src, dst), weight)| Edge { src, dst, weight })
            .collect();
        edges.sort_unstable();
        SessionGraph {
            resources: names.into_iter().map(str::to_string).collect(),
            requests,
            self_loops,
            edges,
        }
    }

    /// Graph over `n` anonymous nodes named by index. Self-edges count as
    /// self-loops and repeated pairs accumulate weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let resources = (0..n).map(|i| i.to_string()).collect();
        let mut self_loops = vec![0u64; n];
        let mut weights: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u == v {
                self_loops[u] += 1;
            } else {
                *weights.entry((u as u32, v as u32)).or_default() += 1;
            }
        }
        SessionGraph {
            resources,
            requests: vec![0; n],
            self_loops,
            edges: weights
                .into_iter()
                .map(|((src, dst), weight)| Edge { src, dst, weight })
                .collect(),
        }
    }

    /// Reassembles a graph from exported parts.
    pub fn from_parts(resources: Vec<String>, requests: Vec<u64>, mut edges: Vec<Edge>) -> Self {
        assert_eq!(resources.len(), requests.len());
        let n = resources.len() as u32;
        edges.retain(|e| e.src != e.dst);
        assert!(
            edges.iter().all(|e| e.src < n && e.dst < n),
            "edge endpoint out of range"
        );
        edges.sort_unstable();
        edges.dedup_by(|b, a| {
            if (a.src, a.dst) == (b.src, b.dst) {
                a.weight += b.weight;
                true
            } else {
                false
            }
        });
        SessionGraph {
            self_loops: vec![0; resources.len()],
            resources,
            requests,
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.resources.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn resources(&self) -> &[String] {
        &self.resources
    }

    /// Requests per node.
    pub fn requests(&self) -> &[u64] {
        &self.requests
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn self_loop_count(&self) -> u64 {
        self.self_loops.iter().sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Unweighted `(in, out)` degree vectors.
    pub fn degrees(&self) -> (Vec<u64>, Vec<u64>) {
        let mut k_in = vec![0u64; self.node_count()];
        let mut k_out = vec![0u64; self.node_count()];
        for e in &self.edges {
            k_out[e.src as usize] += 1;
            k_in[e.dst as usize] += 1;
        }
        (k_in, k_out)
    }

    pub fn density(&self) -> Result<f64, GraphError> {
        density_from_counts(self.node_count() as u64, self.edge_count() as u64)
    }

    pub fn mean_degree(&self) -> Result<f64, GraphError> {
        mean_degree_from_counts(self.node_count() as u64, self.edge_count() as u64)
    }

    pub fn reciprocity(&self, mode: ReciprocityMode) -> Result<f64, GraphError> {
        let n = self.node_count() as u64;
        if n < 2 {
            return Err(GraphError::DegenerateGraph { nodes: n, needed: 2 });
        }
        let set: HashSet<(u32, u32)> = self.edges.iter().map(|e| (e.src, e.dst)).collect();
        let reciprocated = self.edges.iter().filter(|e| set.contains(&(e.dst, e.src))).count() as f64;
        Ok(match mode {
            // each reciprocated unordered pair is seen twice above
            ReciprocityMode::PairFormula => reciprocated / (n as f64 * (n - 1) as f64),
            ReciprocityMode::EdgeRatio if self.edges.is_empty() => 0.0,
            ReciprocityMode::EdgeRatio => reciprocated / self.edges.len() as f64,
        })
    }

    /// Subgraph induced by the nodes with `keep[i]`, preserving relative
    /// node order, request counts, self-loops and edge weights.
    pub fn induced(&self, keep: &[bool]) -> SessionGraph {
        assert_eq!(keep.len(), self.node_count());
        let mut remap = vec![u32::MAX; keep.len()];
        let mut next = 0u32;
        for (i, &k) in keep.iter().enumerate() {
            if k {
                remap[i] = next;
                next += 1;
            }
        }
        let pick = |v: &[u64]| -> Vec<u64> { v.iter().zip(keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect() };
        SessionGraph {
            resources: self
                .resources
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(r, _)| r.clone())
                .collect(),
            requests: pick(&self.requests),
            self_loops: pick(&self.self_loops),
            edges: self
                .edges
                .iter()
                .filter(|e| keep[e.src as usize] && keep[e.dst as usize])
                .map(|e| Edge {
                    src: remap[e.src as usize],
                    dst: remap[e.dst as usize],
                    weight: e.weight,
                })
                .collect(),
        }
    }

    /// Induced subgraph on the `k` nodes of highest total degree, ties going
    /// to the smaller node index.
    pub fn top_k_degree_subgraph(&self, k: usize) -> SessionGraph {
        if k >= self.node_count() {
            return self.clone();
        }
        let (k_in, k_out) = self.degrees();
        let mut order: Vec<usize> = (0..self.node_count()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(k_in[i] + k_out[i]), i));
        let mut keep = vec![false; self.node_count()];
        for &i in &order[..k] {
            keep[i] = true;
        }
        self.induced(&keep)
    }

    /// Induced subgraph on the largest component of the given mode
    /// (ties go to the component with the lowest id).
    pub fn largest_component(&self, mode: ComponentMode) -> SessionGraph {
        let part = connected_components(self, mode);
        let Some(best) = part.largest() else {
            return self.clone();
        };
        let keep: Vec<bool> = part.assignment.iter().map(|&c| c == best).collect();
        self.induced(&keep)
    }

    /// Adjacency in compressed rows: `(offsets, targets)`.
    pub(crate) fn out_csr(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.node_count();
        let mut offsets = vec![0usize; n + 1];
        for e in &self.edges {
            offsets[e.src as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        // edges are sorted by src, so targets line up with offsets
        let targets = self.edges.iter().map(|e| e.dst).collect();
        (offsets, targets)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReciprocityMode {
    /// `2 * #{i<j : A_ij A_ji = 1} / (n (n - 1))`
    PairFormula,
    /// Fraction of edges whose reverse edge also exists.
    EdgeRatio,
}

/// `|E| / (|V| (|V| - 1))`
pub fn density_from_counts(nodes: u64, edges: u64) -> Result<f64, GraphError> {
    if nodes < 2 {
        return Err(GraphError::DegenerateGraph { nodes, needed: 2 });
    }
    Ok(edges as f64 / (nodes as f64 * (nodes - 1) as f64))
}

/// `|E| / |V|`
pub fn mean_degree_from_counts(nodes: u64, edges: u64) -> Result<f64, GraphError> {
    if nodes == 0 {
        return Err(GraphError::DegenerateGraph { nodes, needed: 1 });
    }
    Ok(edges as f64 / nodes as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub nodes: u64,
    pub edges: u64,
    pub density: Option<f64>,
    pub mean_degree: Option<f64>,
    pub reciprocity_edge_ratio: Option<f64>,
    pub reciprocity_pair_formula: Option<f64>,
    pub self_loops: u64,
    pub total_transitions: u64,
}

impl GraphMetrics {
    /// Table-style metrics; fields undefined for tiny graphs are `None`.
    pub fn of(graph: &SessionGraph) -> Self {
        GraphMetrics {
            nodes: graph.node_count() as u64,
            edges: graph.edge_count() as u64,
            density: graph.density().ok(),
            mean_degree: graph.mean_degree().ok(),
            reciprocity_edge_ratio: graph.reciprocity(ReciprocityMode::EdgeRatio).ok(),
            reciprocity_pair_formula: graph.reciprocity(ReciprocityMode::PairFormula).ok(),
            self_loops: graph.self_loop_count(),
            total_transitions: graph.total_weight() + graph.self_loop_count(),
        }
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::sessionizer::{AgentKey, Request};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn session(path: &[&str]) -> Session {
        Session {
            agent: AgentKey::default(),
            requests: path
                .iter()
                .enumerate()
                .map(|(i, r)| Request {
                    resource: r.to_string(),
                    timestamp: i as i64,
                })
                .collect(),
        }
    }

    fn edge_names(g: &SessionGraph) -> Vec<(&str, &str, u64)> {
        g.edges()
            .iter()
            .map(|e| {
                (
                    g.resources()[e.src as usize].as_str(),
                    g.resources()[e.dst as usize].as_str(),
                    e.weight,
                )
            })
            .collect()
    }

    fn random_digraph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SessionGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        SessionGraph::from_edges(n, edges)
    }

    #[test]
    fn build_examples() {
        let g = SessionGraph::build(&[session(&["a", "b", "c"])]);
        assert_eq!(g.resources(), ["a", "b", "c"]);
        assert_eq!(edge_names(&g), [("a", "b", 1), ("b", "c", 1)]);

        let g = SessionGraph::build(&[session(&["a", "b"]), session(&["a", "b"])]);
        assert_eq!(edge_names(&g), [("a", "b", 2)]);
        assert_eq!(g.edge_count(), 1);

        let g = SessionGraph::build(&[session(&["a", "a", "b"])]);
        assert_eq!(edge_names(&g), [("a", "b", 1)]);
        assert_eq!(g.self_loop_count(), 1);
        assert_eq!(g.requests(), [2, 1]);

        let g = SessionGraph::build(&[session(&["z"]), session(&["a", "b"])]);
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn degree_examples() {
        let g = SessionGraph::from_edges(3, [(0, 1), (2, 1)]);
        let (k_in, k_out) = g.degrees();
        assert_eq!((k_in[1], k_out[1]), (2, 0));
        let (k_in, k_out) = SessionGraph::default().degrees();
        assert!(k_in.is_empty() && k_out.is_empty());
    }

    #[test]
    fn degrees_match_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = random_digraph(&mut rng, 20, 0.15);
            let mut a = vec![[0u64; 20]; 20];
            for e in g.edges() {
                a[e.src as usize][e.dst as usize] = 1;
            }
            let (k_in, k_out) = g.degrees();
            for i in 0..20 {
                assert_eq!(k_out[i], a[i].iter().sum::<u64>());
                assert_eq!(k_in[i], (0..20).map(|r| a[r][i]).sum::<u64>());
            }
        }
    }

    #[test]
    fn density_and_mean_degree() {
        let complete = SessionGraph::from_edges(3, [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
        assert_eq!(complete.density().unwrap(), 1.0);
        assert_eq!(SessionGraph::from_edges(1, []).mean_degree().unwrap(), 0.0);
        assert!(matches!(
            SessionGraph::from_edges(1, []).density(),
            Err(GraphError::DegenerateGraph { nodes: 1, .. })
        ));
        assert!(SessionGraph::default().mean_degree().is_err());
    }

    #[test]
    fn reciprocity_examples() {
        let g = SessionGraph::from_edges(2, [(0, 1), (1, 0)]);
        assert_eq!(g.reciprocity(ReciprocityMode::PairFormula).unwrap(), 1.0);
        assert_eq!(g.reciprocity(ReciprocityMode::EdgeRatio).unwrap(), 1.0);

        let path = SessionGraph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(path.reciprocity(ReciprocityMode::PairFormula).unwrap(), 0.0);
        assert_eq!(path.reciprocity(ReciprocityMode::EdgeRatio).unwrap(), 0.0);

        let empty = SessionGraph::from_edges(4, []);
        assert_eq!(empty.reciprocity(ReciprocityMode::EdgeRatio).unwrap(), 0.0);
        assert!(SessionGraph::from_edges(1, [])
            .reciprocity(ReciprocityMode::EdgeRatio)
            .is_err());
    }

    #[test]
    fn reciprocity_matches_pair_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 15;
            let g = random_digraph(&mut rng, n, 0.2);
            let mut a = vec![vec![false; n]; n];
            for e in g.edges() {
                a[e.src as usize][e.dst as usize] = true;
            }
            let (mut pairs, mut recip_edges, mut m) = (0usize, 0usize, 0usize);
            for i in 0..n {
                for j in 0..n {
                    if a[i][j] {
                        m += 1;
                        if a[j][i] {
                            recip_edges += 1;
                        }
                    }
                    if i < j && a[i][j] && a[j][i] {
                        pairs += 1;
                    }
                }
            }
            let pair = 2.0 * pairs as f64 / (n * (n - 1)) as f64;
            let ratio = recip_edges as f64 / m as f64;
            assert!((g.reciprocity(ReciprocityMode::PairFormula).unwrap() - pair).abs() < 1e-15);
            assert!((g.reciprocity(ReciprocityMode::EdgeRatio).unwrap() - ratio).abs() < 1e-15);
        }
    }

    #[test]
    fn top_k_examples() {
        let star = SessionGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]);
        let sub = star.top_k_degree_subgraph(1);
        assert_eq!(sub.resources(), ["0"]);
        assert_eq!(sub.edge_count(), 0);
        assert_eq!(star.top_k_degree_subgraph(4), star);
        assert_eq!(star.top_k_degree_subgraph(10), star);
    }

    #[test]
    fn top_k_matches_quadratic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 30;
            let k = 10;
            let g = random_digraph(&mut rng, n, 0.1);
            let mut deg = vec![0u64; n];
            for e in g.edges() {
                deg[e.src as usize] += 1;
                deg[e.dst as usize] += 1;
            }
            // selection by repeated max scan
            let mut chosen = vec![false; n];
            for _ in 0..k {
                let mut best = None;
                for i in 0..n {
                    if !chosen[i] && best.is_none_or(|b: usize| deg[i] > deg[b]) {
                        best = Some(i);
                    }
                }
                chosen[best.unwrap()] = true;
            }
            let kept: Vec<usize> = (0..n).filter(|&i| chosen[i]).collect();
            let mut expected = Vec::new();
            for (a, &u) in kept.iter().enumerate() {
                for (b, &v) in kept.iter().enumerate() {
                    if g.edges().iter().any(|e| e.src as usize == u && e.dst as usize == v) {
                        expected.push((a as u32, b as u32));
                    }
                }
            }
            let sub = g.top_k_degree_subgraph(k);
            let names: Vec<String> = kept.iter().map(|i| i.to_string()).collect();
            assert_eq!(sub.resources(), names.as_slice());
            let got: Vec<(u32, u32)> = sub.edges().iter().map(|e| (e.src, e.dst)).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn largest_component_subgraph() {
        let g = SessionGraph::from_edges(6, [(0, 1), (2, 3), (3, 4), (4, 2)]);
        let sub = g.largest_component(ComponentMode::Weak);
        assert_eq!(sub.resources(), ["2", "3", "4"]);
        assert_eq!(sub.edge_count(), 3);
    }

    fn arb_sessions() -> impl Strategy<Value = Vec<Vec<u8>>> {
        prop::collection::vec(prop::collection::vec(0u8..8, 1..8), 0..12)
    }

    fn to_sessions(raw: &[Vec<u8>]) -> Vec<Session> {
        raw.iter()
            .map(|s| {
                let names: Vec<String> = s.iter().map(|b| format!("/r{b}")).collect();
                session(&names.iter().map(String::as_str).collect::<Vec<_>>())
            })
            .collect()
    }

    proptest! {
        #[test]
        fn graph_invariants(raw in arb_sessions()) {
            let sessions = to_sessions(&raw);
            let g = SessionGraph::build(&sessions);
            let (k_in, k_out) = g.degrees();
            prop_assert_eq!(k_in.iter().sum::<u64>(), g.edge_count() as u64);
            prop_assert_eq!(k_out.iter().sum::<u64>(), g.edge_count() as u64);
            prop_assert!(g.edges().iter().all(|e| e.src != e.dst));
            let transitions: usize = sessions.iter().map(|s| s.len() - 1).sum();
            prop_assert_eq!(g.total_weight() + g.self_loop_count(), transitions as u64);
            if let Ok(d) = g.density() {
                prop_assert!((0.0..=1.0).contains(&d));
            }
            for mode in [ReciprocityMode::PairFormula, ReciprocityMode::EdgeRatio] {
                if let Ok(r) = g.reciprocity(mode) {
                    prop_assert!((0.0..=1.0).contains(&r));
                }
            }
        }

        #[test]
        fn build_ignores_session_order(raw in arb_sessions(), seed in any::<u64>()) {
            let sessions = to_sessions(&raw);
            let mut shuffled = sessions.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            prop_assert_eq!(SessionGraph::build(&sessions), SessionGraph::build(&shuffled));
        }
    }
}
