use serde::{Deserialize, Serialize};

use super::SessionGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentMode {
    /// Components of the undirected view.
    Weak,
    /// Maximal sets of mutually reachable nodes.
    Strong,
}

/// Node-to-component assignment. Component ids are numbered in order of
/// their smallest member node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    pub mode: ComponentMode,
    pub assignment: Vec<u32>,
    pub sizes: Vec<usize>,
}

impl ComponentPartition {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Id of the largest component, lowest id on ties.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(usize, u32)> = None;
        for (id, &size) in self.sizes.iter().enumerate() {
            if best.is_none_or(|(s, _)| size > s) {
                best = Some((size, id as u32));
            }
        }
        best.map(|(_, id)| id)
    }

    pub fn largest_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    fn from_raw(mode: ComponentMode, raw: &[u32]) -> Self {
        let mut relabel = vec![u32::MAX; raw.len()];
        let mut assignment = Vec::with_capacity(raw.len());
        let mut sizes: Vec<usize> = Vec::new();
        for &r in raw {
            let slot = &mut relabel[r as usize];
            if *slot == u32::MAX {
                *slot = sizes.len() as u32;
                sizes.push(0);
            }
            sizes[*slot as usize] += 1;
            assignment.push(*slot);
        }
        ComponentPartition {
            mode,
            assignment,
            sizes,
        }
    }
}

pub fn connected_components(graph: &SessionGraph, mode: ComponentMode) -> ComponentPartition {
    let raw = match mode {
        ComponentMode::Weak => weak_raw(graph),
        ComponentMode::Strong => strong_raw(graph),
    };
    ComponentPartition::from_raw(mode, &raw)
}

fn weak_raw(graph: &SessionGraph) -> Vec<u32> {
    let n = graph.node_count();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut size = vec![1u32; n];

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            let up = parent[parent[x as usize] as usize];
            parent[x as usize] = up;
            x = up;
        }
        x
    }

    for e in graph.edges() {
        let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
        if a != b {
            let (big, small) = if size[a as usize] >= size[b as usize] {
                (a, b)
            } else {
                (b, a)
            };
            parent[small as usize] = big;
            size[big as usize] += size[small as usize];
        }
    }
    (0..n as u32).map(|v| find(&mut parent, v)).collect()
}

/// Tarjan's algorithm with an explicit call stack; session graphs easily
/// have paths long enough to overflow the native one.
fn strong_raw(graph: &SessionGraph) -> Vec<u32> {
    const UNSEEN: u32 = u32::MAX;
    let n = graph.node_count();
    let (offsets, targets) = graph.out_csr();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut calls: Vec<(u32, usize)> = Vec::new();
    let mut counter = 0u32;
    let mut next_comp = 0u32;

    for root in 0..n as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        index[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        calls.push((root, offsets[root as usize]));

        while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
            let vi = v as usize;
            if *pos < offsets[vi + 1] {
                let w = targets[*pos];
                *pos += 1;
                let wi = w as usize;
                if index[wi] == UNSEEN {
                    index[wi] = counter;
                    low[wi] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[wi] = true;
                    calls.push((w, offsets[wi]));
                } else if on_stack[wi] {
                    low[vi] = low[vi].min(index[wi]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(u, _)) = calls.last() {
                low[u as usize] = low[u as usize].min(low[vi]);
            }
            if low[vi] == index[vi] {
                loop {
                    let w = stack.pop().expect("tarjan stack holds v");
                    on_stack[w as usize] = false;
                    comp[w as usize] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub wcc_count: u64,
    pub scc_count: u64,
    pub largest_wcc: u64,
    pub largest_scc: u64,
}

pub fn component_summary(graph: &SessionGraph) -> ComponentSummary {
    let weak = connected_components(graph, ComponentMode::Weak);
    let strong = connected_components(graph, ComponentMode::Strong);
    ComponentSummary {
        wcc_count: weak.count() as u64,
        scc_count: strong.count() as u64,
        largest_wcc: weak.largest_size() as u64,
        largest_scc: strong.largest_size() as u64,
    }
}
