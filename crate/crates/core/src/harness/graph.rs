use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::NodeId;

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: u64 },
    #[error("line {line}: duplicate edge {u} - {v}")]
    Duplicate { line: usize, u: u64, v: u64 },
    #[error("graph is disconnected: {0} and {1} lie in different components")]
    Disconnected(NodeId, NodeId),
    #[error("graph has no nodes")]
    Empty,
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected simple graph as an edge list plus isolated-node declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl EdgeList {
    pub fn from_edges(edges: Vec<(u64, u64)>) -> Self {
        let edges: Vec<(NodeId, NodeId)> = edges.into_iter().map(|(u, v)| (NodeId(u), NodeId(v))).collect();
        let nodes: BTreeSet<NodeId> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        EdgeList {
            nodes: nodes.into_iter().collect(),
            edges,
        }
    }

    pub fn single(id: u64) -> Self {
        EdgeList {
            nodes: vec![NodeId(id)],
            edges: Vec::new(),
        }
    }

    /// Parses `u v` lines; `#` starts a comment; a lone id declares a node.
    pub fn parse(text: &str) -> Result<Self, GraphIoError> {
        let mut nodes = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let ids: Vec<u64> = body
                .split_whitespace()
                .map(|t| {
                    t.parse::<u64>().map_err(|e| GraphIoError::Parse {
                        line,
                        msg: format!("'{t}': {e}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            match ids.as_slice() {
                [u] => {
                    nodes.insert(NodeId(*u));
                }
                [u, v] => {
                    if u == v {
                        return Err(GraphIoError::SelfLoop { line, node: *u });
                    }
                    if !seen.insert((*u.min(v), *u.max(v))) {
                        return Err(GraphIoError::Duplicate { line, u: *u, v: *v });
                    }
                    nodes.insert(NodeId(*u));
                    nodes.insert(NodeId(*v));
                    edges.push((NodeId(*u), NodeId(*v)));
                }
                _ => {
                    return Err(GraphIoError::Parse {
                        line,
                        msg: format!("expected 'u v', got {} fields", ids.len()),
                    })
                }
            }
        }
        let g = EdgeList {
            nodes: nodes.into_iter().collect(),
            edges,
        };
        g.check_connected()?;
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let touched: BTreeSet<NodeId> = self.edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        for n in &self.nodes {
            if !touched.contains(n) {
                let _ = writeln!(out, "{n}");
            }
        }
        for (u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, GraphIoError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphIoError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> HashMap<NodeId, Vec<NodeId>> {
        let mut adj: HashMap<NodeId, Vec<NodeId>> = self.nodes.iter().map(|&n| (n, Vec::new())).collect();
        for &(u, v) in &self.edges {
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        }
        adj
    }

    pub fn check_connected(&self) -> Result<(), GraphIoError> {
        let Some(&start) = self.nodes.first() else {
            return Err(GraphIoError::Empty);
        };
        let dist = bfs_distances(&self.adjacency(), start);
        match self.nodes.iter().find(|n| !dist.contains_key(n)) {
            Some(&other) => Err(GraphIoError::Disconnected(start, other)),
            None => Ok(()),
        }
    }

    /// Renames node ids through a random injection into `[0, max_id)`.
    pub fn relabel(&self, seed: u64, max_id: u64) -> Result<Self, GraphIoError> {
        if (max_id as usize) < self.n() {
            return Err(GraphIoError::Params(format!("id range {max_id} smaller than {} nodes", self.n())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<u64> = rand::seq::index::sample(&mut rng, max_id as usize, self.n())
            .into_iter()
            .map(|i| i as u64)
            .collect();
        let map: HashMap<NodeId, NodeId> = self.nodes.iter().zip(ids).map(|(&a, b)| (a, NodeId(b))).collect();
        Ok(EdgeList {
            nodes: self.nodes.iter().map(|n| map[n]).collect(),
            edges: self.edges.iter().map(|(u, v)| (map[u], map[v])).collect(),
        })
    }
}

pub fn bfs_distances(adj: &HashMap<NodeId, Vec<NodeId>>, root: NodeId) -> HashMap<NodeId, u64> {
    let mut dist = HashMap::from([(root, 0u64)]);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        for &v in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Size, diameter and maximum degree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: u64,
    pub m: u64,
    pub diameter: u64,
    pub max_degree: u64,
}

impl GraphStats {
    pub fn of(g: &EdgeList) -> Self {
        let adj = g.adjacency();
        let diameter = g
            .nodes
            .iter()
            .map(|&s| bfs_distances(&adj, s).into_values().max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        GraphStats {
            n: g.n() as u64,
            m: g.m() as u64,
            diameter,
            max_degree: adj.values().map(Vec::len).max().unwrap_or(0) as u64,
        }
    }
}

/// Named generator with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Path { n: u64 },
    Star { leaves: u64 },
    Complete { n: u64 },
    BalancedTree { depth: u32, arity: u64 },
    GnpConnected { n: u64, p: f64, seed: u64 },
    RandomTree { n: u64, seed: u64 },
}

impl Generator {
    pub fn generate(&self) -> Result<EdgeList, GraphIoError> {
        match *self {
            Generator::Path { n } => {
                need(n >= 1, "path needs n >= 1")?;
                if n == 1 {
                    return Ok(EdgeList::single(0));
                }
                Ok(EdgeList::from_edges((1..n).map(|i| (i - 1, i)).collect()))
            }
            Generator::Star { leaves } => {
                need(leaves >= 1, "star needs at least one leaf")?;
                Ok(EdgeList::from_edges((1..=leaves).map(|i| (0, i)).collect()))
            }
            Generator::Complete { n } => {
                need(n >= 2, "complete graph needs n >= 2")?;
                Ok(EdgeList::from_edges(
                    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect(),
                ))
            }
            Generator::BalancedTree { depth, arity } => {
                need(arity >= 1 && depth <= 40, "balanced tree needs arity >= 1")?;
                if depth == 0 {
                    return Ok(EdgeList::single(0));
                }
                let mut edges = Vec::new();
                let (mut level_start, mut level_len, mut next) = (0u64, 1u64, 1u64);
                for _ in 0..depth {
                    for u in level_start..level_start + level_len {
                        for _ in 0..arity {
                            edges.push((u, next));
                            next += 1;
                        }
                    }
                    level_start += level_len;
                    level_len *= arity;
                }
                Ok(EdgeList::from_edges(edges))
            }
            Generator::RandomTree { n, seed } => {
                need(n >= 1, "random tree needs n >= 1")?;
                if n == 1 {
                    return Ok(EdgeList::single(0));
                }
                Ok(EdgeList::from_edges(random_tree_edges(n, &mut ChaCha8Rng::seed_from_u64(seed))))
            }
            Generator::GnpConnected { n, p, seed } => {
                need(n >= 2 && (0.0..=1.0).contains(&p), "gnp needs n >= 2 and p in [0, 1]")?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut set: BTreeSet<(u64, u64)> = random_tree_edges(n, &mut rng)
                    .into_iter()
                    .map(|(u, v)| (u.min(v), u.max(v)))
                    .collect();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.gen_bool(p) {
                            set.insert((u, v));
                        }
                    }
                }
                Ok(EdgeList::from_edges(set.into_iter().collect()))
            }
        }
    }
}

fn need(ok: bool, msg: &str) -> Result<(), GraphIoError> {
    if ok {
        Ok(())
    } else {
        Err(GraphIoError::Params(msg.into()))
    }
}

/// Uniform attachment: node `i` hooks onto a random earlier node, then the
/// ids are shuffled so that the tree shape is not tied to id order.
fn random_tree_edges(n: u64, rng: &mut ChaCha8Rng) -> Vec<(u64, u64)> {
    let mut perm: Vec<u64> = (0..n).collect();
    perm.shuffle(rng);
    (1..n)
        .map(|i| {
            let j = rng.gen_range(0..i);
            (perm[j as usize], perm[i as usize])
        })
        .collect()
}
