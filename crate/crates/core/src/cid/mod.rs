//! Causal influence diagrams: a typed DAG of decision, structural and
//! utility nodes joined by causal and information edges.
//!
//! The [`builders`] module constructs the recommendation diagrams and the
//! reward-function-tampering contrast diagram; [`incentives`] holds the graph
//! queries (instrumental control incentives, learnability, privacy).

pub mod builders;
pub mod incentives;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builders::{build_extended_cid, build_naive_cid, build_observation_cid, build_rf_tampering_cid, DiagramKind};
pub use incentives::{find_ici_nodes, privacy_check, user_tampering_learnable, IciWitness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CidError {
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("edge {from} -> {to} references a node that does not exist")]
    DanglingEdge { from: String, to: String },
    #[error("{kind} edge {from} -> {to} ends at a {target_kind} node")]
    BadEdgeTarget { from: String, to: String, kind: EdgeKind, target_kind: NodeKind },
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("diagrams need at least two time-steps, got {0}")]
    InvalidHorizon(usize),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(Box<CidError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Decision,
    Structural,
    Utility,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Decision => "decision",
            NodeKind::Structural => "structural",
            NodeKind::Utility => "utility",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Causal,
    Information,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Causal => "causal",
            EdgeKind::Information => "information",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Symbol family of a node. The ASCII spelling is used in node ids and in
/// the text dump: `S`, `A`, `R`, `thetaT`, `thetaR`, `O`, `theta`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    State,
    Action,
    Reward,
    /// Exogenous user variable driving transitions.
    ThetaT,
    /// Exogenous user variable driving observations.
    ThetaR,
    Observation,
    /// The agent's model of reward-function parameters.
    Theta,
    Other(String),
}

impl Family {
    pub fn symbol(&self) -> &str {
        match self {
            Family::State => "S",
            Family::Action => "A",
            Family::Reward => "R",
            Family::ThetaT => "thetaT",
            Family::ThetaR => "thetaR",
            Family::Observation => "O",
            Family::Theta => "theta",
            Family::Other(s) => s,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Family {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "S" => Family::State,
            "A" => Family::Action,
            "R" => Family::Reward,
            "thetaT" | "θ^T" => Family::ThetaT,
            "thetaR" | "θ^R" => Family::ThetaR,
            "O" => Family::Observation,
            "theta" | "θ" => Family::Theta,
            other => Family::Other(other.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CidNode {
    pub id: String,
    pub kind: NodeKind,
    pub family: Family,
    pub time_index: usize,
}

impl CidNode {
    /// Node with the canonical id `<family>_<t>`.
    pub fn new(kind: NodeKind, family: Family, time_index: usize) -> Self {
        CidNode { id: format!("{}_{}", family.symbol(), time_index), kind, family, time_index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CidEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

/// A causal influence diagram. Nodes are keyed by id; edges are a set so the
/// same edge cannot appear twice.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cid {
    nodes: BTreeMap<String, CidNode>,
    edges: BTreeSet<CidEdge>,
}

impl Cid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: CidNode) -> Result<(), CidError> {
        if self.nodes.contains_key(&node.id) {
            return Err(CidError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Adds an edge without checking it; call [`Cid::validate`] afterwards.
    pub fn add_edge(&mut self, from: impl Into<String>, to: impl Into<String>, kind: EdgeKind) {
        self.edges.insert(CidEdge { from: from.into(), to: to.into(), kind });
    }

    pub fn remove_edge(&mut self, from: &str, to: &str, kind: EdgeKind) -> bool {
        self.edges.remove(&CidEdge { from: from.to_string(), to: to.to_string(), kind })
    }

    pub fn node(&self, id: &str) -> Option<&CidNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &CidNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &CidEdge> {
        self.edges.iter()
    }

    pub fn has_edge(&self, from: &str, to: &str, kind: EdgeKind) -> bool {
        self.edges.contains(&CidEdge { from: from.to_string(), to: to.to_string(), kind })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Targets of causal edges leaving `id`, in id order.
    pub fn causal_children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.iter().filter(move |e| e.kind == EdgeKind::Causal && e.from == id).map(|e| e.to.as_str())
    }

    pub fn causal_parents<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.iter().filter(move |e| e.kind == EdgeKind::Causal && e.to == id).map(|e| e.from.as_str())
    }

    pub fn parents<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CidEdge> + 'a {
        self.edges.iter().filter(move |e| e.to == id)
    }

    /// Checks that every edge endpoint exists, that information edges end at
    /// decisions and causal edges at structural or utility nodes, and that
    /// the graph is acyclic over both edge kinds.
    pub fn validate(&self) -> Result<(), CidError> {
        for e in &self.edges {
            let (Some(_), Some(target)) = (self.nodes.get(&e.from), self.nodes.get(&e.to)) else {
                return Err(CidError::DanglingEdge { from: e.from.clone(), to: e.to.clone() });
            };
            let legal = match e.kind {
                EdgeKind::Information => target.kind == NodeKind::Decision,
                EdgeKind::Causal => target.kind != NodeKind::Decision,
            };
            if !legal {
                return Err(CidError::BadEdgeTarget {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    kind: e.kind,
                    target_kind: target.kind,
                });
            }
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(CidError::CycleDetected(cycle));
        }
        Ok(())
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Open,
            Done,
        }
        let ids: Vec<&str> = self.nodes.keys().map(String::as_str).collect();
        let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for e in &self.edges {
            adj[index[e.from.as_str()]].push(index[e.to.as_str()]);
        }
        let mut mark = vec![Mark::Fresh; ids.len()];
        for root in 0..ids.len() {
            if mark[root] != Mark::Fresh {
                continue;
            }
            // iterative DFS; `path` mirrors the open nodes on the stack
            let mut stack = vec![(root, 0usize)];
            let mut path = vec![root];
            mark[root] = Mark::Open;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&child) = adj[node].get(*next) {
                    *next += 1;
                    match mark[child] {
                        Mark::Open => {
                            let start = path.iter().position(|&n| n == child).unwrap();
                            let mut cycle: Vec<String> = path[start..].iter().map(|&n| ids[n].to_string()).collect();
                            cycle.push(ids[child].to_string());
                            return Some(cycle);
                        }
                        Mark::Fresh => {
                            mark[child] = Mark::Open;
                            stack.push((child, 0));
                            path.push(child);
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[node] = Mark::Done;
                    stack.pop();
                    path.pop();
                }
            }
        }
        None
    }

    /// Line-oriented dump: `node <id> <kind> <family> <t>` and
    /// `edge <from> <to> <causal|information>`, sorted lexicographically.
    pub fn dump(&self) -> String {
        let mut lines: Vec<String> = self
            .nodes
            .values()
            .map(|n| format!("node {} {} {} {}", n.id, n.kind, n.family, n.time_index))
            .chain(self.edges.iter().map(|e| format!("edge {} {} {}", e.from, e.to, e.kind)))
            .collect();
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}
