//! Graphical incentive queries over a validated [`Cid`].

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::{Cid, CidError, EdgeKind, Family, NodeKind};

/// A structural node with an instrumental control incentive, plus one
/// directed causal path decision -> ... -> node -> ... -> utility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IciWitness {
    pub node: String,
    pub paths: Vec<Vec<String>>,
}

fn validated(cid: &Cid) -> Result<(), CidError> {
    cid.validate().map_err(|e| CidError::InvalidDiagram(Box::new(e)))
}

struct CausalAdjacency<'a> {
    forward: BTreeMap<&'a str, Vec<&'a str>>,
    backward: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> CausalAdjacency<'a> {
    fn new(cid: &'a Cid) -> Self {
        let mut forward: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut backward: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in cid.edges().filter(|e| e.kind == EdgeKind::Causal) {
            forward.entry(&e.from).or_default().push(&e.to);
            backward.entry(&e.to).or_default().push(&e.from);
        }
        CausalAdjacency { forward, backward }
    }
}

/// Multi-source BFS. Returns, for every reached node, the neighbour it was
/// reached from (`None` for sources).
fn bfs<'a>(
    sources: impl Iterator<Item = &'a str>,
    adj: &BTreeMap<&'a str, Vec<&'a str>>,
) -> BTreeMap<&'a str, Option<&'a str>> {
    let mut seen: BTreeMap<&str, Option<&str>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in sources {
        seen.insert(s, None);
        queue.push_back(s);
    }
    while let Some(n) = queue.pop_front() {
        for &next in adj.get(n).into_iter().flatten() {
            if !seen.contains_key(next) {
                seen.insert(next, Some(n));
                queue.push_back(next);
            }
        }
    }
    seen
}

fn trace<'a>(from: &'a str, links: &BTreeMap<&'a str, Option<&'a str>>) -> Vec<String> {
    let mut out = vec![from.to_string()];
    let mut cur = from;
    while let Some(Some(prev)) = links.get(cur) {
        out.push(prev.to_string());
        cur = prev;
    }
    out
}

/// Structural nodes lying strictly inside a directed causal path from some
/// decision to some utility node, each with a shortest such witness. Sorted
/// by node id.
pub fn find_ici_nodes(cid: &Cid) -> Result<Vec<IciWitness>, CidError> {
    validated(cid)?;
    let adj = CausalAdjacency::new(cid);
    let of_kind = |kind: NodeKind| cid.nodes().filter(move |n| n.kind == kind).map(|n| n.id.as_str());
    let from_decision = bfs(of_kind(NodeKind::Decision), &adj.forward);
    let to_utility = bfs(of_kind(NodeKind::Utility), &adj.backward);

    let mut out = Vec::new();
    for node in cid.nodes().filter(|n| n.kind == NodeKind::Structural) {
        let id = node.id.as_str();
        if !(from_decision.contains_key(id) && to_utility.contains_key(id)) {
            continue;
        }
        let mut path = trace(id, &from_decision);
        path.reverse();
        path.extend(trace(id, &to_utility).into_iter().skip(1));
        out.push(IciWitness { node: node.id.clone(), paths: vec![path] });
    }
    Ok(out)
}

/// True when some node of the exogenous-user family carries an instrumental
/// control incentive.
pub fn user_tampering_learnable(cid: &Cid) -> Result<bool, CidError> {
    let ici = find_ici_nodes(cid)?;
    Ok(ici.iter().any(|w| cid.node(&w.node).is_some_and(|n| n.family == Family::ThetaT)))
}

/// True iff no causal edge runs from a `family` node at time `t` to a state
/// node at time `t + 1`.
pub fn privacy_check(cid: &Cid, family: &Family) -> Result<bool, CidError> {
    validated(cid)?;
    let leaks = cid.edges().any(|e| {
        if e.kind != EdgeKind::Causal {
            return false;
        }
        let (Some(from), Some(to)) = (cid.node(&e.from), cid.node(&e.to)) else {
            return false;
        };
        &from.family == family && to.family == Family::State && to.time_index == from.time_index + 1
    });
    Ok(!leaks)
}
