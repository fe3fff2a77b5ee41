use std::collections::BTreeSet;

use tamperlab::cid::{Cid, EdgeKind, NodeKind};

fn walk(cid: &Cid, path: &mut Vec<String>, found: &mut BTreeSet<String>) {
    let last = path.last().unwrap().clone();
    if cid.node(&last).unwrap().kind == NodeKind::Utility {
        for inner in &path[1..path.len() - 1] {
            if cid.node(inner).unwrap().kind == NodeKind::Structural {
                found.insert(inner.clone());
            }
        }
    }
    let children: Vec<String> =
        cid.edges().filter(|e| e.kind == EdgeKind::Causal && e.from == last).map(|e| e.to.clone()).collect();
    for child in children {
        if !path.contains(&child) {
            path.push(child);
            walk(cid, path, found);
            path.pop();
        }
    }
}

/// Structural nodes strictly inside some simple causal path from a decision
/// to a utility node, found by enumerating every such path.
pub fn exhaustive_ici(cid: &Cid) -> BTreeSet<String> {
    let mut found = BTreeSet::new();
    for d in cid.nodes().filter(|n| n.kind == NodeKind::Decision) {
        walk(cid, &mut vec![d.id.clone()], &mut found);
    }
    found
}
