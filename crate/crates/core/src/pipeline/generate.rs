//! Random pipeline construction.
//!
//! Topology: node 0 is the root; every later node wires one edge to a
//! uniformly chosen earlier node, which guarantees acyclicity and a path to
//! the root by construction. A second pass then offers every remaining
//! ordered pair an extra edge with probability 0.1, skipping any edge that
//! would close a cycle.

use super::{NodeId, PipelineGraph};
use crate::learners::{sample_spec, Method};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

const EXTRA_EDGE_PROBABILITY: f64 = 0.1;

fn path_exists(edges: &BTreeSet<(NodeId, NodeId)>, from: NodeId, to: NodeId) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(at) = queue.pop_front() {
        if at == to {
            return true;
        }
        for &(a, b) in edges {
            if a == at && seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    false
}

pub fn random_pipeline<R: Rng + ?Sized>(max_nodes: usize, rng: &mut R) -> PipelineGraph {
    assert!(max_nodes >= 1, "max_nodes must be positive");
    let m = rng.gen_range(1..=max_nodes) as u32;

    let mut nodes = BTreeMap::new();
    let root_method = Method::CLASSIFIERS[rng.gen_range(0..Method::CLASSIFIERS.len())];
    nodes.insert(NodeId(0), sample_spec(root_method, rng));

    let mut edges = BTreeSet::new();
    for i in 1..m {
        let method = Method::TRANSFORMERS[rng.gen_range(0..Method::TRANSFORMERS.len())];
        nodes.insert(NodeId(i), sample_spec(method, rng));
        edges.insert((NodeId(i), NodeId(rng.gen_range(0..i))));
    }

    // Extra edges between non-adjacent pairs. The coin is tossed for every
    // candidate pair so the draw sequence only depends on m, not on which
    // edges happened to be added.
    for a in 1..m {
        for b in 0..m {
            if b == a || edges.contains(&(NodeId(a), NodeId(b))) {
                continue;
            }
            if rng.gen::<f64>() < EXTRA_EDGE_PROBABILITY
                && !path_exists(&edges, NodeId(b), NodeId(a))
            {
                edges.insert((NodeId(a), NodeId(b)));
            }
        }
    }

    let g = PipelineGraph {
        nodes,
        edges,
        root: NodeId(0),
    };
    debug_assert!(g.validate().is_empty());
    g
}
