//! Mutation operators over pipeline graphs.
//!
//! One operator is drawn uniformly per call. Operators that cannot produce a
//! valid graph in the situation they drew (nothing to delete, every candidate
//! edge would close a cycle, ...) fail closed: the input graph is returned
//! unchanged. The closure invariant — mutate(valid) is valid — therefore
//! holds unconditionally.

use super::{NodeId, PipelineGraph};
use crate::learners::{sample_spec, Method};
use rand::Rng;
use std::collections::BTreeSet;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationOp {
    ReplaceMethod,
    ResampleHyperparameter,
    InsertNode,
    DeleteNode,
    AddEdge,
    RemoveEdge,
}

impl MutationOp {
    pub const ALL: [MutationOp; 6] = [
        MutationOp::ReplaceMethod,
        MutationOp::ResampleHyperparameter,
        MutationOp::InsertNode,
        MutationOp::DeleteNode,
        MutationOp::AddEdge,
        MutationOp::RemoveEdge,
    ];
}

/// Which operator was drawn and whether it actually changed the graph
/// (`applied == false` means the operator failed and the input was kept).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MutationReport {
    pub operator: MutationOp,
    pub applied: bool,
}

pub fn mutate<R: Rng + ?Sized>(g: &PipelineGraph, rng: &mut R) -> PipelineGraph {
    mutate_with_report(g, rng).0
}

pub fn mutate_with_report<R: Rng + ?Sized>(
    g: &PipelineGraph,
    rng: &mut R,
) -> (PipelineGraph, MutationReport) {
    debug_assert!(g.validate().is_empty(), "mutate requires a valid input");
    let operator = MutationOp::ALL[rng.gen_range(0..MutationOp::ALL.len())];
    let out = match operator {
        MutationOp::ReplaceMethod => replace_method(g, rng),
        MutationOp::ResampleHyperparameter => resample_hyperparameter(g, rng),
        MutationOp::InsertNode => insert_node(g, rng),
        MutationOp::DeleteNode => delete_node(g, rng),
        MutationOp::AddEdge => add_edge(g, rng),
        MutationOp::RemoveEdge => remove_edge(g, rng),
    };
    match out {
        Some(next) => {
            debug_assert!(
                next.validate().is_empty(),
                "{operator:?} broke the graph: {:?}",
                next.validate()
            );
            (next, MutationReport { operator, applied: true })
        }
        None => (
            g.clone(),
            MutationReport {
                operator,
                applied: false,
            },
        ),
    }
}

fn pick<'a, T, R: Rng + ?Sized>(items: &'a [T], rng: &mut R) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.gen_range(0..items.len())])
    }
}

/// Swap one node's method for a fresh draw from its tier (classifiers at the
/// root, transformers elsewhere); hyperparameters are resampled with it.
fn replace_method<R: Rng + ?Sized>(g: &PipelineGraph, rng: &mut R) -> Option<PipelineGraph> {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let &id = pick(&ids, rng)?;
    let pool: &[Method] = if id == g.root {
        &Method::CLASSIFIERS
    } else {
        &Method::TRANSFORMERS
    };
    let method = *pick(pool, rng)?;
    let mut next = g.clone();
    next.nodes.insert(id, sample_spec(method, rng));
    Some(next)
}

/// Redraw a single hyperparameter of one node. Fails on nodes whose method
/// has no hyperparameters.
fn resample_hyperparameter<R: Rng + ?Sized>(
    g: &PipelineGraph,
    rng: &mut R,
) -> Option<PipelineGraph> {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let &id = pick(&ids, rng)?;
    let domains = g.spec(id).method.hyperparameter_domains();
    let &(key, domain) = pick(domains, rng)?;
    let value = *pick(domain, rng)?;
    let mut next = g.clone();
    next.nodes
        .get_mut(&id)
        .unwrap()
        .hyperparameters
        .insert(key.to_string(), value);
    Some(next)
}

/// Add a fresh transformer, either spliced onto an existing edge or attached
/// as a new leaf feeding a non-root node (50/50).
fn insert_node<R: Rng + ?Sized>(g: &PipelineGraph, rng: &mut R) -> Option<PipelineGraph> {
    let new_id = NodeId(g.node_ids().map(|n| n.0).max().unwrap() + 1);
    let method = *pick(&Method::TRANSFORMERS, rng)?;
    let spec = sample_spec(method, rng);

    let mut next = g.clone();
    if rng.gen_range(0..2) == 0 {
        let edges: Vec<(NodeId, NodeId)> = g.edges().collect();
        let &(from, to) = pick(&edges, rng)?;
        next.edges.remove(&(from, to));
        next.edges.insert((from, new_id));
        next.edges.insert((new_id, to));
    } else {
        let targets: Vec<NodeId> = g.node_ids().filter(|&n| n != g.root).collect();
        let &target = pick(&targets, rng)?;
        next.edges.insert((new_id, target));
    }
    next.nodes.insert(new_id, spec);
    Some(next)
}

/// Remove one non-root node, bridging each of its predecessors to each of
/// its successors so nothing gets disconnected.
fn delete_node<R: Rng + ?Sized>(g: &PipelineGraph, rng: &mut R) -> Option<PipelineGraph> {
    let candidates: Vec<NodeId> = g.node_ids().filter(|&n| n != g.root).collect();
    let &victim = pick(&candidates, rng)?;
    let preds = g.predecessors(victim);
    let succs = g.successors(victim);

    let mut next = g.clone();
    next.nodes.remove(&victim);
    next.edges
        .retain(|&(from, to)| from != victim && to != victim);
    for &p in &preds {
        for &s in &succs {
            next.edges.insert((p, s));
        }
    }
    Some(next)
}

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

/// Add one edge drawn uniformly from every pair that keeps the graph legal:
/// source non-root, not already adjacent, no cycle closed.
fn add_edge<R: Rng + ?Sized>(g: &PipelineGraph, rng: &mut R) -> Option<PipelineGraph> {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let mut candidates = Vec::new();
    for &a in &ids {
        if a == g.root {
            continue;
        }
        for &b in &ids {
            if b == a || g.edges.contains(&(a, b)) || path_exists(&g.edges, b, a) {
                continue;
            }
            candidates.push((a, b));
        }
    }
    let &(a, b) = pick(&candidates, rng)?;
    let mut next = g.clone();
    next.edges.insert((a, b));
    Some(next)
}

/// Remove one edge drawn uniformly from those whose removal leaves every
/// node with a path to the root.
fn remove_edge<R: Rng + ?Sized>(g: &PipelineGraph, rng: &mut R) -> Option<PipelineGraph> {
    let candidates: Vec<(NodeId, NodeId)> = g
        .edges()
        .filter(|&e| {
            let mut trimmed = g.edges.clone();
            trimmed.remove(&e);
            let mut reach = BTreeSet::from([g.root]);
            let mut queue = VecDeque::from([g.root]);
            while let Some(at) = queue.pop_front() {
                for &(from, to) in &trimmed {
                    if to == at && reach.insert(from) {
                        queue.push_back(from);
                    }
                }
            }
            reach.len() == g.len()
        })
        .collect();
    let &(a, b) = pick(&candidates, rng)?;
    let mut next = g.clone();
    next.edges.remove(&(a, b));
    Some(next)
}
