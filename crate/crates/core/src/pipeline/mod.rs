//! DAG-shaped pipeline genomes and their execution.
//!
//! A pipeline is a directed acyclic graph with exactly one root. The root
//! holds a classifier, every other node holds a transformer, and every edge
//! points toward the root (data flows along edges). Leaves read the raw
//! feature matrix; a node with several predecessors sees their outputs
//! concatenated column-wise in predecessor-id order.

mod generate;
mod mutate;
mod text;

pub use generate::random_pipeline;
pub use mutate::{mutate, mutate_with_report, MutationOp, MutationReport};
pub use text::{dump, parse, TextError};

use crate::dataset::Label;
use crate::learners::{self, ApplyError, FitError, FittedModel, LearnerSpec, Output};
use crate::matrix::Matrix;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineGraph {
    pub(crate) nodes: BTreeMap<NodeId, LearnerSpec>,
    pub(crate) edges: BTreeSet<(NodeId, NodeId)>,
    pub(crate) root: NodeId,
}

/// One broken invariant, as reported by [`PipelineGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DanglingEdge { from: NodeId, to: NodeId },
    Cycle,
    MissingRoot { root: NodeId },
    RootNotClassifier { root: NodeId },
    RootHasOutgoingEdge { to: NodeId },
    NonRootClassifier { node: NodeId },
    NoPathToRoot { node: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEdge { from, to } => {
                write!(f, "edge {from} -> {to} references a missing node")
            }
            Violation::Cycle => write!(f, "graph contains a cycle"),
            Violation::MissingRoot { root } => write!(f, "root node {root} is not in the graph"),
            Violation::RootNotClassifier { root } => {
                write!(f, "root node {root} does not hold a classifier")
            }
            Violation::RootHasOutgoingEdge { to } => {
                write!(f, "root has outgoing edge to {to}")
            }
            Violation::NonRootClassifier { node } => {
                write!(f, "non-root node {node} holds a classifier")
            }
            Violation::NoPathToRoot { node } => {
                write!(f, "node {node} has no path to the root")
            }
        }
    }
}

impl PipelineGraph {
    /// Assembles a graph without checking invariants; call
    /// [`PipelineGraph::validate`] to inspect them.
    pub fn new(
        nodes: impl IntoIterator<Item = (NodeId, LearnerSpec)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        root: NodeId,
    ) -> Self {
        PipelineGraph {
            nodes: nodes.into_iter().collect(),
            edges: edges.into_iter().collect(),
            root,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn spec(&self, id: NodeId) -> &LearnerSpec {
        &self.nodes[&id]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    /// Nodes feeding `id`, ascending. This order fixes the column order of
    /// concatenated inputs.
    pub fn predecessors(&self, id: NodeId) -> Vec<NodeId> {
        self.edges
            .iter()
            .filter(|&&(_, to)| to == id)
            .map(|&(from, _)| from)
            .collect()
    }

    pub fn successors(&self, id: NodeId) -> Vec<NodeId> {
        self.edges
            .iter()
            .filter(|&&(from, _)| from == id)
            .map(|&(_, to)| to)
            .collect()
    }

    /// Kahn's algorithm, draining the smallest ready id first so the order is
    /// unique. `None` when the graph has a cycle.
    pub fn topo_order(&self) -> Option<Vec<NodeId>> {
        let mut indegree: BTreeMap<NodeId, usize> =
            self.nodes.keys().map(|&id| (id, 0)).collect();
        for &(from, to) in &self.edges {
            if indegree.contains_key(&from) {
                if let Some(d) = indegree.get_mut(&to) {
                    *d += 1;
                }
            }
        }
        let mut ready: BTreeSet<NodeId> = indegree
            .iter()
            .filter(|&(_, &d)| d == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&id) = ready.iter().next() {
            ready.remove(&id);
            order.push(id);
            for (_, to) in self.edges.iter().filter(|&&(from, _)| from == id) {
                if let Some(d) = indegree.get_mut(to) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(*to);
                    }
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    /// Every node with a directed path to the root (the root included),
    /// walking edges backwards from the root. Dangling edges are ignored.
    fn reaches_root(&self) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        if !self.nodes.contains_key(&self.root) {
            return seen;
        }
        seen.insert(self.root);
        let mut queue = VecDeque::from([self.root]);
        while let Some(at) = queue.pop_front() {
            for &(from, to) in &self.edges {
                if to == at && self.nodes.contains_key(&from) && seen.insert(from) {
                    queue.push_back(from);
                }
            }
        }
        seen
    }

    /// Checks every structural invariant independently and returns all
    /// violations found (empty = valid). Never mutates the graph.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();

        for &(from, to) in &self.edges {
            if !self.nodes.contains_key(&from) || !self.nodes.contains_key(&to) {
                violations.push(Violation::DanglingEdge { from, to });
            }
        }

        if self.topo_order().is_none() {
            violations.push(Violation::Cycle);
        }

        if !self.nodes.contains_key(&self.root) {
            violations.push(Violation::MissingRoot { root: self.root });
        } else {
            if !self.spec(self.root).method.is_classifier() {
                violations.push(Violation::RootNotClassifier { root: self.root });
            }
            for to in self.successors(self.root) {
                violations.push(Violation::RootHasOutgoingEdge { to });
            }
        }

        for (&id, spec) in &self.nodes {
            if id != self.root && spec.method.is_classifier() {
                violations.push(Violation::NonRootClassifier { node: id });
            }
        }

        let connected = self.reaches_root();
        for &id in self.nodes.keys() {
            if !connected.contains(&id) {
                violations.push(Violation::NoPathToRoot { node: id });
            }
        }

        violations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    graph: PipelineGraph,
    fitted: BTreeMap<NodeId, FittedModel>,
    complexity: u64,
}

impl FittedPipeline {
    pub fn graph(&self) -> &PipelineGraph {
        &self.graph
    }

    pub fn model(&self, id: NodeId) -> &FittedModel {
        &self.fitted[&id]
    }

    /// Total trainable parameters across all fitted nodes.
    pub fn complexity(&self) -> u64 {
        self.complexity
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("node {node} failed to fit: {source}")]
    NodeFit {
        node: NodeId,
        fits_performed: u64,
        source: FitError,
    },
    #[error("node {node} failed to apply: {source}")]
    NodeApply { node: NodeId, source: ApplyError },
    #[error("evaluation deadline exceeded after {fits_performed} fits")]
    DeadlineExceeded { fits_performed: u64 },
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl PipelineError {
    /// Learner fits attempted before the failure (each attempt counts).
    pub fn fits_performed(&self) -> u64 {
        match self {
            PipelineError::Invalid(_) => 0,
            PipelineError::NodeFit { fits_performed, .. } => *fits_performed,
            PipelineError::NodeApply { .. } => 0,
            PipelineError::DeadlineExceeded { fits_performed } => *fits_performed,
        }
    }
}

fn node_input(
    g: &PipelineGraph,
    id: NodeId,
    x: &Matrix,
    outputs: &BTreeMap<NodeId, Matrix>,
) -> Matrix {
    let preds = g.predecessors(id);
    if preds.is_empty() {
        x.clone()
    } else {
        let parts: Vec<&Matrix> = preds.iter().map(|p| &outputs[p]).collect();
        Matrix::hstack(&parts)
    }
}

/// Fits every node in topological order: transformers are fitted and applied
/// so their outputs can feed downstream nodes; the root classifier is fitted
/// last. An optional deadline is checked before each node fit.
pub fn fit_pipeline_deadline(
    g: &PipelineGraph,
    x: &Matrix,
    y: &[Label],
    deadline: Option<Instant>,
) -> Result<FittedPipeline, PipelineError> {
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(PipelineError::Invalid(violations));
    }
    let order = g.topo_order().expect("validated graphs are acyclic");

    let mut outputs: BTreeMap<NodeId, Matrix> = BTreeMap::new();
    let mut fitted: BTreeMap<NodeId, FittedModel> = BTreeMap::new();
    let mut fits: u64 = 0;
    for id in order {
        if let Some(d) = deadline {
            if Instant::now() >= d {
                return Err(PipelineError::DeadlineExceeded {
                    fits_performed: fits,
                });
            }
        }
        let input = node_input(g, id, x, &outputs);
        let model = learners::fit(g.spec(id), &input, y).map_err(|source| {
            PipelineError::NodeFit {
                node: id,
                fits_performed: fits + 1, // the failed attempt still counted
                source,
            }
        })?;
        fits += 1;
        if id != g.root {
            match model
                .apply(&input)
                .map_err(|source| PipelineError::NodeApply { node: id, source })?
            {
                Output::Features(out) => {
                    outputs.insert(id, out);
                }
                Output::Labels(_) => unreachable!("non-root nodes hold transformers"),
            }
        }
        fitted.insert(id, model);
    }

    let complexity = fitted.values().map(|m| m.param_count()).sum();
    Ok(FittedPipeline {
        graph: g.clone(),
        fitted,
        complexity,
    })
}

pub fn fit_pipeline(
    g: &PipelineGraph,
    x: &Matrix,
    y: &[Label],
) -> Result<FittedPipeline, PipelineError> {
    fit_pipeline_deadline(g, x, y, None)
}

/// Runs the fitted pipeline forward on new data and returns the root's
/// predictions. `x` must have the width the leaves saw at fit.
pub fn predict_pipeline(fp: &FittedPipeline, x: &Matrix) -> Result<Vec<Label>, PipelineError> {
    let g = &fp.graph;
    let order = g.topo_order().expect("fitted pipelines are valid");
    let mut outputs: BTreeMap<NodeId, Matrix> = BTreeMap::new();
    for id in order {
        let input = node_input(g, id, x, &outputs);
        let result = fp
            .model(id)
            .apply(&input)
            .map_err(|source| PipelineError::NodeApply { node: id, source })?;
        match result {
            Output::Features(out) => {
                outputs.insert(id, out);
            }
            Output::Labels(labels) => {
                debug_assert_eq!(id, g.root);
                return Ok(labels);
            }
        }
    }
    unreachable!("the root always terminates the walk with labels")
}

#[cfg(test)]
pub(crate) mod graph_fixtures {
    use super::*;
    use crate::learners::test_support::{default_spec, spec_of};
    use crate::learners::{HyperValue, Method};

    pub fn single(method: Method) -> PipelineGraph {
        PipelineGraph::new([(NodeId(0), default_spec(method))], [], NodeId(0))
    }

    /// 0 := classifier root, 1 := transformer feeding it.
    pub fn chain(transformer: Method, classifier: Method) -> PipelineGraph {
        PipelineGraph::new(
            [
                (NodeId(0), default_spec(classifier)),
                (NodeId(1), default_spec(transformer)),
            ],
            [(NodeId(1), NodeId(0))],
            NodeId(0),
        )
    }

    pub fn knn_root(k: i64) -> PipelineGraph {
        PipelineGraph::new(
            [(
                NodeId(0),
                spec_of(Method::KNearestNeighbors, &[("k", HyperValue::Int(k))]),
            )],
            [],
            NodeId(0),
        )
    }
}
