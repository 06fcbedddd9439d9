//! Human-readable pipeline serialization.
//!
//! ```text
//! node 0 root DecisionTree max_depth=3
//! node 1 SelectKBest k=4
//! node 2 StandardScaler
//! edge 1 -> 0
//! edge 2 -> 1
//! ```
//!
//! Nodes come first (ascending id, hyperparameters in key order), then edges
//! (ascending). `parse(dump(g)) == g` for every valid graph.

use super::{NodeId, PipelineGraph, Violation};
use crate::learners::{HyperValue, LearnerSpec, Method};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("parsed pipeline is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

fn malformed(line: usize, msg: impl Into<String>) -> TextError {
    TextError::Malformed {
        line,
        msg: msg.into(),
    }
}

pub fn dump(g: &PipelineGraph) -> String {
    let mut out = String::new();
    for (id, spec) in &g.nodes {
        let _ = write!(out, "node {id}");
        if *id == g.root {
            out.push_str(" root");
        }
        let _ = write!(out, " {}", spec.method);
        for (key, value) in &spec.hyperparameters {
            let _ = write!(out, " {key}={value}");
        }
        out.push('\n');
    }
    for (from, to) in &g.edges {
        let _ = writeln!(out, "edge {from} -> {to}");
    }
    out
}

fn parse_value(
    line: usize,
    method: Method,
    key: &str,
    raw: &str,
) -> Result<HyperValue, TextError> {
    let domain = method
        .hyperparameter_domains()
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, d)| *d)
        .ok_or_else(|| malformed(line, format!("{method} has no hyperparameter '{key}'")))?;
    // The domain's own representation decides whether the token is an
    // integer or a float.
    let value = match domain[0] {
        HyperValue::Int(_) => HyperValue::Int(
            raw.parse()
                .map_err(|_| malformed(line, format!("'{raw}' is not an integer")))?,
        ),
        HyperValue::Float(_) => HyperValue::Float(
            raw.parse()
                .map_err(|_| malformed(line, format!("'{raw}' is not a number")))?,
        ),
    };
    if !domain.contains(&value) {
        return Err(malformed(
            line,
            format!("{raw} is outside the declared domain of {method}.{key}"),
        ));
    }
    Ok(value)
}

pub fn parse(text: &str) -> Result<PipelineGraph, TextError> {
    let mut nodes: BTreeMap<NodeId, LearnerSpec> = BTreeMap::new();
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut root: Option<NodeId> = None;

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw_line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        match tokens[0] {
            "node" => {
                let id_token = tokens
                    .get(1)
                    .ok_or_else(|| malformed(line, "missing node id"))?;
                let id = NodeId(
                    id_token
                        .parse()
                        .map_err(|_| malformed(line, format!("bad node id '{id_token}'")))?,
                );
                if nodes.contains_key(&id) {
                    return Err(malformed(line, format!("duplicate node {id}")));
                }
                let mut rest = &tokens[2..];
                if rest.first() == Some(&"root") {
                    if root.is_some() {
                        return Err(malformed(line, "second root declared"));
                    }
                    root = Some(id);
                    rest = &rest[1..];
                }
                let method_token = rest
                    .first()
                    .ok_or_else(|| malformed(line, "missing method name"))?;
                let method = Method::from_name(method_token)
                    .ok_or_else(|| malformed(line, format!("unknown method '{method_token}'")))?;
                let mut hyperparameters = BTreeMap::new();
                for pair in &rest[1..] {
                    let (key, raw) = pair
                        .split_once('=')
                        .ok_or_else(|| malformed(line, format!("expected key=value, got '{pair}'")))?;
                    hyperparameters
                        .insert(key.to_string(), parse_value(line, method, key, raw)?);
                }
                let spec = LearnerSpec {
                    method,
                    hyperparameters,
                };
                if !spec.conforms() {
                    return Err(malformed(
                        line,
                        format!("{method} requires exactly its declared hyperparameters"),
                    ));
                }
                nodes.insert(id, spec);
            }
            "edge" => {
                if tokens.len() != 4 || tokens[2] != "->" {
                    return Err(malformed(line, "expected 'edge FROM -> TO'"));
                }
                let from = NodeId(
                    tokens[1]
                        .parse()
                        .map_err(|_| malformed(line, format!("bad node id '{}'", tokens[1])))?,
                );
                let to = NodeId(
                    tokens[3]
                        .parse()
                        .map_err(|_| malformed(line, format!("bad node id '{}'", tokens[3])))?,
                );
                edges.insert((from, to));
            }
            other => return Err(malformed(line, format!("unknown directive '{other}'"))),
        }
    }

    let root = root.ok_or_else(|| malformed(0, "no root node declared"))?;
    let g = PipelineGraph { nodes, edges, root };
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(TextError::Invalid(violations));
    }
    Ok(g)
}
