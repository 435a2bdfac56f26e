//! JSON strategy documents.
//!
//! ```text
//! {
//!   "format": "fjordtwin-strategy", "version": 1, "label": "...",
//!   "state_box": {"h_f": [lo, hi], "h_s": [lo, hi], "wind": [lo, hi]},
//!   "actions": [0, 1, 14],
//!   "weights": {"w1": .., "w2": .., "w3": .., "w4": ..} | null,
//!   "seed": 7, "episodes": 2000,
//!   "branches": [{"mode": "SeaHigher", "boat_incoming": false, "tree": NODE}, ...]
//! }
//! NODE = {"dim": "h_f" | "h_s" | "wind", "threshold": x, "left": NODE, "right": NODE}
//!      | {"q": {"0": x, "1": x, "14": x}, "visits": {"0": n, "1": n, "14": n}}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tree::{Leaf, Node, PartitionTree, StateBox, StrategyMeta, DIMENSIONS, NUM_BRANCHES};
use crate::envsim::{ActionSet, CostWeights, FlowMode};
use crate::error::{Error, Result};
use crate::hydro::GateConfig;

pub const FORMAT_NAME: &str = "fjordtwin-strategy";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    label: String,
    state_box: BoxDoc,
    actions: Vec<u32>,
    weights: Option<CostWeights>,
    seed: u64,
    episodes: u64,
    branches: Vec<BranchDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDoc {
    h_f: [f64; 2],
    h_s: [f64; 2],
    wind: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    mode: FlowMode,
    boat_incoming: bool,
    tree: NodeDoc,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<Box<NodeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<Box<NodeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    visits: Option<BTreeMap<String, u64>>,
}

fn branch_index(mode: FlowMode, boat: bool) -> usize {
    let m = match mode {
        FlowMode::SeaHigher => 0,
        FlowMode::FjordHigher => 1,
    };
    m * 2 + usize::from(boat)
}

fn branch_key(index: usize) -> (FlowMode, bool) {
    let mode = if index / 2 == 0 {
        FlowMode::SeaHigher
    } else {
        FlowMode::FjordHigher
    };
    (mode, index % 2 == 1)
}

fn node_doc(tree: &PartitionTree, branch: usize, id: usize) -> NodeDoc {
    match &tree.nodes(branch)[id] {
        Node::Split {
            dim,
            threshold,
            left,
            right,
        } => NodeDoc {
            dim: Some(DIMENSIONS[*dim].to_string()),
            threshold: Some(*threshold),
            left: Some(Box::new(node_doc(tree, branch, *left))),
            right: Some(Box::new(node_doc(tree, branch, *right))),
            ..NodeDoc::default()
        },
        Node::Leaf(leaf) => {
            let key = |a: GateConfig| a.open_gates(tree.num_gates).to_string();
            NodeDoc {
                q: Some(leaf.actions.iter().map(|a| (key(a), leaf.q(a))).collect()),
                visits: Some(
                    leaf.actions
                        .iter()
                        .map(|a| (key(a), leaf.visits[a.index()]))
                        .collect(),
                ),
                ..NodeDoc::default()
            }
        }
    }
}

/// Renders a tree as a strategy document.
pub fn save_strategy(tree: &PartitionTree) -> String {
    let b = &tree.bounds;
    let doc = Document {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        label: tree.meta.label.clone(),
        state_box: BoxDoc {
            h_f: [b.lo[0], b.hi[0]],
            h_s: [b.lo[1], b.hi[1]],
            wind: [b.lo[2], b.hi[2]],
        },
        actions: GateConfig::ALL.iter().map(|a| a.open_gates(tree.num_gates)).collect(),
        weights: tree.meta.weights,
        seed: tree.meta.seed,
        episodes: tree.meta.episodes,
        branches: (0..NUM_BRANCHES)
            .map(|i| {
                let (mode, boat_incoming) = branch_key(i);
                BranchDoc {
                    mode,
                    boat_incoming,
                    tree: node_doc(tree, i, 0),
                }
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    out.push('\n');
    out
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        reason: reason.into(),
    }
}

struct Builder {
    num_gates: u32,
    nodes: Vec<Node>,
}

impl Builder {
    fn action_of(&self, key: &str, path: &str) -> Result<GateConfig> {
        key.parse::<u32>()
            .ok()
            .and_then(|n| GateConfig::from_open_gates(n, self.num_gates))
            .ok_or_else(|| schema(path, format!("unknown action `{key}`")))
    }

    fn leaf(&self, doc: &NodeDoc, path: &str) -> Result<Leaf> {
        let q = doc.q.as_ref().ok_or_else(|| schema(path, "leaf needs `q`"))?;
        let visits = doc
            .visits
            .as_ref()
            .ok_or_else(|| schema(path, "leaf needs `visits`"))?;
        let mut leaf = Leaf::new(ActionSet::EMPTY);
        for (k, v) in q {
            let a = self.action_of(k, &format!("{path}.q"))?;
            if !v.is_finite() {
                return Err(schema(format!("{path}.q.{k}"), "Q-value must be finite"));
            }
            leaf.q[a.index()] = *v;
            leaf.actions = leaf.actions.with(a);
        }
        if leaf.actions != ActionSet::ALL {
            return Err(schema(format!("{path}.q"), "needs an entry for every action"));
        }
        for (k, v) in visits {
            let a = self.action_of(k, &format!("{path}.visits"))?;
            leaf.visits[a.index()] = *v;
        }
        Ok(leaf)
    }

    fn build(&mut self, doc: &NodeDoc, cell: StateBox, path: &str, depth: usize) -> Result<usize> {
        if depth > super::tree::MAX_DEPTH {
            return Err(schema(path, "tree is too deep"));
        }
        let id = self.nodes.len();
        let is_split = doc.dim.is_some() || doc.threshold.is_some() || doc.left.is_some() || doc.right.is_some();
        if !is_split {
            let leaf = self.leaf(doc, path)?;
            self.nodes.push(Node::Leaf(leaf));
            return Ok(id);
        }
        if doc.q.is_some() || doc.visits.is_some() {
            return Err(schema(path, "node mixes split and leaf fields"));
        }
        let dim_name = doc.dim.as_deref().ok_or_else(|| schema(path, "split needs `dim`"))?;
        let dim = DIMENSIONS
            .iter()
            .position(|d| *d == dim_name)
            .ok_or_else(|| schema(format!("{path}.dim"), format!("unknown dimension `{dim_name}`")))?;
        let threshold = doc
            .threshold
            .ok_or_else(|| schema(path, "split needs `threshold`"))?;
        if !(threshold > cell.lo[dim] && threshold < cell.hi[dim]) {
            return Err(schema(
                format!("{path}.threshold"),
                format!(
                    "{threshold} is not strictly inside ({}, {})",
                    cell.lo[dim], cell.hi[dim]
                ),
            ));
        }
        let left = doc.left.as_deref().ok_or_else(|| schema(path, "split needs `left`"))?;
        let right = doc.right.as_deref().ok_or_else(|| schema(path, "split needs `right`"))?;
        self.nodes.push(Node::Leaf(Leaf::new(ActionSet::ALL)));
        let (lc, rc) = cell.split(dim, threshold);
        let l = self.build(left, lc, &format!("{path}.left"), depth + 1)?;
        let r = self.build(right, rc, &format!("{path}.right"), depth + 1)?;
        self.nodes[id] = Node::Split {
            dim,
            threshold,
            left: l,
            right: r,
        };
        Ok(id)
    }
}

/// Parses and validates a strategy document. Nothing is returned unless the
/// whole document is valid.
pub fn load_strategy(text: &str) -> Result<PartitionTree> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path.is_empty() { ".".to_string() } else { path }, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| schema(".", e.to_string()))?;

    if doc.format != FORMAT_NAME {
        return Err(schema("format", format!("expected `{FORMAT_NAME}`")));
    }
    if doc.version != FORMAT_VERSION {
        return Err(schema("version", format!("unsupported version {}", doc.version)));
    }
    let num_gates = match doc.actions.as_slice() {
        [0, 1, n] if *n >= 2 => *n,
        _ => return Err(schema("actions", "expected [0, 1, N] with N >= 2")),
    };
    let bounds = StateBox {
        lo: [doc.state_box.h_f[0], doc.state_box.h_s[0], doc.state_box.wind[0]],
        hi: [doc.state_box.h_f[1], doc.state_box.h_s[1], doc.state_box.wind[1]],
    };
    bounds
        .validate()
        .map_err(|e| schema("state_box", e.to_string()))?;
    if let Some(w) = &doc.weights {
        w.validate().map_err(|e| schema("weights", e.to_string()))?;
    }
    if doc.branches.len() != NUM_BRANCHES {
        return Err(schema(
            "branches",
            format!("expected {NUM_BRANCHES} branches, found {}", doc.branches.len()),
        ));
    }

    let mut branches: Vec<Option<Vec<Node>>> = vec![None; NUM_BRANCHES];
    for (i, b) in doc.branches.iter().enumerate() {
        let idx = branch_index(b.mode, b.boat_incoming);
        let path = format!("branches[{i}]");
        if branches[idx].is_some() {
            return Err(schema(path, "duplicate (mode, boat_incoming) branch"));
        }
        let mut builder = Builder {
            num_gates,
            nodes: Vec::new(),
        };
        builder.build(&b.tree, bounds, &format!("{path}.tree"), 0)?;
        branches[idx] = Some(builder.nodes);
    }
    let meta = StrategyMeta {
        label: doc.label,
        weights: doc.weights,
        seed: doc.seed,
        episodes: doc.episodes,
    };
    PartitionTree::from_parts(
        bounds,
        num_gates,
        meta,
        branches.into_iter().map(|b| b.expect("all four branches present")).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Strategy;
    use crate::envsim::ControlContext;

    fn sample_tree() -> PartitionTree {
        let mut t = PartitionTree::new(StateBox::default(), 14).unwrap();
        t.meta.label = "sample".into();
        t.meta.weights = Some(CostWeights::default());
        t.meta.seed = 5;
        let (l, r) = t.split_leaf(3, 0, 0, 0.125, 0.5).unwrap();
        t.leaf_mut(3, l).q = [1.0, 0.1 + 0.2, -7.5e9];
        t.leaf_mut(3, r).q = [f64::MIN_POSITIVE, 2.0, 1e-300];
        t.leaf_mut(3, r).visits = [3, 4, 5];
        t
    }

    #[test]
    fn single_leaf_round_trip() {
        let t = PartitionTree::new(StateBox::default(), 14).unwrap();
        let back = load_strategy(&save_strategy(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn split_tree_round_trip_is_exact() {
        let t = sample_tree();
        let text = save_strategy(&t);
        let back = load_strategy(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(save_strategy(&back), text);
        let c = ControlContext::new(0.2, 0.1, 3.0, true);
        assert_eq!(back.decide(&c), t.decide(&c));
    }

    #[test]
    fn truncated_document_fails() {
        let text = save_strategy(&sample_tree());
        for cut in [1, text.len() / 3, text.len() / 2, text.len() - 3] {
            assert!(load_strategy(&text[..cut]).is_err());
        }
    }

    #[test]
    fn schema_errors_name_the_path() {
        let text = save_strategy(&sample_tree());
        let bad = text.replacen("\"threshold\": 0.125", "\"threshold\": 0.9", 1);
        let err = load_strategy(&bad).unwrap_err().to_string();
        assert!(err.contains("branches[3].tree.threshold"), "{err}");

        let bad = text.replacen("\"dim\": \"h_f\"", "\"dim\": \"depth\"", 1);
        let err = load_strategy(&bad).unwrap_err().to_string();
        assert!(err.contains("branches[3].tree.dim"), "{err}");

        let bad = text.replacen("\"seed\": 5", "\"seed\": \"five\"", 1);
        let err = load_strategy(&bad).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");

        let bad = text.replacen("\"14\": ", "\"13\": ", 1);
        assert!(load_strategy(&bad).is_err());

        let bad = text.replacen(FORMAT_NAME, "other", 1);
        assert!(load_strategy(&bad).is_err());
    }

    #[test]
    fn deep_nesting_is_rejected_without_overflow() {
        let mut text = String::new();
        for _ in 0..10_000 {
            text.push_str("{\"left\":");
        }
        assert!(load_strategy(&text).is_err());
    }
}
