//! Rendering item trees as text, versioned JSON and threshold plot data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::PcmFit;
use crate::partition::{format_split_point, NodeSpec, Side};
use crate::tree::{ItemTree, SplitRecord, TreeNode};

pub const SCHEMA_VERSION: &str = "1.0";

/// Plot values beyond this magnitude are clipped and flagged.
pub const PLOT_LIMIT: f64 = 4.0;

/// JSON form of one item tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub schema_version: String,
    /// 0-based item index.
    pub item: usize,
    pub item_name: String,
    /// Covariate names; splits refer to these.
    pub variables: Vec<String>,
    pub n_thresholds: usize,
    pub root: JsonNode,
    pub splits: Vec<JsonSplit>,
    /// Leaves with a never-observed category, whose thresholds diverge and
    /// are held inside the cap.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capped_leaves: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonNode {
    /// `children[0]` holds `variable <= split_point`, `children[1]` the rest.
    Split {
        variable: String,
        split_point: f64,
        children: Vec<JsonNode>,
    },
    Leaf {
        node_spec: String,
        leaf: usize,
        gamma: Vec<f64>,
        n_persons: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonSplit {
    pub step: usize,
    pub variable: String,
    pub split_point: f64,
    pub statistic: f64,
    pub p_value: f64,
}

/// One threshold of one leaf, ready for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub leaf: usize,
    pub node_spec: String,
    /// 1-based threshold index.
    pub threshold: usize,
    pub value: f64,
    /// `value` clipped to `[-PLOT_LIMIT, PLOT_LIMIT]`.
    pub plotted: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTree {
    pub text: String,
    pub document: TreeDocument,
    pub plot: Vec<PlotPoint>,
}

/// Renders `tree` with the leaf thresholds of `fit` (abilities centred at
/// zero).
pub fn render_tree(
    tree: &ItemTree,
    fit: &PcmFit,
    item_name: &str,
    variable_names: &[String],
) -> Result<RenderedTree> {
    let params = &fit.params;
    if tree.item >= params.n_items() || params.n_leaves(tree.item) != tree.n_leaves() {
        return Err(Error::DimensionMismatch(format!(
            "tree for item {} does not match the fitted partition",
            tree.item + 1
        )));
    }
    let name_of = |v: usize| {
        variable_names
            .get(v)
            .cloned()
            .unwrap_or_else(|| format!("x{}", v + 1))
    };
    let gamma_of = |leaf: usize| params.centered_leaf_thresholds(tree.item, leaf);

    let root = json_node(tree, 0, variable_names, &gamma_of, &name_of);
    let mut text = String::new();
    if tree.has_dif() {
        text.push_str(&format!("{item_name}\n"));
        text_node(tree, 0, 1, &gamma_of, &name_of, &mut text);
    } else {
        let n = leaf_size(tree, 0);
        text.push_str(&format!(
            "{item_name}: no DIF, gamma = ({}) [n = {n}]\n",
            format_gamma(&gamma_of(0))
        ));
    }

    let mut plot = Vec::new();
    for (idx, leaf) in tree.leaves() {
        let spec = tree.nodes[idx].spec().describe(variable_names);
        for (r, &value) in gamma_of(leaf).iter().enumerate() {
            plot.push(PlotPoint {
                leaf,
                node_spec: spec.clone(),
                threshold: r + 1,
                value,
                plotted: value.clamp(-PLOT_LIMIT, PLOT_LIMIT),
                truncated: value.abs() > PLOT_LIMIT,
            });
        }
    }

    let document = TreeDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        item: tree.item,
        item_name: item_name.to_string(),
        variables: variable_names.to_vec(),
        n_thresholds: params.n_thresholds(),
        root,
        splits: json_splits(tree, &name_of),
        capped_leaves: fit
            .capped_leaves
            .iter()
            .filter(|(i, _)| *i == tree.item)
            .map(|&(_, l)| l)
            .collect(),
    };
    Ok(RenderedTree {
        text,
        document,
        plot,
    })
}

/// JSON form of `tree` using the thresholds stored in its leaves.
pub fn tree_document(
    tree: &ItemTree,
    item_name: &str,
    variable_names: &[String],
    n_thresholds: usize,
) -> TreeDocument {
    let leaf_gamma: Vec<Vec<f64>> = {
        let mut out = vec![Vec::new(); tree.n_leaves()];
        for node in &tree.nodes {
            if let TreeNode::Leaf { leaf, gamma, .. } = node {
                out[*leaf] = gamma.clone();
            }
        }
        out
    };
    let name_of = |v: usize| {
        variable_names
            .get(v)
            .cloned()
            .unwrap_or_else(|| format!("x{}", v + 1))
    };
    TreeDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        item: tree.item,
        item_name: item_name.to_string(),
        variables: variable_names.to_vec(),
        n_thresholds,
        root: json_node(tree, 0, variable_names, &|l| leaf_gamma[l].clone(), &name_of),
        splits: json_splits(tree, &name_of),
        capped_leaves: Vec::new(),
    }
}

fn json_splits(tree: &ItemTree, name_of: &dyn Fn(usize) -> String) -> Vec<JsonSplit> {
    tree.split_history
        .iter()
        .map(|s| JsonSplit {
            step: s.step,
            variable: name_of(s.variable),
            split_point: s.split_point,
            statistic: s.statistic,
            p_value: s.p_value,
        })
        .collect()
}

fn leaf_size(tree: &ItemTree, idx: usize) -> usize {
    match &tree.nodes[idx] {
        TreeNode::Leaf { n_persons, .. } => *n_persons,
        TreeNode::Split { .. } => 0,
    }
}

fn format_gamma(gamma: &[f64]) -> String {
    gamma
        .iter()
        .map(|g| format!("{g:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn json_node(
    tree: &ItemTree,
    idx: usize,
    names: &[String],
    gamma_of: &dyn Fn(usize) -> Vec<f64>,
    name_of: &dyn Fn(usize) -> String,
) -> JsonNode {
    match &tree.nodes[idx] {
        TreeNode::Leaf {
            spec,
            leaf,
            n_persons,
            ..
        } => JsonNode::Leaf {
            node_spec: spec.describe(names),
            leaf: *leaf,
            gamma: gamma_of(*leaf),
            n_persons: *n_persons,
        },
        TreeNode::Split {
            variable,
            split_point,
            left,
            right,
            ..
        } => JsonNode::Split {
            variable: name_of(*variable),
            split_point: *split_point,
            children: vec![
                json_node(tree, *left, names, gamma_of, name_of),
                json_node(tree, *right, names, gamma_of, name_of),
            ],
        },
    }
}

fn text_node(
    tree: &ItemTree,
    idx: usize,
    depth: usize,
    gamma_of: &dyn Fn(usize) -> Vec<f64>,
    name_of: &dyn Fn(usize) -> String,
    out: &mut String,
) {
    let TreeNode::Split {
        variable,
        split_point,
        left,
        right,
        ..
    } = &tree.nodes[idx]
    else {
        return;
    };
    let indent = "  ".repeat(depth);
    for (child, op) in [(*left, "<="), (*right, ">")] {
        let label = format!("{} {op} {}", name_of(*variable), format_split_point(*split_point));
        match &tree.nodes[child] {
            TreeNode::Leaf {
                leaf, n_persons, ..
            } => out.push_str(&format!(
                "{indent}{label}: gamma = ({}) [n = {n_persons}]\n",
                format_gamma(&gamma_of(*leaf))
            )),
            TreeNode::Split { .. } => {
                out.push_str(&format!("{indent}{label}\n"));
                text_node(tree, child, depth + 1, gamma_of, name_of, out);
            }
        }
    }
}

/// Rebuilds an [`ItemTree`] from its JSON form.
pub fn parse_tree(doc: &TreeDocument) -> Result<ItemTree> {
    if doc.schema_version.split('.').next() != SCHEMA_VERSION.split('.').next() {
        return Err(Error::InvalidArgument(format!(
            "unsupported schema version {}",
            doc.schema_version
        )));
    }
    let index_of = |name: &str| {
        doc.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variable '{name}' in tree")))
    };
    let mut nodes = Vec::new();
    build(&doc.root, NodeSpec::root(), &index_of, &mut nodes)?;
    let mut seen: Vec<usize> = nodes
        .iter()
        .filter_map(|n| match n {
            TreeNode::Leaf { leaf, .. } => Some(*leaf),
            TreeNode::Split { .. } => None,
        })
        .collect();
    seen.sort_unstable();
    if seen.iter().enumerate().any(|(i, &l)| i != l) {
        return Err(Error::InvalidArgument(
            "leaf indices must be 0..L without gaps".into(),
        ));
    }
    let split_history = doc
        .splits
        .iter()
        .map(|s| {
            Ok(SplitRecord {
                step: s.step,
                variable: index_of(&s.variable)?,
                split_point: s.split_point,
                statistic: s.statistic,
                p_value: s.p_value,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ItemTree {
        item: doc.item,
        nodes,
        split_history,
    })
}

fn build(
    node: &JsonNode,
    spec: NodeSpec,
    index_of: &dyn Fn(&str) -> Result<usize>,
    nodes: &mut Vec<TreeNode>,
) -> Result<usize> {
    let idx = nodes.len();
    match node {
        JsonNode::Leaf {
            leaf,
            gamma,
            n_persons,
            ..
        } => nodes.push(TreeNode::Leaf {
            spec,
            leaf: *leaf,
            gamma: gamma.clone(),
            n_persons: *n_persons,
        }),
        JsonNode::Split {
            variable,
            split_point,
            children,
        } => {
            let [left, right] = children.as_slice() else {
                return Err(Error::InvalidArgument(format!(
                    "split on '{variable}' must have two children, has {}",
                    children.len()
                )));
            };
            let v = index_of(variable)?;
            nodes.push(TreeNode::Leaf {
                spec: spec.clone(),
                leaf: usize::MAX,
                gamma: Vec::new(),
                n_persons: 0,
            });
            let l = build(left, spec.child(v, *split_point, Side::Le), index_of, nodes)?;
            let r = build(right, spec.child(v, *split_point, Side::Gt), index_of, nodes)?;
            nodes[idx] = TreeNode::Split {
                spec,
                variable: v,
                split_point: *split_point,
                left: l,
                right: r,
            };
        }
    }
    Ok(idx)
}
