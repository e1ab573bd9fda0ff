use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::fit::PcmParams;
use crate::partition::{NodeSpec, Side};

/// A node of an [`ItemTree`], stored in an arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        spec: NodeSpec,
        /// Leaf index in the item's layout.
        leaf: usize,
        /// Thresholds on the logit scale, abilities centred at zero.
        gamma: Vec<f64>,
        n_persons: usize,
    },
    Split {
        spec: NodeSpec,
        variable: usize,
        split_point: f64,
        left: usize,
        right: usize,
    },
}

impl TreeNode {
    pub fn spec(&self) -> &NodeSpec {
        match self {
            TreeNode::Leaf { spec, .. } | TreeNode::Split { spec, .. } => spec,
        }
    }
}

/// One committed split, in the order the algorithm performed them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub step: usize,
    pub variable: usize,
    pub split_point: f64,
    pub statistic: f64,
    pub p_value: f64,
}

/// Binary partition of the covariate space for one item. A single leaf
/// means no DIF was detected for the item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemTree {
    pub item: usize,
    pub nodes: Vec<TreeNode>,
    pub split_history: Vec<SplitRecord>,
}

impl ItemTree {
    pub fn single_leaf(item: usize, gamma: Vec<f64>, n_persons: usize) -> Self {
        Self {
            item,
            nodes: vec![TreeNode::Leaf {
                spec: NodeSpec::root(),
                leaf: 0,
                gamma,
                n_persons,
            }],
            split_history: Vec::new(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn has_dif(&self) -> bool {
        self.n_leaves() > 1
    }

    /// Covariates the tree splits on.
    pub fn variables_used(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { variable, .. } => Some(*variable),
                TreeNode::Leaf { .. } => None,
            })
            .collect()
    }

    /// Leaves as `(arena index, layout leaf index)` in arena order.
    pub fn leaves(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(idx, n)| match n {
                TreeNode::Leaf { leaf, .. } => Some((idx, *leaf)),
                TreeNode::Split { .. } => None,
            })
            .collect()
    }

    fn arena_index_of_leaf(&self, layout_leaf: usize) -> Option<usize> {
        self.leaves()
            .into_iter()
            .find(|&(_, l)| l == layout_leaf)
            .map(|(idx, _)| idx)
    }

    /// Replaces the leaf with layout index `leaf` by a split; the left child
    /// keeps `leaf`, the right child gets `new_leaf`.
    pub(crate) fn split_leaf(
        &mut self,
        leaf: usize,
        new_leaf: usize,
        variable: usize,
        split_point: f64,
        record: SplitRecord,
    ) {
        let idx = self
            .arena_index_of_leaf(leaf)
            .expect("split of a leaf that is not in the tree");
        let (spec, gamma) = match &self.nodes[idx] {
            TreeNode::Leaf { spec, gamma, .. } => (spec.clone(), gamma.clone()),
            TreeNode::Split { .. } => unreachable!(),
        };
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(TreeNode::Leaf {
            spec: spec.child(variable, split_point, Side::Le),
            leaf,
            gamma: gamma.clone(),
            n_persons: 0,
        });
        self.nodes.push(TreeNode::Leaf {
            spec: spec.child(variable, split_point, Side::Gt),
            leaf: new_leaf,
            gamma,
            n_persons: 0,
        });
        self.nodes[idx] = TreeNode::Split {
            spec,
            variable,
            split_point,
            left,
            right,
        };
        self.split_history.push(record);
    }

    /// Copies fitted thresholds, shifted so that the abilities average to
    /// zero, and leaf sizes into the leaves.
    pub(crate) fn update_leaves(&mut self, params: &PcmParams, sizes: &[usize]) {
        let item = self.item;
        for node in &mut self.nodes {
            if let TreeNode::Leaf {
                leaf,
                gamma,
                n_persons,
                ..
            } = node
            {
                *gamma = params.centered_leaf_thresholds(item, *leaf);
                *n_persons = sizes[*leaf];
            }
        }
    }

    /// The node specification of every leaf, indexed by layout leaf index.
    pub fn leaf_specs(&self) -> Vec<NodeSpec> {
        let mut out = vec![NodeSpec::root(); self.n_leaves()];
        for node in &self.nodes {
            if let TreeNode::Leaf { spec, leaf, .. } = node {
                out[*leaf] = spec.clone();
            }
        }
        out
    }

    /// Descends from the root using `x <= c` to the left.
    pub fn leaf_for(&self, row: &[f64]) -> &TreeNode {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Split {
                    variable,
                    split_point,
                    left,
                    right,
                    ..
                } => {
                    idx = if row[*variable] <= *split_point { *left } else { *right };
                }
                leaf @ TreeNode::Leaf { .. } => return leaf,
            }
        }
    }
}

/// Threshold vector of the leaf containing covariate row `row`.
pub fn predict_item_thresholds<'a>(tree: &'a ItemTree, row: &[f64]) -> &'a [f64] {
    match tree.leaf_for(row) {
        TreeNode::Leaf { gamma, .. } => gamma,
        TreeNode::Split { .. } => unreachable!(),
    }
}
