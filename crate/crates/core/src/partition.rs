//! Node specifications and per-item assignments of persons to leaves.

use serde::{Deserialize, Serialize};

use crate::data::CovariateTable;
use crate::error::{Error, Result};

/// Which side of a split a branch follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `x <= c`
    Le,
    /// `x > c`
    Gt,
}

impl Side {
    #[inline]
    pub fn holds(self, value: f64, split_point: f64) -> bool {
        match self {
            Side::Le => value <= split_point,
            Side::Gt => value > split_point,
        }
    }
}

/// One indicator factor `I(x_v <= c)` or `I(x_v > c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub variable: usize,
    pub split_point: f64,
    pub side: Side,
}

/// A node as the product of its branch indicators. The root has no branches
/// and contains everyone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub branches: Vec<Branch>,
}

impl NodeSpec {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn is_root(&self) -> bool {
        self.branches.is_empty()
    }

    /// Membership of a covariate row.
    pub fn contains_row(&self, row: &[f64]) -> bool {
        self.branches
            .iter()
            .all(|b| b.side.holds(row[b.variable], b.split_point))
    }

    pub fn contains(&self, covariates: &CovariateTable, person: usize) -> bool {
        self.branches
            .iter()
            .all(|b| b.side.holds(covariates.value(person, b.variable), b.split_point))
    }

    pub fn child(&self, variable: usize, split_point: f64, side: Side) -> Self {
        let mut branches = self.branches.clone();
        branches.push(Branch {
            variable,
            split_point,
            side,
        });
        Self { branches }
    }

    /// Human-readable description such as `Age <= 34 & Gender > 0`.
    pub fn describe(&self, names: &[String]) -> String {
        if self.branches.is_empty() {
            return "root".to_string();
        }
        self.branches
            .iter()
            .map(|b| {
                let name = names
                    .get(b.variable)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", b.variable + 1));
                let op = match b.side {
                    Side::Le => "<=",
                    Side::Gt => ">",
                };
                format!("{name} {op} {}", format_split_point(b.split_point))
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

pub(crate) fn format_split_point(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

/// Per-item mapping from persons to leaf indices. This is all the fitting
/// routines need to know about a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    n_persons: usize,
    membership: Vec<Vec<u32>>,
    n_leaves: Vec<usize>,
}

impl Layout {
    /// Every item has a single leaf holding everyone.
    pub fn root(n_items: usize, n_persons: usize) -> Self {
        Self {
            n_persons,
            membership: vec![vec![0; n_persons]; n_items],
            n_leaves: vec![1; n_items],
        }
    }

    /// Builds a layout from explicit leaf indices. Leaf indices of each item
    /// must be exactly `0..L_i` with every leaf non-empty.
    pub fn from_membership(membership: Vec<Vec<u32>>) -> Result<Self> {
        let n_persons = membership.first().map_or(0, Vec::len);
        let mut n_leaves = Vec::with_capacity(membership.len());
        for (item, m) in membership.iter().enumerate() {
            if m.len() != n_persons {
                return Err(Error::DimensionMismatch(format!(
                    "item {item} assigns {} persons, expected {n_persons}",
                    m.len()
                )));
            }
            let count = m.iter().max().map_or(0, |&x| x as usize + 1);
            let mut seen = vec![false; count];
            for &l in m {
                seen[l as usize] = true;
            }
            if let Some(empty) = seen.iter().position(|s| !s) {
                return Err(Error::Partition(format!("item {item} leaf {empty} is empty")));
            }
            n_leaves.push(count.max(1));
        }
        Ok(Self {
            n_persons,
            membership,
            n_leaves,
        })
    }

    pub fn n_items(&self) -> usize {
        self.membership.len()
    }

    pub fn n_persons(&self) -> usize {
        self.n_persons
    }

    pub fn n_leaves(&self, item: usize) -> usize {
        self.n_leaves[item]
    }

    pub fn total_leaves(&self) -> usize {
        self.n_leaves.iter().sum()
    }

    #[inline]
    pub fn leaf_of(&self, item: usize, person: usize) -> usize {
        self.membership[item][person] as usize
    }

    pub fn item_membership(&self, item: usize) -> &[u32] {
        &self.membership[item]
    }

    pub fn members(&self, item: usize, leaf: usize) -> Vec<usize> {
        self.membership[item]
            .iter()
            .enumerate()
            .filter(|(_, &l)| l as usize == leaf)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn leaf_sizes(&self, item: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.n_leaves[item]];
        for &l in &self.membership[item] {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Splits `leaf` of `item`: members for which `goes_right` holds move to
    /// a new leaf with index `n_leaves(item)`, the rest keep `leaf`.
    pub fn split(&self, item: usize, leaf: usize, goes_right: impl Fn(usize) -> bool) -> Self {
        let mut out = self.clone();
        let new_leaf = self.n_leaves[item] as u32;
        for (p, l) in out.membership[item].iter_mut().enumerate() {
            if *l as usize == leaf && goes_right(p) {
                *l = new_leaf;
            }
        }
        out.n_leaves[item] += 1;
        out
    }
}

/// Leaves of every item as node specifications, together with the induced
/// [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct ItemPartition {
    nodes: Vec<Vec<NodeSpec>>,
    layout: Layout,
}

impl ItemPartition {
    pub fn root(n_items: usize, n_persons: usize) -> Self {
        Self {
            nodes: vec![vec![NodeSpec::root()]; n_items],
            layout: Layout::root(n_items, n_persons),
        }
    }

    /// Resolves node specifications against the covariates. Every person
    /// must fall into exactly one leaf of every item and no leaf may be
    /// empty.
    pub fn from_nodes(nodes: Vec<Vec<NodeSpec>>, covariates: &CovariateTable) -> Result<Self> {
        let n_persons = covariates.n_persons();
        let mut membership = Vec::with_capacity(nodes.len());
        for (item, leaves) in nodes.iter().enumerate() {
            if leaves.is_empty() {
                return Err(Error::Partition(format!("item {item} has no leaves")));
            }
            for b in leaves.iter().flat_map(|n| &n.branches) {
                if b.variable >= covariates.n_variables() {
                    return Err(Error::DimensionMismatch(format!(
                        "item {item} references covariate {} but only {} exist",
                        b.variable,
                        covariates.n_variables()
                    )));
                }
            }
            let mut m = Vec::with_capacity(n_persons);
            for p in 0..n_persons {
                let mut hit = None;
                for (l, node) in leaves.iter().enumerate() {
                    if node.contains(covariates, p) {
                        if hit.is_some() {
                            return Err(Error::Partition(format!(
                                "person {p} falls into several leaves of item {item}"
                            )));
                        }
                        hit = Some(l as u32);
                    }
                }
                match hit {
                    Some(l) => m.push(l),
                    None => {
                        return Err(Error::Partition(format!(
                            "person {p} falls into no leaf of item {item}"
                        )))
                    }
                }
            }
            membership.push(m);
        }
        let layout = Layout::from_membership(membership)?;
        for (item, leaves) in nodes.iter().enumerate() {
            if layout.n_leaves(item) != leaves.len() {
                return Err(Error::Partition(format!("item {item} has an empty leaf")));
            }
        }
        Ok(Self { nodes, layout })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn nodes(&self, item: usize) -> &[NodeSpec] {
        &self.nodes[item]
    }

    pub fn n_items(&self) -> usize {
        self.nodes.len()
    }

    /// Splits leaf `leaf` of `item` at `x_variable <= split_point`. The left
    /// child keeps the leaf index, the right child is appended.
    pub fn split(
        &self,
        item: usize,
        leaf: usize,
        variable: usize,
        split_point: f64,
        covariates: &CovariateTable,
    ) -> Self {
        let parent = self.nodes[item][leaf].clone();
        let mut nodes = self.nodes.clone();
        nodes[item][leaf] = parent.child(variable, split_point, Side::Le);
        nodes[item].push(parent.child(variable, split_point, Side::Gt));
        let layout = self.layout.split(item, leaf, |p| {
            covariates.value(p, variable) > split_point
        });
        Self { nodes, layout }
    }
}
