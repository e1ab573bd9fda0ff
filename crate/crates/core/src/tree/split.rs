use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IftConfig;
use crate::data::{CovariateTable, ResponseMatrix};
use crate::error::{Error, Result};
use crate::fit::{refit_pcm, FitOptions, PcmFit};
use crate::partition::{ItemPartition, Layout, NodeSpec};

/// Candidate split points of covariate `x` inside a node: the distinct
/// observed values `c` (the largest excluded) such that both `x <= c` and
/// `x > c` keep at least `min_node_size` of the node's members.
pub fn enumerate_split_points(x: &[f64], members: &[usize], min_node_size: usize) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("node has no members".into()));
    }
    let n = members.len();
    if n < 2 * min_node_size.max(1) {
        return Ok(Vec::new());
    }
    let mut values: Vec<f64> = members.iter().map(|&p| x[p]).collect();
    values.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut idx = 0;
    while idx < n {
        let c = values[idx];
        let mut end = idx;
        while end < n && values[end] == c {
            end += 1;
        }
        // `end` members satisfy x <= c
        if end < n && end >= min_node_size && n - end >= min_node_size {
            out.push(c);
        }
        idx = end;
    }
    Ok(out)
}

/// Number of covariates with at least one admissible split point in the
/// given leaf.
pub fn available_variables(
    covariates: &CovariateTable,
    members: &[usize],
    min_node_size: usize,
) -> Result<usize> {
    let mut count = 0;
    for v in 0..covariates.n_variables() {
        if !enumerate_split_points(&covariates.column(v).values, members, min_node_size)?.is_empty() {
            count += 1;
        }
    }
    Ok(count)
}

/// One evaluated split of a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub item: usize,
    /// Leaf index within the item's current layout.
    pub leaf: usize,
    pub node: NodeSpec,
    pub variable: usize,
    pub split_point: f64,
    pub lr_statistic: f64,
    pub left_count: usize,
    pub right_count: usize,
    /// False when the split model did not converge.
    pub reliable: bool,
}

/// Outcome of a search over all items, leaves, covariates and split points.
#[derive(Debug, Clone)]
pub enum SearchOutcome {
    /// No admissible split anywhere.
    Exhausted,
    Found {
        best: SplitCandidate,
        /// Joint fit of the model containing the best split.
        fit: Box<PcmFit>,
        n_candidates: usize,
    },
}

/// Deviance reduction from splitting `leaf` of `item` so that persons with
/// `goes_right(p)` form a new leaf. All parameters are refitted jointly,
/// warm-started from the parent. Returns the clamped statistic and the
/// child fit.
pub(crate) fn split_statistic(
    data: &ResponseMatrix,
    layout: &Layout,
    parent: &PcmFit,
    item: usize,
    leaf: usize,
    goes_right: impl Fn(usize) -> bool,
    options: &FitOptions,
) -> Result<(f64, PcmFit)> {
    let child_layout = layout.split(item, leaf, goes_right);
    let start = parent.params.split_leaf(item, leaf);
    let child = refit_pcm(data, &child_layout, options, &start)?;
    let t = (parent.deviance - child.deviance).max(0.0);
    Ok((t, child))
}

/// Likelihood-ratio statistic for splitting `leaf` of `item` at
/// `x_variable <= split_point`.
#[allow(clippy::too_many_arguments)]
pub fn lr_statistic(
    data: &ResponseMatrix,
    covariates: &CovariateTable,
    partition: &ItemPartition,
    parent: &PcmFit,
    item: usize,
    leaf: usize,
    variable: usize,
    split_point: f64,
    options: &FitOptions,
) -> Result<(f64, PcmFit)> {
    let x = &covariates.column(variable).values;
    split_statistic(
        data,
        partition.layout(),
        parent,
        item,
        leaf,
        |p| x[p] > split_point,
        options,
    )
}

struct Task {
    item: usize,
    leaf: usize,
    variable: usize,
    split_point: f64,
    left: usize,
    right: usize,
}

/// Evaluates every admissible split and returns the one with the largest
/// statistic. Ties go to the lowest item, then leaf, then variable, then
/// split point. Splits whose fit did not converge are excluded.
pub fn best_split_search(
    data: &ResponseMatrix,
    covariates: &CovariateTable,
    partition: &ItemPartition,
    parent: &PcmFit,
    config: &IftConfig,
) -> Result<SearchOutcome> {
    let layout = partition.layout();
    let mut tasks = Vec::new();
    for item in 0..layout.n_items() {
        for leaf in 0..layout.n_leaves(item) {
            let members = layout.members(item, leaf);
            for variable in 0..covariates.n_variables() {
                let x = &covariates.column(variable).values;
                for c in enumerate_split_points(x, &members, config.min_node_size)? {
                    let left = members.iter().filter(|&&p| x[p] <= c).count();
                    tasks.push(Task {
                        item,
                        leaf,
                        variable,
                        split_point: c,
                        left,
                        right: members.len() - left,
                    });
                }
            }
        }
    }
    if tasks.is_empty() {
        return Ok(SearchOutcome::Exhausted);
    }

    let results: Vec<Result<(f64, PcmFit)>> = tasks
        .par_iter()
        .map(|t| {
            let x = &covariates.column(t.variable).values;
            split_statistic(
                data,
                layout,
                parent,
                t.item,
                t.leaf,
                |p| x[p] > t.split_point,
                &config.fit,
            )
        })
        .collect();

    let n_candidates = tasks.len();
    let mut best: Option<(usize, f64, PcmFit)> = None;
    for (idx, res) in results.into_iter().enumerate() {
        let (t, fit) = res?;
        if !fit.converged {
            let task = &tasks[idx];
            log::warn!(
                "split of item {} leaf {} on variable {} at {} did not converge ({}); excluded",
                task.item,
                task.leaf,
                task.variable,
                task.split_point,
                fit.diagnostic.as_deref().unwrap_or("no diagnostic")
            );
            continue;
        }
        if best.as_ref().is_none_or(|(_, bt, _)| t > *bt) {
            best = Some((idx, t, fit));
        }
    }
    let Some((idx, t, fit)) = best else {
        return Ok(SearchOutcome::Exhausted);
    };
    let task = &tasks[idx];
    Ok(SearchOutcome::Found {
        best: SplitCandidate {
            item: task.item,
            leaf: task.leaf,
            node: partition.nodes(task.item)[task.leaf].clone(),
            variable: task.variable,
            split_point: task.split_point,
            lr_statistic: t,
            left_count: task.left,
            right_count: task.right,
            reliable: true,
        },
        fit: Box::new(fit),
        n_candidates,
    })
}
