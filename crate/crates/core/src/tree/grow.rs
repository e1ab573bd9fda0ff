use std::fmt;

use serde::{Deserialize, Serialize};

use super::item_tree::{ItemTree, SplitRecord};
use super::permutation::permutation_test;
use super::split::{available_variables, best_split_search, SearchOutcome};
use super::IftConfig;
use crate::data::{CovariateTable, ResponseMatrix};
use crate::error::{Error, Result};
use crate::fit::{fit_pcm, PcmFit};
use crate::partition::ItemPartition;

/// One line of the audit log: the tested split and the decision taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub step: usize,
    pub item: usize,
    pub leaf: usize,
    /// Node description, e.g. `root` or `x3 <= 34`.
    pub node: String,
    pub variable: usize,
    pub variable_name: String,
    pub split_point: f64,
    pub statistic: f64,
    pub p_value: f64,
    /// Local level `alpha / V_avail`.
    pub level: f64,
    pub available_variables: usize,
    pub split: bool,
    pub deviance_before: f64,
    pub deviance_after: f64,
}

impl AuditEntry {
    pub const HEADER: &'static str =
        "step\titem\tnode\tvariable\tsplit_point\tstatistic\tp_value\tlevel\tdecision";

    /// Tab-separated line matching [`AuditEntry::HEADER`]; `item_name`
    /// replaces the numeric item index when given.
    pub fn to_line(&self, item_name: Option<&str>) -> String {
        let item = item_name.map_or_else(|| (self.item + 1).to_string(), str::to_string);
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
            self.step,
            item,
            self.node,
            self.variable_name,
            crate::partition::format_split_point(self.split_point),
            self.statistic,
            self.p_value,
            self.level,
            if self.split { "split" } else { "stop" }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The best split failed its permutation test.
    NotSignificant,
    /// No admissible split is left (minimum node size or no covariates).
    Exhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::NotSignificant => "best split not significant",
            StopReason::Exhausted => "no admissible split left",
        })
    }
}

/// Trees for all items together with the final joint fit.
#[derive(Debug, Clone)]
pub struct GrowthResult {
    pub trees: Vec<ItemTree>,
    pub fit: PcmFit,
    pub partition: ItemPartition,
    pub audit: Vec<AuditEntry>,
    pub stop_reason: StopReason,
    /// Deviance of the root model followed by the deviance after each
    /// committed split.
    pub deviance_path: Vec<f64>,
}

impl GrowthResult {
    pub fn dif_items(&self) -> Vec<usize> {
        self.trees
            .iter()
            .filter(|t| t.has_dif())
            .map(|t| t.item)
            .collect()
    }

    /// `I x V` indicator matrix: item `i` has at least one split on `v`.
    pub fn indicator_matrix(&self, n_variables: usize) -> Vec<Vec<bool>> {
        self.trees
            .iter()
            .map(|t| {
                let used = t.variables_used();
                (0..n_variables).map(|v| used.contains(&v)).collect()
            })
            .collect()
    }
}

/// Grows one tree per item.
///
/// Each step searches all items, leaves, covariates and split points for
/// the largest likelihood-ratio statistic, then runs a permutation test for
/// that (item, leaf, covariate) at level `alpha / V_avail`, where `V_avail`
/// counts the covariates that still admit a split in the leaf. A
/// significant split is committed and every parameter refitted; the first
/// non-significant test ends the procedure.
pub fn grow_trees(
    data: &ResponseMatrix,
    covariates: &CovariateTable,
    config: &IftConfig,
) -> Result<GrowthResult> {
    config.validate()?;
    data.validate_for_fit()?;
    if covariates.n_persons() != data.n_persons() {
        return Err(Error::DimensionMismatch(format!(
            "{} covariate rows for {} response rows",
            covariates.n_persons(),
            data.n_persons()
        )));
    }
    let names: Vec<String> = covariates.columns().iter().map(|c| c.name.clone()).collect();

    let mut partition = ItemPartition::root(data.n_items(), data.n_persons());
    let mut fit = fit_pcm(data, partition.layout(), &config.fit)
        .map_err(|e| annotate(e, "initial fit"))?;
    if !fit.converged {
        log::warn!(
            "root model did not converge: {}",
            fit.diagnostic.as_deref().unwrap_or("no diagnostic")
        );
    }
    let mut trees: Vec<ItemTree> = (0..data.n_items())
        .map(|i| ItemTree::single_leaf(i, Vec::new(), data.n_persons()))
        .collect();
    let mut audit = Vec::new();
    let mut deviance_path = vec![fit.deviance];

    let mut step = 1;
    let stop_reason = loop {
        let outcome = best_split_search(data, covariates, &partition, &fit, config)
            .map_err(|e| annotate(e, &format!("split search at step {step}")))?;
        let (best, child_fit) = match outcome {
            SearchOutcome::Exhausted => break StopReason::Exhausted,
            SearchOutcome::Found { best, fit, .. } => (best, *fit),
        };
        let members = partition.layout().members(best.item, best.leaf);
        let available = available_variables(covariates, &members, config.min_node_size)?.max(1);
        let level = config.alpha / available as f64;
        let test = permutation_test(
            data,
            covariates,
            &partition,
            &fit,
            best.item,
            best.leaf,
            best.variable,
            best.lr_statistic,
            config,
            step as u64,
            Some(level),
        )
        .map_err(|e| annotate(e, &format!("permutation test at step {step}")))?;
        let significant = test.p_value <= level;
        audit.push(AuditEntry {
            step,
            item: best.item,
            leaf: best.leaf,
            node: best.node.describe(&names),
            variable: best.variable,
            variable_name: names[best.variable].clone(),
            split_point: best.split_point,
            statistic: best.lr_statistic,
            p_value: test.p_value,
            level,
            available_variables: available,
            split: significant,
            deviance_before: fit.deviance,
            deviance_after: child_fit.deviance,
        });
        if !significant {
            break StopReason::NotSignificant;
        }
        let new_leaf = partition.layout().n_leaves(best.item);
        trees[best.item].split_leaf(
            best.leaf,
            new_leaf,
            best.variable,
            best.split_point,
            SplitRecord {
                step,
                variable: best.variable,
                split_point: best.split_point,
                statistic: best.lr_statistic,
                p_value: test.p_value,
            },
        );
        partition = partition.split(best.item, best.leaf, best.variable, best.split_point, covariates);
        fit = child_fit;
        deviance_path.push(fit.deviance);
        step += 1;
    };

    for tree in &mut trees {
        let sizes = partition.layout().leaf_sizes(tree.item);
        tree.update_leaves(&fit.params, &sizes);
    }
    Ok(GrowthResult {
        trees,
        fit,
        partition,
        audit,
        stop_reason,
        deviance_path,
    })
}

fn annotate(err: Error, context: &str) -> Error {
    match err {
        Error::Numerical(msg) => Error::Numerical(format!("{context}: {msg}")),
        Error::Partition(msg) => Error::Partition(format!("{context}: {msg}")),
        other => other,
    }
}
