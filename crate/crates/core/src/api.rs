//! One-call entry points returning serialisable reports. The command-line
//! tool writes exactly these structures, so results obtained through the
//! library and through the tool agree.

use serde::{Deserialize, Serialize};

use crate::data::{CovariateTable, ResponseMatrix};
use crate::error::{Error, Result};
use crate::fit::{fit_pcm, FitOptions, PcmFit};
use crate::partition::Layout;
use crate::report::{render_tree, tree_document, RenderedTree, TreeDocument, SCHEMA_VERSION};
use crate::sim::{preset, run_study, ScenarioSpec, StudyResult, METRIC_NAMES};
use crate::tree::{grow_trees, AuditEntry, GrowthResult, IftConfig, StopReason};

/// Thresholds of one item in the plain model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemEstimate {
    pub item: usize,
    pub name: String,
    /// Logit-scale thresholds with abilities centred at zero.
    pub thresholds: Vec<f64>,
    /// A category of this item is never observed.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: String,
    pub n_persons: usize,
    pub n_items: usize,
    pub n_thresholds: usize,
    pub log_likelihood: f64,
    pub deviance: f64,
    pub n_parameters: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_gradient: f64,
    pub diagnostic: Option<String>,
    pub items: Vec<ItemEstimate>,
    /// Abilities on the same centred scale as the thresholds.
    pub theta: Vec<f64>,
}

/// Fits the partial credit model without DIF.
pub fn fit(data: &ResponseMatrix, item_names: &[String], options: &FitOptions) -> Result<(FitReport, PcmFit)> {
    check_names(item_names, data.n_items())?;
    let layout = Layout::root(data.n_items(), data.n_persons());
    let fit = fit_pcm(data, &layout, options)?;
    let params = &fit.params;
    let shift = params.mean_theta();
    let report = FitReport {
        schema_version: SCHEMA_VERSION.to_string(),
        n_persons: data.n_persons(),
        n_items: data.n_items(),
        n_thresholds: data.n_thresholds(),
        log_likelihood: fit.log_likelihood,
        deviance: fit.deviance,
        n_parameters: fit.n_parameters,
        converged: fit.converged,
        iterations: fit.iterations,
        max_gradient: fit.max_gradient,
        diagnostic: fit.diagnostic.clone(),
        items: (0..data.n_items())
            .map(|i| ItemEstimate {
                item: i,
                name: item_names[i].clone(),
                thresholds: params.centered_leaf_thresholds(i, 0),
                capped: fit.capped_leaves.iter().any(|&(ci, _)| ci == i),
            })
            .collect(),
        theta: params.theta().iter().map(|t| t - shift).collect(),
    };
    Ok((report, fit))
}

/// Detected DIF of one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifItem {
    pub item: usize,
    pub name: String,
    /// Covariates the item's tree splits on, in order of first use.
    pub variables: Vec<String>,
    pub n_leaves: usize,
    /// Permutation p-values of the item's committed splits.
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub schema_version: String,
    pub config: IftConfig,
    pub n_persons: usize,
    pub n_items: usize,
    pub n_thresholds: usize,
    pub variables: Vec<String>,
    pub dif_items: Vec<DifItem>,
    pub stop_reason: StopReason,
    pub log_likelihood: f64,
    pub deviance_path: Vec<f64>,
    pub converged: bool,
    pub trees: Vec<TreeDocument>,
    pub audit: Vec<AuditEntry>,
}

impl DetectionReport {
    /// Tab-separated audit log with a header line.
    pub fn audit_log(&self) -> String {
        let mut out = format!("{}\n", AuditEntry::HEADER);
        for entry in &self.audit {
            let name = self.trees.get(entry.item).map(|t| t.item_name.as_str());
            out.push_str(&entry.to_line(name));
            out.push('\n');
        }
        out
    }
}

/// Everything produced by [`detect`].
#[derive(Debug, Clone)]
pub struct Detection {
    pub report: DetectionReport,
    pub rendered: Vec<RenderedTree>,
    pub growth: GrowthResult,
}

/// Grows item-focussed trees and summarises the detected DIF.
pub fn detect(
    data: &ResponseMatrix,
    covariates: &CovariateTable,
    item_names: &[String],
    config: &IftConfig,
) -> Result<Detection> {
    check_names(item_names, data.n_items())?;
    let growth = grow_trees(data, covariates, config)?;
    let variables: Vec<String> = covariates.columns().iter().map(|c| c.name.clone()).collect();
    let rendered = growth
        .trees
        .iter()
        .map(|t| render_tree(t, &growth.fit, &item_names[t.item], &variables))
        .collect::<Result<Vec<_>>>()?;
    let dif_items = growth
        .trees
        .iter()
        .filter(|t| t.has_dif())
        .map(|t| {
            let mut used = Vec::new();
            for s in &t.split_history {
                if !used.contains(&s.variable) {
                    used.push(s.variable);
                }
            }
            DifItem {
                item: t.item,
                name: item_names[t.item].clone(),
                variables: used.iter().map(|&v| variables[v].clone()).collect(),
                n_leaves: t.n_leaves(),
                p_values: t.split_history.iter().map(|s| s.p_value).collect(),
            }
        })
        .collect();
    let report = DetectionReport {
        schema_version: SCHEMA_VERSION.to_string(),
        config: *config,
        n_persons: data.n_persons(),
        n_items: data.n_items(),
        n_thresholds: data.n_thresholds(),
        variables,
        dif_items,
        stop_reason: growth.stop_reason,
        log_likelihood: growth.fit.log_likelihood,
        deviance_path: growth.deviance_path.clone(),
        converged: growth.fit.converged,
        trees: rendered.iter().map(|r| r.document.clone()).collect(),
        audit: growth.audit.clone(),
    };
    Ok(Detection {
        report,
        rendered,
        growth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub value: Option<f64>,
    pub mc_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub index: usize,
    pub n_persons: usize,
    pub dif_items: Vec<usize>,
    pub error: Option<String>,
    pub trees: Vec<TreeDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: String,
    pub scenario: ScenarioSpec,
    pub config: IftConfig,
    pub metrics: Vec<MetricRow>,
    pub failed_replications: usize,
    pub replications: Vec<ReplicationSummary>,
}

/// Runs a named simulation preset, optionally with fewer or more
/// replications than the preset's default.
pub fn simulate(
    preset_name: &str,
    replications: Option<usize>,
    config: &IftConfig,
) -> Result<(SimulationReport, StudyResult)> {
    let mut spec = preset(preset_name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{preset_name}'")))?;
    if let Some(r) = replications {
        spec.replications = r;
    }
    let study = run_study(&spec, config)?;
    let variables: Vec<String> = spec.covariates.iter().map(|c| c.name.clone()).collect();
    let k = spec.n_thresholds();
    let means = study.report.mean.values();
    let errs = study.report.mc_stderr.values();
    let report = SimulationReport {
        schema_version: SCHEMA_VERSION.to_string(),
        scenario: spec.clone(),
        config: *config,
        metrics: METRIC_NAMES
            .iter()
            .enumerate()
            .map(|(m, name)| MetricRow {
                metric: name.to_string(),
                value: means[m],
                mc_stderr: errs[m],
            })
            .collect(),
        failed_replications: study.failed(),
        replications: study
            .replications
            .iter()
            .map(|r| ReplicationSummary {
                index: r.index,
                n_persons: r.n_persons,
                dif_items: r.trees.iter().filter(|t| t.has_dif()).map(|t| t.item).collect(),
                error: r.error.clone(),
                trees: r
                    .trees
                    .iter()
                    .map(|t| tree_document(t, &format!("item{}", t.item + 1), &variables, k))
                    .collect(),
            })
            .collect(),
    };
    Ok((report, study))
}

/// `item1`, `item2`, ...
pub fn default_item_names(n_items: usize) -> Vec<String> {
    (1..=n_items).map(|i| format!("item{i}")).collect()
}

fn check_names(names: &[String], n_items: usize) -> Result<()> {
    if names.len() != n_items {
        return Err(Error::DimensionMismatch(format!(
            "{} item names for {n_items} items",
            names.len()
        )));
    }
    Ok(())
}
