use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, IndicatorMatrix, MetricsReport, METRIC_NAMES};
use super::{generate_dataset, GeneratedDataset, ScenarioSpec};
use crate::error::Result;
use crate::seed;
use crate::tree::{grow_trees, AuditEntry, IftConfig, ItemTree};

/// Result of one replication; `error` is set when it failed and was
/// excluded from the metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub index: usize,
    pub n_persons: usize,
    pub truth: IndicatorMatrix,
    pub estimated: Option<IndicatorMatrix>,
    pub trees: Vec<ItemTree>,
    /// Leaf thresholds shifted so that the fitted abilities average zero,
    /// per item and leaf (layout order).
    pub centered_thresholds: Vec<Vec<Vec<f64>>>,
    pub audit: Vec<AuditEntry>,
    pub error: Option<String>,
    #[serde(skip)]
    pub dataset: Option<GeneratedDataset>,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub spec: ScenarioSpec,
    pub report: MetricsReport,
    pub replications: Vec<ReplicationOutcome>,
}

impl StudyResult {
    pub fn failed(&self) -> usize {
        self.replications.iter().filter(|r| r.error.is_some()).count()
    }
}

fn run_replication(spec: &ScenarioSpec, config: &IftConfig, index: usize) -> ReplicationOutcome {
    let truth = spec.true_indicators();
    let failed = |msg: String| ReplicationOutcome {
        index,
        n_persons: 0,
        truth: truth.clone(),
        estimated: None,
        trees: Vec::new(),
        centered_thresholds: Vec::new(),
        audit: Vec::new(),
        error: Some(msg),
        dataset: None,
    };
    let data = match generate_dataset(spec, index) {
        Ok(d) => d,
        Err(e) => return failed(e.to_string()),
    };
    let rep_config = IftConfig {
        rng_seed: seed::derive(config.rng_seed, &[index as u64]),
        ..*config
    };
    match grow_trees(&data.responses, &data.covariates, &rep_config) {
        Ok(growth) => {
            let params = &growth.fit.params;
            let centered = (0..params.n_items())
                .map(|i| {
                    (0..params.n_leaves(i))
                        .map(|l| params.centered_leaf_thresholds(i, l))
                        .collect()
                })
                .collect();
            ReplicationOutcome {
                index,
                n_persons: data.responses.n_persons(),
                truth,
                estimated: Some(IndicatorMatrix::new(
                    growth.indicator_matrix(data.covariates.n_variables()),
                )),
                trees: growth.trees,
                centered_thresholds: centered,
                audit: growth.audit,
                error: None,
                dataset: Some(data),
            }
        }
        Err(e) => failed(e.to_string()),
    }
}

/// Generates `spec.replications` datasets, grows trees on each and
/// aggregates the detection rates. Failed replications are kept in the
/// output with their error, reported through `log::warn!` and left out of
/// the metrics.
pub fn run_study(spec: &ScenarioSpec, config: &IftConfig) -> Result<StudyResult> {
    spec.validate()?;
    config.validate()?;
    let replications: Vec<ReplicationOutcome> = (0..spec.replications)
        .into_par_iter()
        .map(|r| {
            let out = run_replication(spec, config, r);
            log::info!(
                "{} replication {}/{} done{}",
                spec.name,
                r + 1,
                spec.replications,
                if out.error.is_some() { " (failed)" } else { "" }
            );
            out
        })
        .collect();
    let mut pairs = Vec::new();
    for rep in &replications {
        match (&rep.estimated, &rep.error) {
            (Some(est), None) => pairs.push((rep.truth.clone(), est.clone())),
            (_, err) => log::warn!(
                "{} replication {} excluded: {}",
                spec.name,
                rep.index,
                err.as_deref().unwrap_or("unknown failure")
            ),
        }
    }
    Ok(StudyResult {
        spec: spec.clone(),
        report: compute_metrics(&pairs),
        replications,
    })
}

/// Tab-separated results with columns
/// `scenario, dif_strength, metric, value, mc_stderr`; undefined rates are
/// written as `NA`.
pub fn results_table(studies: &[StudyResult]) -> String {
    let mut out = String::from("scenario\tdif_strength\tmetric\tvalue\tmc_stderr\n");
    for s in studies {
        let means = s.report.mean.values();
        let errs = s.report.mc_stderr.values();
        for (m, name) in METRIC_NAMES.iter().enumerate() {
            let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                s.spec.name,
                s.spec.strength,
                name,
                fmt(means[m]),
                fmt(errs[m])
            ));
        }
    }
    out
}
