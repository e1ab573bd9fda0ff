use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::split::{enumerate_split_points, split_statistic};
use super::IftConfig;
use crate::data::{CovariateTable, ResponseMatrix};
use crate::error::Result;
use crate::fit::PcmFit;
use crate::partition::{ItemPartition, NodeSpec};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub item: usize,
    pub leaf: usize,
    pub node: NodeSpec,
    pub variable: usize,
    /// Maximal statistic on the observed data.
    pub observed_t: f64,
    /// Statistics of the replicates actually run, in replicate order.
    pub permuted_ts: Vec<f64>,
    /// Share of permuted statistics at least as large as the observed one.
    pub p_value: f64,
    /// The test stopped before `n_perm` replicates (see
    /// [`IftConfig::early_stop`]).
    pub stopped_early: bool,
}

const BATCH: usize = 32;

/// Maximal-value permutation test for splitting `leaf` of `item` on
/// `variable`.
///
/// Replicate `b` permutes the whole covariate column with the generator
/// derived from `(config.rng_seed, stream, b)`, keeps node membership as
/// defined by the unpermuted covariates, and records the largest
/// deviance reduction over the admissible split points of the permuted
/// values inside the node (zero when there are none). Replicates are
/// independent, so the result does not depend on scheduling.
///
/// With `config.early_stop` and a `level`, replicates run in fixed batches
/// and the test ends as soon as more than `level * n_perm` of them reach
/// the observed statistic.
#[allow(clippy::too_many_arguments)]
pub fn permutation_test(
    data: &ResponseMatrix,
    covariates: &CovariateTable,
    partition: &ItemPartition,
    parent: &PcmFit,
    item: usize,
    leaf: usize,
    variable: usize,
    observed_t: f64,
    config: &IftConfig,
    stream: u64,
    level: Option<f64>,
) -> Result<PermutationTestResult> {
    config.validate()?;
    let layout = partition.layout();
    let members = layout.members(item, leaf);
    let x = &covariates.column(variable).values;
    let n = x.len();

    let replicate = |b: u64| -> Result<f64> {
        let mut rng = seed::stream(config.rng_seed, &[stream, b]);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<f64> = order.iter().map(|&src| x[src]).collect();
        let mut t_max = 0.0f64;
        for c in enumerate_split_points(&permuted, &members, config.min_node_size)? {
            let (t, _) = split_statistic(
                data,
                layout,
                parent,
                item,
                leaf,
                |p| permuted[p] > c,
                &config.fit,
            )?;
            t_max = t_max.max(t);
        }
        Ok(t_max)
    };

    let stop_after = match (config.early_stop, level) {
        (true, Some(level)) => Some(level * config.n_perm as f64),
        _ => None,
    };
    let batch = if stop_after.is_some() { BATCH } else { config.n_perm };
    let mut permuted_ts = Vec::with_capacity(config.n_perm);
    let mut stopped_early = false;
    while permuted_ts.len() < config.n_perm {
        let start = permuted_ts.len() as u64;
        let end = (permuted_ts.len() + batch).min(config.n_perm) as u64;
        let chunk: Vec<Result<f64>> = (start..end).into_par_iter().map(replicate).collect();
        for t in chunk {
            permuted_ts.push(t?);
        }
        if let Some(limit) = stop_after {
            let hits = permuted_ts.iter().filter(|&&t| t >= observed_t).count();
            if hits as f64 > limit && permuted_ts.len() < config.n_perm {
                stopped_early = true;
                break;
            }
        }
    }
    let p_value = exceedance_p_value(observed_t, &permuted_ts);
    Ok(PermutationTestResult {
        item,
        leaf,
        node: partition.nodes(item)[leaf].clone(),
        variable,
        observed_t,
        permuted_ts,
        p_value,
        stopped_early,
    })
}

/// `#{b : t_b >= observed} / n`.
pub(crate) fn exceedance_p_value(observed: f64, permuted: &[f64]) -> f64 {
    if permuted.is_empty() {
        return 1.0;
    }
    permuted.iter().filter(|&&t| t >= observed).count() as f64 / permuted.len() as f64
}
