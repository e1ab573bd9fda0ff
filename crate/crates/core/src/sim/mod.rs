//! Data-generating processes for DIF power studies and their evaluation.
//!
//! A [`ScenarioSpec`] describes persons, items, covariates and where DIF is
//! planted; [`generate_dataset`] draws one replication from it,
//! [`run_study`] grows trees on every replication and [`compute_metrics`]
//! turns true and estimated DIF indicators into true/false positive rates.

mod metrics;
mod presets;
mod study;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Covariate, CovariateKind, CovariateTable, ResponseMatrix};
use crate::error::{Error, Result};
use crate::pcm::fill_probabilities;
use crate::seed;

pub use metrics::{compute_metrics, rates, IndicatorMatrix, MetricsReport, RateSet, METRIC_NAMES};
pub use presets::{preset, preset_names, DifStrength};
pub use study::{results_table, run_study, ReplicationOutcome, StudyResult};

/// Distribution of one simulated covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovariateDistribution {
    /// 0/1 with `P(x = 1) = p`.
    Bernoulli { p: f64 },
    /// Ordered factor uniform on `low..=high`.
    OrderedUniform { low: i64, high: i64 },
    /// Integer-valued numeric covariate uniform on `low..=high`.
    IntegerUniform { low: i64, high: i64 },
}

impl CovariateDistribution {
    pub fn kind(&self) -> CovariateKind {
        match self {
            Self::Bernoulli { .. } => CovariateKind::Binary,
            Self::OrderedUniform { .. } => CovariateKind::Ordered,
            Self::IntegerUniform { .. } => CovariateKind::Numeric,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Self::Bernoulli { p } => f64::from(u8::from(rng.gen_bool(p))),
            Self::OrderedUniform { low, high } | Self::IntegerUniform { low, high } => {
                rng.gen_range(low..=high) as f64
            }
        }
    }

    /// Population median used as the DIF split point: 0 for binary
    /// covariates, the lower middle level for factors (2 of 1..4) and the
    /// lower middle value for integer ranges (34 of 20..50 is one below the
    /// midpoint 35 so the right node is the larger half).
    pub fn median_split(&self) -> f64 {
        match *self {
            Self::Bernoulli { .. } => 0.0,
            Self::OrderedUniform { low, high } => ((low + high) as f64 / 2.0).floor(),
            Self::IntegerUniform { low, high } => ((low + high) as f64 / 2.0).floor() - 1.0,
        }
    }

    fn admits_split(&self, c: f64) -> bool {
        match *self {
            Self::Bernoulli { p } => c == 0.0 && p > 0.0 && p < 1.0,
            Self::OrderedUniform { low, high } | Self::IntegerUniform { low, high } => {
                c >= low as f64 && c < high as f64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    pub distribution: CovariateDistribution,
}

/// How thresholds move for the focal group `x_v > c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifShape {
    /// Every threshold shifts by `+lambda`.
    Homogeneous,
    /// The lower half of the thresholds shifts by `-lambda`, the upper half
    /// by `+lambda` (a middle threshold of odd `k` stays).
    Nonhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifSpec {
    pub item: usize,
    pub variable: usize,
    pub split_point: f64,
    pub shape: DifShape,
}

/// Reference-group thresholds of DIF items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifBase {
    /// Drawn from the threshold prior like every other item.
    Drawn,
    /// Fixed at the prior mean, e.g. `(-0.5, 0.5)` for `k = 2`.
    PriorMean,
}

/// Full description of a simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    /// Label for result tables (`none`, `weak`, ...).
    pub strength: String,
    pub n_persons: usize,
    pub n_items: usize,
    /// Prior mean of the thresholds; its length is `k`. The prior
    /// covariance is the identity.
    pub threshold_mean: Vec<f64>,
    pub covariates: Vec<CovariateSpec>,
    pub dif: Vec<DifSpec>,
    pub lambda: f64,
    pub dif_base: DifBase,
    pub replications: usize,
    pub seed: u64,
    /// Generation fails when fewer persons survive filtering.
    pub min_persons: usize,
}

impl ScenarioSpec {
    pub fn n_thresholds(&self) -> usize {
        self.threshold_mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_persons < 2 || self.n_items == 0 || self.threshold_mean.is_empty() {
            return fail("scenario needs at least 2 persons, 1 item and 1 threshold".into());
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return fail(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        for d in &self.dif {
            if d.item >= self.n_items {
                return fail(format!("DIF item {} out of range", d.item));
            }
            let Some(cov) = self.covariates.get(d.variable) else {
                return fail(format!("DIF variable {} out of range", d.variable));
            };
            if !cov.distribution.admits_split(d.split_point) {
                return fail(format!(
                    "split point {} not admissible for covariate '{}'",
                    d.split_point, cov.name
                ));
            }
        }
        for c in &self.covariates {
            match c.distribution {
                CovariateDistribution::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                    return fail(format!("Bernoulli probability {p} out of range"))
                }
                CovariateDistribution::OrderedUniform { low, high }
                | CovariateDistribution::IntegerUniform { low, high }
                    if low > high =>
                {
                    return fail(format!("empty range {low}..={high}"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// True `I x V` DIF indicators: item `i` has DIF in `v` when a DIF spec
    /// links them and `lambda > 0`.
    pub fn true_indicators(&self) -> IndicatorMatrix {
        let mut rows = vec![vec![false; self.covariates.len()]; self.n_items];
        if self.lambda > 0.0 {
            for d in &self.dif {
                rows[d.item][d.variable] = true;
            }
        }
        IndicatorMatrix::new(rows)
    }
}

/// One simulated replication.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub responses: ResponseMatrix,
    pub covariates: CovariateTable,
    pub true_dif: IndicatorMatrix,
    /// Abilities of the retained persons.
    pub theta: Vec<f64>,
    /// Reference-group thresholds per item.
    pub reference_thresholds: Vec<Vec<f64>>,
    /// Focal-group thresholds per item (equal to the reference for items
    /// without DIF).
    pub focal_thresholds: Vec<Vec<f64>>,
    /// Indices (into the `n_persons` drawn) of the retained persons.
    pub kept: Vec<usize>,
}

fn shifted(reference: &[f64], lambda: f64, shape: DifShape) -> Vec<f64> {
    let k = reference.len();
    reference
        .iter()
        .enumerate()
        .map(|(r, &d)| match shape {
            DifShape::Homogeneous => d + lambda,
            DifShape::Nonhomogeneous => {
                if r < k / 2 {
                    d - lambda
                } else if r >= k.div_ceil(2) {
                    d + lambda
                } else {
                    d
                }
            }
        })
        .collect()
}

/// Draws replication `replicate` of `spec`.
///
/// Abilities are standard normal, thresholds `N(mu, I)` per item, and DIF
/// items use shifted thresholds for persons with `x_v > c`. Persons whose
/// responses all fall into one category are removed afterwards and the
/// covariate rows are realigned. The result depends only on
/// `(spec.seed, replicate)`.
pub fn generate_dataset(spec: &ScenarioSpec, replicate: usize) -> Result<GeneratedDataset> {
    spec.validate()?;
    let mut rng = seed::stream(spec.seed, &[replicate as u64]);
    let n = spec.n_persons;
    let k = spec.n_thresholds();

    let theta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let columns: Vec<Vec<f64>> = spec
        .covariates
        .iter()
        .map(|c| (0..n).map(|_| c.distribution.sample(&mut rng)).collect())
        .collect();

    let mut reference = Vec::with_capacity(spec.n_items);
    for _ in 0..spec.n_items {
        let draw: Vec<f64> = spec
            .threshold_mean
            .iter()
            .map(|&mu| mu + rng.sample::<f64, _>(StandardNormal))
            .collect();
        reference.push(draw);
    }
    let mut focal = reference.clone();
    // (variable, split point) per DIF item
    let mut dif_rule: Vec<Option<(usize, f64)>> = vec![None; spec.n_items];
    for d in &spec.dif {
        if spec.dif_base == DifBase::PriorMean {
            reference[d.item] = spec.threshold_mean.clone();
        }
        focal[d.item] = shifted(&reference[d.item], spec.lambda, d.shape);
        dif_rule[d.item] = Some((d.variable, d.split_point));
    }

    let mut values = Vec::with_capacity(n * spec.n_items);
    let mut probs = vec![0.0; k + 1];
    for p in 0..n {
        for i in 0..spec.n_items {
            let in_focal = dif_rule[i].is_some_and(|(v, c)| columns[v][p] > c);
            let d = if in_focal { &focal[i] } else { &reference[i] };
            fill_probabilities(theta[p], d, &mut probs);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut category = k;
            for (r, &pr) in probs.iter().enumerate() {
                acc += pr;
                if u < acc {
                    category = r;
                    break;
                }
            }
            values.push(category as u8);
        }
    }
    let all = ResponseMatrix::new(n, spec.n_items, k, values)?;
    let constant = all.constant_rows();
    let kept: Vec<usize> = (0..n).filter(|p| constant.binary_search(p).is_err()).collect();
    if kept.len() < spec.min_persons.max(2) {
        return Err(Error::Simulation(format!(
            "only {} of {n} persons answer in more than one category (need {})",
            kept.len(),
            spec.min_persons
        )));
    }

    let covariates = CovariateTable::new(
        spec.covariates
            .iter()
            .zip(&columns)
            .map(|(c, col)| {
                Covariate::new(
                    c.name.clone(),
                    c.distribution.kind(),
                    kept.iter().map(|&p| col[p]).collect(),
                )
            })
            .collect(),
    )?;
    let covariates = if spec.covariates.is_empty() {
        CovariateTable::empty(kept.len())
    } else {
        covariates
    };
    Ok(GeneratedDataset {
        responses: all.select_rows(&kept),
        covariates,
        true_dif: spec.true_indicators(),
        theta: kept.iter().map(|&p| theta[p]).collect(),
        reference_thresholds: reference,
        focal_thresholds: focal,
        kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonhomogeneous_shift_for_two_thresholds() {
        assert_eq!(shifted(&[-0.5, 0.5], 1.0, DifShape::Nonhomogeneous), vec![-1.5, 1.5]);
        assert_eq!(shifted(&[-0.5, 0.5], 1.0, DifShape::Homogeneous), vec![0.5, 1.5]);
        assert_eq!(
            shifted(&[0.0, 0.0, 0.0], 0.5, DifShape::Nonhomogeneous),
            vec![-0.5, 0.0, 0.5]
        );
    }

    #[test]
    fn median_split_points() {
        assert_eq!(CovariateDistribution::Bernoulli { p: 0.5 }.median_split(), 0.0);
        assert_eq!(CovariateDistribution::OrderedUniform { low: 1, high: 4 }.median_split(), 2.0);
        assert_eq!(CovariateDistribution::IntegerUniform { low: 20, high: 50 }.median_split(), 34.0);
    }
}
