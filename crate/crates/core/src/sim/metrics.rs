use serde::{Deserialize, Serialize};

/// `I x V` matrix of DIF indicators (`true` = item has DIF in variable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorMatrix(Vec<Vec<bool>>);

impl IndicatorMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Self {
        Self(rows)
    }

    pub fn n_items(&self) -> usize {
        self.0.len()
    }

    pub fn n_variables(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn get(&self, item: usize, variable: usize) -> bool {
        self.0[item][variable]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.0
    }

    /// Item has DIF in at least one variable.
    pub fn item_flag(&self, item: usize) -> bool {
        self.0[item].iter().any(|&b| b)
    }

    /// Variable induces DIF in at least one item.
    pub fn variable_flag(&self, variable: usize) -> bool {
        self.0.iter().any(|row| row[variable])
    }
}

/// The six detection rates; `None` where the denominator is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub tpr_item: Option<f64>,
    pub fpr_item: Option<f64>,
    pub tpr_item_variable: Option<f64>,
    pub fpr_item_variable: Option<f64>,
    pub tpr_variable: Option<f64>,
    pub fpr_variable: Option<f64>,
}

pub const METRIC_NAMES: [&str; 6] = [
    "tpr_item",
    "fpr_item",
    "tpr_item_variable",
    "fpr_item_variable",
    "tpr_variable",
    "fpr_variable",
];

impl RateSet {
    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.tpr_item,
            self.fpr_item,
            self.tpr_item_variable,
            self.fpr_item_variable,
            self.tpr_variable,
            self.fpr_variable,
        ]
    }

    fn from_values(v: [Option<f64>; 6]) -> Self {
        Self {
            tpr_item: v[0],
            fpr_item: v[1],
            tpr_item_variable: v[2],
            fpr_item_variable: v[3],
            tpr_variable: v[4],
            fpr_variable: v[5],
        }
    }
}

fn ratio(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Rates of one replication.
pub fn rates(truth: &IndicatorMatrix, estimated: &IndicatorMatrix) -> RateSet {
    assert_eq!(truth.n_items(), estimated.n_items(), "item counts differ");
    assert_eq!(truth.n_variables(), estimated.n_variables(), "variable counts differ");
    let (mut tp_i, mut pos_i, mut fp_i, mut neg_i) = (0, 0, 0, 0);
    for i in 0..truth.n_items() {
        if truth.item_flag(i) {
            pos_i += 1;
            tp_i += usize::from(estimated.item_flag(i));
        } else {
            neg_i += 1;
            fp_i += usize::from(estimated.item_flag(i));
        }
    }
    let (mut tp_iv, mut pos_iv, mut fp_iv, mut neg_iv) = (0, 0, 0, 0);
    for i in 0..truth.n_items() {
        for v in 0..truth.n_variables() {
            if truth.get(i, v) {
                pos_iv += 1;
                tp_iv += usize::from(estimated.get(i, v));
            } else {
                neg_iv += 1;
                fp_iv += usize::from(estimated.get(i, v));
            }
        }
    }
    let (mut tp_v, mut pos_v, mut fp_v, mut neg_v) = (0, 0, 0, 0);
    for v in 0..truth.n_variables() {
        if truth.variable_flag(v) {
            pos_v += 1;
            tp_v += usize::from(estimated.variable_flag(v));
        } else {
            neg_v += 1;
            fp_v += usize::from(estimated.variable_flag(v));
        }
    }
    RateSet {
        tpr_item: ratio(tp_i, pos_i),
        fpr_item: ratio(fp_i, neg_i),
        tpr_item_variable: ratio(tp_iv, pos_iv),
        fpr_item_variable: ratio(fp_iv, neg_iv),
        tpr_variable: ratio(tp_v, pos_v),
        fpr_variable: ratio(fp_v, neg_v),
    }
}

/// Averages over replications with Monte-Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mean: RateSet,
    pub mc_stderr: RateSet,
    pub per_replication: Vec<RateSet>,
}

/// Rates for `(truth, estimate)` pairs, one per replication, averaged over
/// the replications where each rate is defined.
pub fn compute_metrics(pairs: &[(IndicatorMatrix, IndicatorMatrix)]) -> MetricsReport {
    let per_replication: Vec<RateSet> = pairs.iter().map(|(t, e)| rates(t, e)).collect();
    let mut mean = [None; 6];
    let mut stderr = [None; 6];
    for m in 0..6 {
        let vals: Vec<f64> = per_replication
            .iter()
            .filter_map(|r| r.values()[m])
            .collect();
        if vals.is_empty() {
            continue;
        }
        let n = vals.len() as f64;
        let mu = vals.iter().sum::<f64>() / n;
        mean[m] = Some(mu);
        stderr[m] = Some(if vals.len() > 1 {
            let var = vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        });
    }
    MetricsReport {
        mean: RateSet::from_values(mean),
        mc_stderr: RateSet::from_values(stderr),
        per_replication,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_var(flags: &[bool]) -> IndicatorMatrix {
        IndicatorMatrix::new(flags.iter().map(|&b| vec![b]).collect())
    }

    #[test]
    fn perfect_detection() {
        let t = IndicatorMatrix::new(vec![vec![false, true], vec![false, false], vec![true, false]]);
        let r = rates(&t, &t);
        assert_eq!(r.tpr_item, Some(1.0));
        assert_eq!(r.fpr_item, Some(0.0));
        assert_eq!(r.tpr_item_variable, Some(1.0));
        assert_eq!(r.fpr_item_variable, Some(0.0));
        assert_eq!(r.tpr_variable, Some(1.0));
        assert_eq!(r.fpr_variable, None);
    }

    #[test]
    fn one_hit_one_false_alarm_of_eight() {
        let mut truth = vec![false; 8];
        truth[4] = true;
        let mut est = truth.clone();
        est[1] = true;
        let r = rates(&single_var(&truth), &single_var(&est));
        assert_eq!(r.tpr_item, Some(1.0));
        assert!((r.fpr_item.unwrap() - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn no_dif_leaves_true_positive_rates_undefined() {
        let truth = single_var(&[false; 8]);
        let r = rates(&truth, &single_var(&[false; 8]));
        assert_eq!(r.tpr_item, None);
        assert_eq!(r.tpr_variable, None);
        assert_eq!(r.fpr_variable, Some(0.0));
    }

    #[test]
    fn averages_skip_undefined() {
        let truth = single_var(&[false, true]);
        let report = compute_metrics(&[
            (truth.clone(), single_var(&[false, true])),
            (truth.clone(), single_var(&[true, false])),
        ]);
        assert_eq!(report.mean.tpr_item, Some(0.5));
        assert_eq!(report.mean.fpr_item, Some(0.5));
        assert_eq!(report.mc_stderr.tpr_item, Some(0.5));
    }
}
