//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the fitting code of the crate.
#![allow(dead_code)]

use pcmift::{CovariateKind, Covariate, CovariateTable, ResponseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Parameters in the oracle's own layout: abilities (last fixed at 0) and
/// `thresholds[item][leaf][r]`.
#[derive(Debug, Clone)]
pub struct NaiveParams {
    pub theta: Vec<f64>,
    pub thresholds: Vec<Vec<Vec<f64>>>,
}

/// Term-by-term log-likelihood: for every response the numerators
/// `exp(sum_{l<=r} (theta - delta_l))` are formed directly and normalised.
pub fn naive_log_likelihood(
    params: &NaiveParams,
    data: &ResponseMatrix,
    membership: &[Vec<usize>],
) -> f64 {
    let mut ll = 0.0;
    for p in 0..data.n_persons() {
        for i in 0..data.n_items() {
            let delta = &params.thresholds[i][membership[i][p]];
            let mut numerators = vec![1.0];
            let mut sum = 0.0;
            for d in delta {
                sum += params.theta[p] - d;
                numerators.push(sum.exp());
            }
            let total: f64 = numerators.iter().sum();
            ll += (numerators[data.get(p, i) as usize] / total).ln();
        }
    }
    ll
}

fn pack(params: &NaiveParams) -> Vec<f64> {
    let mut v = params.theta[..params.theta.len() - 1].to_vec();
    for item in &params.thresholds {
        for leaf in item {
            v.extend_from_slice(leaf);
        }
    }
    v
}

fn unpack(template: &NaiveParams, v: &[f64]) -> NaiveParams {
    let mut out = template.clone();
    let np = out.theta.len() - 1;
    out.theta[..np].copy_from_slice(&v[..np]);
    let mut pos = np;
    for item in &mut out.thresholds {
        for leaf in item {
            for d in leaf.iter_mut() {
                *d = v[pos];
                pos += 1;
            }
        }
    }
    out
}

/// Maximises [`naive_log_likelihood`] by Newton's method on
/// finite-difference derivatives. Returns the maximal log-likelihood.
pub fn naive_fit(data: &ResponseMatrix, membership: &[Vec<usize>]) -> f64 {
    let k = data.n_thresholds();
    let template = NaiveParams {
        theta: vec![0.0; data.n_persons()],
        thresholds: membership
            .iter()
            .map(|m| vec![vec![0.0; k]; m.iter().max().unwrap() + 1])
            .collect(),
    };
    let f = |v: &[f64]| naive_log_likelihood(&unpack(&template, v), data, membership);
    let mut x = pack(&template);
    let n = x.len();
    let h = 1e-4;
    let grad = |x: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        let mut y = x.to_vec();
        for a in 0..n {
            y[a] = x[a] + h;
            let up = f(&y);
            y[a] = x[a] - h;
            let down = f(&y);
            y[a] = x[a];
            g[a] = (up - down) / (2.0 * h);
        }
        g
    };
    let mut fx = f(&x);
    for _ in 0..100 {
        let g = grad(&x);
        if g.iter().all(|v| v.abs() < 1e-7) {
            break;
        }
        // Hessian by central differences of the finite-difference gradient.
        let mut hess = nalgebra::DMatrix::zeros(n, n);
        let mut y = x.clone();
        for a in 0..n {
            y[a] = x[a] + h;
            let gp = grad(&y);
            y[a] = x[a] - h;
            let gm = grad(&y);
            y[a] = x[a];
            for b in 0..n {
                hess[(a, b)] = (gp[b] - gm[b]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let neg = -hess;
        let step = match neg.clone().cholesky() {
            Some(c) => c.solve(&nalgebra::DVector::from_vec(g.clone())),
            None => nalgebra::DVector::from_vec(g.clone()),
        };
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let ft = f(&trial);
            if ft >= fx - 1e-12 || t < 1e-8 {
                x = trial;
                fx = ft;
                break;
            }
            t *= 0.5;
        }
    }
    fx
}

/// Split points by direct enumeration: sorted distinct member values except
/// the largest, keeping both sides at least `min_size`.
pub fn naive_split_points(x: &[f64], members: &[usize], min_size: usize) -> Vec<f64> {
    let mut values: Vec<f64> = members.iter().map(|&p| x[p]).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    values.pop();
    values
        .into_iter()
        .filter(|&c| {
            let left = members.iter().filter(|&&p| x[p] <= c).count();
            left >= min_size && members.len() - left >= min_size
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveSplit {
    pub item: usize,
    pub variable: usize,
    pub split_point: f64,
    pub statistic: f64,
}

/// First split of the tree procedure by exhaustive search from the root:
/// every item, covariate and split point, each refitted from scratch.
/// Ties keep the first candidate in (item, variable, split point) order.
pub fn naive_first_split(
    data: &ResponseMatrix,
    covariates: &CovariateTable,
    min_size: usize,
) -> Option<NaiveSplit> {
    let n_items = data.n_items();
    let root: Vec<Vec<usize>> = vec![vec![0; data.n_persons()]; n_items];
    let root_ll = naive_fit(data, &root);
    let everyone: Vec<usize> = (0..data.n_persons()).collect();
    let mut best: Option<NaiveSplit> = None;
    for item in 0..n_items {
        for v in 0..covariates.n_variables() {
            let x = &covariates.column(v).values;
            for c in naive_split_points(x, &everyone, min_size) {
                let mut membership = root.clone();
                membership[item] = x.iter().map(|&xv| usize::from(xv > c)).collect();
                let t = (2.0 * (naive_fit(data, &membership) - root_ll)).max(0.0);
                if best.as_ref().is_none_or(|b| t > b.statistic) {
                    best = Some(NaiveSplit {
                        item,
                        variable: v,
                        split_point: c,
                        statistic: t,
                    });
                }
            }
        }
    }
    best
}

/// Responses from the model with one threshold vector per item, plus an
/// optional shift of one item's thresholds for persons with binary
/// covariate 1. Persons with constant responses are dropped.
pub fn random_instance(
    seed: u64,
    n_persons: usize,
    n_items: usize,
    n_thresholds: usize,
    dif: Option<(usize, f64)>,
) -> (ResponseMatrix, CovariateTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let theta: Vec<f64> = (0..n_persons).map(|_| rng.sample(StandardNormal)).collect();
        let binary: Vec<f64> = (0..n_persons).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect();
        let ordered: Vec<f64> = (0..n_persons).map(|_| rng.gen_range(1..=6) as f64).collect();
        let deltas: Vec<Vec<f64>> = (0..n_items)
            .map(|_| {
                let mut d: Vec<f64> = (0..n_thresholds)
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d
            })
            .collect();
        let mut values = Vec::with_capacity(n_persons * n_items);
        for p in 0..n_persons {
            for (i, d) in deltas.iter().enumerate() {
                let shift = match dif {
                    Some((item, s)) if item == i && binary[p] > 0.5 => s,
                    _ => 0.0,
                };
                let mut num = vec![1.0];
                let mut acc = 0.0;
                for dl in d {
                    acc += theta[p] - (dl + shift);
                    num.push(acc.exp());
                }
                let total: f64 = num.iter().sum();
                let u: f64 = rng.gen::<f64>() * total;
                let mut cum = 0.0;
                let mut y = n_thresholds;
                for (r, w) in num.iter().enumerate() {
                    cum += w;
                    if u < cum {
                        y = r;
                        break;
                    }
                }
                values.push(y as u8);
            }
        }
        let data = ResponseMatrix::new(n_persons, n_items, n_thresholds, values).unwrap();
        let constant = data.constant_rows();
        let kept: Vec<usize> = (0..n_persons).filter(|p| !constant.contains(p)).collect();
        if kept.len() < 2 {
            continue;
        }
        let covariates = CovariateTable::new(vec![
            Covariate::new("b", CovariateKind::Binary, binary),
            Covariate::new("o", CovariateKind::Ordered, ordered),
        ])
        .unwrap();
        return (data.select_rows(&kept), covariates.select_rows(&kept));
    }
}

/// Every leaf of every candidate first split observes every category.
pub fn all_candidate_leaves_complete(
    data: &ResponseMatrix,
    covariates: &CovariateTable,
    min_size: usize,
) -> bool {
    let everyone: Vec<usize> = (0..data.n_persons()).collect();
    for v in 0..covariates.n_variables() {
        let x = &covariates.column(v).values;
        for c in naive_split_points(x, &everyone, min_size) {
            for side in [false, true] {
                let rows: Vec<usize> = everyone.iter().copied().filter(|&p| (x[p] > c) == side).collect();
                for i in 0..data.n_items() {
                    let mut seen = vec![false; data.n_categories()];
                    for &p in &rows {
                        seen[data.get(p, i) as usize] = true;
                    }
                    if seen.contains(&false) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `values` and the uniform distribution on [0, 1].
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).abs().max((x - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
