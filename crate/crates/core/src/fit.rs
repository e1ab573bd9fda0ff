//! Joint maximum-likelihood estimation of the partial credit model with
//! leaf-specific thresholds.
//!
//! Free parameters are the person abilities `theta_1..theta_{P-1}` (the last
//! person is the reference with `theta_P = 0`) followed by the threshold
//! vectors of every leaf of every item, item-major. The log-likelihood is
//! that of a multinomial GLM with canonical link, so observed and expected
//! information coincide and Newton's method is Fisher scoring. Persons only
//! couple with item parameters, which makes the person block of the
//! information diagonal; each step eliminates it through a Schur complement
//! and solves a dense system in the (few) item parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::ResponseMatrix;
use crate::error::{Error, Result};
use crate::partition::Layout;
use crate::pcm::fill_probabilities;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence when the projected gradient's sup-norm drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Magnitude cap for every parameter; thresholds of leaves that never
    /// observe some category run into it.
    pub bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            bound: 25.0,
        }
    }
}

/// Person abilities and leaf threshold vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcmParams {
    theta: Vec<f64>,
    thresholds: Vec<f64>,
    /// Start of each item's block in `thresholds`; length `I + 1`.
    item_offsets: Vec<usize>,
    n_thresholds: usize,
}

impl PcmParams {
    /// All parameters zero, shaped for `layout`.
    pub fn zeros(layout: &Layout, n_thresholds: usize) -> Self {
        let mut item_offsets = Vec::with_capacity(layout.n_items() + 1);
        let mut acc = 0;
        for i in 0..layout.n_items() {
            item_offsets.push(acc);
            acc += layout.n_leaves(i) * n_thresholds;
        }
        item_offsets.push(acc);
        Self {
            theta: vec![0.0; layout.n_persons()],
            thresholds: vec![0.0; acc],
            item_offsets,
            n_thresholds,
        }
    }

    /// Builds parameters from abilities and per-item, per-leaf thresholds.
    /// The last ability must be exactly zero.
    pub fn from_parts(theta: Vec<f64>, thresholds: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        match theta.last() {
            Some(&0.0) => {}
            Some(_) => {
                return Err(Error::InvalidArgument(
                    "the reference (last) person must have theta = 0".into(),
                ))
            }
            None => return Err(Error::InvalidArgument("no persons".into())),
        }
        let k = thresholds
            .first()
            .and_then(|leaves| leaves.first())
            .map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::InvalidArgument("empty threshold vectors".into()));
        }
        let mut flat = Vec::new();
        let mut item_offsets = vec![0];
        for (i, leaves) in thresholds.iter().enumerate() {
            if leaves.is_empty() {
                return Err(Error::InvalidArgument(format!("item {i} has no leaves")));
            }
            for gamma in leaves {
                if gamma.len() != k {
                    return Err(Error::DimensionMismatch(format!(
                        "item {i} has a threshold vector of length {}, expected {k}",
                        gamma.len()
                    )));
                }
                flat.extend_from_slice(gamma);
            }
            item_offsets.push(flat.len());
        }
        Ok(Self {
            theta,
            thresholds: flat,
            item_offsets,
            n_thresholds: k,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn n_thresholds(&self) -> usize {
        self.n_thresholds
    }

    pub fn n_items(&self) -> usize {
        self.item_offsets.len() - 1
    }

    pub fn n_leaves(&self, item: usize) -> usize {
        (self.item_offsets[item + 1] - self.item_offsets[item]) / self.n_thresholds
    }

    #[inline]
    pub fn leaf_thresholds(&self, item: usize, leaf: usize) -> &[f64] {
        let start = self.item_offsets[item] + leaf * self.n_thresholds;
        &self.thresholds[start..start + self.n_thresholds]
    }

    /// Thresholds on the scale where the mean ability is zero. Category
    /// probabilities are unchanged by this common shift.
    pub fn centered_leaf_thresholds(&self, item: usize, leaf: usize) -> Vec<f64> {
        let shift = self.mean_theta();
        self.leaf_thresholds(item, leaf)
            .iter()
            .map(|d| d - shift)
            .collect()
    }

    pub fn mean_theta(&self) -> f64 {
        self.theta.iter().sum::<f64>() / self.theta.len() as f64
    }

    /// Number of free parameters, `(P - 1) + sum_i L_i * k`.
    pub fn n_free(&self) -> usize {
        self.theta.len() - 1 + self.thresholds.len()
    }

    /// Free parameters as one vector (reference ability excluded).
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.theta[..self.theta.len() - 1].to_vec();
        v.extend_from_slice(&self.thresholds);
        v
    }

    /// Inverse of [`PcmParams::to_vector`] for the same shape.
    pub fn with_vector(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.n_free() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} free parameters, got {}",
                self.n_free(),
                v.len()
            )));
        }
        let np = self.theta.len() - 1;
        let mut out = self.clone();
        out.theta[..np].copy_from_slice(&v[..np]);
        out.thresholds.copy_from_slice(&v[np..]);
        Ok(out)
    }

    /// Parameters for the layout obtained by splitting `leaf` of `item`: the
    /// appended leaf starts from a copy of the parent's thresholds.
    pub fn split_leaf(&self, item: usize, leaf: usize) -> Self {
        let k = self.n_thresholds;
        let insert_at = self.item_offsets[item + 1];
        let parent = self.leaf_thresholds(item, leaf).to_vec();
        let mut thresholds = Vec::with_capacity(self.thresholds.len() + k);
        thresholds.extend_from_slice(&self.thresholds[..insert_at]);
        thresholds.extend_from_slice(&parent);
        thresholds.extend_from_slice(&self.thresholds[insert_at..]);
        let item_offsets = self
            .item_offsets
            .iter()
            .enumerate()
            .map(|(j, &o)| if j > item { o + k } else { o })
            .collect();
        Self {
            theta: self.theta.clone(),
            thresholds,
            item_offsets,
            n_thresholds: k,
        }
    }

    fn matches(&self, data: &ResponseMatrix, layout: &Layout) -> Result<()> {
        if self.theta.len() != data.n_persons() || layout.n_persons() != data.n_persons() {
            return Err(Error::DimensionMismatch(format!(
                "{} abilities and {} assigned persons for {} response rows",
                self.theta.len(),
                layout.n_persons(),
                data.n_persons()
            )));
        }
        if self.n_items() != data.n_items() || layout.n_items() != data.n_items() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameter items, {} layout items, {} response columns",
                self.n_items(),
                layout.n_items(),
                data.n_items()
            )));
        }
        if self.n_thresholds != data.n_thresholds() {
            return Err(Error::DimensionMismatch(format!(
                "{} thresholds per leaf but responses have {} thresholds",
                self.n_thresholds,
                data.n_thresholds()
            )));
        }
        for i in 0..self.n_items() {
            if self.n_leaves(i) != layout.n_leaves(i) {
                return Err(Error::Partition(format!(
                    "item {i}: parameters for {} leaves, layout has {}",
                    self.n_leaves(i),
                    layout.n_leaves(i)
                )));
            }
        }
        Ok(())
    }

    #[inline]
    fn coordinate(&self, item: usize, leaf: usize) -> usize {
        self.item_offsets[item] + leaf * self.n_thresholds
    }
}

/// Result of a joint maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcmFit {
    pub params: PcmParams,
    pub log_likelihood: f64,
    pub deviance: f64,
    pub n_parameters: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm of the projected gradient at the returned point.
    pub max_gradient: f64,
    /// `(item, leaf)` pairs where a category is never observed (so some
    /// threshold diverges and is held inside the cap) or a threshold sits at
    /// the cap.
    pub capped_leaves: Vec<(usize, usize)>,
    pub diagnostic: Option<String>,
}

/// Log-likelihood `sum_p sum_i log pi_{p,i,Y_pi}` using each person's leaf
/// thresholds.
pub fn log_likelihood(params: &PcmParams, data: &ResponseMatrix, layout: &Layout) -> Result<f64> {
    params.matches(data, layout)?;
    let mut work = Work::new(params, data);
    evaluate(params, data, layout, &mut work, false, f64::INFINITY);
    Ok(work.ll)
}

/// Analytic gradient of [`log_likelihood`] with respect to the free
/// parameters, in the order of [`PcmParams::to_vector`].
pub fn gradient(params: &PcmParams, data: &ResponseMatrix, layout: &Layout) -> Result<Vec<f64>> {
    params.matches(data, layout)?;
    let mut work = Work::new(params, data);
    evaluate(params, data, layout, &mut work, false, f64::INFINITY);
    let np = data.n_persons() - 1;
    let mut g = work.grad_theta[..np].to_vec();
    g.extend_from_slice(&work.grad_items);
    Ok(g)
}

/// Fits the model for `layout` starting from all parameters at zero.
pub fn fit_pcm(data: &ResponseMatrix, layout: &Layout, options: &FitOptions) -> Result<PcmFit> {
    let start = PcmParams::zeros(layout, data.n_thresholds());
    refit_pcm(data, layout, options, &start)
}

/// Fits the model for `layout` starting from `start` (a warm start).
pub fn refit_pcm(
    data: &ResponseMatrix,
    layout: &Layout,
    options: &FitOptions,
    start: &PcmParams,
) -> Result<PcmFit> {
    data.validate_for_fit()?;
    start.matches(data, layout)?;
    if !(options.tolerance > 0.0) || !(options.bound > 0.0) {
        return Err(Error::InvalidArgument(
            "tolerance and bound must be positive".into(),
        ));
    }
    for i in 0..layout.n_items() {
        if layout.leaf_sizes(i).contains(&0) {
            return Err(Error::Partition(format!("item {i} has an empty leaf")));
        }
    }
    Ok(newton(data, layout, options, start.clone()))
}

/// Scratch space for one evaluation of value, gradient and the reduced
/// Newton system.
struct Work {
    ll: f64,
    grad_theta: Vec<f64>,
    grad_items: Vec<f64>,
    /// Person information `Var(Y)` summed over items.
    person_info: Vec<f64>,
    /// Person/item cross information, `I * k` entries per person.
    cross: Vec<f64>,
    /// Item coordinates matching `cross`, `I * k` entries per person.
    cross_index: Vec<usize>,
    /// Item-block information, later reduced to the Schur complement.
    schur: Vec<f64>,
    exp_neg_thresholds: Vec<f64>,
    /// `sum_{l <= r} delta_l` for every leaf, `k + 1` entries per leaf.
    prefix: Vec<f64>,
}

impl Work {
    fn new(params: &PcmParams, data: &ResponseMatrix) -> Self {
        let m = params.thresholds.len();
        let k = params.n_thresholds;
        let ik = data.n_items() * k;
        Self {
            ll: 0.0,
            grad_theta: vec![0.0; data.n_persons()],
            grad_items: vec![0.0; m],
            person_info: vec![0.0; data.n_persons()],
            cross: vec![0.0; data.n_persons() * ik],
            cross_index: vec![0; data.n_persons() * ik],
            schur: vec![0.0; m * m],
            exp_neg_thresholds: vec![0.0; m],
            prefix: vec![0.0; m / k * (k + 1)],
        }
    }
}

/// Largest `k * (|theta| + |delta|)` for which the unnormalised category
/// weights are formed by plain products without overflow.
const PRODUCT_RANGE: f64 = 600.0;

/// Fills value and gradient, and with `with_information` also the person
/// information, the cross terms and the item-block information matrix.
/// `bound` is the largest parameter magnitude that can occur; it selects
/// between product-form weights and the log-domain evaluation.
fn evaluate(
    params: &PcmParams,
    data: &ResponseMatrix,
    layout: &Layout,
    work: &mut Work,
    with_information: bool,
    bound: f64,
) {
    let k = params.n_thresholds;
    let m = params.thresholds.len();
    let n_items = data.n_items();
    let fast = 2.0 * bound * k as f64 <= PRODUCT_RANGE;

    work.ll = 0.0;
    work.grad_items.iter_mut().for_each(|g| *g = 0.0);
    if with_information {
        work.schur.iter_mut().for_each(|v| *v = 0.0);
    }
    for (leaf, block) in params.thresholds.chunks_exact(k).enumerate() {
        let pre = &mut work.prefix[leaf * (k + 1)..(leaf + 1) * (k + 1)];
        pre[0] = 0.0;
        for (r, &d) in block.iter().enumerate() {
            pre[r + 1] = pre[r] + d;
        }
    }
    if fast {
        for (e, &d) in work.exp_neg_thresholds.iter_mut().zip(&params.thresholds) {
            *e = (-d).exp();
        }
    }

    let mut probs = vec![0.0; k + 1];
    // tail[l] = P(Y >= l), tail_y[l] = E[Y 1(Y >= l)], for l = 1..=k
    let mut tail = vec![0.0; k + 1];
    let mut tail_y = vec![0.0; k + 1];

    for p in 0..data.n_persons() {
        let theta = params.theta[p];
        let exp_theta = if fast { theta.exp() } else { 0.0 };
        let row = data.row(p);
        let mut g_theta = 0.0;
        let mut info = 0.0;
        let mut norm_product = 1.0;
        for (i, &y) in row.iter().enumerate() {
            let y = y as usize;
            let base = params.coordinate(i, layout.leaf_of(i, p));
            let leaf_pre = &work.prefix[base / k * (k + 1)..];
            let linear = y as f64 * theta - leaf_pre[y];
            if fast {
                let w = &work.exp_neg_thresholds[base..base + k];
                probs[0] = 1.0;
                let mut norm = 1.0;
                for r in 1..=k {
                    probs[r] = probs[r - 1] * exp_theta * w[r - 1];
                    norm += probs[r];
                }
                let inv = 1.0 / norm;
                probs.iter_mut().for_each(|v| *v *= inv);
                work.ll += linear;
                norm_product *= norm;
                if norm_product > 1e150 {
                    work.ll -= norm_product.ln();
                    norm_product = 1.0;
                }
            } else {
                let d = &params.thresholds[base..base + k];
                let log_norm = fill_probabilities(theta, d, &mut probs);
                let max = (1..=k)
                    .map(|r| r as f64 * theta - leaf_pre[r])
                    .fold(0.0f64, f64::max);
                work.ll += linear - max - log_norm;
            }

            let mut s = 0.0;
            let mut sy = 0.0;
            for r in (1..=k).rev() {
                s += probs[r];
                sy += r as f64 * probs[r];
                tail[r] = s;
                tail_y[r] = sy;
            }
            let mean = sy;
            g_theta += y as f64 - mean;
            for l in 1..=k {
                let observed = if y >= l { 1.0 } else { 0.0 };
                work.grad_items[base + l - 1] += tail[l] - observed;
            }
            if with_information {
                let second: f64 = (1..=k).map(|r| (r * r) as f64 * probs[r]).sum();
                info += second - mean * mean;
                let slot = (p * n_items + i) * k;
                for l in 1..=k {
                    work.cross[slot + l - 1] = -(tail_y[l] - mean * tail[l]);
                    work.cross_index[slot + l - 1] = base + l - 1;
                    let row_start = (base + l - 1) * m + base;
                    for j in l..=k {
                        work.schur[row_start + j - 1] += tail[j] - tail[l] * tail[j];
                    }
                }
            }
        }
        if norm_product != 1.0 {
            work.ll -= norm_product.ln();
        }
        work.grad_theta[p] = g_theta;
        if with_information {
            work.person_info[p] = info;
        }
    }
}

fn newton(data: &ResponseMatrix, layout: &Layout, options: &FitOptions, start: PcmParams) -> PcmFit {
    let np = data.n_persons() - 1;
    let ik = data.n_items() * start.n_thresholds;
    let m = start.thresholds.len();
    let bound = options.bound;

    let mut params = start;
    clamp_params(&mut params, bound);
    let mut trial = params.clone();
    let mut work = Work::new(&params, data);
    let mut trial_work = Work::new(&params, data);
    evaluate(&params, data, layout, &mut work, true, bound);

    let mut iterations = 0;
    let mut converged = false;
    let mut diagnostic = None;
    let mut max_gradient;
    let mut fixed_person = vec![false; np];
    let mut fixed_item = vec![false; m];
    let mut step_items = vec![0.0; m];
    let mut step_persons = vec![0.0; np];

    loop {
        let ll = work.ll;
        max_gradient = 0.0f64;
        for p in 0..np {
            let g = work.grad_theta[p];
            fixed_person[p] = at_bound(params.theta[p], g, bound);
            if !fixed_person[p] {
                max_gradient = max_gradient.max(g.abs());
            }
        }
        for c in 0..m {
            let g = work.grad_items[c];
            fixed_item[c] = at_bound(params.thresholds[c], g, bound);
            if !fixed_item[c] {
                max_gradient = max_gradient.max(g.abs());
            }
        }
        if max_gradient < options.tolerance {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            diagnostic = Some(format!(
                "no convergence after {iterations} iterations (gradient sup-norm {max_gradient:.3e})"
            ));
            break;
        }
        iterations += 1;

        // Eliminate the persons on the upper triangle (coordinates within a
        // person row are increasing), then mirror.
        let mut rhs = work.grad_items.clone();
        for p in 0..np {
            let dp = work.person_info[p];
            if fixed_person[p] || !(dp > 0.0) {
                continue;
            }
            let gp = work.grad_theta[p] / dp;
            let slot = p * ik;
            let cvals = &work.cross[slot..slot + ik];
            let cidx = &work.cross_index[slot..slot + ik];
            for a in 0..ik {
                let ca = cvals[a] / dp;
                let ia = cidx[a];
                rhs[ia] -= cvals[a] * gp;
                let row = ia * m;
                for b in a..ik {
                    work.schur[row + cidx[b]] -= ca * cvals[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                work.schur[a * m + b] = work.schur[b * m + a];
            }
        }

        let free: Vec<usize> = (0..m).filter(|&c| !fixed_item[c]).collect();
        let reduced = solve_reduced(&work.schur, m, &free, &rhs);
        step_items.iter_mut().for_each(|s| *s = 0.0);
        for (j, &c) in free.iter().enumerate() {
            step_items[c] = reduced[j];
        }
        for p in 0..np {
            let dp = work.person_info[p];
            if fixed_person[p] || !(dp > 0.0) {
                step_persons[p] = 0.0;
                continue;
            }
            let slot = p * ik;
            let mut dot = 0.0;
            for a in 0..ik {
                dot += work.cross[slot + a] * step_items[work.cross_index[slot + a]];
            }
            step_persons[p] = (work.grad_theta[p] - dot) / dp;
        }

        // Step halving on the log-likelihood.
        let slack = 1e-12 * (1.0 + ll.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            for p in 0..np {
                trial.theta[p] = (params.theta[p] + t * step_persons[p]).clamp(-bound, bound);
            }
            for c in 0..m {
                trial.thresholds[c] =
                    (params.thresholds[c] + t * step_items[c]).clamp(-bound, bound);
            }
            evaluate(&trial, data, layout, &mut trial_work, true, bound);
            if trial_work.ll.is_finite() && trial_work.ll >= ll - slack {
                std::mem::swap(&mut params, &mut trial);
                std::mem::swap(&mut work, &mut trial_work);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            diagnostic = Some(format!(
                "line search stalled at iteration {iterations} (gradient sup-norm {max_gradient:.3e})"
            ));
            break;
        }
    }

    let log_likelihood = work.ll;
    let k = params.n_thresholds;
    let mut seen = vec![false; m / k * (k + 1)];
    for p in 0..data.n_persons() {
        for (i, &y) in data.row(p).iter().enumerate() {
            seen[params.coordinate(i, layout.leaf_of(i, p)) / k * (k + 1) + y as usize] = true;
        }
    }
    let mut capped_leaves = Vec::new();
    for i in 0..params.n_items() {
        for leaf in 0..params.n_leaves(i) {
            let c = params.coordinate(i, leaf);
            let separated = seen[c / k * (k + 1)..(c / k + 1) * (k + 1)].contains(&false);
            let at_cap = params.leaf_thresholds(i, leaf).iter().any(|d| d.abs() >= bound);
            if separated || at_cap {
                capped_leaves.push((i, leaf));
            }
        }
    }
    let n_parameters = params.n_free();
    PcmFit {
        params,
        log_likelihood,
        deviance: -2.0 * log_likelihood,
        n_parameters,
        converged,
        iterations,
        max_gradient,
        capped_leaves,
        diagnostic,
    }
}

#[inline]
fn at_bound(value: f64, grad: f64, bound: f64) -> bool {
    (value >= bound && grad > 0.0) || (value <= -bound && grad < 0.0)
}

fn clamp_params(params: &mut PcmParams, bound: f64) {
    let np = params.theta.len() - 1;
    for t in &mut params.theta[..np] {
        *t = t.clamp(-bound, bound);
    }
    for d in &mut params.thresholds {
        *d = d.clamp(-bound, bound);
    }
}

/// Solves the Schur-complement system restricted to `free` coordinates.
fn solve_reduced(schur: &[f64], m: usize, free: &[usize], rhs: &[f64]) -> Vec<f64> {
    let n = free.len();
    if n == 0 {
        return Vec::new();
    }
    let a = DMatrix::from_fn(n, n, |r, c| schur[free[r] * m + free[c]]);
    let b = DVector::from_iterator(n, free.iter().map(|&c| rhs[c]));
    if let Some(chol) = a.clone().cholesky() {
        return chol.solve(&b).iter().copied().collect();
    }
    // Nearly singular (e.g. thresholds drifting towards the cap): ridge.
    let scale = (0..n).map(|j| a[(j, j)].abs()).fold(0.0, f64::max).max(1e-12);
    let mut ridge = 1e-10 * scale;
    for _ in 0..12 {
        let mut shifted = a.clone();
        for j in 0..n {
            shifted[(j, j)] += ridge;
        }
        if let Some(chol) = shifted.cholesky() {
            return chol.solve(&b).iter().copied().collect();
        }
        ridge *= 100.0;
    }
    b.iter().map(|v| v / scale).collect()
}
