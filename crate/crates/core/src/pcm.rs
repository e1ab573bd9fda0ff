//! The partial credit model for a single person/item pair.
//!
//! For ability `theta` and thresholds `delta_1..delta_k` the probability of
//! category `r` is proportional to `exp(sum_{l<=r} (theta - delta_l))`, with
//! the empty sum for `r = 0`. Adjacent categories therefore form a binary
//! logit model: `log(pi_r / pi_{r-1}) = theta - delta_r`.

use crate::error::{Error, Result};

/// Probabilities of categories `0..=k` for ability `theta` and the `k`
/// thresholds of an item.
pub fn category_probabilities(theta: f64, thresholds: &[f64]) -> Result<Vec<f64>> {
    if !theta.is_finite() || thresholds.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument(
            "theta and thresholds must be finite".into(),
        ));
    }
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("at least one threshold is required".into()));
    }
    let mut out = vec![0.0; thresholds.len() + 1];
    fill_probabilities(theta, thresholds, &mut out);
    Ok(out)
}

/// Adjacent-category log-odds `log(pi_r / pi_{r-1}) = theta - delta_r`.
pub fn adjacent_logit(theta: f64, threshold: f64) -> Result<f64> {
    if !theta.is_finite() || !threshold.is_finite() {
        return Err(Error::InvalidArgument(
            "theta and threshold must be finite".into(),
        ));
    }
    Ok(theta - threshold)
}

/// Writes category probabilities into `out` (length `k + 1`) and returns the
/// log normalising constant relative to the largest linear predictor, so
/// that `log pi_r = eta_r - max_eta - log_norm`.
#[inline]
pub(crate) fn fill_probabilities(theta: f64, thresholds: &[f64], out: &mut [f64]) -> f64 {
    debug_assert_eq!(out.len(), thresholds.len() + 1);
    out[0] = 0.0;
    let mut acc = 0.0;
    let mut max = 0.0f64;
    for (r, &d) in thresholds.iter().enumerate() {
        acc += theta - d;
        out[r + 1] = acc;
        max = max.max(acc);
    }
    let mut sum = 0.0;
    for v in out.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    let inv = 1.0 / sum;
    for v in out.iter_mut() {
        *v *= inv;
    }
    sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_predictors_are_uniform() {
        let p = category_probabilities(0.0, &[0.0, 0.0]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_evaluated_three_category_case() {
        // exp(0), exp(1.5), exp(2.5) normalised by hand
        let p = category_probabilities(1.0, &[-0.5, 0.5]).unwrap();
        let expected = [0.07769557914857059, 0.3482074278837348, 0.5740969929676946];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let logit = adjacent_logit(1.0, -0.5).unwrap();
        assert_eq!(logit, 1.5);
        assert!(((p[1] / p[0]).ln() - logit).abs() < 1e-12);
    }

    #[test]
    fn adjacent_categories_equal_at_threshold() {
        let p = category_probabilities(0.3, &[0.3, -1.2, 2.0]).unwrap();
        assert!((p[0] - p[1]).abs() < 1e-15);
        assert_eq!(adjacent_logit(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(adjacent_logit(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_input_rejected() {
        assert!(category_probabilities(f64::NAN, &[0.0]).is_err());
        assert!(category_probabilities(0.0, &[f64::INFINITY]).is_err());
        assert!(adjacent_logit(0.0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn extreme_predictors_do_not_overflow() {
        let p = category_probabilities(400.0, &[-300.0, 0.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn normalised_and_positive(theta in -8.0f64..8.0, d in prop::collection::vec(-6.0f64..6.0, 1..6)) {
            let p = category_probabilities(theta, &d).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v > 0.0));
        }

        #[test]
        fn adjacent_logit_identity(theta in -8.0f64..8.0, d in prop::collection::vec(-6.0f64..6.0, 1..6)) {
            let p = category_probabilities(theta, &d).unwrap();
            for r in 1..p.len() {
                let lhs = (p[r] / p[r - 1]).ln();
                prop_assert!((lhs - adjacent_logit(theta, d[r - 1]).unwrap()).abs() < 1e-10);
            }
        }
    }
}
