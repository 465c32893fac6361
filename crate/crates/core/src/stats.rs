//! Weighted estimators and resampling for trajectory populations.

use crate::error::SimError;

/// Self-normalised weighted mean with a jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Converts log weights to weights with maximum 1.
pub fn relative_weights(log_weights: &[f64]) -> Result<Vec<f64>, SimError> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(SimError::Normalisation(
            "all trajectory weights vanish".into(),
        ));
    }
    Ok(log_weights.iter().map(|&l| (l - max).exp()).collect())
}

/// `sum w f / sum w` with leave-one-out jackknife error.
pub fn weighted_estimate(weights: &[f64], values: &[f64]) -> Result<Estimate, SimError> {
    let n = weights.len();
    if n != values.len() {
        return Err(SimError::Argument(
            "weights and values differ in length".into(),
        ));
    }
    if n < 2 {
        return Err(SimError::Argument(
            "an estimate needs at least two trajectories".into(),
        ));
    }
    let sw: f64 = weights.iter().sum();
    if !(sw > 0.0) {
        return Err(SimError::Normalisation(
            "all trajectory weights vanish".into(),
        ));
    }
    let swf: f64 = weights.iter().zip(values).map(|(w, f)| w * f).sum();
    let value = swf / sw;
    let loo: Vec<f64> = weights
        .iter()
        .zip(values)
        .map(|(w, f)| {
            let rest = sw - w;
            if rest > 0.0 {
                (swf - w * f) / rest
            } else {
                value
            }
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
    Ok(Estimate {
        value,
        stderr: var.sqrt(),
    })
}

/// Systematic resampling: ancestor indices for `weights.len()` offspring, given `u` in `[0, 1)`.
pub fn systematic_resample(weights: &[f64], u: f64) -> Result<Vec<usize>, SimError> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    if n == 0 || !(total > 0.0) {
        return Err(SimError::Normalisation(
            "cannot resample a population with zero total weight".into(),
        ));
    }
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut i = 0;
    for k in 0..n {
        let target = (u + k as f64) * step;
        while cum <= target && i + 1 < n {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    Ok(out)
}

/// Effective sample size `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_weights_give_plain_mean() {
        let e = weighted_estimate(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((e.value - 2.5).abs() < 1e-15);
        // jackknife of the plain mean reproduces s / sqrt(n)
        let s = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - s / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_weight_selects_its_value() {
        let e = weighted_estimate(&[1.0, 0.0, 0.0], &[7.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.value, 7.0);
        assert!(weighted_estimate(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn resampling_edge_cases() {
        assert_eq!(systematic_resample(&[1.0, 0.0], 0.3).unwrap(), vec![0, 0]);
        assert_eq!(
            systematic_resample(&[1.0, 1.0, 1.0], 0.5).unwrap(),
            vec![0, 1, 2]
        );
        assert!(systematic_resample(&[0.0, 0.0], 0.5).is_err());
    }

    proptest! {
        #[test]
        fn offspring_counts_track_weights(w in proptest::collection::vec(0.0f64..1.0, 1..40), u in 0.0f64..1.0) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let anc = systematic_resample(&w, u).unwrap();
            prop_assert_eq!(anc.len(), w.len());
            prop_assert!(anc.windows(2).all(|p| p[0] <= p[1]));
            let total: f64 = w.iter().sum();
            for (i, wi) in w.iter().enumerate() {
                let count = anc.iter().filter(|&&a| a == i).count() as f64;
                let expect = wi / total * w.len() as f64;
                prop_assert!((count - expect).abs() < 1.0 + 1e-9);
            }
        }
    }
}
