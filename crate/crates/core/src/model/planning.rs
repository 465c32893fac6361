//! Step-count, truncation and moment-bound planners.

use super::constants::{check_thresholds, DerivedConstants, ThresholdKind, ThresholdReport};
use super::spec::{ModelSpec, ParticleKind, RunConfig};
use crate::error::SimError;
use num_traits::Float;
use serde::Serialize;

/// Split of the total error tolerance between the three error sources.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonBudget {
    pub trotter: f64,
    pub truncation: f64,
    pub statistical: f64,
}

impl EpsilonBudget {
    pub fn thirds(eps: f64) -> Self {
        Self {
            trotter: eps / 3.0,
            truncation: eps / 3.0,
            statistical: eps / 3.0,
        }
    }
}

fn ceil_steps(x: f64) -> Result<u64, SimError> {
    if !x.is_finite() || x < 0.0 {
        return Err(SimError::Plan(format!("step count {x} is not finite")));
    }
    if x >= u64::MAX as f64 {
        return Err(SimError::Plan(format!("step count {x:e} overflows")));
    }
    Ok((x.ceil() as u64).max(1))
}

fn check_plan_args(t: f64, eps: f64) -> Result<(), SimError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SimError::Argument(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    if !(eps > 0.0) {
        return Err(SimError::Argument(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    Ok(())
}

/// Steps `T` with `4 t^2 m^2 Lambda^2 / T <= eps`.
pub fn fermion_trotter_steps(t: f64, m: usize, lambda: f64, eps: f64) -> Result<u64, SimError> {
    check_plan_args(t, eps)?;
    let mf = m as f64;
    ceil_steps(4.0 * t * t * mf * mf * lambda * lambda / eps)
}

/// Steps `T` with `16 t^2 m^2 d^4 Lambda^2 / T <= eps`.
pub fn boson_trotter_steps(
    t: f64,
    m: usize,
    d: usize,
    lambda: f64,
    eps: f64,
) -> Result<u64, SimError> {
    check_plan_args(t, eps)?;
    let mf = m as f64;
    let d2 = (d as f64).powi(2);
    ceil_steps(16.0 * t * t * mf * mf * d2 * d2 * lambda * lambda / eps)
}

/// Moment bound `(C m)^k k^(alpha k + beta)`.
pub fn moment_bound<F: Float>(c: F, alpha: F, beta: F, m: F, k: u32) -> F {
    if k == 0 {
        return F::one();
    }
    let kf = F::from(k).unwrap();
    (c * m).powi(k as i32) * kf.powf(alpha * kf + beta)
}

/// Particle-number tail bound `P(N >= d)`.
///
/// The Chernoff argument behind it needs at least one moment, i.e.
/// `d > d0 m`; below that the trivial bound 1 is returned.
pub fn tail_bound<F: Float>(d0: F, k0: F, alpha: F, m: F, d: F) -> F {
    let x = d / (d0 * m);
    if !(x > F::one()) {
        return F::one();
    }
    let e = F::one().exp();
    (e * x.powf(k0) * (-x.powf(F::one() / alpha)).exp()).min(F::one())
}

/// Truncation error estimate `c m^(1 - k0/2) d^(2 + k0/2) t Lambda exp(-(d/(d0 m))^(1/alpha) / 2)`.
pub fn truncation_error_bound<F: Float>(
    consts: &DerivedConstants,
    m: F,
    d: F,
    t: F,
    constant: F,
) -> F {
    let two = F::from(2.0).unwrap();
    let k0 = F::from(consts.k0).unwrap();
    let d0 = F::from(consts.d0).unwrap();
    let alpha = F::from(consts.alpha).unwrap();
    let lambda = F::from(consts.lambda).unwrap();
    constant
        * m.powf(F::one() - k0 / two)
        * d.powf(two + k0 / two)
        * t
        * lambda
        * (-(d / (d0 * m)).powf(F::one() / alpha) / two).exp()
}

/// Smallest truncation `d` whose error estimate is at most `eps`.
///
/// The estimate first grows with `d`; the search starts at its maximiser so
/// that the answer never shrinks as `eps` shrinks.
pub fn boson_truncation_plan(
    consts: &DerivedConstants,
    m: usize,
    t: f64,
    eps: f64,
    constant: f64,
) -> Result<usize, SimError> {
    check_plan_args(t, eps)?;
    if !consts.d0.is_finite() {
        return Err(SimError::Plan(format!(
            "moment constant is infinite (gamma = {} <= 0); give an explicit truncation",
            consts.gamma
        )));
    }
    let mf = m as f64;
    let f = |d: f64| truncation_error_bound(consts, mf, d, t, constant);
    let p = 2.0 + consts.k0 / 2.0;
    let d_star = consts.d0 * mf * (2.0 * consts.alpha * p).powf(consts.alpha);
    if f(d_star) <= eps {
        return Ok(1);
    }
    let start = d_star.ceil().max(1.0);
    let mut hi = start;
    while f(hi) > eps {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(SimError::Plan("truncation search did not converge".into()));
        }
    }
    let mut lo = start;
    if f(lo) <= eps {
        return Ok(lo as usize);
    }
    while hi - lo > 1.0 {
        let mid = (0.5 * (lo + hi)).floor();
        if f(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi as usize)
}

/// Everything needed to launch a sampler run.
#[derive(Clone, Debug, Serialize)]
pub struct RunPlan {
    pub kind: ParticleKind,
    pub time: f64,
    pub epsilon: f64,
    pub budget: EpsilonBudget,
    pub constants: DerivedConstants,
    pub thresholds: Vec<ThresholdReport>,
    /// Step count demanded by the Trotter bound.
    pub trotter_steps_bound: Option<u64>,
    /// Step count actually used (override or bound).
    pub trotter_steps: Option<u64>,
    pub truncation_bound: Option<usize>,
    pub truncation: Option<usize>,
    pub truncation_constant: f64,
}

impl RunPlan {
    pub fn delta(&self) -> Option<f64> {
        self.trotter_steps.map(|s| self.time / s as f64)
    }

    pub fn thresholds_ok(&self) -> bool {
        self.thresholds.iter().all(|r| r.ok)
    }
}

/// Builds a plan; planner failures leave the corresponding fields empty
/// unless an explicit override is given.
pub fn plan_run(spec: &ModelSpec, t: f64, eps: f64, run: &RunConfig) -> Result<RunPlan, SimError> {
    check_plan_args(t, eps)?;
    let consts = DerivedConstants::compute(spec);
    let budget = EpsilonBudget::thirds(eps);
    let m = spec.num_modes();
    let constant = run.truncation_constant.unwrap_or(1.0);
    match spec.kind {
        ParticleKind::Fermion => {
            let bound = fermion_trotter_steps(t, m, consts.lambda, budget.trotter).ok();
            Ok(RunPlan {
                kind: spec.kind,
                time: t,
                epsilon: eps,
                budget,
                constants: consts,
                thresholds: vec![check_thresholds(spec, ThresholdKind::FermionConvexGaussian)],
                trotter_steps_bound: bound,
                trotter_steps: run.trotter_steps.map(|s| s as u64).or(bound),
                truncation_bound: None,
                truncation: None,
                truncation_constant: constant,
            })
        }
        ParticleKind::Boson => {
            let d_bound = boson_truncation_plan(&consts, m, t, budget.truncation, constant).ok();
            let d = run.truncation.or(d_bound);
            let bound =
                d.and_then(|d| boson_trotter_steps(t, m, d, consts.lambda, budget.trotter).ok());
            Ok(RunPlan {
                kind: spec.kind,
                time: t,
                epsilon: eps,
                budget,
                constants: consts,
                thresholds: vec![
                    check_thresholds(spec, ThresholdKind::BosonSeparable),
                    check_thresholds(spec, ThresholdKind::BosonMoment),
                ],
                trotter_steps_bound: bound,
                trotter_steps: run.trotter_steps.map(|s| s as u64).or(bound),
                truncation_bound: d_bound,
                truncation: d,
                truncation_constant: constant,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trotter_step_formulas() {
        assert_eq!(fermion_trotter_steps(1.0, 2, 1.0, 1.0).unwrap(), 16);
        assert_eq!(boson_trotter_steps(1.0, 2, 3, 1.0, 1.0).unwrap(), 5184);
        assert!(fermion_trotter_steps(1.0, 2, 1.0, 0.0).is_err());
        assert_eq!(fermion_trotter_steps(0.0, 2, 1.0, 1.0).unwrap(), 1);
    }

    #[test]
    fn moment_bound_values() {
        // (3 * 2)^2 * 2^(2 + 1)
        assert_eq!(moment_bound(3.0_f64, 1.0, 1.0, 2.0, 2), 288.0);
        assert_eq!(moment_bound(3.0_f32, 1.0, 1.0, 2.0, 0), 1.0);
    }

    #[test]
    fn tail_bound_reference_point() {
        // alpha = 1, d0 m = 1, d = 10 gives e * 10^k0 * e^-10
        let k0 = 1.0_f64;
        let got = tail_bound(1.0, k0, 1.0, 1.0, 10.0);
        let want = std::f64::consts::E * 10.0 * (-10.0_f64).exp();
        assert!((got - want).abs() < 1e-15);
        assert_eq!(tail_bound(1.0, k0, 1.0, 1.0, 0.5), 1.0);
    }

    fn sample_consts(c: f64, alpha: f64, beta: f64) -> DerivedConstants {
        DerivedConstants {
            j_c: 0.1,
            j_os: 0.0,
            u_c: 0.1,
            u_os: 0.2,
            omega: 0.0,
            kappa: 1.0,
            squeezing: 0.0,
            gamma: 0.5,
            lambda: 1.4,
            moment_c: c,
            alpha,
            beta,
            d0: std::f64::consts::E * c,
            k0: beta / alpha,
        }
    }

    #[test]
    fn large_epsilon_gives_unit_truncation() {
        let c = sample_consts(3.0, 1.0, 1.0);
        assert_eq!(boson_truncation_plan(&c, 2, 1.0, 1e12, 1.0).unwrap(), 1);
    }

    proptest! {
        #[test]
        fn truncation_is_monotone_in_epsilon(e1 in 1e-8f64..1.0, e2 in 1e-8f64..1.0, c in 1.0f64..50.0) {
            let consts = sample_consts(c, 1.0, 1.0);
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let d_lo = boson_truncation_plan(&consts, 2, 1.0, lo, 1.0).unwrap();
            let d_hi = boson_truncation_plan(&consts, 2, 1.0, hi, 1.0).unwrap();
            prop_assert!(d_lo >= d_hi);
            let m = 2.0;
            prop_assert!(truncation_error_bound(&consts, m, d_lo as f64, 1.0, 1.0) <= lo);
        }

        #[test]
        fn trotter_steps_monotone(e1 in 1e-6f64..1.0, e2 in 1e-6f64..1.0, lam in 0.1f64..5.0) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(fermion_trotter_steps(1.0, 3, lam, lo).unwrap() >= fermion_trotter_steps(1.0, 3, lam, hi).unwrap());
            prop_assert!(boson_trotter_steps(1.0, 3, 4, lam, lo).unwrap() >= boson_trotter_steps(1.0, 3, 4, lam, hi).unwrap());
        }

        #[test]
        fn moment_bound_grows_with_k(c in 1.0f64..10.0, m in 1.0f64..8.0) {
            for k in 1..6u32 {
                prop_assert!(moment_bound(c, 1.0, 1.0, m, k + 1) > moment_bound(c, 1.0, 1.0, m, k));
            }
        }
    }
}
