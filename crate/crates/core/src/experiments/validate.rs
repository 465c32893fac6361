//! Sampler-versus-oracle validation, Trotter scaling and moment checks.

use super::output::{num, Table};
use crate::boson::{
    averaged_dense_step, run_boson_population, BosonPlan, BosonProductState, BosonRunConfig,
};
use crate::error::{Result, SimError};
use crate::fermion::sampler::{
    initial_gaussian, run_population, trotterized_dense, FermionPlan, PopulationConfig,
};
use crate::model::{
    moment_bound, plan_run, tail_bound, DerivedConstants, ModelSpec, ParticleKind, RunConfig,
};
use crate::oracle::{
    evolve_exact, initial_dense, total_variation, trace_distance, DenseState, ModelOperators,
};
use crate::scalar::{cx, CMat};

/// Tolerance on each `|<n_v>_sampler - <n_v>_oracle|`.
pub const OCCUPATION_TOL: f64 = 0.02;

/// Tolerance on the Fock-distribution total variation distance.
pub const TV_TOL: f64 = 0.05;

/// Largest Hilbert dimension the oracle is run at.
pub const ORACLE_MAX_DIM: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationRow {
    pub observable: String,
    pub sampler: f64,
    /// NaN for the distribution rows.
    pub stderr: f64,
    pub oracle: f64,
    pub diff: f64,
    pub tolerance: f64,
}

impl ValidationRow {
    pub fn passed(&self) -> bool {
        self.diff <= self.tolerance
    }
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub kind: ParticleKind,
    pub time: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub trotter_steps: usize,
    pub truncation: Option<usize>,
    pub rows: Vec<ValidationRow>,
    pub invariant_checks: u64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "observable",
            "sampler[-]",
            "stderr[-]",
            "oracle[-]",
            "abs_diff[-]",
            "tolerance[-]",
            "pass",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.observable.clone(),
                num(r.sampler),
                num(r.stderr),
                num(r.oracle),
                num(r.diff),
                num(r.tolerance),
                r.passed().to_string(),
            ]);
        }
        t
    }
}

fn occupation_row(v: usize, sampler: f64, stderr: f64, oracle: f64) -> ValidationRow {
    ValidationRow {
        observable: format!("n_{}", v + 1),
        sampler,
        stderr,
        oracle,
        diff: (sampler - oracle).abs(),
        tolerance: OCCUPATION_TOL,
    }
}

fn tv_row(name: &str, p: &[f64], oracle: &[f64]) -> ValidationRow {
    ValidationRow {
        observable: name.into(),
        sampler: f64::NAN,
        stderr: f64::NAN,
        oracle: f64::NAN,
        diff: total_variation(p, oracle),
        tolerance: TV_TOL,
    }
}

fn oracle_state(spec: &ModelSpec, truncation: Option<usize>, time: f64) -> Result<DenseState<f64>> {
    let ops = ModelOperators::<f64>::new(spec, truncation);
    if ops.dim() > ORACLE_MAX_DIM {
        return Err(SimError::Plan(format!(
            "oracle dimension {} exceeds the cap {ORACLE_MAX_DIM}",
            ops.dim()
        )));
    }
    let mut state = initial_dense::<f64>(spec, truncation);
    state.rho = evolve_exact(spec, &ops, &state.rho, 0.0, time);
    Ok(state)
}

/// Runs the sampler for `spec` and compares it with the exact oracle.
/// Step count and truncation come from `run` when given, else from the planner.
pub fn validate(
    spec: &ModelSpec,
    run: &RunConfig,
    time: f64,
    trajectories: usize,
    seed: u64,
    epsilon: f64,
) -> Result<ValidationReport> {
    let plan = plan_run(spec, time, epsilon, run)?;
    let steps = plan
        .trotter_steps
        .ok_or_else(|| SimError::Plan("no Trotter step count (set run.trotter_steps)".into()))?
        as usize;
    let m = spec.num_modes();
    let mut rows = Vec::new();
    let (invariant_checks, truncation) = match spec.kind {
        ParticleKind::Fermion => {
            let fplan = FermionPlan::<f64>::new(spec, time, steps)?;
            let init = initial_gaussian::<f64>(spec)?;
            let mut cfg = PopulationConfig::new(trajectories, seed);
            cfg.check_invariants = true;
            if let Some(r) = run.resample_every {
                cfg.resample_every = r;
            }
            let pop = run_population(&fplan, &init, &cfg)?;
            let exact = oracle_state(spec, None, time)?;
            let n = exact.occupations();
            for (v, nv) in n.iter().enumerate().take(m) {
                let e = pop.occupation(v)?;
                rows.push(occupation_row(v, e.value, e.stderr, *nv));
            }
            let p = exact.fock_distribution();
            rows.push(tv_row("fock_tv_mixture", &pop.fock_distribution()?, &p));
            let samples = pop.sample_fock(trajectories, seed)?;
            let mut hist = vec![0.0; p.len()];
            for s in &samples {
                let b = s.iter().fold(0usize, |acc, &k| 2 * acc + k as usize);
                hist[b] += 1.0 / samples.len() as f64;
            }
            rows.push(tv_row("fock_tv_samples", &hist, &p));
            (pop.invariant_checks, None)
        }
        ParticleKind::Boson => {
            let d = plan
                .truncation
                .ok_or_else(|| SimError::Plan("no truncation (set run.truncation)".into()))?;
            let bplan = BosonPlan::<f64>::new(spec, time, steps, d)?;
            let init = BosonProductState::initial(spec, d);
            let mut cfg = BosonRunConfig::new(trajectories, seed);
            cfg.check_invariants = true;
            let pop = run_boson_population(&bplan, &init, &cfg)?;
            let exact = oracle_state(spec, Some(d), time)?;
            for (v, nv) in exact.occupations().iter().enumerate() {
                let e = pop.occupation(v)?;
                rows.push(occupation_row(v, e.value, e.stderr, *nv));
            }
            let p = exact.fock_distribution();
            rows.push(tv_row("fock_tv_mixture", &pop.fock_distribution()?, &p));
            rows.push(tv_row("fock_tv_samples", &pop.sample_histogram()?, &p));
            let checks = (trajectories * steps) as u64;
            (checks, Some(d))
        }
    };
    Ok(ValidationReport {
        kind: spec.kind,
        time,
        trajectories,
        seed,
        trotter_steps: steps,
        truncation,
        rows,
        invariant_checks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterPoint {
    pub steps: usize,
    pub distance: f64,
    pub bound: f64,
}

fn normalised(rho: &CMat<f64>) -> CMat<f64> {
    let tr = rho.trace();
    rho / cx(tr.re, 0.0)
}

/// Trace distance between the step-split dense evolution and the exact one,
/// with the bound `4 t^2 m^2 Lambda^2 / T` (fermions) or `16 t^2 m^2 d^4 Lambda^2 / T` (bosons).
pub fn trotter_scaling(
    spec: &ModelSpec,
    time: f64,
    truncation: Option<usize>,
    steps: &[usize],
) -> Result<Vec<TrotterPoint>> {
    let consts = DerivedConstants::compute(spec);
    let m = spec.num_modes() as f64;
    let ops = ModelOperators::<f64>::new(spec, truncation);
    let init = initial_dense::<f64>(spec, truncation).rho;
    let exact = evolve_exact(spec, &ops, &init, 0.0, time);
    let scale = time * time * m * m * consts.lambda * consts.lambda;
    steps
        .iter()
        .map(|&n| {
            let (rho, bound) = match spec.kind {
                ParticleKind::Fermion => {
                    let plan = FermionPlan::<f64>::new(spec, time, n)?;
                    (
                        trotterized_dense(spec, &plan, &init),
                        4.0 * scale / n as f64,
                    )
                }
                ParticleKind::Boson => {
                    let d = truncation.ok_or_else(|| {
                        SimError::Argument("boson Trotter study needs a truncation".into())
                    })?;
                    let plan = BosonPlan::<f64>::new(spec, time, n, d)?;
                    let mut rho = init.clone();
                    for s in 0..n {
                        rho = averaged_dense_step(plan.step(s), spec.modes_per_site, d + 1, &rho);
                    }
                    (rho, 16.0 * scale * (d as f64).powi(4) / n as f64)
                }
            };
            Ok(TrotterPoint {
                steps: n,
                distance: trace_distance(&normalised(&rho), &exact),
                bound,
            })
        })
        .collect()
}

pub fn trotter_table(points: &[TrotterPoint]) -> Table {
    let mut t = Table::new(&["T[-]", "trace_distance[-]", "bound[-]"]);
    for p in points {
        t.push(vec![p.steps.to_string(), num(p.distance), num(p.bound)]);
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentPoint {
    pub t: f64,
    pub k: u32,
    pub moment: f64,
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPoint {
    pub t: f64,
    pub d: usize,
    pub tail: f64,
    pub bound: f64,
}

/// `<N^k>` and `P(N >= d)` of the exact state at each time, next to the
/// moment bound `(C m)^k k^(alpha k + beta)` and the Chernoff-style tail bound.
pub fn moment_study(
    spec: &ModelSpec,
    truncation: usize,
    times: &[f64],
    kmax: u32,
) -> (Vec<MomentPoint>, Vec<TailPoint>) {
    let consts = DerivedConstants::compute(spec);
    let m = spec.num_modes() as f64;
    let ops = ModelOperators::<f64>::new(spec, Some(truncation));
    let mut state = initial_dense::<f64>(spec, Some(truncation));
    let init = state.rho.clone();
    let mut moments = Vec::new();
    let mut tails = Vec::new();
    for &t in times {
        state.rho = evolve_exact(spec, &ops, &init, 0.0, t);
        for k in 1..=kmax {
            moments.push(MomentPoint {
                t,
                k,
                moment: state.number_moment(k),
                bound: moment_bound(consts.moment_c, consts.alpha, consts.beta, m, k),
            });
        }
        for d in 1..=truncation * spec.num_modes() {
            tails.push(TailPoint {
                t,
                d,
                tail: state.tail_probability(d),
                bound: tail_bound(consts.d0, consts.k0, consts.alpha, m, d as f64),
            });
        }
    }
    (moments, tails)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_config;

    const FERMION: &str = r#"
particle = "fermion"
sites = 2
modes_per_site = 1
[noise]
kappa1 = 0.2
kappa2 = 0.1
kappa3 = 0.5
[initial]
occupations = [1, 0]
[[coupling]]
a = [1, 1, 1]
b = [2, 1, 2]
im = 0.25
[[coupling]]
a = [1, 1, 2]
b = [2, 1, 1]
im = -0.25
[[interaction]]
a = [1, 1]
b = [2, 1]
value = 0.2
[run]
trotter_steps = 4
"#;

    #[test]
    fn zero_time_has_no_differences() {
        let (spec, run) = load_config(FERMION, &[]).unwrap();
        let rep = validate(&spec, &run, 0.0, 200, 1, 0.1).unwrap();
        assert!(rep.passed());
        for r in rep.rows.iter().filter(|r| r.observable.starts_with("n_")) {
            assert_eq!(r.diff, 0.0);
        }
        assert_eq!(rep.rows.len(), 4);
    }

    #[test]
    fn small_fermion_run_agrees_with_the_oracle() {
        let (spec, run) = load_config(FERMION, &[]).unwrap();
        let rep = validate(&spec, &run, 0.5, 4000, 7, 0.1).unwrap();
        assert!(rep.passed(), "{:?}", rep.rows);
        assert!(rep.invariant_checks > 0);
    }

    #[test]
    fn fermion_trotter_error_is_first_order() {
        let (spec, _) = load_config(FERMION, &[]).unwrap();
        let pts = trotter_scaling(&spec, 1.0, None, &[4, 8]).unwrap();
        for p in &pts {
            assert!(p.distance <= p.bound);
        }
        let r = pts[0].distance / pts[1].distance;
        assert!((r - 2.0).abs() < 0.3, "{r}");
    }
}
