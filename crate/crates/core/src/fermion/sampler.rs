//! Trotterized convex-Gaussian trajectories for the fermionic model.
//!
//! Each step applies the exact Gaussian propagator (quadratic Hamiltonian, loss
//! and gain), then the number-diagonal part: on-site phases, one stochastic
//! pair channel per interacting pair, and leftover single-mode dephasing. The
//! number-diagonal pieces commute, so their order inside a step is immaterial.

use super::gaussian::{GaussianPropagator, GaussianState};
use crate::error::SimError;
use crate::linalg::{expm, identity, sandwich_superop};
use crate::model::{noise_split_weights, InitialState, ModelSpec, NoiseChannel, ParticleKind};
use crate::rng::{standard_complex_normal, stream_rng, POPULATION_STREAM};
use crate::scalar::{csqrt, cx, re, to_f64, CMat, Real};
use crate::stats::{relative_weights, systematic_resample, weighted_estimate, Estimate};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Tolerance below zero tolerated on the projection-branch coefficient.
pub const NEGATIVE_WEIGHT_TOL: f64 = 1e-12;

/// Step-integrated scalars of one interacting pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairChannelParams {
    pub v: usize,
    pub u: usize,
    /// Integrated coefficient of `n_v n_u` in the Hamiltonian.
    pub u_int: f64,
    /// Integrated dephasing assigned to `v` and to `u`.
    pub k_v: f64,
    pub k_u: f64,
}

impl PairChannelParams {
    /// `sqrt(U) e^{-i pi/4}`, so that `mu^2 = -i U` for either sign of `U`.
    pub fn mu(&self) -> Complex64 {
        csqrt(Complex64::new(self.u_int, 0.0))
            * Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)
    }

    /// Coefficient `c` of the projection branch `rho -> rho + c n rho n` for dephasing `k`.
    pub fn projection_coefficient(&self, k: f64) -> Result<f64, SimError> {
        let c = (k - self.u_int.abs()).exp_m1();
        if c < -NEGATIVE_WEIGHT_TOL {
            return Err(SimError::NegativeWeight {
                weight: c,
                context: format!(
                    "pair ({}, {}): dephasing {k:e} below |U| = {:e}",
                    self.v,
                    self.u,
                    self.u_int.abs()
                ),
            });
        }
        Ok(c.max(0.0))
    }

    pub fn satisfies_threshold(&self) -> bool {
        let u = self.u_int.abs();
        self.k_v >= u - NEGATIVE_WEIGHT_TOL && self.k_u >= u - NEGATIVE_WEIGHT_TOL
    }
}

/// Everything applied during one Trotter step.
#[derive(Clone, Debug)]
pub struct StepPlan<T: Real> {
    pub propagator: GaussianPropagator<T>,
    /// `(v, integral of U_vv)`: the unitary `exp(-i U n_v)`.
    pub phases: Vec<(usize, f64)>,
    pub pairs: Vec<PairChannelParams>,
    /// `(v, K)`: dephasing not absorbed by any pair channel.
    pub dephasing: Vec<(usize, f64)>,
}

impl<T: Real> StepPlan<T> {
    pub fn new(spec: &ModelSpec, t0: f64, t1: f64) -> Self {
        let m = spec.num_modes();
        let k3 = spec.noise.kappa3;
        let uint = spec.interaction_integral(t0, t1);
        let cuts = spec.segment_cuts(t0, t1);
        // share[v][u] = integrated kappa3 p_{vu}, share_q[v][u] = integrated kappa3 q_{vu}
        let mut share_p = vec![vec![0.0; m]; m];
        let mut share_q = vec![vec![0.0; m]; m];
        if k3 > 0.0 {
            for w in cuts.windows(2) {
                let (mid, dt) = (0.5 * (w[0] + w[1]), w[1] - w[0]);
                for v in 0..m {
                    for u in 0..m {
                        let (p, q) = noise_split_weights(spec, v, u, NoiseChannel::Dephasing, mid);
                        share_p[v][u] += k3 * p * dt;
                        share_q[v][u] += k3 * q * dt;
                    }
                }
            }
        }
        let mut phases = Vec::new();
        let mut pairs = Vec::new();
        let mut absorbed = vec![0.0; m];
        for v in 0..m {
            if uint[(v, v)] != 0.0 {
                phases.push((v, uint[(v, v)]));
            }
            for u in v + 1..m {
                let p = PairChannelParams {
                    v,
                    u,
                    u_int: uint[(v, u)] + uint[(u, v)],
                    k_v: share_p[v][u] + share_q[u][v],
                    k_u: share_q[v][u] + share_p[u][v],
                };
                if p.u_int != 0.0 || p.k_v != 0.0 || p.k_u != 0.0 {
                    absorbed[v] += p.k_v;
                    absorbed[u] += p.k_u;
                    pairs.push(p);
                }
            }
        }
        let total = k3 * (t1 - t0);
        let dephasing = (0..m)
            .map(|v| (v, (total - absorbed[v]).max(0.0)))
            .filter(|&(_, k)| k > 0.0)
            .collect();
        Self {
            propagator: GaussianPropagator::new(spec, t0, t1),
            phases,
            pairs,
            dephasing,
        }
    }
}

/// Per-step plans for a whole run; identical consecutive steps share storage.
#[derive(Clone, Debug)]
pub struct FermionPlan<T: Real> {
    pub time: f64,
    pub steps: usize,
    plans: Vec<StepPlan<T>>,
    index: Vec<usize>,
}

impl<T: Real> FermionPlan<T> {
    pub fn new(spec: &ModelSpec, time: f64, steps: usize) -> Result<Self, SimError> {
        if spec.kind != ParticleKind::Fermion {
            return Err(SimError::Argument(
                "fermionic sampler needs a fermionic model".into(),
            ));
        }
        if !(time >= 0.0) || !time.is_finite() {
            return Err(SimError::Argument(format!(
                "run time {time} must be finite and non-negative"
            )));
        }
        let steps = if time == 0.0 { 0 } else { steps.max(1) };
        let delta = if steps == 0 { 0.0 } else { time / steps as f64 };
        let bp = spec.breakpoints();
        let mut plans: Vec<StepPlan<T>> = Vec::new();
        let mut index = Vec::with_capacity(steps);
        for s in 0..steps {
            let (t0, t1) = (s as f64 * delta, (s + 1) as f64 * delta);
            // the generator is constant on both this step and the previous one
            let repeat = s > 0 && !bp.iter().any(|&b| b > t0 - delta && b < t1);
            if !repeat {
                plans.push(StepPlan::new(spec, t0, t1));
            }
            index.push(plans.len() - 1);
        }
        Ok(Self {
            time,
            steps,
            plans,
            index,
        })
    }

    pub fn step(&self, s: usize) -> &StepPlan<T> {
        &self.plans[self.index[s]]
    }

    /// Whether every pair channel meets its convex-Gaussianity threshold.
    pub fn thresholds_hold(&self) -> bool {
        self.plans
            .iter()
            .all(|p| p.pairs.iter().all(|q| q.satisfies_threshold()))
    }
}

/// A random choice made along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchEvent {
    /// Complex normal drawn for a pair channel.
    Gaussian {
        step: usize,
        pair: (usize, usize),
        z: (f64, f64),
    },
    /// Projection branch taken for `mode` (dephasing or pair channel).
    Projection {
        step: usize,
        mode: usize,
        outcome: u8,
    },
}

#[derive(Clone, Debug)]
pub struct FermionTrajectory<T: Real> {
    pub state: GaussianState<T>,
    pub stream: u64,
    pub step: usize,
    pub history: Option<Vec<BranchEvent>>,
}

fn log_event(h: &mut Option<Vec<BranchEvent>>, e: BranchEvent) {
    if let Some(h) = h {
        h.push(e);
    }
}

/// Applies the pair channel for `p` by drawing `z` from its prior and the
/// projection branches from their exact conditional probabilities.
pub fn pair_channel_step<T: Real, R: Rng + ?Sized>(
    state: &mut GaussianState<T>,
    p: &PairChannelParams,
    rng: &mut R,
    step: usize,
    history: &mut Option<Vec<BranchEvent>>,
) -> Result<(), SimError> {
    let (zr, zi) = standard_complex_normal(rng);
    let z = Complex64::new(zr, zi);
    log_event(
        history,
        BranchEvent::Gaussian {
            step,
            pair: (p.v, p.u),
            z: (zr, zi),
        },
    );
    let mu = p.mu();
    let theta_v = mu * z - 0.5 * p.k_v;
    let theta_u = mu * z.conj() - 0.5 * p.k_u;
    state.apply_number_exponential(p.v, cx(theta_v.re, theta_v.im))?;
    state.apply_number_exponential(p.u, cx(theta_u.re, theta_u.im))?;
    for (mode, k) in [(p.v, p.k_v), (p.u, p.k_u)] {
        let c = p.projection_coefficient(k)?;
        if c == 0.0 {
            continue;
        }
        let n = to_f64(state.number_expectation(mode)).clamp(0.0, 1.0);
        let norm = 1.0 + c * n;
        let before = state.log_weight;
        if rng.random::<f64>() * norm < c * n {
            state.apply_number_projector(mode, 1)?;
            log_event(
                history,
                BranchEvent::Projection {
                    step,
                    mode,
                    outcome: 1,
                },
            );
        }
        state.log_weight = before + re::<T>(norm.ln());
    }
    Ok(())
}

/// Exact single-mode dephasing `exp(K D_n)`: identity with probability
/// `exp(-K/2)`, otherwise a non-selective measurement of `n_v`.
pub fn dephase_mode<T: Real, R: Rng + ?Sized>(
    state: &mut GaussianState<T>,
    v: usize,
    k: f64,
    rng: &mut R,
    step: usize,
    history: &mut Option<Vec<BranchEvent>>,
) -> Result<(), SimError> {
    if rng.random::<f64>() < (-0.5 * k).exp() {
        return Ok(());
    }
    let n = to_f64(state.number_expectation(v)).clamp(0.0, 1.0);
    let outcome = if rng.random::<f64>() < n { 1 } else { 0 };
    let before = state.log_weight;
    state.apply_number_projector(v, outcome)?;
    state.log_weight = before;
    log_event(
        history,
        BranchEvent::Projection {
            step,
            mode: v,
            outcome: outcome as u8,
        },
    );
    Ok(())
}

pub fn apply_step<T: Real, R: Rng + ?Sized>(
    state: &mut GaussianState<T>,
    plan: &StepPlan<T>,
    rng: &mut R,
    step: usize,
    history: &mut Option<Vec<BranchEvent>>,
) -> Result<(), SimError> {
    plan.propagator.apply(state);
    for &(v, u) in &plan.phases {
        state.apply_number_exponential(v, cx(0.0, -u))?;
    }
    for p in &plan.pairs {
        pair_channel_step(state, p, rng, step, history)?;
    }
    for &(v, k) in &plan.dephasing {
        dephase_mode(state, v, k, rng, step, history)?;
    }
    Ok(())
}

pub fn initial_gaussian<T: Real>(spec: &ModelSpec) -> Result<GaussianState<T>, SimError> {
    match &spec.initial {
        InitialState::Fock(occ) => Ok(GaussianState::from_occupations(occ)),
        InitialState::Coherent(_) => Err(SimError::Argument(
            "fermionic models need a Fock initial state".into(),
        )),
    }
}

/// Runs one trajectory without resampling on stream `(seed, stream)`.
pub fn run_trajectory<T: Real>(
    plan: &FermionPlan<T>,
    init: &GaussianState<T>,
    seed: u64,
    stream: u64,
    record: bool,
) -> Result<FermionTrajectory<T>, SimError> {
    let mut rng = stream_rng(seed, stream);
    let mut traj = FermionTrajectory {
        state: init.clone(),
        stream,
        step: 0,
        history: record.then(Vec::new),
    };
    for s in 0..plan.steps {
        apply_step(
            &mut traj.state,
            plan.step(s),
            &mut rng,
            s,
            &mut traj.history,
        )?;
        traj.step = s + 1;
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationConfig {
    pub trajectories: usize,
    pub seed: u64,
    /// Resample every this many steps; 0 disables resampling.
    pub resample_every: usize,
    /// Verify the covariance invariants after every step.
    pub check_invariants: bool,
    pub record_history: bool,
}

impl PopulationConfig {
    pub fn new(trajectories: usize, seed: u64) -> Self {
        Self {
            trajectories,
            seed,
            resample_every: 1,
            check_invariants: false,
            record_history: false,
        }
    }
}

/// Weighted trajectory population at the end of a run.
#[derive(Clone, Debug)]
pub struct Population<T: Real> {
    pub trajectories: Vec<FermionTrajectory<T>>,
    pub resamplings: usize,
    /// Number of per-step covariance checks performed.
    pub invariant_checks: u64,
    pub seed: u64,
}

struct Slot<T: Real> {
    traj: FermionTrajectory<T>,
    rng: ChaCha8Rng,
}

/// Runs a population; slot `i` always draws from stream `(seed, i)`.
pub fn run_population<T: Real>(
    plan: &FermionPlan<T>,
    init: &GaussianState<T>,
    cfg: &PopulationConfig,
) -> Result<Population<T>, SimError> {
    if cfg.trajectories == 0 {
        return Err(SimError::Argument(
            "a population needs at least one trajectory".into(),
        ));
    }
    let mut slots: Vec<Slot<T>> = (0..cfg.trajectories as u64)
        .map(|i| Slot {
            traj: FermionTrajectory {
                state: init.clone(),
                stream: i,
                step: 0,
                history: cfg.record_history.then(Vec::new),
            },
            rng: stream_rng(cfg.seed, i),
        })
        .collect();
    let mut pop_rng = stream_rng(cfg.seed, POPULATION_STREAM);
    let mut resamplings = 0;
    let mut checks = 0u64;
    for s in 0..plan.steps {
        let step = plan.step(s);
        slots
            .par_iter_mut()
            .try_for_each(|slot| -> Result<(), SimError> {
                apply_step(
                    &mut slot.traj.state,
                    step,
                    &mut slot.rng,
                    s,
                    &mut slot.traj.history,
                )?;
                slot.traj.step = s + 1;
                if cfg.check_invariants {
                    slot.traj.state.check_invariants().map_err(|e| {
                        SimError::Normalisation(format!(
                            "step {s}, stream {}: {e}",
                            slot.traj.stream
                        ))
                    })?;
                }
                Ok(())
            })?;
        if cfg.check_invariants {
            checks += slots.len() as u64;
        }
        let last = s + 1 == plan.steps;
        if cfg.resample_every > 0 && (s + 1) % cfg.resample_every == 0 && !last && slots.len() > 1 {
            let lw: Vec<f64> = slots
                .iter()
                .map(|x| to_f64(x.traj.state.log_weight))
                .collect();
            let w = relative_weights(&lw)?;
            let anc = systematic_resample(&w, pop_rng.random::<f64>())?;
            let states: Vec<GaussianState<T>> = anc
                .iter()
                .map(|&a| {
                    let mut st = slots[a].traj.state.clone();
                    st.log_weight = T::zero();
                    st
                })
                .collect();
            for (slot, st) in slots.iter_mut().zip(states) {
                slot.traj.state = st;
            }
            resamplings += 1;
        }
    }
    Ok(Population {
        trajectories: slots.into_iter().map(|s| s.traj).collect(),
        resamplings,
        invariant_checks: checks,
        seed: cfg.seed,
    })
}

impl<T: Real> Population<T> {
    pub fn log_weights(&self) -> Vec<f64> {
        self.trajectories
            .iter()
            .map(|t| to_f64(t.state.log_weight))
            .collect()
    }

    pub fn weights(&self) -> Result<Vec<f64>, SimError> {
        relative_weights(&self.log_weights())
    }

    /// Weighted estimate of a per-trajectory functional.
    pub fn estimate<F: Fn(&GaussianState<T>) -> f64>(&self, f: F) -> Result<Estimate, SimError> {
        let w = self.weights()?;
        let vals: Vec<f64> = self.trajectories.iter().map(|t| f(&t.state)).collect();
        weighted_estimate(&w, &vals)
    }

    pub fn occupation(&self, v: usize) -> Result<Estimate, SimError> {
        self.estimate(|s| to_f64(s.number_expectation(v)))
    }

    /// Weighted mixture of the exact Fock distributions of all trajectories
    /// (index bit `m - 1 - v` is mode `v`).
    pub fn fock_distribution(&self) -> Result<Vec<f64>, SimError> {
        let w = self.weights()?;
        let m = self.trajectories[0].state.modes();
        let mut out = vec![0.0; 1 << m];
        let total: f64 = w.iter().sum();
        for (t, wi) in self.trajectories.iter().zip(&w) {
            if *wi == 0.0 {
                continue;
            }
            for (b, o) in out.iter_mut().enumerate() {
                let bits: Vec<u8> = (0..m).map(|v| ((b >> (m - 1 - v)) & 1) as u8).collect();
                *o += wi * t.state.fock_probability(&bits);
            }
        }
        out.iter_mut().for_each(|x| *x /= total);
        Ok(out)
    }

    /// Draws `count` Fock samples: a trajectory with probability proportional to
    /// its weight, then a bitstring from its Gaussian state.
    pub fn sample_fock(&self, count: usize, seed: u64) -> Result<Vec<Vec<u8>>, SimError> {
        let w = self.weights()?;
        let mut rng = stream_rng(seed, POPULATION_STREAM - 1);
        let anc = systematic_resample(&w, rng.random::<f64>())?;
        let n = anc.len();
        Ok((0..count)
            .map(|_| {
                let pick = anc[rng.random_range(0..n)];
                self.trajectories[pick].state.sample_fock(&mut rng)
            })
            .collect())
    }
}

/// Dense `16 x 16` superoperator (column stacking, modes `v = 0`, `u = 1`) of
/// the pair step averaged analytically over `z` and the projection branches.
///
/// Built from the same `mu`, exponent offsets and projection coefficients as
/// [`pair_channel_step`], so it certifies the unravelling.
pub fn dense_pair_channel(p: &PairChannelParams) -> Result<CMat<f64>, SimError> {
    let n1 = crate::oracle::ops::fermion_number::<f64>(2, 0).to_dense();
    let n2 = crate::oracle::ops::fermion_number::<f64>(2, 1).to_dense();
    let id = identity::<f64>(4);
    let left = |a: &CMat<f64>| sandwich_superop(a, &id);
    let right = |a: &CMat<f64>| sandwich_superop(&id, a);
    let (n1l, n1r, n2l, n2r) = (left(&n1), right(&n1), left(&n2), right(&n2));
    let mu = p.mu();
    let muc = mu.conj();
    // E_z exp(z A + z* B) = exp(A B) for commuting A, B
    let a = &n1l * mu + &n2r * muc;
    let b = &n2l * mu + &n1r * muc;
    let offsets =
        (&n1l + &n1r) * cx::<f64>(-0.5 * p.k_v, 0.0) + (&n2l + &n2r) * cx::<f64>(-0.5 * p.k_u, 0.0);
    let rf = expm(&(&a * &b + offsets));
    let e = |c: f64, l: &CMat<f64>, r: &CMat<f64>| identity::<f64>(16) + l * r * cx::<f64>(c, 0.0);
    let e1 = e(p.projection_coefficient(p.k_v)?, &n1l, &n1r);
    let e2 = e(p.projection_coefficient(p.k_u)?, &n2l, &n2r);
    Ok(e1 * e2 * rf)
}

/// Exact two-mode channel `exp(-i U [n_v n_u, .] + K_v D_{n_v} + K_u D_{n_u})`.
pub fn exact_pair_channel(p: &PairChannelParams) -> CMat<f64> {
    use crate::oracle::Liouvillian;
    let n1 = crate::oracle::ops::fermion_number::<f64>(2, 0);
    let n2 = crate::oracle::ops::fermion_number::<f64>(2, 1);
    let h = n1.mul(&n2).scale(cx(p.u_int, 0.0));
    let l = Liouvillian::new(h, vec![(p.k_v, n1), (p.k_u, n2)]);
    expm(&l.superoperator())
}

/// Trotterized dense reference: the same splitting as the sampler, applied to a
/// density matrix with every channel exact.
pub fn trotterized_dense<T: Real>(
    spec: &ModelSpec,
    plan: &FermionPlan<T>,
    rho: &CMat<T>,
) -> CMat<T> {
    use crate::oracle::{build_liouvillian, ModelOperators};
    let ops = ModelOperators::<T>::new(spec, None);
    let mut gaussian_only = spec.clone();
    gaussian_only.interactions.clear();
    gaussian_only.noise.kappa3 = 0.0;
    let mut diagonal_only = spec.clone();
    diagonal_only.couplings.clear();
    diagonal_only.noise.kappa1 = 0.0;
    diagonal_only.noise.kappa2 = 0.0;
    let delta = if plan.steps == 0 {
        0.0
    } else {
        plan.time / plan.steps as f64
    };
    let mut cur = rho.clone();
    for s in 0..plan.steps {
        let (t0, t1) = (s as f64 * delta, (s + 1) as f64 * delta);
        for part in [&gaussian_only, &diagonal_only] {
            for w in part.segment_cuts(t0, t1).windows(2) {
                let l = build_liouvillian(part, &ops, 0.5 * (w[0] + w[1]));
                cur = l.propagate(&cur, re(w[1] - w[0]));
            }
        }
    }
    cur
}
