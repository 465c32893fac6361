//! Product-state trajectories for the truncated bosonic model.
//!
//! A Trotter step evolves every site exactly under its on-site generator, then
//! applies the separable step map of each coupled inter-site mode pair by
//! sampling one product branch from its exact posterior. Site matrices are
//! renormalised after every branch and the log of the total branch weight is
//! accumulated for self-normalised estimates.

use super::branches::{enumerate_two_site_branches, PairMapParams, TwoSiteMap};
use super::ops::{build_truncated_ops, embed_local, mode_marginal, sandwich_local, TruncatedOps};
use crate::error::SimError;
use crate::linalg::{
    expm, hermitian_eigen, hermitian_eigenvalues, identity, max_abs_entry, unvectorize, vectorize,
    SparseOp,
};
use crate::model::{noise_split_weights, InitialState, ModelSpec, NoiseChannel, ParticleKind};
use crate::oracle::ops::{
    boson_local_number, boson_occupations, boson_projected_quadratic, embed_mode,
};
use crate::oracle::{coherent_amplitudes, Liouvillian};
use crate::rng::{categorical, stream_rng};
use crate::scalar::{cx, re, to_f64, CMat, Cx, Real};
use crate::stats::{relative_weights, weighted_estimate, Estimate};
use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

const CHANNELS: [NoiseChannel; 3] = [
    NoiseChannel::Loss,
    NoiseChannel::Gain,
    NoiseChannel::Dephasing,
];

/// Exact evolution of one site over a step.
#[derive(Clone, Debug)]
pub enum SiteStep<T: Real> {
    Identity,
    Unitary(CMat<T>),
    /// Superoperator (column stacking), used when undistributed noise acts on the site.
    Channel(CMat<T>),
}

impl<T: Real> SiteStep<T> {
    pub fn apply(&self, rho: &CMat<T>) -> CMat<T> {
        match self {
            SiteStep::Identity => rho.clone(),
            SiteStep::Unitary(u) => u * rho * u.adjoint(),
            SiteStep::Channel(s) => unvectorize(&(s * vectorize(rho)), rho.nrows()),
        }
    }
}

/// Generator of one site at time `t`: on-site Hamiltonian plus every
/// dissipator that no inter-site pair absorbs.
pub fn site_generator<T: Real>(
    spec: &ModelSpec,
    site: usize,
    levels: usize,
    t: f64,
) -> Liouvillian<T> {
    let l = spec.modes_per_site;
    let dim = levels.pow(l as u32);
    let j = spec.gaussian_matrix_at(t);
    let u = spec.interaction_at(t);
    let omega = spec.displacement_at(t);
    let quad = |s: usize, a: usize| {
        embed_mode(
            &crate::oracle::ops::boson_local_quadrature::<T>(levels, a),
            l,
            levels,
            s,
        )
    };
    let num = |s: usize| embed_mode(&boson_local_number::<T>(levels), l, levels, s);
    let mut h = SparseOp::<T>::zeros(dim);
    for s in 0..l {
        let v = spec.mode(site, s);
        for r in 0..l {
            let w = spec.mode(site, r);
            for a in 0..2 {
                for b in 0..2 {
                    let c = j[(2 * v + a, 2 * w + b)];
                    if c.re == 0.0 {
                        continue;
                    }
                    let term = if s == r {
                        embed_mode(&boson_projected_quadratic::<T>(levels, a, b), l, levels, s)
                    } else {
                        quad(s, a).mul(&quad(r, b))
                    };
                    h = h.add(&term.scale(cx(c.re, 0.0)));
                }
            }
            if u[(v, w)] != 0.0 {
                h = h.add(&num(s).mul(&num(r)).scale(cx(u[(v, w)], 0.0)));
            }
        }
        for a in 0..2 {
            if omega[2 * v + a] != 0.0 {
                h = h.add(&quad(s, a).scale(cx(omega[2 * v + a], 0.0)));
            }
        }
    }
    let mut jumps = Vec::new();
    for s in 0..l {
        let v = spec.mode(site, s);
        let a = embed_mode(
            &crate::oracle::ops::boson_local_annihilation::<T>(levels),
            l,
            levels,
            s,
        );
        for ch in CHANNELS {
            let rate = ch.rate(spec);
            if rate > 0.0 && !crate::model::constants::noise_is_distributed(spec, v, ch, t) {
                let op = match ch {
                    NoiseChannel::Loss => a.clone(),
                    NoiseChannel::Gain => a.adjoint(),
                    NoiseChannel::Dephasing => num(s),
                };
                jumps.push((re::<T>(rate), op));
            }
        }
    }
    Liouvillian::new(h, jumps)
}

fn site_step<T: Real>(spec: &ModelSpec, site: usize, levels: usize, cuts: &[f64]) -> SiteStep<T> {
    let gens: Vec<(Liouvillian<T>, f64)> = cuts
        .windows(2)
        .map(|w| {
            (
                site_generator(spec, site, levels, 0.5 * (w[0] + w[1])),
                w[1] - w[0],
            )
        })
        .collect();
    let dim = levels.pow(spec.modes_per_site as u32);
    let trivial = gens
        .iter()
        .all(|(g, _)| g.hamiltonian.nnz() == 0 && g.jumps.is_empty());
    if trivial {
        return SiteStep::Identity;
    }
    if gens.iter().all(|(g, _)| g.jumps.is_empty()) {
        let mut u = identity::<T>(dim);
        for (g, dt) in &gens {
            let h = g.hamiltonian.to_dense();
            u = expm(&(h * cx::<T>(0.0, -dt))) * u;
        }
        return SiteStep::Unitary(u);
    }
    let mut s = identity::<T>(dim * dim);
    for (g, dt) in &gens {
        s = expm(&(g.superoperator() * cx::<T>(*dt, 0.0))) * s;
    }
    SiteStep::Channel(s)
}

/// One inter-site mode pair with its enumerated branches.
#[derive(Clone, Debug)]
pub struct PairStep<T: Real> {
    pub params: PairMapParams,
    /// `(site, sigma)` of modes `v` and `w`.
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub map: TwoSiteMap<T>,
}

#[derive(Clone, Debug)]
pub struct BosonStepPlan<T: Real> {
    pub sites: Vec<SiteStep<T>>,
    pub pairs: Vec<PairStep<T>>,
}

/// Step-integrated pair scalars for every inter-site pair `v < w` with a nonzero term.
pub fn pair_parameters(spec: &ModelSpec, t0: f64, t1: f64) -> Vec<PairMapParams> {
    let m = spec.num_modes();
    let jint = spec.gaussian_integral(t0, t1);
    let uint = spec.interaction_integral(t0, t1);
    let cuts = spec.segment_cuts(t0, t1);
    let mut out = Vec::new();
    for v in 0..m {
        for w in v + 1..m {
            if spec.site_of(v) == spec.site_of(w) {
                continue;
            }
            let mut g = [[0.0; 2]; 2];
            for (a, row) in g.iter_mut().enumerate() {
                for (b, x) in row.iter_mut().enumerate() {
                    *x = jint[(2 * v + a, 2 * w + b)].re + jint[(2 * w + b, 2 * v + a)].re;
                }
            }
            let mut k_v = [0.0; 3];
            let mut k_w = [0.0; 3];
            for (l, ch) in CHANNELS.iter().enumerate() {
                let rate = ch.rate(spec);
                if rate == 0.0 {
                    continue;
                }
                for c in cuts.windows(2) {
                    let (p, q) = noise_split_weights(spec, v, w, *ch, 0.5 * (c[0] + c[1]));
                    k_v[l] += rate * p * (c[1] - c[0]);
                    k_w[l] += rate * q * (c[1] - c[0]);
                }
            }
            let p = PairMapParams {
                v,
                w,
                g,
                u: uint[(v, w)] + uint[(w, v)],
                k_v,
                k_w,
            };
            if !p.is_trivial() {
                out.push(p);
            }
        }
    }
    out
}

impl<T: Real> BosonStepPlan<T> {
    pub fn new(
        spec: &ModelSpec,
        ops: &TruncatedOps<T>,
        t0: f64,
        t1: f64,
    ) -> Result<Self, SimError> {
        let cuts = spec.segment_cuts(t0, t1);
        let sites = (0..spec.sites)
            .map(|i| site_step(spec, i, ops.levels(), &cuts))
            .collect();
        let l = spec.modes_per_site;
        let pairs = pair_parameters(spec, t0, t1)
            .into_iter()
            .map(|p| {
                Ok(PairStep {
                    left: (p.v / l, p.v % l),
                    right: (p.w / l, p.w % l),
                    map: enumerate_two_site_branches(&p, ops)?,
                    params: p,
                })
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        Ok(Self { sites, pairs })
    }
}

/// Per-step plans of a bosonic run at truncation `d`.
#[derive(Clone, Debug)]
pub struct BosonPlan<T: Real> {
    pub time: f64,
    pub steps: usize,
    pub d: usize,
    pub modes_per_site: usize,
    pub ops: TruncatedOps<T>,
    plans: Vec<BosonStepPlan<T>>,
    index: Vec<usize>,
}

impl<T: Real> BosonPlan<T> {
    pub fn new(spec: &ModelSpec, time: f64, steps: usize, d: usize) -> Result<Self, SimError> {
        if spec.kind != ParticleKind::Boson {
            return Err(SimError::Argument(
                "bosonic sampler needs a bosonic model".into(),
            ));
        }
        if !(time >= 0.0) || !time.is_finite() {
            return Err(SimError::Argument(format!(
                "run time {time} must be finite and non-negative"
            )));
        }
        if d == 0 {
            return Err(SimError::Argument("truncation must be at least 1".into()));
        }
        let ops = build_truncated_ops::<T>(d);
        let steps = if time == 0.0 { 0 } else { steps.max(1) };
        let delta = if steps == 0 { 0.0 } else { time / steps as f64 };
        let bp = spec.breakpoints();
        let mut plans = Vec::new();
        let mut index = Vec::with_capacity(steps);
        for s in 0..steps {
            let (t0, t1) = (s as f64 * delta, (s + 1) as f64 * delta);
            let repeat = s > 0 && !bp.iter().any(|&b| b > t0 - delta && b < t1);
            if !repeat {
                plans.push(BosonStepPlan::new(spec, &ops, t0, t1)?);
            }
            index.push(plans.len() - 1);
        }
        Ok(Self {
            time,
            steps,
            d,
            modes_per_site: spec.modes_per_site,
            ops,
            plans,
            index,
        })
    }

    pub fn step(&self, s: usize) -> &BosonStepPlan<T> {
        &self.plans[self.index[s]]
    }

    pub fn levels(&self) -> usize {
        self.d + 1
    }
}

/// Product of per-site density matrices with an accumulated log weight.
#[derive(Clone, Debug)]
pub struct BosonProductState<T: Real> {
    pub sites: Vec<CMat<T>>,
    pub modes_per_site: usize,
    pub levels: usize,
    pub log_weight: T,
}

impl<T: Real> BosonProductState<T> {
    /// Initial product state of `spec` on `d + 1` levels per mode.
    pub fn initial(spec: &ModelSpec, d: usize) -> Self {
        let levels = d + 1;
        let l = spec.modes_per_site;
        let local = |v: usize| -> DVector<Cx<T>> {
            match &spec.initial {
                InitialState::Fock(occ) => {
                    let mut e = DVector::zeros(levels);
                    e[occ[v].min(d)] = cx(1.0, 0.0);
                    e
                }
                InitialState::Coherent(amps) => coherent_amplitudes(amps[v], levels),
            }
        };
        let sites = (0..spec.sites)
            .map(|i| {
                let mut psi = DVector::from_element(1, cx::<T>(1.0, 0.0));
                for s in 0..l {
                    psi = psi.kronecker(&local(spec.mode(i, s)));
                }
                &psi * psi.adjoint()
            })
            .collect();
        Self {
            sites,
            modes_per_site: l,
            levels,
            log_weight: T::zero(),
        }
    }

    pub fn modes(&self) -> usize {
        self.sites.len() * self.modes_per_site
    }

    fn marginal(&self, v: usize) -> CMat<T> {
        let l = self.modes_per_site;
        mode_marginal(&self.sites[v / l], l, self.levels, v % l)
    }

    pub fn occupation(&self, v: usize) -> f64 {
        let r = self.marginal(v);
        (0..self.levels)
            .map(|k| k as f64 * to_f64(r[(k, k)].re))
            .sum()
    }

    /// Probability of the occupation pattern `occ` (one entry per mode).
    pub fn fock_probability(&self, occ: &[usize]) -> f64 {
        let l = self.modes_per_site;
        let mut p = 1.0;
        for (i, rho) in self.sites.iter().enumerate() {
            let idx = occ[i * l..(i + 1) * l]
                .iter()
                .fold(0, |acc, &k| acc * self.levels + k);
            p *= to_f64(rho[(idx, idx)].re);
        }
        p
    }

    /// Draws a Fock configuration site by site from the diagonals.
    pub fn sample_fock<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.modes());
        for rho in &self.sites {
            let diag: Vec<f64> = (0..rho.nrows())
                .map(|b| to_f64(rho[(b, b)].re).max(0.0))
                .collect();
            let b = categorical(rng, &diag);
            out.extend(boson_occupations(b, self.modes_per_site, self.levels));
        }
        out
    }

    /// Kronecker product of the site matrices (site 0 most significant).
    pub fn to_dense(&self) -> CMat<T> {
        let mut out = CMat::from_element(1, 1, cx(1.0, 0.0));
        for rho in &self.sites {
            out = out.kronecker(rho);
        }
        out
    }

    /// Every site matrix Hermitian, unit trace and positive semidefinite.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, rho) in self.sites.iter().enumerate() {
            let herm = to_f64(max_abs_entry(&(rho - rho.adjoint())));
            if herm > 1e-10 {
                return Err(format!("site {i} not Hermitian ({herm:e})"));
            }
            let tr = rho.trace();
            if (to_f64(tr.re) - 1.0).abs() > 1e-9 || to_f64(tr.im).abs() > 1e-9 {
                return Err(format!("site {i} trace {tr}"));
            }
            let min = to_f64(hermitian_eigenvalues(rho)[0]);
            if min < -1e-8 {
                return Err(format!("site {i} has eigenvalue {min:e}"));
            }
        }
        if !to_f64(self.log_weight).is_finite() {
            return Err("log weight is not finite".into());
        }
        Ok(())
    }
}

/// `c^+ G c` for the Gram expectations `G` (row-major) of a basis.
fn quadratic_form<T: Real>(g: &[Cx<T>], c: &[Cx<T>]) -> f64 {
    let n = c.len();
    let mut s = Cx::new(T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            s += c[i].conj() * g[i * n + j] * c[j];
        }
    }
    to_f64(s.re)
}

fn gram_expectations<T: Real>(gram: &[CMat<T>], rho_t: &[Cx<T>]) -> Vec<Cx<T>> {
    gram.iter()
        .map(|e| {
            let mut s = Cx::new(T::zero(), T::zero());
            for (x, y) in e.as_slice().iter().zip(rho_t) {
                s += *x * *y;
            }
            s
        })
        .collect()
}

/// Posterior weights `prior * tr(A^+ A rho_v) tr(B^+ B rho_w)` of every branch.
pub fn branch_weights<T: Real>(map: &TwoSiteMap<T>, rho_v: &CMat<T>, rho_w: &CMat<T>) -> Vec<f64> {
    let tv = rho_v.transpose();
    let tw = rho_w.transpose();
    let mut out = Vec::with_capacity(map.len());
    for f in &map.families {
        let gl = gram_expectations(&f.left_gram, tv.as_slice());
        let gr = gram_expectations(&f.right_gram, tw.as_slice());
        for m in &f.members {
            let wl = quadratic_form(&gl, &m.left).max(0.0);
            let wr = quadratic_form(&gr, &m.right).max(0.0);
            out.push(m.prior * wl * wr);
        }
    }
    out
}

/// Samples one branch of `pair` from its posterior and applies it.
/// Returns the flat index of the chosen branch.
pub fn sample_two_site_step<T: Real, R: Rng + ?Sized>(
    state: &mut BosonProductState<T>,
    pair: &PairStep<T>,
    rng: &mut R,
) -> Result<usize, SimError> {
    let l = state.modes_per_site;
    let levels = state.levels;
    let (si, sv) = pair.left;
    let (sj, sw) = pair.right;
    let rv = mode_marginal(&state.sites[si], l, levels, sv);
    let rw = mode_marginal(&state.sites[sj], l, levels, sw);
    let weights = branch_weights(&pair.map, &rv, &rw);
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(SimError::Normalisation(format!(
            "pair ({}, {}) has total branch weight {total:e}",
            pair.params.v, pair.params.w
        )));
    }
    let k = categorical(rng, &weights);
    let (fi, mi) = pair.map.locate(k);
    let fam = &pair.map.families[fi];
    let apply = |rho: &CMat<T>, op: &CMat<T>, sigma: usize| -> CMat<T> {
        let out = sandwich_local(rho, op, l, levels, sigma);
        let tr = out.trace().re;
        let out = out / Cx::new(tr, T::zero());
        // restore exact Hermiticity lost to rounding
        (&out + out.adjoint()) * Cx::new(re::<T>(0.5), T::zero())
    };
    state.sites[si] = apply(&state.sites[si], &fam.left_operator(mi), sv);
    state.sites[sj] = apply(&state.sites[sj], &fam.right_operator(mi), sw);
    state.log_weight += re::<T>(total.ln());
    Ok(k)
}

/// Branch chosen for one pair during one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BosonEvent {
    pub step: usize,
    pub pair: (usize, usize),
    pub branch: usize,
}

#[derive(Clone, Debug)]
pub struct BosonTrajectory<T: Real> {
    pub state: BosonProductState<T>,
    pub stream: u64,
    /// Final Fock configuration drawn from the product state.
    pub sample: Vec<usize>,
    pub history: Option<Vec<BosonEvent>>,
}

pub fn apply_boson_step<T: Real, R: Rng + ?Sized>(
    state: &mut BosonProductState<T>,
    plan: &BosonStepPlan<T>,
    rng: &mut R,
    step: usize,
    history: &mut Option<Vec<BosonEvent>>,
) -> Result<(), SimError> {
    for (rho, s) in state.sites.iter_mut().zip(&plan.sites) {
        *rho = s.apply(rho);
    }
    for pair in &plan.pairs {
        let k = sample_two_site_step(state, pair, rng)?;
        if let Some(h) = history {
            h.push(BosonEvent {
                step,
                pair: (pair.params.v, pair.params.w),
                branch: k,
            });
        }
    }
    Ok(())
}

/// Runs one trajectory on stream `(seed, stream)` and draws its Fock sample.
pub fn run_boson_trajectory<T: Real>(
    plan: &BosonPlan<T>,
    init: &BosonProductState<T>,
    seed: u64,
    stream: u64,
    check_invariants: bool,
    record: bool,
) -> Result<BosonTrajectory<T>, SimError> {
    let mut rng = stream_rng(seed, stream);
    let mut state = init.clone();
    let mut history = record.then(Vec::new);
    for s in 0..plan.steps {
        apply_boson_step(&mut state, plan.step(s), &mut rng, s, &mut history)?;
        if check_invariants {
            state
                .check_invariants()
                .map_err(|e| SimError::Normalisation(format!("step {s}, stream {stream}: {e}")))?;
        }
    }
    let sample = state.sample_fock(&mut rng);
    Ok(BosonTrajectory {
        state,
        stream,
        sample,
        history,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BosonRunConfig {
    pub trajectories: usize,
    pub seed: u64,
    pub check_invariants: bool,
    pub record_history: bool,
}

impl BosonRunConfig {
    pub fn new(trajectories: usize, seed: u64) -> Self {
        Self {
            trajectories,
            seed,
            check_invariants: false,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BosonPopulation<T: Real> {
    pub trajectories: Vec<BosonTrajectory<T>>,
    pub seed: u64,
}

/// Independent trajectories in parallel; trajectory `i` uses stream `(seed, i)`.
pub fn run_boson_population<T: Real>(
    plan: &BosonPlan<T>,
    init: &BosonProductState<T>,
    cfg: &BosonRunConfig,
) -> Result<BosonPopulation<T>, SimError> {
    if cfg.trajectories == 0 {
        return Err(SimError::Argument(
            "a population needs at least one trajectory".into(),
        ));
    }
    let trajectories = (0..cfg.trajectories as u64)
        .into_par_iter()
        .map(|i| {
            run_boson_trajectory(
                plan,
                init,
                cfg.seed,
                i,
                cfg.check_invariants,
                cfg.record_history,
            )
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(BosonPopulation {
        trajectories,
        seed: cfg.seed,
    })
}

impl<T: Real> BosonPopulation<T> {
    pub fn log_weights(&self) -> Vec<f64> {
        self.trajectories
            .iter()
            .map(|t| to_f64(t.state.log_weight))
            .collect()
    }

    pub fn weights(&self) -> Result<Vec<f64>, SimError> {
        relative_weights(&self.log_weights())
    }

    pub fn estimate<F: Fn(&BosonProductState<T>) -> f64>(
        &self,
        f: F,
    ) -> Result<Estimate, SimError> {
        let w = self.weights()?;
        let vals: Vec<f64> = self.trajectories.iter().map(|t| f(&t.state)).collect();
        weighted_estimate(&w, &vals)
    }

    /// Weighted `<n_v>` from the exact site marginals.
    pub fn occupation(&self, v: usize) -> Result<Estimate, SimError> {
        self.estimate(|s| s.occupation(v))
    }

    /// Weighted mixture of the per-trajectory Fock distributions, indexed like the oracle basis.
    pub fn fock_distribution(&self) -> Result<Vec<f64>, SimError> {
        let w = self.weights()?;
        let first = &self.trajectories[0].state;
        let (m, levels) = (first.modes(), first.levels);
        let dim = levels.pow(m as u32);
        let total: f64 = w.iter().sum();
        let mut out = vec![0.0; dim];
        for (t, wi) in self.trajectories.iter().zip(&w) {
            if *wi == 0.0 {
                continue;
            }
            for (b, o) in out.iter_mut().enumerate() {
                *o += wi * t.state.fock_probability(&boson_occupations(b, m, levels));
            }
        }
        out.iter_mut().for_each(|x| *x /= total);
        Ok(out)
    }

    /// Histogram of the drawn Fock samples, weighted by trajectory weight.
    pub fn sample_histogram(&self) -> Result<Vec<f64>, SimError> {
        let w = self.weights()?;
        let first = &self.trajectories[0].state;
        let (m, levels) = (first.modes(), first.levels);
        let mut out = vec![0.0; levels.pow(m as u32)];
        let total: f64 = w.iter().sum();
        for (t, wi) in self.trajectories.iter().zip(&w) {
            let b = t.sample.iter().fold(0, |acc, &k| acc * levels + k);
            out[b] += wi / total;
        }
        Ok(out)
    }
}

/// Kraus operators of a channel given by its column-stacking superoperator.
pub fn kraus_from_superop<T: Real>(sup: &CMat<T>, dim: usize) -> Vec<CMat<T>> {
    // Choi matrix C[(a d + i, b d + j)] = Phi(|a><b|)[i, j]
    let mut choi = CMat::<T>::zeros(dim * dim, dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            let col = b * dim + a;
            for i in 0..dim {
                for j in 0..dim {
                    choi[(a * dim + i, b * dim + j)] = sup[(j * dim + i, col)];
                }
            }
        }
    }
    let (vals, vecs) = hermitian_eigen(&choi);
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l > T::zero())
        .map(|(k, &l)| {
            let s = l.sqrt();
            CMat::from_fn(dim, dim, |i, a| {
                vecs[(a * dim + i, k)] * Cx::new(s, T::zero())
            })
        })
        .collect()
}

/// Dense average of one planned step over all branches, on the full product
/// space (site 0 most significant). The result is not renormalised.
pub fn averaged_dense_step<T: Real>(
    plan: &BosonStepPlan<T>,
    l: usize,
    levels: usize,
    rho: &CMat<T>,
) -> CMat<T> {
    let sites = plan.sites.len();
    let site_dim = levels.pow(l as u32);
    let embed_site = |op: &CMat<T>, i: usize| -> CMat<T> {
        identity::<T>(site_dim.pow(i as u32))
            .kronecker(op)
            .kronecker(&identity::<T>(site_dim.pow((sites - 1 - i) as u32)))
    };
    let mut cur = rho.clone();
    for (i, s) in plan.sites.iter().enumerate() {
        let kraus = match s {
            SiteStep::Identity => continue,
            SiteStep::Unitary(u) => vec![u.clone()],
            SiteStep::Channel(sup) => kraus_from_superop(sup, site_dim),
        };
        let mut out = CMat::zeros(cur.nrows(), cur.ncols());
        for k in &kraus {
            let full = embed_site(k, i);
            out += &full * &cur * full.adjoint();
        }
        cur = out;
    }
    for pair in &plan.pairs {
        let full = |op: &CMat<T>, (site, sigma): (usize, usize)| {
            embed_site(&embed_local(op, l, levels, sigma), site)
        };
        let mut out = CMat::zeros(cur.nrows(), cur.ncols());
        for b in &pair.map.branches() {
            let op = full(&b.left, pair.left) * full(&b.right, pair.right);
            out += &op * &cur * op.adjoint() * cx::<T>(b.prior, 0.0);
        }
        cur = out;
    }
    cur
}
