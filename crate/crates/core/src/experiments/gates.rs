//! Qubit gates inside bosonic modes under a capped drive, and their noisy fidelity.
//!
//! One mode evolves under `H = U a^+2 a^2 + (L1 a^+ + L2 a^+2 + h.c.) + D a^+ a`
//! with loss `k1 D_a` and gain `k2 D_{a^+}`. The qubit is `{|0>, |1>}`.
//! Phase gates run `D n` directly. `sqrt X` moves to the frame `a -> a + alpha`,
//! where the coefficients below leave `U a^+2 a^2 + 2 U alpha (a^+ (n - 1) + h.c.)`,
//! blockaded on the qubit and rotating it about `X` at rate `2 U |alpha|`.
//! Two modes are entangled by a 50:50 beam splitter, self-Kerr for `U t = pi/2`
//! and the inverse splitter, which maps `|11> -> -|11>`.

use super::output::{num, Table};
use crate::error::{Result, SimError};
use crate::linalg::{kron, SparseOp};
use crate::oracle::ops::boson_local_annihilation;
use crate::oracle::{gate_fidelity, noise_error_bound, pt_min_eigenvalue, Liouvillian};
use crate::scalar::{cx, CMat};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Default cap on the frame displacement.
pub const DEFAULT_ALPHA_CAP: f64 = 2.5;

/// Boundary population at which a demo run is rejected.
pub const BOUNDARY_ERROR: f64 = 1e-4;

/// Default truncation (highest level) for gates that stay near the code space.
pub const DEFAULT_SMALL_TRUNCATION: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateTarget {
    S,
    T,
    SqrtX,
    Entangling,
}

impl GateTarget {
    pub fn name(self) -> &'static str {
        match self {
            GateTarget::S => "S",
            GateTarget::T => "T",
            GateTarget::SqrtX => "sqrtX",
            GateTarget::Entangling => "entangling",
        }
    }

    pub fn modes(self) -> usize {
        match self {
            GateTarget::Entangling => 2,
            _ => 1,
        }
    }

    /// Ideal gate on the code space (computational basis, mode 1 most significant).
    pub fn unitary(self) -> CMat<f64> {
        let z = cx(0.0, 0.0);
        let one = cx(1.0, 0.0);
        match self {
            GateTarget::S => CMat::from_row_slice(2, 2, &[one, z, z, cx(0.0, 1.0)]),
            GateTarget::T => {
                CMat::from_row_slice(2, 2, &[one, z, z, Complex64::from_polar(1.0, PI / 4.0)])
            }
            GateTarget::SqrtX => {
                let (p, m) = (cx(0.5, 0.5), cx(0.5, -0.5));
                CMat::from_row_slice(2, 2, &[p, m, m, p])
            }
            GateTarget::Entangling => {
                let mut u = CMat::identity(4, 4);
                u[(3, 3)] = cx(-1.0, 0.0);
                u
            }
        }
    }
}

impl std::str::FromStr for GateTarget {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" => Ok(GateTarget::S),
            "T" | "t" => Ok(GateTarget::T),
            "sqrtX" | "sqrtx" | "sx" => Ok(GateTarget::SqrtX),
            "entangling" | "cz" | "CZ" => Ok(GateTarget::Entangling),
            _ => Err(SimError::Argument(format!(
                "unknown gate `{s}` (S | T | sqrtX | entangling)"
            ))),
        }
    }
}

/// Lab-frame coefficients at one instant; `g` is the beam-splitter rate
/// `H = i g (a1 a2^+ - a1^+ a2)` and is only used with two modes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Coefficients {
    pub u: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub delta: f64,
    pub g: f64,
}

impl Coefficients {
    fn max_drive(&self) -> f64 {
        self.lambda1
            .norm()
            .max(self.lambda2.norm())
            .max(self.delta.abs())
            .max(self.g.abs())
    }

    /// Convex combination used by the fourth-order Magnus exponentials (weights need not sum to 1).
    fn combine(a: &Self, wa: f64, b: &Self, wb: f64) -> Self {
        Self {
            u: wa * a.u + wb * b.u,
            lambda1: a.lambda1 * wa + b.lambda1 * wb,
            lambda2: a.lambda2 * wa + b.lambda2 * wb,
            delta: wa * a.delta + wb * b.delta,
            g: wa * a.g + wb * b.g,
        }
    }
}

/// Coefficients `(D~, L1~, L2~)` seen in the frame `a -> a + alpha` (real `alpha`).
pub fn frame_coefficients(
    lab: &Coefficients,
    alpha: f64,
    alpha_dot: f64,
    kappa1: f64,
    kappa2: f64,
) -> (f64, Complex64, Complex64) {
    let u = lab.u;
    let delta = lab.delta + 4.0 * u * alpha * alpha;
    let lambda2 = lab.lambda2 + u * alpha * alpha;
    let lambda1 =
        lab.lambda1 + alpha * lab.delta + lab.lambda2 * (2.0 * alpha) + 2.0 * u * alpha.powi(3)
            - Complex64::new(0.0, 0.5 * (kappa1 - kappa2) * alpha)
            - Complex64::new(0.0, alpha_dot);
    (delta, lambda1, lambda2)
}

/// Lab coefficients giving `D~ = L2~ = 0` and `L1~ = -2 U alpha` in the displaced frame.
pub fn blockade_coefficients(
    u: f64,
    alpha: f64,
    alpha_dot: f64,
    kappa1: f64,
    kappa2: f64,
) -> Coefficients {
    Coefficients {
        u,
        lambda1: Complex64::new(
            -2.0 * u * alpha + 4.0 * u * alpha.powi(3),
            alpha_dot + 0.5 * (kappa1 - kappa2) * alpha,
        ),
        lambda2: cx(-u * alpha * alpha, 0.0),
        delta: -4.0 * u * alpha * alpha,
        g: 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Drive {
    Constant(Coefficients),
    /// Blockade coefficients along the linear path `alpha0 -> alpha1`.
    Frame {
        u: f64,
        alpha0: f64,
        alpha1: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateInterval {
    pub t0: f64,
    pub t1: f64,
    pub drive: Drive,
}

impl GateInterval {
    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    fn is_constant(&self) -> bool {
        match self.drive {
            Drive::Constant(_) => true,
            Drive::Frame { alpha0, alpha1, .. } => alpha0 == alpha1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateProtocolSchedule {
    pub target: GateTarget,
    pub cap: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Frame displacement on the blockaded plateau (0 for gates without a frame).
    pub alpha_f: f64,
    pub intervals: Vec<GateInterval>,
}

impl GateProtocolSchedule {
    pub fn total_time(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.t1)
    }

    /// Lab coefficients at time `t` inside `interval`.
    pub fn coefficients(&self, interval: &GateInterval, t: f64) -> Coefficients {
        match interval.drive {
            Drive::Constant(c) => c,
            Drive::Frame { u, alpha0, alpha1 } => {
                let len = interval.duration();
                let rate = if len > 0.0 {
                    (alpha1 - alpha0) / len
                } else {
                    0.0
                };
                let alpha = alpha0 + rate * (t - interval.t0);
                blockade_coefficients(u, alpha, rate, self.kappa1, self.kappa2)
            }
        }
    }

    /// Largest `|L1|, |L2|, |D|, |g|` over the schedule (frame intervals sampled densely).
    pub fn max_drive(&self) -> f64 {
        let mut m: f64 = 0.0;
        for iv in &self.intervals {
            let samples = if iv.is_constant() { 1 } else { 257 };
            for k in 0..=samples {
                let t = iv.t0 + iv.duration() * k as f64 / samples as f64;
                m = m.max(self.coefficients(iv, t).max_drive());
            }
        }
        m
    }
}

/// Frame displacement `-min(cap, (P / 8U)^(1/3))`.
pub fn frame_displacement(u: f64, p: f64, cap: f64) -> f64 {
    -(p / (8.0 * u)).cbrt().min(cap)
}

/// Highest Fock level kept for a frame displacement `alpha`.
pub fn frame_truncation(alpha: f64) -> usize {
    let a = alpha.abs();
    (a * a + 6.0 * a + 10.0).ceil() as usize
}

fn constant(t0: f64, len: f64, c: Coefficients) -> GateInterval {
    GateInterval {
        t0,
        t1: t0 + len,
        drive: Drive::Constant(c),
    }
}

/// Lab-frame schedule for `target` with every drive coefficient capped by `p`.
pub fn build_gate_schedule(
    target: GateTarget,
    u: f64,
    p: f64,
    kappa1: f64,
    kappa2: f64,
    alpha_cap: f64,
) -> Result<GateProtocolSchedule> {
    if !(p > 0.0) || !(u > 0.0) && matches!(target, GateTarget::SqrtX | GateTarget::Entangling) {
        return Err(SimError::Argument(format!(
            "gate needs P > 0 and U > 0 (P = {p}, U = {u})"
        )));
    }
    if kappa1 < 0.0 || kappa2 < 0.0 {
        return Err(SimError::Argument(
            "noise rates must be non-negative".into(),
        ));
    }
    let mut alpha_f = 0.0;
    let intervals = match target {
        GateTarget::S | GateTarget::T => {
            // e^{-i D t n} with D t = 3pi/2 gives diag(1, i); 7pi/4 gives diag(1, e^{i pi/4})
            let angle = if target == GateTarget::S {
                1.5 * PI
            } else {
                1.75 * PI
            };
            let c = Coefficients {
                delta: p,
                ..Default::default()
            };
            vec![constant(0.0, angle / p, c)]
        }
        GateTarget::SqrtX => {
            alpha_f = frame_displacement(u, p, alpha_cap);
            if p <= alpha_f.abs() {
                return Err(SimError::Plan(format!(
                    "P = {p} does not exceed the displacement {}",
                    alpha_f.abs()
                )));
            }
            // ramps at |alpha'| = P/2 each rotate the qubit by U |alpha_F| t_ramp
            let ramp = 2.0 * alpha_f.abs() / p;
            let hold = PI / (8.0 * u * alpha_f.abs()) - ramp;
            if hold < 0.0 {
                return Err(SimError::Plan(format!(
                    "ramps alone overshoot the rotation at P = {p}"
                )));
            }
            let frame = |t0: f64, len: f64, alpha0: f64, alpha1: f64| GateInterval {
                t0,
                t1: t0 + len,
                drive: Drive::Frame { u, alpha0, alpha1 },
            };
            vec![
                frame(0.0, ramp, 0.0, alpha_f),
                frame(ramp, hold, alpha_f, alpha_f),
                frame(ramp + hold, ramp, alpha_f, 0.0),
            ]
        }
        GateTarget::Entangling => {
            let mix = PI / (4.0 * p);
            let kerr = PI / (2.0 * u);
            let bs = |g: f64| Coefficients {
                g,
                ..Default::default()
            };
            vec![
                constant(0.0, mix, bs(p)),
                constant(
                    mix,
                    kerr,
                    Coefficients {
                        u,
                        ..Default::default()
                    },
                ),
                constant(mix + kerr, mix, bs(-p)),
            ]
        }
    };
    let schedule = GateProtocolSchedule {
        target,
        cap: p,
        kappa1,
        kappa2,
        alpha_f,
        intervals,
    };
    let worst = schedule.max_drive();
    if worst > p * (1.0 + 1e-12) {
        return Err(SimError::Plan(format!(
            "{} needs drive {worst:.4} above the cap P = {p}",
            target.name()
        )));
    }
    Ok(schedule)
}

/// Single-mode and two-mode operators on `levels` Fock states per mode.
struct GateOperators {
    modes: usize,
    a: Vec<CMat<f64>>,
}

impl GateOperators {
    fn new(modes: usize, levels: usize) -> Self {
        let a1 = boson_local_annihilation::<f64>(levels);
        let id = CMat::<f64>::identity(levels, levels);
        let a = match modes {
            1 => vec![a1],
            _ => vec![kron(&a1, &id), kron(&id, &a1)],
        };
        Self { modes, a }
    }

    fn dim(&self) -> usize {
        self.a[0].nrows()
    }

    fn hamiltonian(&self, c: &Coefficients) -> CMat<f64> {
        let dim = self.dim();
        let mut h = CMat::<f64>::zeros(dim, dim);
        for a in &self.a {
            let ad = a.adjoint();
            let ad2 = &ad * &ad;
            let a2 = a * a;
            h += &ad2 * &a2 * cx(c.u, 0.0);
            h += &ad * c.lambda1 + a * c.lambda1.conj();
            h += &ad2 * c.lambda2 + &a2 * c.lambda2.conj();
            h += &ad * a * cx(c.delta, 0.0);
        }
        if self.modes == 2 && c.g != 0.0 {
            let hop = &self.a[0] * self.a[1].adjoint() - self.a[0].adjoint() * &self.a[1];
            h += hop * cx(0.0, c.g);
        }
        h
    }

    /// Generator with Hamiltonian `c` and dissipators scaled by `weight`.
    fn liouvillian(
        &self,
        c: &Coefficients,
        kappa1: f64,
        kappa2: f64,
        weight: f64,
    ) -> Liouvillian<f64> {
        let mut jumps = Vec::new();
        for a in &self.a {
            jumps.push((kappa1 * weight, SparseOp::from_dense(a)));
            jumps.push((kappa2 * weight, SparseOp::from_dense(&a.adjoint())));
        }
        Liouvillian::new(SparseOp::from_dense(&self.hamiltonian(c)), jumps)
    }

    /// Fock index of the code state `q` (mode 1 most significant bit).
    fn code_index(&self, q: usize, levels: usize) -> usize {
        (0..self.modes).fold(0, |acc, v| acc * levels + ((q >> (self.modes - 1 - v)) & 1))
    }
}

/// Substep count for the time-dependent frame intervals.
fn magnus_steps(interval: &GateInterval, cap: f64) -> usize {
    ((interval.duration() * cap / 0.01).ceil() as usize).max(32)
}

/// Evolves `rho` through the schedule. Time-dependent intervals use the
/// commutator-free fourth-order Magnus integrator; since the generator is linear
/// in the coefficients, each factor is itself a Lindblad generator.
fn evolve_schedule(
    schedule: &GateProtocolSchedule,
    ops: &GateOperators,
    rho: &CMat<f64>,
) -> CMat<f64> {
    let (k1, k2) = (schedule.kappa1, schedule.kappa2);
    let s3 = 3f64.sqrt();
    let (w1, w2) = ((3.0 - 2.0 * s3) / 12.0, (3.0 + 2.0 * s3) / 12.0);
    let (c1, c2) = (0.5 - s3 / 6.0, 0.5 + s3 / 6.0);
    let mut cur = rho.clone();
    for iv in &schedule.intervals {
        if iv.is_constant() {
            let c = schedule.coefficients(iv, iv.t0);
            cur = ops
                .liouvillian(&c, k1, k2, 1.0)
                .propagate(&cur, iv.duration());
            continue;
        }
        let n = magnus_steps(iv, schedule.cap);
        let h = iv.duration() / n as f64;
        for k in 0..n {
            let t = iv.t0 + k as f64 * h;
            let a = schedule.coefficients(iv, t + c1 * h);
            let b = schedule.coefficients(iv, t + c2 * h);
            // exp(h (w2 L_a + w1 L_b)) exp(h (w1 L_a + w2 L_b)) rho, the right factor first
            let first = Coefficients::combine(&a, w1, &b, w2);
            let second = Coefficients::combine(&a, w2, &b, w1);
            cur = ops.liouvillian(&first, k1, k2, 0.5).propagate(&cur, h);
            cur = ops.liouvillian(&second, k1, k2, 0.5).propagate(&cur, h);
        }
    }
    cur
}

/// Channel applied to the code-space matrix units `|i><j|`, with the largest
/// boundary-level population seen over all units.
pub struct CodeChannel {
    pub code: Vec<usize>,
    pub levels: usize,
    /// `outputs[i * k + j]` is the image of `|i><j|`.
    pub outputs: Vec<CMat<f64>>,
    pub boundary_population: f64,
}

impl CodeChannel {
    pub fn apply(&self, input: &CMat<f64>) -> CMat<f64> {
        let k = self.code.len();
        let mut out = CMat::zeros(self.outputs[0].nrows(), self.outputs[0].ncols());
        for i in 0..k {
            for j in 0..k {
                if input[(i, j)] != cx(0.0, 0.0) {
                    out += &self.outputs[i * k + j] * input[(i, j)];
                }
            }
        }
        out
    }
}

/// Runs the schedule on every matrix unit of the code space at truncation `d`.
pub fn code_channel(schedule: &GateProtocolSchedule, d: usize) -> CodeChannel {
    let levels = d + 1;
    let ops = GateOperators::new(schedule.target.modes(), levels);
    let dim = ops.dim();
    let k = 1usize << ops.modes;
    let code: Vec<usize> = (0..k).map(|q| ops.code_index(q, levels)).collect();
    let mut outputs = Vec::with_capacity(k * k);
    for &ci in &code {
        for &cj in &code {
            let mut unit = CMat::<f64>::zeros(dim, dim);
            unit[(ci, cj)] = cx(1.0, 0.0);
            outputs.push(evolve_schedule(schedule, &ops, &unit));
        }
    }
    // population of any mode in its top level, for the diagonal inputs
    let boundary_population = (0..k)
        .map(|q| {
            let out = &outputs[q * k + q];
            (0..dim)
                .filter(|&b| {
                    (0..ops.modes)
                        .any(|v| (b / levels.pow((ops.modes - 1 - v) as u32)) % levels == d)
                })
                .map(|b| out[(b, b)].re)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    CodeChannel {
        code,
        levels,
        outputs,
        boundary_population,
    }
}

/// The six Pauli eigenstates of one qubit.
fn pauli_states() -> Vec<CMat<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let kets = [
        [cx(1.0, 0.0), cx(0.0, 0.0)],
        [cx(0.0, 0.0), cx(1.0, 0.0)],
        [cx(r, 0.0), cx(r, 0.0)],
        [cx(r, 0.0), cx(-r, 0.0)],
        [cx(r, 0.0), cx(0.0, r)],
        [cx(r, 0.0), cx(0.0, -r)],
    ];
    kets.iter()
        .map(|k| {
            let v = nalgebra::DVector::from_row_slice(k);
            &v * v.adjoint()
        })
        .collect()
}

/// Inputs over which the fidelity is averaged: Pauli eigenstates, or their products for two qubits.
pub fn fidelity_inputs(modes: usize) -> Vec<CMat<f64>> {
    let single = pauli_states();
    match modes {
        1 => single,
        _ => single
            .iter()
            .flat_map(|a| single.iter().map(move |b| kron(a, b)))
            .collect(),
    }
}

/// Average trace-overlap fidelity with the target over [`fidelity_inputs`].
pub fn average_fidelity(channel: &CodeChannel, target: GateTarget) -> Result<f64> {
    let u = target.unitary();
    let inputs = fidelity_inputs(target.modes());
    let mut total = 0.0;
    for input in &inputs {
        let out = channel.apply(input);
        total += gate_fidelity(&out, input, &u, &channel.code)?.fidelity;
    }
    Ok(total / inputs.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateDemoRow {
    pub p: f64,
    pub alpha_f: f64,
    pub truncation: usize,
    pub fidelity: f64,
    pub bound: f64,
    pub total_time: f64,
    pub boundary_population: f64,
}

impl GateDemoRow {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateDemoConfig {
    pub target: GateTarget,
    pub u: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub alpha_cap: f64,
    /// Highest Fock level; `None` picks it from the displacement.
    pub truncation: Option<usize>,
}

impl Default for GateDemoConfig {
    /// Demo noise: `U = 0.1`, `kappa1 = 0.01`, `kappa2 = 0.002`.
    fn default() -> Self {
        GateDemoConfig {
            target: GateTarget::SqrtX,
            u: 0.1,
            kappa1: 0.01,
            kappa2: 0.002,
            alpha_cap: DEFAULT_ALPHA_CAP,
            truncation: None,
        }
    }
}

/// One demo point: schedule, evolution and fidelity at cap `p`.
pub fn gate_demo_point(cfg: &GateDemoConfig, p: f64) -> Result<GateDemoRow> {
    let schedule =
        build_gate_schedule(cfg.target, cfg.u, p, cfg.kappa1, cfg.kappa2, cfg.alpha_cap)?;
    let d = cfg.truncation.unwrap_or(match cfg.target {
        GateTarget::SqrtX => frame_truncation(schedule.alpha_f),
        _ => DEFAULT_SMALL_TRUNCATION,
    });
    if d < 2 {
        return Err(SimError::Argument(
            "gate demo needs at least three Fock levels".into(),
        ));
    }
    let channel = code_channel(&schedule, d);
    if channel.boundary_population > BOUNDARY_ERROR {
        return Err(SimError::Plan(format!(
            "boundary population {:.2e} at d = {d} exceeds {BOUNDARY_ERROR:.0e}",
            channel.boundary_population
        )));
    }
    let fidelity = average_fidelity(&channel, cfg.target)?;
    let t = schedule.total_time();
    Ok(GateDemoRow {
        p,
        alpha_f: schedule.alpha_f,
        truncation: d,
        fidelity,
        // code states hold at most one particle per mode
        bound: noise_error_bound(cfg.target.modes(), cfg.kappa1 + cfg.kappa2, t, 1),
        total_time: t,
        boundary_population: channel.boundary_population,
    })
}

pub fn gate_demo(cfg: &GateDemoConfig, ps: &[f64]) -> Result<Vec<GateDemoRow>> {
    ps.iter().map(|&p| gate_demo_point(cfg, p)).collect()
}

pub fn gate_demo_table(target: GateTarget, rows: &[GateDemoRow]) -> Table {
    let mut t = Table::new(&[
        "gate",
        "P[E]",
        "alpha_F[-]",
        "d[-]",
        "fidelity[-]",
        "infidelity[-]",
        "bound[-]",
        "total_time[1/E]",
        "boundary_pop[-]",
    ]);
    for r in rows {
        t.push(vec![
            target.name().into(),
            num(r.p),
            num(r.alpha_f),
            r.truncation.to_string(),
            num(r.fidelity),
            num(r.infidelity()),
            num(r.bound),
            num(r.total_time),
            num(r.boundary_population),
        ]);
    }
    t
}

/// Smallest partial-transpose eigenvalue of the normalised two-qubit block after
/// the entangling gate acts on `|+>|+>`.
pub fn entangling_output_negativity(u: f64, p: f64, kappa1: f64, kappa2: f64) -> Result<f64> {
    let schedule = build_gate_schedule(
        GateTarget::Entangling,
        u,
        p,
        kappa1,
        kappa2,
        DEFAULT_ALPHA_CAP,
    )?;
    let channel = code_channel(&schedule, DEFAULT_SMALL_TRUNCATION);
    let plus = CMat::from_element(2, 2, cx(0.5, 0.0));
    let out = channel.apply(&kron(&plus, &plus));
    let block = crate::oracle::project_onto(&out, &channel.code);
    let tr = block.trace().re;
    Ok(pt_min_eigenvalue(&(block / cx(tr, 0.0)), 2, 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, max_abs_entry};
    use crate::oracle::ops::boson_local_number;

    #[test]
    fn s_gate_at_p10_is_one_interval() {
        let s = build_gate_schedule(GateTarget::S, 0.1, 10.0, 0.0, 0.0, DEFAULT_ALPHA_CAP).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!((s.total_time() - 3.0 * PI / 20.0).abs() < 1e-15);
        match s.intervals[0].drive {
            Drive::Constant(c) => assert_eq!(c.delta, 10.0),
            _ => panic!("phase gate has no frame"),
        }
    }

    #[test]
    fn blockade_coefficients_cancel_in_the_frame() {
        for &(u, alpha, rate, k1, k2) in &[
            (0.1, -2.1, 4.0, 0.05, 0.02),
            (0.3, 0.7, -1.5, 0.0, 0.4),
            (1.0, -0.2, 0.0, 1.0, 1.0),
        ] {
            let c = blockade_coefficients(u, alpha, rate, k1, k2);
            let (d, l1, l2) = frame_coefficients(&c, alpha, rate, k1, k2);
            assert!(d.abs() < 1e-12);
            assert!(l2.norm() < 1e-12);
            assert!((l1 + 2.0 * u * alpha).norm() < 1e-12);
        }
    }

    #[test]
    fn displaced_lab_generator_matches_the_blockade_frame() {
        // d/dt (D^+ rho D) = D^+ L(rho) D + alpha' [a - a^+, rho'] on a state near the code space
        let (u, alpha, rate, k1, k2) = (0.2, -0.6, 0.8, 0.07, 0.03);
        let levels = 70;
        let ops = GateOperators::new(1, levels);
        let a = &ops.a[0];
        let ad = a.adjoint();
        let disp = expm(&((&ad - a) * cx(alpha, 0.0)));
        let lab = ops.liouvillian(&blockade_coefficients(u, alpha, rate, k1, k2), k1, k2, 1.0);
        let mut rho = CMat::<f64>::zeros(levels, levels);
        rho[(0, 0)] = cx(0.6, 0.0);
        rho[(1, 1)] = cx(0.4, 0.0);
        rho[(0, 1)] = cx(0.2, 0.3);
        rho[(1, 0)] = cx(0.2, -0.3);
        let lab_rho = &disp * &rho * disp.adjoint();
        let x = a - &ad;
        let moved =
            disp.adjoint() * lab.apply(&lab_rho) * &disp + (&x * &rho - &rho * &x) * cx(rate, 0.0);

        let n = boson_local_number::<f64>(levels);
        let id = CMat::<f64>::identity(levels, levels);
        let hop = &ad * (&n - &id) * cx(2.0 * u * alpha, 0.0);
        let h = &ad * &ad * a * a * cx(u, 0.0) + &hop + hop.adjoint();
        let frame = Liouvillian::new(
            SparseOp::from_dense(&h),
            vec![
                (k1, SparseOp::from_dense(a)),
                (k2, SparseOp::from_dense(&ad)),
            ],
        );
        let want = frame.apply(&rho);
        let low = |m: &CMat<f64>| m.view((0, 0), (6, 6)).clone_owned();
        assert!(max_abs_entry(&(low(&moved) - low(&want))) < 1e-9);
    }

    #[test]
    fn sqrt_x_respects_the_cap_and_fails_when_infeasible() {
        for p in [2.0, 4.0, 8.0, 16.0] {
            let s = build_gate_schedule(GateTarget::SqrtX, 0.1, p, 0.05, 0.02, DEFAULT_ALPHA_CAP)
                .unwrap();
            assert!(s.max_drive() <= p * (1.0 + 1e-12));
            assert_eq!(s.intervals.len(), 3);
        }
        // the ramp needs P > |alpha_F|, and strong Kerr makes the ramps overshoot the rotation
        assert!(
            build_gate_schedule(GateTarget::SqrtX, 0.1, 1.0, 0.0, 0.0, DEFAULT_ALPHA_CAP).is_err()
        );
        assert!(build_gate_schedule(GateTarget::SqrtX, 10.0, 8.0, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn noiseless_gates_are_exact() {
        for (target, p) in [
            (GateTarget::S, 3.0),
            (GateTarget::T, 3.0),
            (GateTarget::SqrtX, 2.0),
            (GateTarget::Entangling, 2.0),
        ] {
            let cfg = GateDemoConfig {
                target,
                u: 0.1,
                kappa1: 0.0,
                kappa2: 0.0,
                alpha_cap: DEFAULT_ALPHA_CAP,
                truncation: None,
            };
            let row = gate_demo_point(&cfg, p).unwrap();
            assert!(
                row.infidelity() <= 1e-6,
                "{} {}",
                target.name(),
                row.infidelity()
            );
        }
    }

    #[test]
    fn entangling_gate_makes_a_bell_pair() {
        let e = entangling_output_negativity(0.2, 4.0, 0.0, 0.0).unwrap();
        assert!((e + 0.5).abs() < 1e-9, "{e}");
    }
}
