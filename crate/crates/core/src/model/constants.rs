//! Model-level constants and threshold checks.

use super::spec::{sample_times, ModelSpec, ParticleKind};
use num_complex::Complex64;
use serde::Serialize;

/// Constants derived from a model, each maximised over modes and schedule regions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub j_c: f64,
    pub j_os: f64,
    pub u_c: f64,
    pub u_os: f64,
    pub omega: f64,
    pub kappa: f64,
    pub squeezing: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Moment constant `C`; infinite when `gamma <= 0`.
    pub moment_c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d0: f64,
    pub k0: f64,
}

impl DerivedConstants {
    pub fn compute(spec: &ModelSpec) -> Self {
        let mut j_c: f64 = 0.0;
        let mut j_os: f64 = 0.0;
        let mut u_c: f64 = 0.0;
        let mut u_os: f64 = 0.0;
        let mut omega: f64 = 0.0;
        let mut squeezing: f64 = 0.0;
        let m = spec.num_modes();
        for t in sample_times(&spec.breakpoints()) {
            let j = spec.gaussian_matrix_at(t);
            let u = spec.interaction_at(t);
            let o = spec.displacement_at(t);
            for v in 0..m {
                let (mut jc, mut jos, mut uc, mut uos, mut g) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for w in 0..m {
                    let mut block = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            block += j[(2 * v + a, 2 * w + b)].norm();
                        }
                    }
                    if spec.site_of(v) == spec.site_of(w) {
                        jos += block;
                        uos += u[(v, w)].abs();
                    } else {
                        jc += block;
                        uc += u[(v, w)].abs();
                    }
                    if spec.kind == ParticleKind::Boson {
                        g += squeezing_entry(&j, v, w).norm();
                    }
                }
                j_c = j_c.max(jc);
                j_os = j_os.max(jos);
                u_c = u_c.max(uc);
                u_os = u_os.max(uos);
                squeezing = squeezing.max(g);
                omega = omega.max(o[2 * v].abs() + o[2 * v + 1].abs());
            }
        }
        let nz = spec.noise;
        let kappa = nz.kappa1 + nz.kappa2 + nz.kappa3;
        let gamma = 0.5 * (nz.kappa1 - nz.kappa2 - 2.0 * squeezing);
        let lambda = j_c + u_c + j_os + u_os + kappa + omega;
        let a = spec.assumption;
        let alpha = a.alpha0.max(1.0);
        let beta = a.beta0;
        let moment_c = if gamma > 0.0 {
            (1.0 + 4.0 * omega * omega / (gamma * gamma)
                + 2.0 * squeezing / gamma
                + 4.0 * (nz.kappa1 + nz.kappa2) / gamma)
                .exp()
                * (a.c0 + 2.0)
        } else {
            f64::INFINITY
        };
        Self {
            j_c,
            j_os,
            u_c,
            u_os,
            omega,
            kappa,
            squeezing,
            gamma,
            lambda,
            moment_c,
            alpha,
            beta,
            d0: std::f64::consts::E * moment_c,
            k0: beta / alpha,
        }
    }
}

/// Two-mode squeezing amplitude between bosonic modes `v` and `w`.
pub fn squeezing_entry(j: &nalgebra::DMatrix<Complex64>, v: usize, w: usize) -> Complex64 {
    let i = Complex64::i();
    (j[(2 * v, 2 * w)] + i * j[(2 * v, 2 * w + 1)] + i * j[(2 * v + 1, 2 * w)]
        - j[(2 * v + 1, 2 * w + 1)])
        * 0.5
}

/// Hopping amplitude between bosonic modes `v` and `w`.
pub fn hopping_entry(j: &nalgebra::DMatrix<Complex64>, v: usize, w: usize) -> Complex64 {
    let i = Complex64::i();
    (j[(2 * v, 2 * w)] - i * j[(2 * v, 2 * w + 1)] - i * j[(2 * v + 1, 2 * w)]
        + j[(2 * v + 1, 2 * w + 1)])
        * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThresholdKind {
    /// Dephasing strong enough for a convex-Gaussian interaction channel.
    FermionConvexGaussian,
    /// Noise strong enough for a separable two-site channel.
    BosonSeparable,
    /// Loss dominating gain and squeezing.
    BosonMoment,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub kind: ThresholdKind,
    pub ok: bool,
    pub margin: f64,
    pub detail: String,
}

const THRESHOLD_SLACK: f64 = 1e-12;

pub fn check_thresholds(spec: &ModelSpec, kind: ThresholdKind) -> ThresholdReport {
    let c = DerivedConstants::compute(spec);
    let nz = spec.noise;
    let (margin, detail) = match kind {
        ThresholdKind::FermionConvexGaussian => {
            let need = 2.0 * (c.u_c + c.u_os);
            (
                nz.kappa3 - need,
                format!("kappa3 = {} vs 2 (U_C + U_os) = {need}", nz.kappa3),
            )
        }
        ThresholdKind::BosonSeparable => {
            let need_j = 2.0 * c.j_c;
            let need_u = 2.0 * c.u_c;
            let m = (nz.kappa1 - need_j)
                .min(nz.kappa2 - need_j)
                .min(nz.kappa3 - need_u);
            (
                m,
                format!(
                    "kappa1 = {}, kappa2 = {} vs 2 J_C = {need_j}; kappa3 = {} vs 2 U_C = {need_u}",
                    nz.kappa1, nz.kappa2, nz.kappa3
                ),
            )
        }
        ThresholdKind::BosonMoment => (c.gamma, format!("gamma = {}", c.gamma)),
    };
    let strict = kind == ThresholdKind::BosonMoment;
    let scale = 1.0 + nz.kappa1.abs() + nz.kappa2.abs() + nz.kappa3.abs();
    let ok = if strict {
        margin > 0.0
    } else {
        margin >= -THRESHOLD_SLACK * scale
    };
    ThresholdReport {
        kind,
        ok,
        margin,
        detail,
    }
}

/// Which dissipator is being distributed over pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseChannel {
    Loss,
    Gain,
    Dephasing,
}

impl NoiseChannel {
    pub fn rate(self, spec: &ModelSpec) -> f64 {
        match self {
            NoiseChannel::Loss => spec.noise.kappa1,
            NoiseChannel::Gain => spec.noise.kappa2,
            NoiseChannel::Dephasing => spec.noise.kappa3,
        }
    }
}

/// Per-pair noise weights `(p, q)` of the pair `(v, w)` at time `t`.
///
/// Fermions split dephasing over ordered pairs (including `v == w`) with the
/// half-weight convention. Bosons split all three dissipators over inter-site
/// pairs. A vanishing denominator yields weight 0.
pub fn noise_split_weights(
    spec: &ModelSpec,
    v: usize,
    w: usize,
    channel: NoiseChannel,
    t: f64,
) -> (f64, f64) {
    let m = spec.num_modes();
    match spec.kind {
        ParticleKind::Fermion => {
            if channel != NoiseChannel::Dephasing {
                return (0.0, 0.0);
            }
            let u = spec.interaction_at(t);
            let num = u[(v, w)].abs();
            let den_p: f64 = (0..m).map(|k| u[(v, k)].abs()).sum();
            let den_q: f64 = (0..m).map(|k| u[(k, w)].abs()).sum();
            (ratio(0.5 * num, den_p), ratio(0.5 * num, den_q))
        }
        ParticleKind::Boson => {
            if spec.site_of(v) == spec.site_of(w) {
                return (0.0, 0.0);
            }
            let weight = |a: usize, b: usize| -> f64 {
                match channel {
                    NoiseChannel::Dephasing => spec.interaction_at(t)[(a, b)].abs(),
                    _ => {
                        let j = spec.gaussian_matrix_at(t);
                        let mut s = 0.0;
                        for x in 0..2 {
                            for y in 0..2 {
                                s += j[(2 * a + x, 2 * b + y)].norm();
                            }
                        }
                        s
                    }
                }
            };
            let num = weight(v, w);
            let den = |a: usize| -> f64 {
                (0..m)
                    .filter(|&k| spec.site_of(k) != spec.site_of(a))
                    .map(|k| weight(a, k))
                    .sum()
            };
            (ratio(num, den(v)), ratio(num, den(w)))
        }
    }
}

/// Whether mode `v` has any pair partner to absorb the given dissipator at time `t`.
pub fn noise_is_distributed(spec: &ModelSpec, v: usize, channel: NoiseChannel, t: f64) -> bool {
    let m = spec.num_modes();
    (0..m).any(|w| {
        let (p, _) = noise_split_weights(spec, v, w, channel, t);
        let (_, q) = noise_split_weights(spec, w, v, channel, t);
        p > 0.0 || q > 0.0
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
