//! Lindblad generators and their exact propagation.

use super::ops::{
    boson_dim, boson_local_number, boson_local_quadrature, boson_projected_quadratic, embed_mode,
    fermion_annihilation, fermion_dim, fermion_majorana, fermion_number,
};
use crate::linalg::{expm, sandwich_superop, unvectorize, vectorize, SparseOp};
use crate::model::{ModelSpec, ParticleKind};
use crate::scalar::{cabs, cexp, cx, re, CMat, Cx, Real};

/// Largest Hilbert dimension for which the superoperator is exponentiated densely.
pub const DENSE_SUPEROP_MAX_DIM: usize = 16;

/// `L(rho) = -i [H, rho] + sum_k r_k (L_k rho L_k^+ - {L_k^+ L_k, rho} / 2)`.
#[derive(Clone, Debug)]
pub struct Liouvillian<T: Real> {
    pub dim: usize,
    pub hamiltonian: SparseOp<T>,
    pub jumps: Vec<(T, SparseOp<T>)>,
    heff: SparseOp<T>,
    heff_adj: SparseOp<T>,
    jumps_adj: Vec<SparseOp<T>>,
}

impl<T: Real> Liouvillian<T> {
    pub fn new(hamiltonian: SparseOp<T>, jumps: Vec<(T, SparseOp<T>)>) -> Self {
        let dim = hamiltonian.dim;
        let jumps: Vec<_> = jumps.into_iter().filter(|(r, _)| *r != T::zero()).collect();
        let jumps_adj: Vec<_> = jumps.iter().map(|(_, l)| l.adjoint()).collect();
        let mut heff = hamiltonian.clone();
        for ((rate, l), ld) in jumps.iter().zip(&jumps_adj) {
            heff = heff.add(&ld.mul(l).scale(Cx::new(T::zero(), -*rate * re::<T>(0.5))));
        }
        let heff_adj = heff.adjoint();
        Self {
            dim,
            hamiltonian,
            jumps,
            heff,
            heff_adj,
            jumps_adj,
        }
    }

    pub fn apply(&self, rho: &CMat<T>) -> CMat<T> {
        let mi = Cx::new(T::zero(), -T::one());
        let hr = self.heff.mul_dense(rho);
        let rh = self.heff_adj.dense_mul(rho);
        let mut out = (hr - rh) * mi;
        for ((rate, l), ld) in self.jumps.iter().zip(&self.jumps_adj) {
            let lr = l.mul_dense(rho);
            out += ld.dense_mul(&lr) * Cx::new(*rate, T::zero());
        }
        out
    }

    /// Dense superoperator in column-stacking convention.
    pub fn superoperator(&self) -> CMat<T> {
        let n = self.dim;
        let id = CMat::<T>::identity(n, n);
        let heff = self.heff.to_dense();
        let mi = Cx::new(T::zero(), -T::one());
        let mut s = (sandwich_superop(&heff, &id) - sandwich_superop(&id, &heff.adjoint())) * mi;
        for (rate, l) in &self.jumps {
            let ld = l.to_dense();
            s += sandwich_superop(&ld, &ld.adjoint()) * Cx::new(*rate, T::zero());
        }
        s
    }

    /// Upper bound on the generator norm used to size propagation substeps.
    pub fn norm_bound(&self) -> T {
        let mut b = re::<T>(2.0) * self.heff.spectral_norm_bound();
        for (rate, l) in &self.jumps {
            let s = l.spectral_norm_bound();
            b += *rate * s * s;
        }
        b
    }

    pub fn is_diagonal(&self) -> bool {
        self.hamiltonian.is_diagonal() && self.jumps.iter().all(|(_, l)| l.is_diagonal())
    }

    /// Propagates `rho` by `dt` under this (time-independent) generator.
    pub fn propagate(&self, rho: &CMat<T>, dt: T) -> CMat<T> {
        if dt == T::zero() {
            return rho.clone();
        }
        if self.is_diagonal() {
            self.propagate_diagonal(rho, dt)
        } else if self.dim <= DENSE_SUPEROP_MAX_DIM {
            let s = expm(&(self.superoperator() * Cx::new(dt, T::zero())));
            unvectorize(&(s * vectorize(rho)), self.dim)
        } else {
            self.propagate_taylor(rho, dt)
        }
    }

    fn propagate_diagonal(&self, rho: &CMat<T>, dt: T) -> CMat<T> {
        let h = self.hamiltonian.diagonal();
        let ls: Vec<(T, Vec<Cx<T>>)> = self.jumps.iter().map(|(r, l)| (*r, l.diagonal())).collect();
        let half = re::<T>(0.5);
        CMat::from_fn(self.dim, self.dim, |i, j| {
            let mut g = (h[i] - h[j].conj()) * Cx::new(T::zero(), -T::one());
            for (r, l) in &ls {
                let li = l[i];
                let lj = l[j];
                g += (li * lj.conj()
                    - Cx::new(
                        half * (cabs(li) * cabs(li) + cabs(lj) * cabs(lj)),
                        T::zero(),
                    ))
                    * Cx::new(*r, T::zero());
            }
            rho[(i, j)] * cexp(g * Cx::new(dt, T::zero()))
        })
    }

    /// Truncated Taylor series in substeps with `h * |L| <= 4`.
    fn propagate_taylor(&self, rho: &CMat<T>, dt: T) -> CMat<T> {
        let theta = re::<T>(4.0);
        let nu = self.norm_bound();
        let steps = crate::scalar::to_f64((nu * dt.abs()) / theta)
            .ceil()
            .max(1.0) as usize;
        let h = dt / re::<T>(steps as f64);
        let tol = re::<T>(1e-17);
        let mut cur = rho.clone();
        for _ in 0..steps {
            let mut term = cur.clone();
            let mut acc = cur.clone();
            let mut small = 0;
            for k in 1..=120 {
                term = self.apply(&term) * Cx::new(h / re::<T>(k as f64), T::zero());
                acc += &term;
                if crate::linalg::frobenius(&term) <= tol * crate::linalg::frobenius(&acc) {
                    small += 1;
                    if small == 2 {
                        break;
                    }
                } else {
                    small = 0;
                }
            }
            cur = acc;
        }
        cur
    }
}

/// Mode operators of a model's Hilbert space (Jordan-Wigner or truncated).
pub struct ModelOperators<T: Real> {
    pub kind: ParticleKind,
    pub modes: usize,
    /// Levels per mode (`d + 1`) for bosons, 2 for fermions.
    pub levels: usize,
    pub annihilation: Vec<SparseOp<T>>,
    pub number: Vec<SparseOp<T>>,
    pub quadratures: Vec<[SparseOp<T>; 2]>,
}

impl<T: Real> ModelOperators<T> {
    pub fn new(spec: &ModelSpec, truncation: Option<usize>) -> Self {
        let m = spec.num_modes();
        match spec.kind {
            ParticleKind::Fermion => Self {
                kind: spec.kind,
                modes: m,
                levels: 2,
                annihilation: (0..m).map(|v| fermion_annihilation(m, v)).collect(),
                number: (0..m).map(|v| fermion_number(m, v)).collect(),
                quadratures: (0..m)
                    .map(|v| [fermion_majorana(m, v, 0), fermion_majorana(m, v, 1)])
                    .collect(),
            },
            ParticleKind::Boson => {
                let levels = truncation.expect("bosonic oracle needs a truncation") + 1;
                let a = crate::oracle::ops::boson_local_annihilation::<T>(levels);
                Self {
                    kind: spec.kind,
                    modes: m,
                    levels,
                    annihilation: (0..m).map(|v| embed_mode(&a, m, levels, v)).collect(),
                    number: (0..m)
                        .map(|v| embed_mode(&boson_local_number(levels), m, levels, v))
                        .collect(),
                    quadratures: (0..m)
                        .map(|v| {
                            [
                                embed_mode(&boson_local_quadrature(levels, 0), m, levels, v),
                                embed_mode(&boson_local_quadrature(levels, 1), m, levels, v),
                            ]
                        })
                        .collect(),
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ParticleKind::Fermion => fermion_dim(self.modes),
            ParticleKind::Boson => boson_dim(self.modes, self.levels),
        }
    }
}

/// Builds the generator of `spec` at time `t` (piecewise constant).
///
/// For bosons the Hamiltonian is the projection of the untruncated one onto
/// at most `d` particles per mode; the jump operators are truncated.
pub fn build_liouvillian<T: Real>(
    spec: &ModelSpec,
    ops: &ModelOperators<T>,
    t: f64,
) -> Liouvillian<T> {
    let m = spec.num_modes();
    let dim = ops.dim();
    let j = spec.gaussian_matrix_at(t);
    let u = spec.interaction_at(t);
    let omega = spec.displacement_at(t);
    let mut h = SparseOp::<T>::zeros(dim);
    for v in 0..m {
        for w in 0..m {
            for a in 0..2 {
                for b in 0..2 {
                    let c = j[(2 * v + a, 2 * w + b)];
                    if c.re == 0.0 && c.im == 0.0 {
                        continue;
                    }
                    let coef = cx::<T>(c.re, c.im);
                    let term = if ops.kind == ParticleKind::Boson && v == w {
                        embed_mode(
                            &boson_projected_quadratic::<T>(ops.levels, a, b),
                            m,
                            ops.levels,
                            v,
                        )
                    } else {
                        ops.quadratures[v][a].mul(&ops.quadratures[w][b])
                    };
                    h = h.add(&term.scale(coef));
                }
            }
            let uvw = u[(v, w)];
            if uvw != 0.0 {
                h = h.add(&ops.number[v].mul(&ops.number[w]).scale(cx(uvw, 0.0)));
            }
        }
        for a in 0..2 {
            let o = omega[2 * v + a];
            if o != 0.0 {
                h = h.add(&ops.quadratures[v][a].scale(cx(o, 0.0)));
            }
        }
    }
    let nz = spec.noise;
    let mut jumps = Vec::new();
    for v in 0..m {
        if nz.kappa1 > 0.0 {
            jumps.push((re::<T>(nz.kappa1), ops.annihilation[v].clone()));
        }
        if nz.kappa2 > 0.0 {
            jumps.push((re::<T>(nz.kappa2), ops.annihilation[v].adjoint()));
        }
        if nz.kappa3 > 0.0 {
            jumps.push((re::<T>(nz.kappa3), ops.number[v].clone()));
        }
    }
    Liouvillian::new(h, jumps)
}

/// Exact evolution of `rho` under `spec` from `t0` to `t1`, split at schedule breakpoints.
pub fn evolve_exact<T: Real>(
    spec: &ModelSpec,
    ops: &ModelOperators<T>,
    rho: &CMat<T>,
    t0: f64,
    t1: f64,
) -> CMat<T> {
    let mut cur = rho.clone();
    for w in spec.segment_cuts(t0, t1).windows(2) {
        let l = build_liouvillian(spec, ops, 0.5 * (w[0] + w[1]));
        cur = l.propagate(&cur, re(w[1] - w[0]));
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, trace};
    use crate::model::load_config;

    fn two_mode_fermion() -> ModelSpec {
        let text = r#"
particle = "fermion"
sites = 2
modes_per_site = 1
[noise]
kappa1 = 0.3
kappa2 = 0.2
kappa3 = 0.4
[[coupling]]
a = [1, 1, 1]
b = [2, 1, 2]
im = 0.5
[[coupling]]
a = [1, 1, 2]
b = [2, 1, 1]
im = -0.2
[[interaction]]
a = [1, 1]
b = [2, 1]
value = 0.7
"#;
        load_config(text, &[]).unwrap().0
    }

    fn boson_pair() -> ModelSpec {
        let text = r#"
particle = "boson"
sites = 2
modes_per_site = 1
[noise]
kappa1 = 0.6
kappa2 = 0.2
kappa3 = 0.3
[[coupling]]
a = [1, 1, 1]
b = [2, 1, 1]
re = 0.2
[[coupling]]
a = [1, 1, 2]
b = [1, 1, 2]
re = 0.3
[[interaction]]
a = [1, 1]
b = [2, 1]
value = 0.1
[[interaction]]
a = [2, 1]
b = [2, 1]
value = 0.25
[[displacement]]
mode = [1, 1, 1]
value = 0.4
"#;
        load_config(text, &[]).unwrap().0
    }

    #[test]
    fn superoperator_is_trace_annihilating() {
        for (spec, d) in [(two_mode_fermion(), None), (boson_pair(), Some(2))] {
            let ops = ModelOperators::<f64>::new(&spec, d);
            let l = build_liouvillian(&spec, &ops, 0.0);
            let s = l.superoperator();
            let n = l.dim;
            let tr_row = vectorize(&identity::<f64>(n)).transpose();
            assert!((tr_row * &s).norm() < 1e-12);
            let h = l.hamiltonian.to_dense();
            assert!((&h - h.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_matches_superoperator() {
        let spec = boson_pair();
        let ops = ModelOperators::<f64>::new(&spec, Some(2));
        let l = build_liouvillian(&spec, &ops, 0.0);
        let n = l.dim;
        let rho = CMat::<f64>::from_fn(n, n, |i, j| {
            cx((i * 3 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02)
        });
        let a = l.apply(&rho);
        let b = unvectorize(&(l.superoperator() * vectorize(&rho)), n);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn taylor_matches_dense_exponential() {
        let spec = boson_pair();
        let ops = ModelOperators::<f64>::new(&spec, Some(3));
        let l = build_liouvillian(&spec, &ops, 0.0);
        let n = l.dim;
        let mut rho = CMat::<f64>::zeros(n, n);
        rho[(0, 0)] = cx(0.5, 0.0);
        rho[(5, 5)] = cx(0.5, 0.0);
        rho[(0, 5)] = cx(0.3, 0.1);
        rho[(5, 0)] = cx(0.3, -0.1);
        let dense = unvectorize(
            &(expm(&(l.superoperator() * cx(1.3, 0.0))) * vectorize(&rho)),
            n,
        );
        let taylor = l.propagate_taylor(&rho, 1.3);
        let err = (&dense - &taylor).norm();
        assert!(err < 1e-12, "{err}");
        assert!((trace(&taylor) - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_path_matches_taylor() {
        let text = r#"
particle = "boson"
sites = 1
modes_per_site = 1
[noise]
kappa1 = 0.0
kappa2 = 0.0
kappa3 = 0.2
[[interaction]]
a = [1, 1]
b = [1, 1]
value = 0.5
"#;
        let spec = load_config(text, &[]).unwrap().0;
        let ops = ModelOperators::<f64>::new(&spec, Some(20));
        let l = build_liouvillian(&spec, &ops, 0.0);
        assert!(l.is_diagonal());
        let n = l.dim;
        let rho = CMat::<f64>::from_fn(n, n, |i, j| cx(1.0 / (1.0 + (i + j) as f64), 0.0));
        let a = l.propagate(&rho, 0.7);
        let b = l.propagate_taylor(&rho, 0.7);
        assert!((a - b).norm() < 1e-11);
    }
}
