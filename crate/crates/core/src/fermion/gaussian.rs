//! Covariance-matrix representation of fermionic Gaussian states.
//!
//! Majoranas are indexed `2 v + alpha` with `c^1 = (a + a^+)/sqrt 2` and
//! `c^2 = (a - a^+)/(sqrt 2 i)`, so `{c_p, c_q} = delta_pq`. The covariance is
//! `Gamma_pq = i tr(rho [c_p, c_q]) / 2` and `<n_v> = 1/2 + Gamma_{2v, 2v+1}`.

use crate::error::SimError;
use crate::linalg::expm_real;
use crate::model::ModelSpec;
use crate::scalar::{cabs2, re, to_f64, Cx, Real};
use nalgebra::DMatrix;
use rand::Rng;

/// Tolerance on `Gamma + Gamma^T`.
pub const ANTISYMMETRY_TOL: f64 = 1e-10;
/// Slack on the singular-value bound `|Gamma| <= 1/2`.
pub const SINGULAR_VALUE_TOL: f64 = 1e-8;
/// Normalisations below this are treated as a zero-weight branch.
pub const ZERO_WEIGHT: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState<T: Real> {
    pub gamma: DMatrix<T>,
    /// Accumulated log of the trace factors.
    pub log_weight: T,
}

impl<T: Real> GaussianState<T> {
    pub fn modes(&self) -> usize {
        self.gamma.nrows() / 2
    }

    pub fn vacuum(m: usize) -> Self {
        Self::from_occupations(&vec![0; m])
    }

    pub fn maximally_mixed(m: usize) -> Self {
        Self {
            gamma: DMatrix::zeros(2 * m, 2 * m),
            log_weight: T::zero(),
        }
    }

    /// Fock product state `|n_1 ... n_m>`.
    pub fn from_occupations(occ: &[usize]) -> Self {
        let m = occ.len();
        let mut gamma = DMatrix::zeros(2 * m, 2 * m);
        for (v, &n) in occ.iter().enumerate() {
            let g = if n == 0 { re::<T>(-0.5) } else { re::<T>(0.5) };
            gamma[(2 * v, 2 * v + 1)] = g;
            gamma[(2 * v + 1, 2 * v)] = -g;
        }
        Self {
            gamma,
            log_weight: T::zero(),
        }
    }

    pub fn number_expectation(&self, v: usize) -> T {
        re::<T>(0.5) + self.gamma[(2 * v, 2 * v + 1)]
    }

    /// `(<n_v>, <n_u>, <n_v n_u>)`.
    pub fn pair_moments(&self, v: usize, u: usize) -> (T, T, T) {
        assert_ne!(v, u);
        let g = &self.gamma;
        let (a, b, c, d) = (2 * v, 2 * v + 1, 2 * u, 2 * u + 1);
        let nv = self.number_expectation(v);
        let nu = self.number_expectation(u);
        let nn = nv * nu - g[(a, c)] * g[(b, d)] + g[(a, d)] * g[(b, c)];
        (nv, nu, nn)
    }

    /// Applies `rho -> (alpha + beta n_v) rho (alpha + beta n_v)^+`, renormalises and
    /// returns the trace factor.
    ///
    /// Entries follow from Wick's theorem with `n_v = 1/2 + i c_a c_b`; every
    /// term is a product of at most three two-point functions, so the update is
    /// `O(m^2)`.
    pub fn sandwich_number(&mut self, v: usize, alpha: Cx<T>, beta: Cx<T>) -> Result<T, SimError> {
        let n = self.number_expectation(v);
        let cross = alpha * beta.conj() + alpha.conj() * beta;
        let z = cabs2(alpha) + (cross.re + cabs2(beta)) * n;
        if !(to_f64(z) > ZERO_WEIGHT) {
            if to_f64(z) < -1e-12 {
                return Err(SimError::NegativeWeight {
                    weight: to_f64(z),
                    context: format!("number sandwich on mode {v}"),
                });
            }
            return Err(SimError::Normalisation(format!(
                "zero-weight branch on mode {v}"
            )));
        }
        let dim = self.gamma.nrows();
        let (a, b) = (2 * v, 2 * v + 1);
        let i = Cx::new(T::zero(), T::one());
        let half = re::<T>(0.5);
        let quarter = re::<T>(0.25);
        // two-point function M_pq = delta_pq / 2 - i Gamma_pq
        let m2 = |p: usize, q: usize| -> Cx<T> {
            let d = if p == q { half } else { T::zero() };
            Cx::new(d, -self.gamma[(p, q)])
        };
        let mab = m2(a, b);
        let w_ab_jk = alpha * beta.conj();
        let w_jk_ab = alpha.conj() * beta;
        let w_both = Cx::new(cabs2(beta), T::zero());
        let mut out = DMatrix::zeros(dim, dim);
        let mut ma = Vec::with_capacity(dim);
        let mut mb = Vec::with_capacity(dim);
        for j in 0..dim {
            ma.push((m2(a, j), m2(j, a)));
            mb.push((m2(b, j), m2(j, b)));
        }
        for j in 0..dim {
            let (maj, mja) = ma[j];
            let (mbj, mjb) = mb[j];
            for k in j + 1..dim {
                let (mak, mka) = ma[k];
                let (mbk, mkb) = mb[k];
                let mjk = m2(j, k);
                // <c_a c_b c_j c_k> and <c_j c_k c_a c_b>
                let abjk = mab * mjk - maj * mbk + mak * mbj;
                let jkab = mjk * mab - mja * mkb + mjb * mka;
                let p3456 = jkab;
                let p2456 = mbk * mab - m2(b, a) * mkb + mka * half;
                let p2356 = mbj * mab - m2(b, a) * mjb + mja * half;
                let p2346 = mbj * mkb - mbk * mjb + mjk * half;
                let p2345 = mbj * mka - mbk * mja + m2(b, a) * mjk;
                let six = mab * p3456 - maj * p2456 + mak * p2356 - p2346 * half + mab * p2345;
                let jk_n = mjk * half + i * jkab;
                let n_jk = mjk * half + i * abjk;
                let expect = mjk * Cx::new(cabs2(alpha), T::zero())
                    + w_ab_jk * n_jk
                    + w_jk_ab * jk_n
                    + w_both * (mjk * quarter + (i * half) * (abjk + jkab) - six);
                let g = (i * expect).re / z;
                out[(j, k)] = g;
                out[(k, j)] = -g;
            }
        }
        self.gamma = out;
        self.log_weight += z.ln();
        Ok(z)
    }

    /// `rho -> e^{theta n_v} rho e^{theta^* n_v}`, normalised; returns the trace factor.
    pub fn apply_number_exponential(&mut self, v: usize, theta: Cx<T>) -> Result<T, SimError> {
        let e = crate::scalar::cexp(theta) - Cx::new(T::one(), T::zero());
        if e.re == T::zero() && e.im == T::zero() {
            return Ok(T::one());
        }
        self.sandwich_number(v, Cx::new(T::one(), T::zero()), e)
    }

    /// Conditions on `n_v = outcome`; returns the outcome probability.
    pub fn apply_number_projector(&mut self, v: usize, outcome: usize) -> Result<T, SimError> {
        let (alpha, beta) = match outcome {
            0 => (Cx::new(T::one(), T::zero()), Cx::new(-T::one(), T::zero())),
            1 => (Cx::new(T::zero(), T::zero()), Cx::new(T::one(), T::zero())),
            _ => {
                return Err(SimError::Argument(format!(
                    "occupation outcome {outcome} is not 0 or 1"
                )))
            }
        };
        self.sandwich_number(v, alpha, beta)
    }

    /// Draws a Fock-basis bitstring from the (normalised) state.
    pub fn sample_fock<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let mut s = self.clone();
        let mut out = Vec::with_capacity(self.modes());
        for v in 0..self.modes() {
            let p1 = to_f64(s.number_expectation(v)).clamp(0.0, 1.0);
            let bit = if rng.random::<f64>() < p1 { 1 } else { 0 };
            out.push(bit as u8);
            if v + 1 < self.modes() {
                // a failed projection leaves `s` untouched; it only happens when the
                // drawn outcome had probability below `ZERO_WEIGHT`
                let _ = s.apply_number_projector(v, bit);
            }
        }
        out
    }

    /// Probability of the Fock configuration `bits`.
    pub fn fock_probability(&self, bits: &[u8]) -> f64 {
        let mut s = self.clone();
        let mut p = 1.0;
        for (v, &b) in bits.iter().enumerate() {
            match s.apply_number_projector(v, b as usize) {
                Ok(z) => p *= to_f64(z),
                Err(_) => return 0.0,
            }
        }
        p
    }

    /// Checks antisymmetry, the singular-value bound and a finite weight.
    pub fn check_invariants(&self) -> Result<(), String> {
        let g = &self.gamma;
        let asym = (g + g.transpose()).amax();
        if to_f64(asym) > ANTISYMMETRY_TOL {
            return Err(format!(
                "covariance not antisymmetric: |G + G^T| = {:e}",
                to_f64(asym)
            ));
        }
        if !to_f64(self.log_weight).is_finite() {
            return Err("log weight is not finite".into());
        }
        let smax = g.clone().svd(false, false).singular_values.max();
        if to_f64(smax) > 0.5 + SINGULAR_VALUE_TOL {
            return Err(format!(
                "covariance singular value {} exceeds 1/2",
                to_f64(smax)
            ));
        }
        Ok(())
    }

    /// `|| Gamma Gamma^T - I/4 ||`, zero exactly for pure states.
    pub fn purity_defect(&self) -> T {
        let n = self.gamma.nrows();
        (&self.gamma * self.gamma.transpose() - DMatrix::identity(n, n) * re::<T>(0.25)).norm()
    }
}

/// Affine map `Gamma -> Phi Gamma Phi^T + Q` generated by the quadratic Hamiltonian
/// with loss and gain over one time interval.
#[derive(Clone, Debug)]
pub struct GaussianPropagator<T: Real> {
    pub phi: DMatrix<T>,
    pub q: DMatrix<T>,
}

impl<T: Real> GaussianPropagator<T> {
    pub fn identity(m: usize) -> Self {
        Self {
            phi: DMatrix::identity(2 * m, 2 * m),
            q: DMatrix::zeros(2 * m, 2 * m),
        }
    }

    /// Exact propagator from `t0` to `t1`, composed over the schedule's constant pieces.
    pub fn new(spec: &ModelSpec, t0: f64, t1: f64) -> Self {
        let m = spec.num_modes();
        let mut out = Self::identity(m);
        for w in spec.segment_cuts(t0, t1).windows(2) {
            if w[1] > w[0] {
                let seg = Self::constant_piece(spec, 0.5 * (w[0] + w[1]), w[1] - w[0]);
                out = seg.after(&out);
            }
        }
        out
    }

    /// Solves `dGamma/dt = X Gamma + Gamma X^T + Y` for `dt` with the generator at time `t`.
    fn constant_piece(spec: &ModelSpec, t: f64, dt: f64) -> Self {
        let m = spec.num_modes();
        let n = 2 * m;
        let j = spec.gaussian_matrix_at(t);
        let damp = 0.5 * (spec.noise.kappa1 + spec.noise.kappa2);
        let x = DMatrix::<f64>::from_fn(n, n, |p, q| {
            2.0 * j[(p, q)].im - if p == q { damp } else { 0.0 }
        });
        let mut y = DMatrix::<f64>::zeros(n, n);
        let drift = 0.5 * (spec.noise.kappa2 - spec.noise.kappa1);
        for v in 0..m {
            y[(2 * v, 2 * v + 1)] = drift;
            y[(2 * v + 1, 2 * v)] = -drift;
        }
        // Van Loan: exp([[-X, Y], [0, X^T]] dt) = [[., G12], [0, G22]], integral = G22^T G12
        let mut c = DMatrix::<T>::zeros(2 * n, 2 * n);
        for p in 0..n {
            for q in 0..n {
                c[(p, q)] = re::<T>(-x[(p, q)] * dt);
                c[(p, n + q)] = re::<T>(y[(p, q)] * dt);
                c[(n + p, n + q)] = re::<T>(x[(q, p)] * dt);
            }
        }
        let e = expm_real(&c);
        let g12 = e.view((0, n), (n, n)).clone_owned();
        let g22 = e.view((n, n), (n, n)).clone_owned();
        let phi = g22.transpose();
        let q = &phi * g12;
        // symmetrise away rounding so Q stays exactly antisymmetric
        let q = (&q - q.transpose()) * re::<T>(0.5);
        Self { phi, q }
    }

    /// The map `self o first`.
    pub fn after(&self, first: &Self) -> Self {
        Self {
            phi: &self.phi * &first.phi,
            q: &self.phi * &first.q * self.phi.transpose() + &self.q,
        }
    }

    pub fn apply(&self, state: &mut GaussianState<T>) {
        let g = &self.phi * &state.gamma * self.phi.transpose() + &self.q;
        state.gamma = (&g - g.transpose()) * re::<T>(0.5);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::wick::{string_expectation, two_point};
    use crate::model::load_config;
    use crate::oracle::ops::{fermion_annihilation, fermion_number};
    use crate::oracle::{
        covariance_from_dense, evolve_exact, gaussian_to_dense, initial_dense, ModelOperators,
    };
    use crate::scalar::{cexp, cx, CMat};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(m: usize, seed: u64) -> GaussianState<f64> {
        // Gamma = O diag(lambda_k J) O^T with |lambda_k| <= 1/2
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * m;
        let mut k = DMatrix::<f64>::zeros(n, n);
        for p in 0..n {
            for q in p + 1..n {
                let x: f64 = rng.random::<f64>() - 0.5;
                k[(p, q)] = 2.0 * x;
                k[(q, p)] = -2.0 * x;
            }
        }
        let o = expm_real(&k);
        let mut d = DMatrix::<f64>::zeros(n, n);
        for v in 0..m {
            let l = rng.random::<f64>() - 0.5;
            d[(2 * v, 2 * v + 1)] = l;
            d[(2 * v + 1, 2 * v)] = -l;
        }
        GaussianState {
            gamma: &o * d * o.transpose(),
            log_weight: 0.0,
        }
    }

    fn dense_sandwich(
        rho: &CMat<f64>,
        m: usize,
        v: usize,
        alpha: Cx<f64>,
        beta: Cx<f64>,
    ) -> CMat<f64> {
        let n = fermion_number::<f64>(m, v).to_dense();
        let k = CMat::<f64>::identity(1 << m, 1 << m) * alpha + n * beta;
        &k * rho * k.adjoint()
    }

    #[test]
    fn vacuum_block_matches_dense_commutator() {
        let s = GaussianState::<f64>::vacuum(1);
        let mut vac = CMat::<f64>::zeros(2, 2);
        vac[(0, 0)] = cx(1.0, 0.0);
        let g = covariance_from_dense(&vac, 1);
        assert!((g[(0, 1)] - s.gamma[(0, 1)]).abs() < 1e-15);
        assert_eq!(s.gamma[(0, 1)], -0.5);
        assert_eq!(s.number_expectation(0), 0.0);
    }

    #[test]
    fn number_expectation_for_occupied_and_mixed_modes() {
        let a = fermion_annihilation::<f64>(1, 0).to_dense();
        let mut vac = CMat::<f64>::zeros(2, 2);
        vac[(0, 0)] = cx(1.0, 0.0);
        let full = a.adjoint() * vac * &a;
        let s = GaussianState {
            gamma: covariance_from_dense(&full, 1),
            log_weight: 0.0,
        };
        assert!((s.number_expectation(0) - 1.0).abs() < 1e-15);
        assert_eq!(
            GaussianState::<f64>::maximally_mixed(1).number_expectation(0),
            0.5
        );
    }

    #[test]
    fn pair_moments_match_dense() {
        assert_eq!(
            GaussianState::<f64>::vacuum(2).pair_moments(0, 1),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(
            GaussianState::<f64>::from_occupations(&[1, 1]).pair_moments(0, 1),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(
            GaussianState::<f64>::maximally_mixed(2).pair_moments(0, 1),
            (0.5, 0.5, 0.25)
        );
        for seed in 0..5 {
            let s = random_state(3, seed);
            let rho = gaussian_to_dense(&s.gamma);
            for (v, u) in [(0, 1), (0, 2), (2, 1)] {
                let nv = fermion_number::<f64>(3, v).to_dense();
                let nu = fermion_number::<f64>(3, u).to_dense();
                let want = (&rho * &nv * &nu).trace().re;
                let (_, _, got) = s.pair_moments(v, u);
                assert!((want - got).abs() < 1e-12, "{want} vs {got}");
            }
        }
    }

    #[test]
    fn six_point_closed_form_matches_pfaffian() {
        let s = random_state(3, 9);
        let m2 = two_point(&s.gamma);
        // sandwich with alpha = 0, beta = 1 is n rho n; compare against direct strings
        let mut t = s.clone();
        let z = t.sandwich_number(1, cx(0.0, 0.0), cx(1.0, 0.0)).unwrap();
        assert!((z - s.number_expectation(1)).abs() < 1e-13);
        let (a, b) = (2, 3);
        for j in 0..6 {
            for k in j + 1..6 {
                let quarter = m2[(j, k)] * 0.25;
                let mid = cx::<f64>(0.0, 0.5)
                    * (string_expectation(&m2, &[a, b, j, k])
                        + string_expectation(&m2, &[j, k, a, b]));
                let six = string_expectation(&m2, &[a, b, j, k, a, b]);
                let want = (cx::<f64>(0.0, 1.0) * (quarter + mid - six)).re / z;
                assert!((t.gamma[(j, k)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sandwich_matches_dense_on_random_states() {
        for seed in 0..6 {
            let s = random_state(3, 100 + seed);
            let rho = gaussian_to_dense(&s.gamma);
            for (alpha, beta) in [
                (cx::<f64>(1.0, 0.0), cx::<f64>(-1.0, 0.0)),
                (cx(0.0, 0.0), cx(1.0, 0.0)),
                (
                    cx(1.0, 0.0),
                    cexp(cx::<f64>(0.3, -0.7)) - cx::<f64>(1.0, 0.0),
                ),
                (cx(0.4, 0.2), cx(-0.1, 0.9)),
            ] {
                for v in 0..3 {
                    let out = dense_sandwich(&rho, 3, v, alpha, beta);
                    let z = out.trace().re;
                    let mut t = s.clone();
                    let got = t.sandwich_number(v, alpha, beta).unwrap();
                    assert!((z - got).abs() < 1e-12);
                    let want = covariance_from_dense(&(out / cx(z, 0.0)), 3);
                    let err = (&t.gamma - want).amax();
                    assert!(err < 1e-8, "v={v} alpha={alpha} beta={beta} err={err}");
                    t.check_invariants().unwrap();
                }
            }
        }
    }

    #[test]
    fn number_exponential_on_mixed_mode() {
        let mut s = GaussianState::<f64>::maximally_mixed(1);
        let z = s.apply_number_exponential(0, cx(-0.5, 0.0)).unwrap();
        let e = (-1.0f64).exp();
        assert!((z - (1.0 + e) / 2.0).abs() < 1e-15);
        assert!((s.number_expectation(0) - e / (1.0 + e)).abs() < 1e-15);
        let mut vac = GaussianState::<f64>::vacuum(2);
        let z = vac.apply_number_exponential(1, cx(0.8, 2.0)).unwrap();
        assert_eq!(z, 1.0);
        assert_eq!(vac.gamma, GaussianState::<f64>::vacuum(2).gamma);
    }

    #[test]
    fn projector_edge_cases() {
        let mut vac = GaussianState::<f64>::vacuum(2);
        assert_eq!(vac.apply_number_projector(0, 0).unwrap(), 1.0);
        assert!(vac.apply_number_projector(0, 1).is_err());
        let mut mixed = GaussianState::<f64>::maximally_mixed(2);
        let p = mixed.apply_number_projector(0, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((mixed.number_expectation(1) - 0.5).abs() < 1e-15);
        assert!((mixed.number_expectation(0) - 1.0).abs() < 1e-15);
    }

    fn single_mode(k1: f64, k2: f64) -> ModelSpec {
        let text = format!(
            "particle = \"fermion\"\nsites = 1\nmodes_per_site = 1\n[noise]\nkappa1 = {k1}\nkappa2 = {k2}\nkappa3 = 0.0\n[initial]\noccupations = [1]\n"
        );
        load_config(&text, &[]).unwrap().0
    }

    #[test]
    fn loss_decay_and_gain_fixed_point() {
        let spec = single_mode(0.7, 0.0);
        let mut s = GaussianState::<f64>::from_occupations(&[1]);
        GaussianPropagator::new(&spec, 0.0, 1.3).apply(&mut s);
        assert!((s.number_expectation(0) - (-0.7f64 * 1.3).exp()).abs() < 1e-12);
        let spec = single_mode(0.7, 0.3);
        for start in [0, 1] {
            let mut s = GaussianState::<f64>::from_occupations(&[start]);
            GaussianPropagator::new(&spec, 0.0, 60.0).apply(&mut s);
            assert!((s.number_expectation(0) - 0.3).abs() < 1e-12);
        }
    }

    fn hopping_spec(extra: &str) -> ModelSpec {
        let text = format!(
            r#"
particle = "fermion"
sites = 3
modes_per_site = 1
[noise]
kappa1 = 0.3
kappa2 = 0.15
kappa3 = 0.0
[initial]
occupations = [1, 0, 1]
[[coupling]]
a = [1, 1, 1]
b = [2, 1, 2]
im = {{ breakpoints = [0.4], values = [0.5, -0.8] }}
[[coupling]]
a = [2, 1, 2]
b = [3, 1, 1]
im = 0.35
{extra}
"#
        );
        load_config(&text, &[]).unwrap().0
    }

    #[test]
    fn segment_matches_oracle() {
        let spec = hopping_spec("");
        let ops = ModelOperators::<f64>::new(&spec, None);
        let rho0 = initial_dense::<f64>(&spec, None).rho;
        let rho = evolve_exact(&spec, &ops, &rho0, 0.0, 1.1);
        let mut s = GaussianState::<f64>::from_occupations(&[1, 0, 1]);
        GaussianPropagator::new(&spec, 0.0, 1.1).apply(&mut s);
        assert!((&s.gamma - covariance_from_dense(&rho, 3)).amax() < 1e-10);
        s.check_invariants().unwrap();
    }

    #[test]
    fn hopping_conserves_number_and_purity() {
        let text = r#"
particle = "fermion"
sites = 2
modes_per_site = 1
[initial]
occupations = [1, 0]
[[coupling]]
a = [1, 1, 1]
b = [2, 1, 2]
im = 0.5
"#;
        let spec = load_config(text, &[]).unwrap().0;
        let s0 = GaussianState::<f64>::from_occupations(&[1, 0]);
        let mut prev = 1.0;
        let mut moved = false;
        for k in 1..10 {
            let mut s = s0.clone();
            GaussianPropagator::new(&spec, 0.0, 0.3 * k as f64).apply(&mut s);
            let n1 = s.number_expectation(0);
            assert!((n1 + s.number_expectation(1) - 1.0).abs() < 1e-12);
            assert!(s.purity_defect() < 1e-8);
            moved |= (n1 - prev).abs() > 1e-3;
            prev = n1;
        }
        assert!(moved);
    }

    #[test]
    fn fock_sampling_matches_diagonal() {
        let s = random_state(3, 41);
        let rho = gaussian_to_dense(&s.gamma);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            let b = s.sample_fock(&mut rng);
            counts[((b[0] as usize) << 2) | ((b[1] as usize) << 1) | b[2] as usize] += 1;
        }
        let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let exact: Vec<f64> = (0..8).map(|b| rho[(b, b)].re).collect();
        assert!(crate::oracle::total_variation(&emp, &exact) < 0.02);
        for b in 0..8u8 {
            let bits = [(b >> 2) & 1, (b >> 1) & 1, b & 1];
            assert!((s.fock_probability(&bits) - exact[b as usize]).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mixed = GaussianState::<f64>::maximally_mixed(2);
        let mut c = [0usize; 4];
        for _ in 0..n {
            let b = mixed.sample_fock(&mut rng);
            c[(b[0] * 2 + b[1]) as usize] += 1;
        }
        let sigma = (0.25f64 * 0.75 / n as f64).sqrt();
        for k in c {
            assert!((k as f64 / n as f64 - 0.25).abs() < 3.0 * sigma + 1e-3);
        }
        assert_eq!(
            GaussianState::<f64>::vacuum(3).sample_fock(&mut rng),
            vec![0, 0, 0]
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn updates_preserve_invariants(seed in 0u64..10_000, v in 0usize..3, re_t in -3.0f64..3.0, im_t in -3.0f64..3.0) {
            let mut s = random_state(3, seed);
            if s.apply_number_exponential(v, cx(re_t, im_t)).is_ok() {
                prop_assert!(s.check_invariants().is_ok());
            }
            let p1 = s.number_expectation(v);
            if p1 > 1e-6 {
                s.apply_number_projector(v, 1).unwrap();
                prop_assert!(s.check_invariants().is_ok());
                prop_assert!((s.number_expectation(v) - 1.0).abs() < 1e-9);
            }
            GaussianPropagator::new(&hopping_spec(""), 0.0, 0.7).apply(&mut s);
            prop_assert!(s.check_invariants().is_ok());
        }
    }
}
