//! Dense density matrices and observables on them.

use super::ops::{boson_dim, boson_occupations, fermion_dim, fermion_occupations};
use crate::model::{InitialState, ModelSpec, ParticleKind};
use crate::scalar::{cx, re, to_f64, CMat, Cx, Real};
use nalgebra::DVector;

#[derive(Clone, Debug)]
pub struct DenseState<T: Real> {
    pub kind: ParticleKind,
    pub modes: usize,
    /// Levels per mode: 2 for fermions, `d + 1` for bosons.
    pub levels: usize,
    pub rho: CMat<T>,
}

impl<T: Real> DenseState<T> {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn occupations_of(&self, b: usize) -> Vec<usize> {
        match self.kind {
            ParticleKind::Fermion => fermion_occupations(b, self.modes),
            ParticleKind::Boson => boson_occupations(b, self.modes, self.levels),
        }
    }

    /// Diagonal of `rho` in the Fock basis.
    pub fn fock_distribution(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|b| to_f64(self.rho[(b, b)].re))
            .collect()
    }

    /// `<n_v>` for every mode.
    pub fn occupations(&self) -> Vec<f64> {
        let mut n = vec![0.0; self.modes];
        for (b, p) in self.fock_distribution().into_iter().enumerate() {
            for (v, k) in self.occupations_of(b).into_iter().enumerate() {
                n[v] += p * k as f64;
            }
        }
        n
    }

    /// `<N^k>` for the total particle number `N`.
    pub fn number_moment(&self, k: u32) -> f64 {
        self.fock_distribution()
            .into_iter()
            .enumerate()
            .map(|(b, p)| p * (self.occupations_of(b).iter().sum::<usize>() as f64).powi(k as i32))
            .sum()
    }

    /// Probability that the total particle number is at least `d`.
    pub fn tail_probability(&self, d: usize) -> f64 {
        self.fock_distribution()
            .into_iter()
            .enumerate()
            .filter(|(b, _)| self.occupations_of(*b).iter().sum::<usize>() >= d)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn trace(&self) -> Cx<T> {
        self.rho.trace()
    }
}

/// Pure product state given by per-mode local amplitudes.
fn product_state<T: Real>(locals: &[DVector<Cx<T>>]) -> DVector<Cx<T>> {
    let mut psi = DVector::from_element(1, cx(1.0, 0.0));
    for l in locals {
        psi = psi.kronecker(l);
    }
    psi
}

/// Truncated coherent state on `levels` states, renormalised.
pub fn coherent_amplitudes<T: Real>(alpha: (f64, f64), levels: usize) -> DVector<Cx<T>> {
    let a = num_complex::Complex64::new(alpha.0, alpha.1);
    let mut out = DVector::zeros(levels);
    let mut amp = num_complex::Complex64::new((-0.5 * a.norm_sqr()).exp(), 0.0);
    let mut norm = 0.0;
    for n in 0..levels {
        if n > 0 {
            amp = amp * a / (n as f64).sqrt();
        }
        norm += amp.norm_sqr();
        out[n] = cx(amp.re, amp.im);
    }
    out / Cx::new(re::<T>(norm.sqrt()), T::zero())
}

/// Initial state of `spec` as a dense matrix (`truncation` = d for bosons).
pub fn initial_dense<T: Real>(spec: &ModelSpec, truncation: Option<usize>) -> DenseState<T> {
    let m = spec.num_modes();
    let (levels, dim) = match spec.kind {
        ParticleKind::Fermion => (2, fermion_dim(m)),
        ParticleKind::Boson => {
            let l = truncation.expect("bosonic state needs a truncation") + 1;
            (l, boson_dim(m, l))
        }
    };
    let locals: Vec<DVector<Cx<T>>> = match &spec.initial {
        InitialState::Fock(occ) => occ
            .iter()
            .map(|&k| {
                let mut e = DVector::zeros(levels);
                e[k.min(levels - 1)] = cx(1.0, 0.0);
                e
            })
            .collect(),
        InitialState::Coherent(amps) => amps
            .iter()
            .map(|&z| coherent_amplitudes(z, levels))
            .collect(),
    };
    let psi = product_state(&locals);
    debug_assert_eq!(psi.len(), dim);
    DenseState {
        kind: spec.kind,
        modes: m,
        levels,
        rho: &psi * psi.adjoint(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_state_mean_number() {
        let psi = coherent_amplitudes::<f64>((1.2, 0.0), 30);
        let mean: f64 = (0..30).map(|n| n as f64 * psi[n].norm_sqr()).sum();
        assert!((mean - 1.44).abs() < 1e-10);
    }
}
