//! Distances and entanglement measures on dense states.

use super::ops::{fermion_annihilation, fermion_dim, fermion_majorana};
use crate::fermion::wick::{string_expectation, two_point};
use crate::linalg::{hermitian_eigenvalues, trace_norm_hermitian};
use crate::scalar::{cabs, cx, re, CMat, Cx, Real};
use nalgebra::{DMatrix, DVector};

/// Trace distance `||a - b||_1 / 2` of Hermitian matrices.
pub fn trace_distance<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    trace_norm_hermitian(&(a - b)) * re::<T>(0.5)
}

/// Total variation distance of two distributions on the same outcomes.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Sum of the moduli of all off-diagonal Fock-basis entries.
pub fn offdiag_coherence<T: Real>(rho: &CMat<T>) -> T {
    let n = rho.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += cabs(rho[(i, j)]);
            }
        }
    }
    s
}

/// Partial transpose on the second factor of a `da x db` bipartition.
pub fn partial_transpose<T: Real>(rho: &CMat<T>, da: usize, db: usize) -> CMat<T> {
    let n = da * db;
    assert_eq!(rho.nrows(), n);
    CMat::from_fn(n, n, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        rho[(i * db + l, k * db + j)]
    })
}

pub fn pt_min_eigenvalue<T: Real>(rho: &CMat<T>, da: usize, db: usize) -> T {
    hermitian_eigenvalues(&partial_transpose(rho, da, db))[0]
}

/// Vectors `a3^+|vac>, a4^+|vac>, a3^+ a2^+ a1^+|vac>, a4^+ a2^+ a1^+|vac>` of four modes,
/// identified with `|00>, |01>, |10>, |11>` of two qubits.
pub fn four_mode_even_basis<T: Real>() -> [DVector<Cx<T>>; 4] {
    let m = 4;
    let ad: Vec<CMat<T>> = (0..m)
        .map(|v| fermion_annihilation::<T>(m, v).to_dense().adjoint())
        .collect();
    let mut vac = DVector::zeros(fermion_dim(m));
    vac[0] = cx(1.0, 0.0);
    let s = |ops: &[usize]| -> DVector<Cx<T>> {
        let mut v = vac.clone();
        for &k in ops.iter().rev() {
            v = &ad[k] * v;
        }
        v
    };
    [s(&[2]), s(&[3]), s(&[2, 1, 0]), s(&[3, 1, 0])]
}

/// Two-qubit reduction of a four-mode fermionic state (unnormalised).
pub fn fermion_even_reduction<T: Real>(rho: &CMat<T>) -> CMat<T> {
    let basis = four_mode_even_basis::<T>();
    CMat::from_fn(4, 4, |x, y| (basis[x].adjoint() * rho * &basis[y])[(0, 0)])
}

/// Majorana covariance `Gamma_pq = i tr(rho [c_p, c_q]) / 2` of a dense fermionic state.
pub fn covariance_from_dense<T: Real>(rho: &CMat<T>, m: usize) -> DMatrix<T> {
    let c: Vec<CMat<T>> = (0..2 * m)
        .map(|p| fermion_majorana::<T>(m, p / 2, p % 2).to_dense())
        .collect();
    DMatrix::from_fn(2 * m, 2 * m, |p, q| {
        let comm = &c[p] * &c[q] - &c[q] * &c[p];
        let e = (rho * comm).trace();
        (Cx::new(T::zero(), re::<T>(0.5)) * e).re
    })
}

/// Dense density matrix of the fermionic Gaussian state with covariance `gamma`.
///
/// Expands `rho` in ordered Majorana strings; exponential in the mode count,
/// intended for small test systems.
pub fn gaussian_to_dense<T: Real>(gamma: &DMatrix<T>) -> CMat<T> {
    let m = gamma.nrows() / 2;
    let dim = fermion_dim(m);
    let c: Vec<CMat<T>> = (0..2 * m)
        .map(|p| fermion_majorana::<T>(m, p / 2, p % 2).to_dense())
        .collect();
    let m2 = two_point(gamma);
    let mut rho = CMat::zeros(dim, dim);
    for mask in 0usize..(1 << (2 * m)) {
        let s: Vec<usize> = (0..2 * m).filter(|p| mask & (1 << p) != 0).collect();
        let k = s.len();
        if k % 2 == 1 {
            continue;
        }
        let ev = string_expectation(&m2, &s);
        let sign = if (k * k.saturating_sub(1) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let coef = ev * cx::<T>(sign * 2f64.powi(k as i32 - m as i32), 0.0);
        let mut op = CMat::identity(dim, dim);
        for &p in &s {
            op *= &c[p];
        }
        rho += op * coef;
    }
    rho
}

/// Restriction of a bosonic state to at most one particle per mode.
pub fn qubit_block<T: Real>(rho: &CMat<T>, modes: usize, levels: usize) -> CMat<T> {
    let idx: Vec<usize> = (0..1usize << modes)
        .map(|q| {
            (0..modes).fold(0, |acc, v| {
                let bit = (q >> (modes - 1 - v)) & 1;
                acc * levels + bit
            })
        })
        .collect();
    CMat::from_fn(idx.len(), idx.len(), |i, j| rho[(idx[i], idx[j])])
}
