//! Dense and sparse complex linear algebra used across the crate.

use crate::scalar::{cabs, cabs2, czero, re, CMat, Cx, Real};
use nalgebra::{DMatrix, SymmetricEigen};

pub fn dagger<T: Real>(a: &CMat<T>) -> CMat<T> {
    a.adjoint()
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::identity(n, n)
}

pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

pub fn trace<T: Real>(a: &CMat<T>) -> Cx<T> {
    a.trace()
}

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm<T: Real>(a: &CMat<T>) -> CMat<T> {
    a.clone().exp()
}

pub fn expm_real<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    a.clone().exp()
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues<T: Real>(a: &CMat<T>) -> Vec<T> {
    let h = (a + a.adjoint()) * Cx::new(re::<T>(0.5), T::zero());
    let eig = SymmetricEigen::new(h);
    let mut v: Vec<T> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Eigen-decomposition of a Hermitian matrix: (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen<T: Real>(a: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let h = (a + a.adjoint()) * Cx::new(re::<T>(0.5), T::zero());
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian<T: Real>(a: &CMat<T>) -> T {
    hermitian_eigenvalues(a)
        .into_iter()
        .fold(T::zero(), |acc, x| acc + x.abs())
}

pub fn frobenius<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + cabs2(*z)).sqrt()
}

pub fn max_abs_entry<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| {
        let m = cabs(*z);
        if m > acc {
            m
        } else {
            acc
        }
    })
}

/// Upper bound on the spectral norm, `sqrt(|A|_1 |A|_inf)`.
pub fn spectral_norm_bound<T: Real>(a: &CMat<T>) -> T {
    let (r, c) = a.shape();
    let mut col_max = T::zero();
    for j in 0..c {
        let s = (0..r).fold(T::zero(), |acc, i| acc + cabs(a[(i, j)]));
        if s > col_max {
            col_max = s;
        }
    }
    let mut row_max = T::zero();
    for i in 0..r {
        let s = (0..c).fold(T::zero(), |acc, j| acc + cabs(a[(i, j)]));
        if s > row_max {
            row_max = s;
        }
    }
    (col_max * row_max).sqrt()
}

/// Column-stacking vectorisation index of entry (i, j) of an n x n matrix.
#[inline]
pub fn vec_index(n: usize, i: usize, j: usize) -> usize {
    j * n + i
}

/// Superoperator matrix of `rho -> a rho b` in column-stacking convention.
pub fn sandwich_superop<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    b.transpose().kronecker(a)
}

pub fn vectorize<T: Real>(a: &CMat<T>) -> nalgebra::DVector<Cx<T>> {
    nalgebra::DVector::from_column_slice(a.as_slice())
}

pub fn unvectorize<T: Real>(v: &nalgebra::DVector<Cx<T>>, n: usize) -> CMat<T> {
    CMat::from_column_slice(n, n, v.as_slice())
}

/// Sparse square operator stored as coordinate triplets.
#[derive(Clone, Debug)]
pub struct SparseOp<T: Real> {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Cx<T>)>,
}

impl<T: Real> SparseOp<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim)
                .map(|i| (i, i, Cx::new(T::one(), T::zero())))
                .collect(),
        }
    }

    pub fn from_dense(a: &CMat<T>) -> Self {
        let n = a.nrows();
        let mut entries = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = a[(i, j)];
                if v.re != T::zero() || v.im != T::zero() {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim: n, entries }
    }

    pub fn to_dense(&self) -> CMat<T> {
        let mut m = CMat::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(i, j, v)| (j, i, v.conj()))
                .collect(),
        }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(i, j, v)| (i, j, v * s))
                .collect(),
        }
    }

    /// Sum of two operators with duplicate coordinates merged.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut e = self.entries.clone();
        e.extend_from_slice(&other.entries);
        Self::compact(self.dim, e)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut by_row: Vec<Vec<(usize, Cx<T>)>> = vec![Vec::new(); self.dim];
        for &(k, j, v) in &other.entries {
            by_row[k].push((j, v));
        }
        let mut e = Vec::new();
        for &(i, k, a) in &self.entries {
            for &(j, b) in &by_row[k] {
                e.push((i, j, a * b));
            }
        }
        Self::compact(self.dim, e)
    }

    fn compact(dim: usize, mut e: Vec<(usize, usize, Cx<T>)>) -> Self {
        e.sort_by_key(|&(i, j, _)| (j, i));
        let mut out: Vec<(usize, usize, Cx<T>)> = Vec::with_capacity(e.len());
        for (i, j, v) in e {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => out.push((i, j, v)),
            }
        }
        out.retain(|&(_, _, v)| v.re != T::zero() || v.im != T::zero());
        Self { dim, entries: out }
    }

    /// `self * b` for a dense square matrix `b`.
    pub fn mul_dense(&self, b: &CMat<T>) -> CMat<T> {
        let n = b.ncols();
        let mut out = CMat::zeros(self.dim, n);
        for col in 0..n {
            let bc = b.column(col);
            let mut oc = out.column_mut(col);
            for &(i, k, v) in &self.entries {
                oc[i] += v * bc[k];
            }
        }
        out
    }

    /// `b * self` for a dense square matrix `b`.
    pub fn dense_mul(&self, b: &CMat<T>) -> CMat<T> {
        let r = b.nrows();
        let mut out = CMat::zeros(r, self.dim);
        for &(k, j, v) in &self.entries {
            let bk = b.column(k).clone_owned();
            let mut oj = out.column_mut(j);
            oj.axpy(v, &bk, Cx::new(T::one(), T::zero()));
        }
        out
    }

    pub fn spectral_norm_bound(&self) -> T {
        let mut rows = vec![T::zero(); self.dim];
        let mut cols = vec![T::zero(); self.dim];
        for &(i, j, v) in &self.entries {
            rows[i] += cabs(v);
            cols[j] += cabs(v);
        }
        let rm = rows
            .into_iter()
            .fold(T::zero(), |a, x| if x > a { x } else { a });
        let cm = cols
            .into_iter()
            .fold(T::zero(), |a, x| if x > a { x } else { a });
        (rm * cm).sqrt()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(i, j, _)| i == j)
    }

    pub fn diagonal(&self) -> Vec<Cx<T>> {
        let mut d = vec![czero(); self.dim];
        for &(i, j, v) in &self.entries {
            if i == j {
                d[i] += v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn sample(n: usize, seed: u64) -> CMat<f64> {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            cx(a, b)
        })
    }

    #[test]
    fn sparse_products_match_dense() {
        let a = sample(5, 1);
        let b = sample(5, 2);
        let sa = SparseOp::from_dense(&a);
        assert!((sa.mul_dense(&b) - &a * &b).norm() < 1e-13);
        assert!((sa.dense_mul(&b) - &b * &a).norm() < 1e-13);
        let sb = SparseOp::from_dense(&b);
        assert!((sa.mul(&sb).to_dense() - &a * &b).norm() < 1e-13);
        assert!((sa.adjoint().to_dense() - a.adjoint()).norm() < 1e-15);
        assert!(
            sa.spectral_norm_bound()
                >= hermitian_eigenvalues(&(a.adjoint() * &a))
                    .last()
                    .unwrap()
                    .sqrt()
                    - 1e-12
        );
    }

    #[test]
    fn sandwich_superop_matches_direct_product() {
        let a = sample(3, 3);
        let b = sample(3, 4);
        let r = sample(3, 5);
        let s = sandwich_superop(&a, &b);
        let got = unvectorize(&(s * vectorize(&r)), 3);
        assert!((got - &a * &r * &b).norm() < 1e-13);
    }

    #[test]
    fn expm_of_hermitian_generator_is_unitary() {
        let h = sample(4, 7);
        let h = &h + h.adjoint();
        let u = expm(&(h * cx::<f64>(0.0, -1.0)));
        assert!((&u * u.adjoint() - identity::<f64>(4)).norm() < 1e-12);
    }
}
