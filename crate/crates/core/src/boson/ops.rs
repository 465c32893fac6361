//! Truncated single-mode operators and helpers acting on one mode of a site.

use crate::linalg::identity;
use crate::oracle::ops::{boson_local_annihilation, boson_local_number, boson_local_quadrature};
use crate::scalar::{CMat, Cx, Real};

/// Operators on the `d + 1` lowest Fock levels of one mode.
#[derive(Clone, Debug)]
pub struct TruncatedOps<T: Real> {
    pub d: usize,
    pub a: CMat<T>,
    pub ad: CMat<T>,
    pub n: CMat<T>,
    /// Truncated quadratures `c^1`, `c^2`.
    pub c: [CMat<T>; 2],
    pub id: CMat<T>,
}

pub fn build_truncated_ops<T: Real>(d: usize) -> TruncatedOps<T> {
    assert!(d >= 1, "truncation must be at least 1");
    let levels = d + 1;
    let a = boson_local_annihilation::<T>(levels);
    TruncatedOps {
        d,
        ad: a.adjoint(),
        a,
        n: boson_local_number(levels),
        c: [
            boson_local_quadrature(levels, 0),
            boson_local_quadrature(levels, 1),
        ],
        id: identity(levels),
    }
}

impl<T: Real> TruncatedOps<T> {
    pub fn levels(&self) -> usize {
        self.d + 1
    }
}

/// Embeds a single-mode operator on mode `sigma` of a site with `modes` modes.
pub fn embed_local<T: Real>(op: &CMat<T>, modes: usize, levels: usize, sigma: usize) -> CMat<T> {
    let before = identity::<T>(levels.pow(sigma as u32));
    let after = identity::<T>(levels.pow((modes - 1 - sigma) as u32));
    before.kronecker(op).kronecker(&after)
}

/// Reduced density matrix of mode `sigma` of a site matrix.
pub fn mode_marginal<T: Real>(rho: &CMat<T>, modes: usize, levels: usize, sigma: usize) -> CMat<T> {
    if modes == 1 {
        return rho.clone();
    }
    let inner = levels.pow((modes - 1 - sigma) as u32);
    let outer = levels.pow(sigma as u32);
    let mut out = CMat::zeros(levels, levels);
    for i in 0..levels {
        for j in 0..levels {
            let mut s = Cx::new(T::zero(), T::zero());
            for o in 0..outer {
                for r in 0..inner {
                    let bi = (o * levels + i) * inner + r;
                    let bj = (o * levels + j) * inner + r;
                    s += rho[(bi, bj)];
                }
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// `A rho A^+` for `A` acting on mode `sigma` only.
pub fn sandwich_local<T: Real>(
    rho: &CMat<T>,
    op: &CMat<T>,
    modes: usize,
    levels: usize,
    sigma: usize,
) -> CMat<T> {
    if modes == 1 {
        return op * rho * op.adjoint();
    }
    let full = embed_local(op, modes, levels, sigma);
    &full * rho * full.adjoint()
}
