//! Separable decomposition of the two-mode inter-site step.
//!
//! The step map is written as `M = R/2 + Rt/2 + V + Vt`, where `R` and `Rt`
//! are built with doubled couplings, rates and interaction so that the sum is
//! `id + int L + O(delta^2)`. Every branch is a product `A (x) B` acting on the
//! two modes, so sampling a branch keeps the global state a product of site
//! matrices.

use super::ops::TruncatedOps;
use crate::error::SimError;
use crate::linalg::{expm, max_abs_entry, sandwich_superop, SparseOp};
use crate::oracle::Liouvillian;
use crate::scalar::{cx, re, CMat, Cx, Real};
use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;

/// Tolerance below zero tolerated on `F` eigenvalues and `K3 - |u|`.
pub const NEGATIVE_WEIGHT_TOL: f64 = 1e-12;

/// Step-integrated scalars of one inter-site mode pair `(v, w)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMapParams {
    pub v: usize,
    pub w: usize,
    /// `g[alpha][beta]`: integrated coefficient of `c_v^alpha c_w^beta` (both orderings summed).
    pub g: [[f64; 2]; 2],
    /// Integrated coefficient of `n_v n_w` (both orderings summed).
    pub u: f64,
    /// Integrated loss, gain and dephasing assigned to `v` and to `w`.
    pub k_v: [f64; 3],
    pub k_w: [f64; 3],
}

impl PairMapParams {
    pub fn g_total(&self) -> f64 {
        self.g.iter().flatten().map(|x| x.abs()).sum()
    }

    pub fn k_total(&self) -> f64 {
        self.k_v.iter().chain(self.k_w.iter()).sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.g_total() == 0.0 && self.u == 0.0 && self.k_total() == 0.0
    }

    /// `F` of mode `v` (`first`) or `w` on the basis `(a, a^+)`.
    pub fn f_matrix(&self, first: bool) -> Matrix2<f64> {
        let (k, sums) = if first {
            (
                self.k_v,
                [0, 1].map(|a| self.g[a][0].abs() + self.g[a][1].abs()),
            )
        } else {
            (
                self.k_w,
                [0, 1].map(|b| self.g[0][b].abs() + self.g[1][b].abs()),
            )
        };
        let half = 0.5 * self.g_total();
        let off = 0.5 * (sums[1] - sums[0]);
        Matrix2::new(k[0] - half, off, off, k[1] - half)
    }

    /// Whether `F` is positive semidefinite for both modes and `K3 >= |u|` on both.
    pub fn satisfies_thresholds(&self) -> bool {
        let f_ok = [true, false].iter().all(|&first| {
            let e = SymmetricEigen::new(self.f_matrix(first)).eigenvalues;
            e.min() >= -NEGATIVE_WEIGHT_TOL
        });
        f_ok && self.k_v[2] >= self.u.abs() - NEGATIVE_WEIGHT_TOL
            && self.k_w[2] >= self.u.abs() - NEGATIVE_WEIGHT_TOL
    }

    /// Quadratic bound `8 d^4 (G + |u| + K)^2` on the distance to the exact channel.
    pub fn choi_bound(&self, d: usize) -> f64 {
        8.0 * (d as f64).powi(4) * (self.g_total() + self.u.abs() + self.k_total()).powi(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    /// Coherent branch, `z[k] = i^{z[k]}` for `(alpha, beta)` in row-major order.
    Coherent { z: [u8; 4] },
    /// Interaction branch with `y = i^y`.
    Interaction { y: u8 },
    /// Kraus operator `index` of the quadratic remainder on mode 0 (`v`) or 1 (`w`).
    Jump { mode: u8, index: u8 },
    /// Residual dephasing `sqrt(K3 - |u|) n` on mode 0 or 1.
    Dephasing { mode: u8 },
}

/// A set of branches whose operators are linear combinations of shared bases:
/// member `k` acts as `A_k = sum_i left_k[i] L_i` on `v` and `B_k = sum_j right_k[j] R_j` on `w`.
#[derive(Clone, Debug)]
pub struct BranchFamily<T: Real> {
    pub left_basis: Vec<CMat<T>>,
    pub right_basis: Vec<CMat<T>>,
    /// `L_i^+ L_j` and `R_i^+ R_j`, row-major over `(i, j)`.
    pub left_gram: Vec<CMat<T>>,
    pub right_gram: Vec<CMat<T>>,
    pub members: Vec<FamilyMember<T>>,
}

#[derive(Clone, Debug)]
pub struct FamilyMember<T: Real> {
    pub kind: BranchKind,
    pub prior: f64,
    pub left: Vec<Cx<T>>,
    pub right: Vec<Cx<T>>,
}

fn gram<T: Real>(basis: &[CMat<T>]) -> Vec<CMat<T>> {
    let mut out = Vec::with_capacity(basis.len() * basis.len());
    for x in basis {
        for y in basis {
            out.push(x.adjoint() * y);
        }
    }
    out
}

fn combine<T: Real>(basis: &[CMat<T>], coeffs: &[Cx<T>]) -> CMat<T> {
    let mut out = CMat::zeros(basis[0].nrows(), basis[0].ncols());
    for (b, c) in basis.iter().zip(coeffs) {
        out += b * *c;
    }
    out
}

impl<T: Real> BranchFamily<T> {
    fn new(left_basis: Vec<CMat<T>>, right_basis: Vec<CMat<T>>) -> Self {
        Self {
            left_gram: gram(&left_basis),
            right_gram: gram(&right_basis),
            left_basis,
            right_basis,
            members: Vec::new(),
        }
    }

    fn push(&mut self, kind: BranchKind, prior: f64, left: Vec<Cx<T>>, right: Vec<Cx<T>>) {
        self.members.push(FamilyMember {
            kind,
            prior,
            left,
            right,
        });
    }

    pub fn left_operator(&self, k: usize) -> CMat<T> {
        combine(&self.left_basis, &self.members[k].left)
    }

    pub fn right_operator(&self, k: usize) -> CMat<T> {
        combine(&self.right_basis, &self.members[k].right)
    }
}

/// Materialised product branch `prior * (A (x) B) rho (A (x) B)^+`.
#[derive(Clone, Debug)]
pub struct TwoModeBranch<T: Real> {
    pub kind: BranchKind,
    pub prior: f64,
    pub left: CMat<T>,
    pub right: CMat<T>,
}

/// All branches of one inter-site pair step.
#[derive(Clone, Debug)]
pub struct TwoSiteMap<T: Real> {
    pub families: Vec<BranchFamily<T>>,
}

impl<T: Real> TwoSiteMap<T> {
    pub fn len(&self) -> usize {
        self.families.iter().map(|f| f.members.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(family, member)` of the flat branch index `k`.
    pub fn locate(&self, mut k: usize) -> (usize, usize) {
        for (i, f) in self.families.iter().enumerate() {
            if k < f.members.len() {
                return (i, k);
            }
            k -= f.members.len();
        }
        panic!("branch index out of range");
    }

    pub fn branches(&self) -> Vec<TwoModeBranch<T>> {
        let mut out = Vec::with_capacity(self.len());
        for f in &self.families {
            for (k, m) in f.members.iter().enumerate() {
                out.push(TwoModeBranch {
                    kind: m.kind,
                    prior: m.prior,
                    left: f.left_operator(k),
                    right: f.right_operator(k),
                });
            }
        }
        out
    }
}

fn cscale<T: Real>(z: Complex64) -> Cx<T> {
    cx(z.re, z.im)
}

fn diag_exp<T: Real>(levels: usize, f: impl Fn(usize) -> f64) -> CMat<T> {
    CMat::from_fn(levels, levels, |i, j| {
        if i == j {
            cx(f(i).exp(), 0.0)
        } else {
            cx(0.0, 0.0)
        }
    })
}

/// `exp(-(k1 a^+ a + k2 a a^+))` on the truncated space.
fn quadratic_damping<T: Real>(levels: usize, k1: f64, k2: f64) -> CMat<T> {
    let d = levels - 1;
    diag_exp(levels, |k| {
        let aad = if k < d { (k + 1) as f64 } else { 0.0 };
        -(k1 * k as f64 + k2 * aad)
    })
}

fn powi_i(k: u8) -> Complex64 {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][k as usize % 4]
}

fn negative(weight: f64, context: String) -> SimError {
    SimError::NegativeWeight { weight, context }
}

/// Enumerates the product branches of the step map for `p`: 256 coherent,
/// 4 interaction, up to 4 Kraus and 2 dephasing branches.
///
/// Families collapse to one member when their randomness is inert (no
/// coupling, no interaction), and zero-weight Kraus branches are dropped.
pub fn enumerate_two_site_branches<T: Real>(
    p: &PairMapParams,
    ops: &TruncatedOps<T>,
) -> Result<TwoSiteMap<T>, SimError> {
    let levels = ops.levels();
    let phase = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let one = || cx::<T>(1.0, 0.0);
    let mut families = Vec::new();

    // coherent part, doubled parameters and half weight
    let qv = quadratic_damping::<T>(levels, p.k_v[0], p.k_v[1]);
    let qw = quadratic_damping::<T>(levels, p.k_w[0], p.k_w[1]);
    let qtv = diag_exp::<T>(levels, |k| -p.k_v[2] * (k * k) as f64);
    let qtw = diag_exp::<T>(levels, |k| -p.k_w[2] * (k * k) as f64);
    let inert = p.g_total() == 0.0
        && p.u == 0.0
        && max_abs_entry(&(&qv - &qtv)) == T::zero()
        && max_abs_entry(&(&qw - &qtw)) == T::zero();
    let mut coherent = BranchFamily::new(
        vec![qv, ops.c[0].clone(), ops.c[1].clone()],
        vec![qw, ops.c[0].clone(), ops.c[1].clone()],
    );
    let roots: Vec<Complex64> = (0..4)
        .map(|k| phase * Complex64::new(2.0 * p.g[k / 2][k % 2], 0.0).sqrt())
        .collect();
    if p.g_total() == 0.0 {
        let prior = if inert { 1.0 } else { 0.5 };
        let zero = cx::<T>(0.0, 0.0);
        coherent.push(
            BranchKind::Coherent { z: [0; 4] },
            prior,
            vec![one(), zero, zero],
            vec![one(), zero, zero],
        );
    } else {
        for code in 0..256u16 {
            let z = [0, 1, 2, 3].map(|k| ((code >> (2 * k)) & 3) as u8);
            let mut left = [Complex64::new(0.0, 0.0); 2];
            let mut right = [Complex64::new(0.0, 0.0); 2];
            for k in 0..4 {
                let (alpha, beta) = (k / 2, k % 2);
                let zk = powi_i(z[k]);
                left[alpha] += zk * roots[k];
                right[beta] += zk.conj() * roots[k];
            }
            coherent.push(
                BranchKind::Coherent { z },
                0.5 / 256.0,
                vec![one(), cscale(left[0]), cscale(left[1])],
                vec![one(), cscale(right[0]), cscale(right[1])],
            );
        }
    }
    families.push(coherent);

    // interaction part, doubled parameters and half weight
    if !inert {
        let mut inter = BranchFamily::new(vec![qtv, ops.n.clone()], vec![qtw, ops.n.clone()]);
        if p.u == 0.0 {
            let zero = cx::<T>(0.0, 0.0);
            inter.push(
                BranchKind::Interaction { y: 0 },
                0.5,
                vec![one(), zero],
                vec![one(), zero],
            );
        } else {
            let root = phase * Complex64::new(2.0 * p.u, 0.0).sqrt();
            for y in 0..4u8 {
                let yk = powi_i(y);
                inter.push(
                    BranchKind::Interaction { y },
                    0.5 / 4.0,
                    vec![one(), cscale(yk * root)],
                    vec![one(), cscale(yk.conj() * root)],
                );
            }
        }
        families.push(inter);
    }

    // quadratic remainder as Kraus operators on one mode
    for (mode, first) in [(0u8, true), (1u8, false)] {
        let eig = SymmetricEigen::new(p.f_matrix(first));
        let pair = vec![ops.a.clone(), ops.ad.clone()];
        let mut fam = if first {
            BranchFamily::new(pair, vec![ops.id.clone()])
        } else {
            BranchFamily::new(vec![ops.id.clone()], pair)
        };
        for idx in 0..2 {
            let lam = eig.eigenvalues[idx];
            if lam < -NEGATIVE_WEIGHT_TOL {
                return Err(negative(
                    lam,
                    format!(
                        "quadratic remainder of mode {} in pair ({}, {}): rates below the coupling strength",
                        if first { p.v } else { p.w },
                        p.v,
                        p.w
                    ),
                ));
            }
            if lam <= 0.0 {
                continue;
            }
            let s = lam.sqrt();
            let col = eig.eigenvectors.column(idx);
            let coeffs = vec![cx::<T>(s * col[0], 0.0), cx::<T>(s * col[1], 0.0)];
            let kind = BranchKind::Jump {
                mode,
                index: idx as u8,
            };
            if first {
                fam.push(kind, 1.0, coeffs, vec![one()]);
            } else {
                fam.push(kind, 1.0, vec![one()], coeffs);
            }
        }
        if !fam.members.is_empty() {
            families.push(fam);
        }
    }

    // residual dephasing
    for (mode, k3, label) in [(0u8, p.k_v[2], p.v), (1u8, p.k_w[2], p.w)] {
        let rest = k3 - p.u.abs();
        if rest < -NEGATIVE_WEIGHT_TOL {
            return Err(negative(
                rest,
                format!(
                    "dephasing of mode {label} in pair ({}, {}) below |u| = {:e}",
                    p.v,
                    p.w,
                    p.u.abs()
                ),
            ));
        }
        if rest <= 0.0 {
            continue;
        }
        let kind = BranchKind::Dephasing { mode };
        let coeff = vec![cx::<T>(rest.sqrt(), 0.0)];
        let mut fam = if mode == 0 {
            BranchFamily::new(vec![ops.n.clone()], vec![ops.id.clone()])
        } else {
            BranchFamily::new(vec![ops.id.clone()], vec![ops.n.clone()])
        };
        if mode == 0 {
            fam.push(kind, 1.0, coeff, vec![one()]);
        } else {
            fam.push(kind, 1.0, vec![one()], coeff);
        }
        families.push(fam);
    }
    Ok(TwoSiteMap { families })
}

/// Superoperator (column stacking, mode `v` first) of the sum over branches.
pub fn pair_map_superop<T: Real>(map: &TwoSiteMap<T>) -> CMat<T> {
    let branches = map.branches();
    let dim = branches[0].left.nrows() * branches[0].right.nrows();
    let mut s = CMat::zeros(dim * dim, dim * dim);
    for b in &branches {
        let op = b.left.kronecker(&b.right);
        s += sandwich_superop(&op, &op.adjoint()) * cx::<T>(b.prior, 0.0);
    }
    s
}

/// Superoperator of `exp(int L)` for the two-mode generator described by `p`.
pub fn exact_pair_superop<T: Real>(p: &PairMapParams, ops: &TruncatedOps<T>) -> CMat<T> {
    let id = &ops.id;
    let mut h = CMat::<T>::zeros(ops.levels().pow(2), ops.levels().pow(2));
    for a in 0..2 {
        for b in 0..2 {
            if p.g[a][b] != 0.0 {
                h += ops.c[a].kronecker(&ops.c[b]) * cx::<T>(p.g[a][b], 0.0);
            }
        }
    }
    h += ops.n.kronecker(&ops.n) * cx::<T>(p.u, 0.0);
    let mut jumps = Vec::new();
    let singles = [&ops.a, &ops.ad, &ops.n];
    for (l, op) in singles.iter().enumerate() {
        if p.k_v[l] > 0.0 {
            jumps.push((re::<T>(p.k_v[l]), SparseOp::from_dense(&op.kronecker(id))));
        }
        if p.k_w[l] > 0.0 {
            jumps.push((re::<T>(p.k_w[l]), SparseOp::from_dense(&id.kronecker(op))));
        }
    }
    let l = Liouvillian::new(SparseOp::from_dense(&h), jumps);
    expm(&l.superoperator())
}

/// Largest entry of the difference of two Choi matrices. Column-stacked
/// superoperators and Choi matrices hold the same entries, so this compares
/// the superoperators directly.
pub fn choi_distance<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    max_abs_entry(&(a - b))
}
