//! Operator builders for fermionic (Jordan-Wigner) and truncated bosonic spaces.
//!
//! Fermion basis index: bit `m - 1 - v` holds the occupation of mode `v`, so
//! `|n_1 ... n_m> = (a_1^+)^{n_1} ... (a_m^+)^{n_m} |vac>`.
//! Boson basis index: `sum_v n_v D^{m - 1 - v}` with `D = d + 1` levels.

use crate::linalg::SparseOp;
use crate::scalar::{cx, re, CMat, Cx, Real};

pub fn fermion_dim(m: usize) -> usize {
    1usize << m
}

/// Fermionic annihilation operator of mode `v` on `m` modes.
pub fn fermion_annihilation<T: Real>(m: usize, v: usize) -> SparseOp<T> {
    assert!(v < m);
    let bit = 1usize << (m - 1 - v);
    let mut entries = Vec::with_capacity(fermion_dim(m) / 2);
    for b in 0..fermion_dim(m) {
        if b & bit != 0 {
            let higher = b >> (m - v);
            let sign = if higher.count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            entries.push((b ^ bit, b, cx(sign, 0.0)));
        }
    }
    SparseOp {
        dim: fermion_dim(m),
        entries,
    }
}

pub fn fermion_number<T: Real>(m: usize, v: usize) -> SparseOp<T> {
    let bit = 1usize << (m - 1 - v);
    SparseOp {
        dim: fermion_dim(m),
        entries: (0..fermion_dim(m))
            .filter(|b| b & bit != 0)
            .map(|b| (b, b, cx(1.0, 0.0)))
            .collect(),
    }
}

/// Majorana operator `c^1 = (a + a^+)/sqrt 2` or `c^2 = (a - a^+)/(sqrt 2 i)`.
pub fn fermion_majorana<T: Real>(m: usize, v: usize, alpha: usize) -> SparseOp<T> {
    let a = fermion_annihilation::<T>(m, v);
    majorana_from(&a, alpha)
}

fn majorana_from<T: Real>(a: &SparseOp<T>, alpha: usize) -> SparseOp<T> {
    let s = re::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let ad = a.adjoint();
    match alpha {
        0 => a.add(&ad).scale(Cx::new(s, T::zero())),
        1 => a
            .add(&ad.scale(cx(-1.0, 0.0)))
            .scale(Cx::new(T::zero(), -s)),
        _ => panic!("quadrature index must be 0 or 1"),
    }
}

/// Single-mode truncated annihilation operator on `levels = d + 1` states.
pub fn boson_local_annihilation<T: Real>(levels: usize) -> CMat<T> {
    let mut a = CMat::zeros(levels, levels);
    for k in 1..levels {
        a[(k - 1, k)] = Cx::new(re::<T>(k as f64).sqrt(), T::zero());
    }
    a
}

pub fn boson_local_number<T: Real>(levels: usize) -> CMat<T> {
    CMat::from_fn(levels, levels, |i, j| {
        if i == j {
            cx(i as f64, 0.0)
        } else {
            cx(0.0, 0.0)
        }
    })
}

/// Local quadrature `c^alpha` on `levels` states.
pub fn boson_local_quadrature<T: Real>(levels: usize, alpha: usize) -> CMat<T> {
    let a = boson_local_annihilation::<T>(levels);
    let s = re::<T>(std::f64::consts::FRAC_1_SQRT_2);
    match alpha {
        0 => (&a + a.adjoint()) * Cx::new(s, T::zero()),
        1 => (&a - a.adjoint()) * Cx::new(T::zero(), -s),
        _ => panic!("quadrature index must be 0 or 1"),
    }
}

/// Projection onto `levels` states of the product `c^alpha c^beta` of untruncated quadratures.
pub fn boson_projected_quadratic<T: Real>(levels: usize, alpha: usize, beta: usize) -> CMat<T> {
    let big = levels + 1;
    let p = boson_local_quadrature::<T>(big, alpha) * boson_local_quadrature::<T>(big, beta);
    p.view((0, 0), (levels, levels)).clone_owned()
}

/// Embeds a single-mode operator acting on mode `v` of `m` modes with `levels` each.
pub fn embed_mode<T: Real>(local: &CMat<T>, m: usize, levels: usize, v: usize) -> SparseOp<T> {
    let dim = levels.pow(m as u32);
    let stride = levels.pow((m - 1 - v) as u32);
    let mut entries = Vec::new();
    for (i, j, val) in dense_nonzeros(local) {
        for b in 0..dim {
            let digit = (b / stride) % levels;
            if digit == j {
                let target = b - j * stride + i * stride;
                entries.push((target, b, val));
            }
        }
    }
    SparseOp { dim, entries }
}

fn dense_nonzeros<T: Real>(a: &CMat<T>) -> Vec<(usize, usize, Cx<T>)> {
    let mut out = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v.re != T::zero() || v.im != T::zero() {
                out.push((i, j, v));
            }
        }
    }
    out
}

pub fn boson_dim(m: usize, levels: usize) -> usize {
    levels.pow(m as u32)
}

/// Occupations of each mode for basis index `b`.
pub fn boson_occupations(b: usize, m: usize, levels: usize) -> Vec<usize> {
    (0..m)
        .map(|v| (b / levels.pow((m - 1 - v) as u32)) % levels)
        .collect()
}

pub fn fermion_occupations(b: usize, m: usize) -> Vec<usize> {
    (0..m).map(|v| (b >> (m - 1 - v)) & 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;

    #[test]
    fn jordan_wigner_anticommutation() {
        let m = 3;
        let ops: Vec<CMat<f64>> = (0..m)
            .map(|v| fermion_annihilation::<f64>(m, v).to_dense())
            .collect();
        for v in 0..m {
            for w in 0..m {
                let ac = &ops[v] * &ops[w] + &ops[w] * &ops[v];
                assert!(ac.norm() < 1e-14);
                let acd = &ops[v] * ops[w].adjoint() + ops[w].adjoint() * &ops[v];
                let want = if v == w {
                    identity::<f64>(8)
                } else {
                    CMat::zeros(8, 8)
                };
                assert!((acd - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn creation_order_matches_basis_labels() {
        // a1^+ a2^+ |vac> = |11> with a plus sign.
        let a1 = fermion_annihilation::<f64>(2, 0).to_dense();
        let a2 = fermion_annihilation::<f64>(2, 1).to_dense();
        let mut vac = nalgebra::DVector::<Cx<f64>>::zeros(4);
        vac[0] = cx(1.0, 0.0);
        let s = a1.adjoint() * (a2.adjoint() * &vac);
        assert!((s[3] - cx(1.0, 0.0)).norm() < 1e-15);
        let s = a2.adjoint() * (a1.adjoint() * &vac);
        assert!((s[3] + cx(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn majoranas_square_to_half_and_give_number() {
        let m = 2;
        for v in 0..m {
            let c1 = fermion_majorana::<f64>(m, v, 0).to_dense();
            let c2 = fermion_majorana::<f64>(m, v, 1).to_dense();
            assert!((&c1 * &c1 - identity::<f64>(4) * cx(0.5, 0.0)).norm() < 1e-14);
            assert!((&c2 * &c2 - identity::<f64>(4) * cx(0.5, 0.0)).norm() < 1e-14);
            // n = 1/2 + i c1 c2
            let n = identity::<f64>(4) * cx(0.5, 0.0) + &c1 * &c2 * cx(0.0, 1.0);
            assert!((n - fermion_number::<f64>(m, v).to_dense()).norm() < 1e-14);
        }
    }

    #[test]
    fn truncated_boson_commutator_defect_sits_on_top_level() {
        let d = 4;
        let a = boson_local_annihilation::<f64>(d + 1);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for k in 0..d {
            assert!((comm[(k, k)] - cx(1.0, 0.0)).norm() < 1e-14);
        }
        assert!((comm[(d, d)] - cx(-(d as f64), 0.0)).norm() < 1e-14);
        // projected c1 c1 keeps the full a a^+ on the top level
        let p = boson_projected_quadratic::<f64>(d + 1, 0, 0);
        assert!((p[(d, d)] - cx((2.0 * d as f64 + 1.0) / 2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn embedding_matches_kronecker() {
        let levels = 3;
        let a = boson_local_annihilation::<f64>(levels);
        let id = identity::<f64>(levels);
        let e = embed_mode(&a, 2, levels, 1).to_dense();
        assert!((e - id.kronecker(&a)).norm() < 1e-15);
        let e = embed_mode(&a, 2, levels, 0).to_dense();
        assert!((e - a.kronecker(&id)).norm() < 1e-15);
    }
}
