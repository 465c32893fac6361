//! Pfaffians and Wick contractions for Majorana strings.

use crate::scalar::{cabs, czero, re, CMat, Cx, Real};
use nalgebra::DMatrix;

/// Pfaffian of a complex antisymmetric matrix (Parlett-Reid elimination with pivoting).
pub fn pfaffian<T: Real>(a: &CMat<T>) -> Cx<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n % 2 == 1 {
        return czero();
    }
    if n == 0 {
        return Cx::new(T::one(), T::zero());
    }
    let mut a = a.clone();
    let mut pf = Cx::new(T::one(), T::zero());
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        let mut best = cabs(a[(k + 1, k)]);
        for i in k + 2..n {
            let v = cabs(a[(i, k)]);
            if v > best {
                best = v;
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let piv = a[(k, k + 1)];
        if piv.re == T::zero() && piv.im == T::zero() {
            return czero();
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<Cx<T>> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<Cx<T>> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    let upd = tau[ii] * col[jj] - col[ii] * tau[jj];
                    a[(i, j)] += upd;
                }
            }
        }
        k += 2;
    }
    pf
}

/// Two-point matrix `M_pq = <c_p c_q> = delta_pq / 2 - i Gamma_pq`.
pub fn two_point<T: Real>(gamma: &DMatrix<T>) -> CMat<T> {
    let n = gamma.nrows();
    CMat::from_fn(n, n, |p, q| {
        let d = if p == q { re::<T>(0.5) } else { T::zero() };
        Cx::new(d, -gamma[(p, q)])
    })
}

/// Expectation of the Majorana string `c_{s_1} ... c_{s_k}` in a Gaussian state.
pub fn string_expectation<T: Real>(m2: &CMat<T>, s: &[usize]) -> Cx<T> {
    let k = s.len();
    if k % 2 == 1 {
        return czero();
    }
    let a = CMat::from_fn(k, k, |p, q| {
        if p < q {
            m2[(s[p], s[q])]
        } else if p > q {
            -m2[(s[q], s[p])]
        } else {
            czero()
        }
    });
    pfaffian(&a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn brute_pfaffian(a: &CMat<f64>) -> Cx<f64> {
        let n = a.nrows();
        if n == 0 {
            return cx(1.0, 0.0);
        }
        let mut total = cx(0.0, 0.0);
        for j in 1..n {
            let keep: Vec<usize> = (1..n).filter(|&x| x != j).collect();
            let sub = CMat::from_fn(n - 2, n - 2, |p, q| a[(keep[p], keep[q])]);
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            total += a[(0, j)] * brute_pfaffian(&sub) * sign;
        }
        total
    }

    #[test]
    fn pfaffian_matches_expansion_and_determinant() {
        let mut s = 17u64;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for n in [2usize, 4, 6, 8] {
            let mut a = CMat::<f64>::zeros(n, n);
            for p in 0..n {
                for q in p + 1..n {
                    let z = cx(next(), next());
                    a[(p, q)] = z;
                    a[(q, p)] = -z;
                }
            }
            let pf = pfaffian(&a);
            assert!((pf - brute_pfaffian(&a)).norm() < 1e-12);
            assert!((pf * pf - a.determinant()).norm() < 1e-12);
        }
    }
}
