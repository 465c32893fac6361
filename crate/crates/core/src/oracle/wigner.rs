//! Single-mode Wigner function from position-space Hermite functions.
//!
//! `W(x, p) = (1/pi) int <x - y| rho |x + y> e^{2 i p y} dy` with `x = (a + a^+)/sqrt2`,
//! so the vacuum is `exp(-x^2 - p^2) / pi`.

use crate::error::{Result, SimError};
use crate::scalar::{to_f64, CMat, Real};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Boundary Fock population above which the truncation is reported as inadequate.
pub const BOUNDARY_WARN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl PhaseGrid {
    /// Square grid `[-r, r]^2` with spacing close to `step`.
    pub fn square(r: f64, step: f64) -> Self {
        let n = (2.0 * r / step).round() as usize + 1;
        Self {
            x_min: -r,
            x_max: r,
            p_min: -r,
            p_max: r,
            nx: n,
            np: n,
        }
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_min, self.x_max, self.nx)
    }

    pub fn ps(&self) -> Vec<f64> {
        Self::axis(self.p_min, self.p_max, self.np)
    }

    /// Area element of one grid cell.
    pub fn cell(&self) -> f64 {
        let dx = if self.nx > 1 {
            (self.x_max - self.x_min) / (self.nx - 1) as f64
        } else {
            1.0
        };
        let dp = if self.np > 1 {
            (self.p_max - self.p_min) / (self.np - 1) as f64
        } else {
            1.0
        };
        dx * dp
    }
}

#[derive(Clone, Debug)]
pub struct WignerMap {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[(i, j)] = W(xs[i], ps[j])`.
    pub values: DMatrix<f64>,
    pub w_min: f64,
    pub w_max: f64,
    /// Population of the highest retained Fock level.
    pub boundary_population: f64,
    cell: f64,
}

impl WignerMap {
    /// Riemann sum of `W` over the grid.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.cell
    }

    /// `-W_min / W_max`.
    pub fn relative_negativity(&self) -> f64 {
        -self.w_min / self.w_max
    }
}

/// Normalised Hermite functions `psi_0(x) .. psi_{levels-1}(x)`.
pub fn hermite_functions(levels: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; levels];
    if levels == 0 {
        return out;
    }
    out[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if levels > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..levels.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
    out
}

/// Evaluates the Wigner function of a single-mode state on `grid`.
pub fn wigner<T: Real>(rho: &CMat<T>, grid: &PhaseGrid) -> Result<WignerMap> {
    let levels = rho.nrows();
    if levels == 0 || rho.ncols() != levels {
        return Err(SimError::Argument(
            "wigner needs a square single-mode matrix".into(),
        ));
    }
    if grid.nx == 0 || grid.np == 0 {
        return Err(SimError::Argument("empty phase-space grid".into()));
    }
    let r = rho.map(|z| Complex64::new(to_f64(z.re), to_f64(z.im)));
    let boundary_population = r[(levels - 1, levels - 1)].re;
    if boundary_population > BOUNDARY_WARN {
        log::warn!("wigner: boundary Fock population {boundary_population:.2e} exceeds {BOUNDARY_WARN:.0e}");
    }
    // Hermite functions live inside |x| <~ sqrt(2n+1); the y-step resolves momenta up to that radius.
    let radius = (2.0 * levels as f64 + 1.0).sqrt() + 6.0;
    let pmax = grid.p_min.abs().max(grid.p_max.abs());
    let h = std::f64::consts::PI / (4.0 * radius.max(pmax));
    let xs = grid.xs();
    let ps = grid.ps();

    let k_all = (radius / h).ceil() as usize;
    // cos/sin(2 p y_k) shared by every row
    let trig: Vec<Vec<(f64, f64)>> = ps
        .iter()
        .map(|&p| {
            (0..=k_all)
                .map(|k| (2.0 * p * k as f64 * h).sin_cos())
                .collect()
        })
        .collect();

    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            let ymax = (radius - x.abs()).max(0.0);
            let k_max = ((ymax / h).ceil() as usize).min(k_all);
            // f(y) = sum_mn rho_mn psi_m(x - y) psi_n(x + y); f(-y) = conj f(y).
            let mut minus = DMatrix::<f64>::zeros(levels, k_max + 1);
            let mut plus = DMatrix::<Complex64>::zeros(levels, k_max + 1);
            for k in 0..=k_max {
                let y = k as f64 * h;
                minus.set_column(
                    k,
                    &nalgebra::DVector::from_vec(hermite_functions(levels, x - y)),
                );
                let hp = hermite_functions(levels, x + y);
                for (n, v) in hp.into_iter().enumerate() {
                    plus[(n, k)] = Complex64::new(v, 0.0);
                }
            }
            let rp = &r * plus;
            let f: Vec<Complex64> = (0..=k_max)
                .map(|k| (0..levels).map(|m| rp[(m, k)] * minus[(m, k)]).sum())
                .collect();
            trig.iter()
                .map(|row| {
                    let mut s = f[0].re;
                    for (fk, (sin, cos)) in f.iter().zip(row).skip(1) {
                        s += 2.0 * (fk.re * cos - fk.im * sin);
                    }
                    s * h / std::f64::consts::PI
                })
                .collect()
        })
        .collect();

    let values = DMatrix::from_fn(xs.len(), ps.len(), |i, j| rows[i][j]);
    let w_min = values.min();
    let w_max = values.max();
    Ok(WignerMap {
        xs,
        ps,
        values,
        w_min,
        w_max,
        boundary_population,
        cell: grid.cell(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::state::coherent_amplitudes;
    use crate::scalar::cx;
    use std::f64::consts::PI;

    fn fock(levels: usize, n: usize) -> CMat<f64> {
        let mut rho = CMat::zeros(levels, levels);
        rho[(n, n)] = cx(1.0, 0.0);
        rho
    }

    fn laguerre(n: usize, x: f64) -> f64 {
        let (mut a, mut b) = (1.0, 1.0 - x);
        if n == 0 {
            return a;
        }
        for k in 1..n {
            let kf = k as f64;
            let c = ((2.0 * kf + 1.0 - x) * b - kf * a) / (kf + 1.0);
            a = b;
            b = c;
        }
        b
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let h = 0.01;
        let grid: Vec<Vec<f64>> = (-1500..=1500)
            .map(|k| hermite_functions(12, k as f64 * h))
            .collect();
        for m in 0..12 {
            for n in 0..12 {
                let s: f64 = grid.iter().map(|v| v[m] * v[n]).sum::<f64>() * h;
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-10, "{m} {n} {s}");
            }
        }
    }

    #[test]
    fn vacuum_and_single_photon_at_origin() {
        let grid = PhaseGrid::square(6.0, 0.1);
        let w0 = wigner(&fock(4, 0), &grid).unwrap();
        let c = grid.nx / 2;
        assert!((w0.values[(c, c)] - 1.0 / PI).abs() < 1e-10);
        assert!(w0.w_min > -1e-12);
        assert!((w0.integral() - 1.0).abs() < 1e-3);
        let w1 = wigner(&fock(4, 1), &grid).unwrap();
        assert!((w1.values[(c, c)] + 1.0 / PI).abs() < 1e-10);
        assert!((w1.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fock_states_match_laguerre_closed_form() {
        let grid = PhaseGrid::square(5.0, 0.25);
        for n in [2usize, 5, 9] {
            let w = wigner(&fock(12, n), &grid).unwrap();
            for (i, &x) in w.xs.iter().enumerate() {
                for (j, &p) in w.ps.iter().enumerate() {
                    let r2 = x * x + p * p;
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    let want = sign / PI * (-r2).exp() * laguerre(n, 2.0 * r2);
                    assert!((w.values[(i, j)] - want).abs() < 1e-10, "n={n} x={x} p={p}");
                }
            }
        }
    }

    #[test]
    fn coherent_state_is_a_displaced_vacuum() {
        let alpha = 1.5;
        let psi = coherent_amplitudes::<f64>((alpha, 0.0), 40);
        let rho = &psi * psi.adjoint();
        let grid = PhaseGrid::square(7.0, 0.1);
        let w = wigner(&rho, &grid).unwrap();
        let x0 = std::f64::consts::SQRT_2 * alpha;
        for (i, &x) in w.xs.iter().enumerate() {
            for (j, &p) in w.ps.iter().enumerate() {
                let want = (-(x - x0).powi(2) - p * p).exp() / PI;
                assert!((w.values[(i, j)] - want).abs() < 1e-9);
            }
        }
        assert!(w.w_min >= -1e-6);
        assert!(w.boundary_population < BOUNDARY_WARN);
    }
}
