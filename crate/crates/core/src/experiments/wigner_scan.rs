//! Wigner negativity of a coherent state under `H = U n^2` with dephasing.

use super::output::{num, Table};
use super::{loglog_slope, parabolic_peak};
use crate::error::{Result, SimError};
use crate::linalg::SparseOp;
use crate::oracle::ops::boson_local_number;
use crate::oracle::{coherent_amplitudes, wigner, Liouvillian, PhaseGrid};
use crate::scalar::{cx, CMat};

/// Largest truncation the scan may grow to.
pub const MAX_TRUNCATION: usize = 400;

/// Boundary population the truncation is grown below.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Population left beyond the truncation. Cross terms with the dropped levels
/// enter the Wigner function through amplitudes, i.e. the square root of this.
pub const TAIL_TOL: f64 = 1e-20;

/// Smallest `d` with boundary level below `BOUNDARY_TOL` and Poisson tail
/// beyond it below `TAIL_TOL` for a coherent state with amplitude `alpha`.
/// Populations are conserved by the dynamics, so this holds at all times.
pub fn coherent_truncation(alpha: f64) -> Result<usize> {
    let mean = alpha * alpha;
    let mut p = (-mean).exp();
    let mut d = 0;
    while d < MAX_TRUNCATION {
        d += 1;
        p *= mean / d as f64;
        // terms beyond d fall at least geometrically with ratio mean / (d + 2)
        let next = p * mean / (d + 1) as f64;
        let ratio = mean / (d + 2) as f64;
        if ratio < 1.0 && p < BOUNDARY_TOL && next / (1.0 - ratio) < TAIL_TOL {
            return Ok(d);
        }
    }
    Err(SimError::Plan(format!(
        "coherent amplitude {alpha} needs a truncation above {MAX_TRUNCATION}"
    )))
}

/// Generator `-i U [n^2, .] + kappa D_n` on `levels` Fock states.
pub fn kerr_dephasing(u: f64, kappa: f64, levels: usize) -> Liouvillian<f64> {
    let n = boson_local_number::<f64>(levels);
    let h = SparseOp::from_dense(&(&n * &n * cx(u, 0.0)));
    Liouvillian::new(h, vec![(kappa, SparseOp::from_dense(&n))])
}

/// `rho(t)` from `|alpha><alpha|`, truncation chosen by [`coherent_truncation`].
pub fn kerr_dephasing_state(u: f64, kappa: f64, alpha: f64, t: f64) -> Result<CMat<f64>> {
    let levels = coherent_truncation(alpha)? + 1;
    let psi = coherent_amplitudes::<f64>((alpha, 0.0), levels);
    let rho = &psi * psi.adjoint();
    Ok(kerr_dephasing(u, kappa, levels).propagate(&rho, t))
}

/// Square window holding the ring of radius `sqrt2 |alpha|` the state spreads over.
pub fn wigner_window(alpha: f64, step: f64) -> PhaseGrid {
    PhaseGrid::square(std::f64::consts::SQRT_2 * alpha.abs() + 4.5, step)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerPoint {
    pub kappa_over_u: f64,
    pub alpha: f64,
    pub t: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl WignerPoint {
    pub fn relative_negativity(&self) -> f64 {
        -self.w_min / self.w_max
    }
}

pub fn wigner_point(
    u: f64,
    kappa_over_u: f64,
    alpha: f64,
    t: f64,
    step: f64,
) -> Result<WignerPoint> {
    let rho = kerr_dephasing_state(u, kappa_over_u * u, alpha, t)?;
    let w = wigner(&rho, &wigner_window(alpha, step))?;
    Ok(WignerPoint {
        kappa_over_u,
        alpha,
        t,
        w_min: w.w_min,
        w_max: w.w_max,
    })
}

/// Scan over every `(kappa/U, t)` pair at fixed `U` and `alpha`.
pub fn wigner_scan(
    u: f64,
    alpha: f64,
    ts: &[f64],
    kappa_over_u: &[f64],
    step: f64,
) -> Result<Vec<WignerPoint>> {
    let mut out = Vec::new();
    for &k in kappa_over_u {
        for &t in ts {
            out.push(wigner_point(u, k, alpha, t, step)?);
        }
    }
    Ok(out)
}

pub fn wigner_table(points: &[WignerPoint]) -> Table {
    let mut t = Table::new(&[
        "kappa_over_U[-]",
        "alpha[-]",
        "t[1/E]",
        "W_min[-]",
        "W_max[-]",
        "neg_ratio[-]",
    ]);
    for p in points {
        t.push(vec![
            num(p.kappa_over_u),
            num(p.alpha),
            num(p.t),
            num(p.w_min),
            num(p.w_max),
            num(p.relative_negativity()),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct NegativityPeak {
    pub u: f64,
    pub t_star: f64,
    pub ratio: f64,
    pub series: Vec<WignerPoint>,
}

/// Time of maximal `-W_min/W_max` on the grid `t = s / U`, refined by a parabola
/// through the best grid point and its neighbours.
pub fn negativity_peak(
    u: f64,
    kappa_over_u: f64,
    alpha: f64,
    s_grid: &[f64],
    step: f64,
) -> Result<NegativityPeak> {
    let ts: Vec<f64> = s_grid.iter().map(|s| s / u).collect();
    let series = wigner_scan(u, alpha, &ts, &[kappa_over_u], step)?;
    let ratios: Vec<f64> = series.iter().map(|p| p.relative_negativity()).collect();
    let (t_star, ratio) = parabolic_peak(&ts, &ratios);
    Ok(NegativityPeak {
        u,
        t_star,
        ratio,
        series,
    })
}

/// Peaks for every `U`, and the log-log slope of `t*` against `U`.
pub fn peak_time_scaling(
    us: &[f64],
    kappa_over_u: f64,
    alpha: f64,
    s_grid: &[f64],
    step: f64,
) -> Result<(Vec<NegativityPeak>, f64)> {
    let peaks = us
        .iter()
        .map(|&u| negativity_peak(u, kappa_over_u, alpha, s_grid, step))
        .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = peaks.iter().map(|p| p.t_star).collect();
    Ok((peaks, loglog_slope(us, &ts)))
}

pub fn peak_table(peaks: &[NegativityPeak]) -> Table {
    let mut t = Table::new(&["U[E]", "t_star[1/E]", "neg_ratio_max[-]"]);
    for p in peaks {
        t.push(vec![num(p.u), num(p.t_star), num(p.ratio)]);
    }
    t
}
