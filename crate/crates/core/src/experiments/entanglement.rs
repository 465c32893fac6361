//! Entanglement of small fermionic models under loss and gain at equal rates.
//!
//! Two modes: `H = J (a1^+ a2 + a2^+ a1)` from `a1^+|vac>`, measured by the
//! off-diagonal 1-norm. Four modes: `H = J (a2 a3 + a3^+ a2^+)` from
//! `(a1^+ + a4^+)|vac>/sqrt2`, measured by the smallest eigenvalue of the
//! partial transpose of the normalised two-qubit reduction.

use super::output::{num, Table};
use super::{loglog_slope, parabolic_peak};
use crate::error::{Result, SimError};
use crate::linalg::{expm, unvectorize, vectorize, SparseOp};
use crate::oracle::ops::{fermion_annihilation, fermion_dim};
use crate::oracle::{fermion_even_reduction, offdiag_coherence, pt_min_eigenvalue, Liouvillian};
use crate::scalar::{cx, CMat};
use nalgebra::DVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FermionModel {
    TwoMode,
    FourMode,
}

impl FermionModel {
    pub fn modes(self) -> usize {
        match self {
            FermionModel::TwoMode => 2,
            FermionModel::FourMode => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FermionModel::TwoMode => "two-mode",
            FermionModel::FourMode => "four-mode",
        }
    }

    /// Column name of the raw measure.
    pub fn measure_name(self) -> &'static str {
        match self {
            FermionModel::TwoMode => "offdiag_norm[-]",
            FermionModel::FourMode => "pt_min_eig[-]",
        }
    }
}

impl std::str::FromStr for FermionModel {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-mode" | "2" => Ok(FermionModel::TwoMode),
            "four-mode" | "4" => Ok(FermionModel::FourMode),
            _ => Err(SimError::Argument(format!(
                "unknown fermion model `{s}` (two-mode | four-mode)"
            ))),
        }
    }
}

pub fn model_liouvillian(model: FermionModel, j: f64, kappa: f64) -> Liouvillian<f64> {
    let m = model.modes();
    let a: Vec<SparseOp<f64>> = (0..m).map(|v| fermion_annihilation(m, v)).collect();
    let h = match model {
        FermionModel::TwoMode => a[0].adjoint().mul(&a[1]).add(&a[1].adjoint().mul(&a[0])),
        FermionModel::FourMode => {
            let pair = a[1].mul(&a[2]);
            pair.add(&pair.adjoint())
        }
    }
    .scale(cx(j, 0.0));
    let mut jumps = Vec::new();
    for op in &a {
        jumps.push((kappa, op.clone()));
        jumps.push((kappa, op.adjoint()));
    }
    Liouvillian::new(h, jumps)
}

pub fn model_initial(model: FermionModel) -> CMat<f64> {
    let m = model.modes();
    let mut vac = DVector::zeros(fermion_dim(m));
    vac[0] = cx(1.0, 0.0);
    let ad = |v: usize| fermion_annihilation::<f64>(m, v).to_dense().adjoint();
    let psi = match model {
        FermionModel::TwoMode => &ad(0) * &vac,
        FermionModel::FourMode => {
            (&ad(0) * &vac + &ad(3) * &vac) * cx(std::f64::consts::FRAC_1_SQRT_2, 0.0)
        }
    };
    &psi * psi.adjoint()
}

/// Raw measure: off-diagonal norm (two modes) or PT minimum eigenvalue (four modes).
pub fn measure(model: FermionModel, rho: &CMat<f64>) -> f64 {
    match model {
        FermionModel::TwoMode => offdiag_coherence(rho),
        FermionModel::FourMode => {
            let s = fermion_even_reduction(rho);
            let tr = s.trace().re;
            pt_min_eigenvalue(&(s / cx(tr, 0.0)), 2, 2)
        }
    }
}

/// Quantity maximised at the peak: the measure itself, or minus the PT eigenvalue.
pub fn entanglement_signal(model: FermionModel, rho: &CMat<f64>) -> f64 {
    match model {
        FermionModel::TwoMode => measure(model, rho),
        FermionModel::FourMode => -measure(model, rho),
    }
}

/// States at `t = k dt` for `k = 0..=steps`.
pub fn evolve_series(
    model: FermionModel,
    j: f64,
    kappa: f64,
    dt: f64,
    steps: usize,
) -> Vec<CMat<f64>> {
    let l = model_liouvillian(model, j, kappa);
    let prop = expm(&(l.superoperator() * cx(dt, 0.0)));
    let mut cur = model_initial(model);
    let dim = cur.nrows();
    let mut out = vec![cur.clone()];
    for _ in 0..steps {
        cur = unvectorize(&(&prop * vectorize(&cur)), dim);
        out.push(cur.clone());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementPoint {
    pub kappa: f64,
    pub t: f64,
    pub value: f64,
}

/// Measure on the uniform grid `t = k s_step / kappa`, `k = 0..=steps`.
pub fn entanglement_series(
    model: FermionModel,
    j: f64,
    kappa: f64,
    s_step: f64,
    steps: usize,
) -> Vec<EntanglementPoint> {
    let dt = s_step / kappa;
    evolve_series(model, j, kappa, dt, steps)
        .iter()
        .enumerate()
        .map(|(k, rho)| EntanglementPoint {
            kappa,
            t: k as f64 * dt,
            value: measure(model, rho),
        })
        .collect()
}

/// `t*` maximising the entanglement signal, refined by a parabola.
pub fn peak_time(model: FermionModel, series: &[EntanglementPoint]) -> (f64, f64) {
    let ts: Vec<f64> = series.iter().map(|p| p.t).collect();
    let sig: Vec<f64> = series
        .iter()
        .map(|p| match model {
            FermionModel::TwoMode => p.value,
            FermionModel::FourMode => -p.value,
        })
        .collect();
    parabolic_peak(&ts, &sig)
}

/// `E(rho(h)) / h` for a short time `h`.
pub fn small_time_slope(model: FermionModel, j: f64, kappa: f64, h: f64) -> f64 {
    let series = evolve_series(model, j, kappa, h, 1);
    entanglement_signal(model, &series[1]) / h
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementScan {
    pub model: FermionModel,
    pub j: f64,
    pub points: Vec<EntanglementPoint>,
    /// `(kappa, t*, signal at t*)`.
    pub peaks: Vec<(f64, f64, f64)>,
    pub slope: f64,
}

pub fn entanglement_scan(
    model: FermionModel,
    j: f64,
    kappas: &[f64],
    s_step: f64,
    steps: usize,
) -> EntanglementScan {
    let mut points = Vec::new();
    let mut peaks = Vec::new();
    for &k in kappas {
        let series = entanglement_series(model, j, k, s_step, steps);
        let (t, v) = peak_time(model, &series);
        peaks.push((k, t, v));
        points.extend(series);
    }
    let ks: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let ts: Vec<f64> = peaks.iter().map(|p| p.1).collect();
    let slope = if ks.len() > 1 {
        loglog_slope(&ks, &ts)
    } else {
        f64::NAN
    };
    EntanglementScan {
        model,
        j,
        points,
        peaks,
        slope,
    }
}

impl EntanglementScan {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "model",
            "J[E]",
            "kappa[E]",
            "t[1/E]",
            self.model.measure_name(),
        ]);
        for p in &self.points {
            t.push(vec![
                self.model.name().into(),
                num(self.j),
                num(p.kappa),
                num(p.t),
                num(p.value),
            ]);
        }
        t
    }

    pub fn peak_table(&self) -> Table {
        let mut t = Table::new(&[
            "model",
            "J[E]",
            "kappa[E]",
            "t_star[1/E]",
            "signal_at_peak[-]",
        ]);
        for (k, ts, v) in &self.peaks {
            t.push(vec![
                self.model.name().into(),
                num(self.j),
                num(*k),
                num(*ts),
                num(*v),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_states_are_unentangled() {
        let two = model_initial(FermionModel::TwoMode);
        assert_eq!(measure(FermionModel::TwoMode, &two), 0.0);
        let four = model_initial(FermionModel::FourMode);
        assert!(measure(FermionModel::FourMode, &four) >= -1e-9);
    }

    #[test]
    fn dynamics_preserve_trace_and_hermiticity() {
        for model in [FermionModel::TwoMode, FermionModel::FourMode] {
            let s = evolve_series(model, 1.0, 3.0, 0.05, 20);
            for rho in &s {
                assert!((rho.trace().re - 1.0).abs() < 1e-10);
                assert!(crate::linalg::max_abs_entry(&(rho - rho.adjoint())) < 1e-12);
            }
        }
    }

    #[test]
    fn two_mode_slope_at_zero_noise() {
        // rho_{01,10}(t) = i sin(Jt) cos(Jt) without noise
        let j = 0.8;
        let s = small_time_slope(FermionModel::TwoMode, j, 0.0, 1e-6);
        assert!((s - 2.0 * j).abs() < 1e-5);
    }

    #[test]
    fn model_names_parse() {
        assert_eq!(
            "four-mode".parse::<FermionModel>().unwrap(),
            FermionModel::FourMode
        );
        assert!("six".parse::<FermionModel>().is_err());
    }
}
