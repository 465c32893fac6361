//! Gate fidelity on a code subspace.

use crate::error::{Result, SimError};
use crate::scalar::{to_f64, CMat, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateFidelity {
    pub fidelity: f64,
    /// Population of the code subspace before renormalisation.
    pub code_population: f64,
}

impl GateFidelity {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }
}

/// Restriction `P rho P` of `rho` to the basis vectors listed in `code`.
pub fn project_onto<T: Real>(rho: &CMat<T>, code: &[usize]) -> CMat<T> {
    CMat::from_fn(code.len(), code.len(), |i, j| rho[(code[i], code[j])])
}

/// `tr(sigma tau)` between the renormalised code block of `output` and the image
/// `U rho_in U^+` of the code-space input under the target gate.
pub fn gate_fidelity<T: Real>(
    output: &CMat<T>,
    input: &CMat<T>,
    target: &CMat<T>,
    code: &[usize],
) -> Result<GateFidelity> {
    let k = code.len();
    if input.nrows() != k || target.nrows() != k {
        return Err(SimError::Argument(format!(
            "code subspace has {k} states, gate acts on {}",
            target.nrows()
        )));
    }
    let block = project_onto(output, code);
    let pop = to_f64(block.trace().re);
    if pop <= 0.0 {
        return Err(SimError::Normalisation(
            "output has no code-subspace population".into(),
        ));
    }
    let ideal = target * input * target.adjoint();
    let overlap = to_f64((&block * &ideal).trace().re) / pop;
    Ok(GateFidelity {
        fidelity: overlap,
        code_population: pop,
    })
}

/// Bound `2 m kappa t (d + 1)` on the trace-norm deviation caused by loss and gain.
pub fn noise_error_bound(modes: usize, kappa: f64, t: f64, d: usize) -> f64 {
    2.0 * modes as f64 * kappa * t * (d as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use nalgebra::DVector;

    #[test]
    fn identity_target_on_unevolved_state() {
        let psi = DVector::from_vec(vec![cx::<f64>(0.6, 0.0), cx(0.0, 0.8)]);
        let input = &psi * psi.adjoint();
        let mut out = CMat::zeros(3, 3);
        out.view_mut((0, 0), (2, 2)).copy_from(&input);
        let f = gate_fidelity(&out, &input, &CMat::identity(2, 2), &[0, 1]).unwrap();
        assert!((f.fidelity - 1.0).abs() < 1e-15);
        assert!((f.code_population - 1.0).abs() < 1e-15);
    }

    #[test]
    fn leakage_is_renormalised_and_empty_code_space_fails() {
        let mut out = CMat::<f64>::zeros(3, 3);
        out[(0, 0)] = cx(0.5, 0.0);
        out[(2, 2)] = cx(0.5, 0.0);
        let mut input = CMat::zeros(2, 2);
        input[(0, 0)] = cx(1.0, 0.0);
        let f = gate_fidelity(&out, &input, &CMat::identity(2, 2), &[0, 1]).unwrap();
        assert!((f.fidelity - 1.0).abs() < 1e-15);
        assert!((f.code_population - 0.5).abs() < 1e-15);
        let mut dark = CMat::<f64>::zeros(3, 3);
        dark[(2, 2)] = cx(1.0, 0.0);
        assert!(gate_fidelity(&dark, &input, &CMat::identity(2, 2), &[0, 1]).is_err());
    }

    #[test]
    fn bound_formula() {
        assert!((noise_error_bound(1, 0.1, 2.0, 1) - 0.8).abs() < 1e-15);
    }
}
