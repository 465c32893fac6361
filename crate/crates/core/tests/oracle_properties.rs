use nalgebra::DVector;
use noisy_lattice::linalg::{hermitian_eigenvalues, kron};
use noisy_lattice::model::load_config;
use noisy_lattice::oracle::*;
use noisy_lattice::scalar::{cx, CMat, Cx};
use proptest::prelude::*;

fn spec(text: &str) -> noisy_lattice::model::ModelSpec {
    load_config(text, &[]).unwrap().0
}

#[test]
fn free_hopping_gives_rabi_oscillation() {
    let j = 0.7;
    let s = spec(&format!(
        r#"
particle = "fermion"
sites = 2
modes_per_site = 1
[initial]
occupations = [1, 0]
[[coupling]]
a = [1, 1, 1]
b = [2, 1, 2]
im = {h}
[[coupling]]
a = [1, 1, 2]
b = [2, 1, 1]
im = {mh}
"#,
        h = j / 2.0,
        mh = -j / 2.0
    ));
    let ops = ModelOperators::<f64>::new(&s, None);
    let rho0 = initial_dense::<f64>(&s, None).rho;
    for t in [0.3, 1.1, 2.0] {
        let rho = evolve_exact(&s, &ops, &rho0, 0.0, t);
        let n1 = ops.number[0].mul_dense(&rho).trace().re;
        assert!((n1 - (j * t).cos().powi(2)).abs() < 1e-10, "t={t} n1={n1}");
        assert!((rho.trace().re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn single_mode_loss_decays_exponentially() {
    let s = spec(
        r#"
particle = "boson"
sites = 1
modes_per_site = 1
[noise]
kappa1 = 0.4
[initial]
occupations = [3]
"#,
    );
    let ops = ModelOperators::<f64>::new(&s, Some(3));
    let rho0 = initial_dense::<f64>(&s, Some(3)).rho;
    for t in [0.5, 2.0] {
        let rho = evolve_exact(&s, &ops, &rho0, 0.0, t);
        let n = ops.number[0].mul_dense(&rho).trace().re;
        assert!((n - 3.0 * (-0.4 * t).exp()).abs() < 1e-10);
    }
}

#[test]
fn dephasing_fixes_the_maximally_mixed_state_and_zero_generator_is_identity() {
    let s = spec(
        r#"
particle = "fermion"
sites = 1
modes_per_site = 3
[noise]
kappa3 = 0.9
"#,
    );
    let ops = ModelOperators::<f64>::new(&s, None);
    let mixed = CMat::<f64>::identity(8, 8) * cx(0.125, 0.0);
    let l = build_liouvillian(&s, &ops, 0.0);
    assert!(noisy_lattice::linalg::max_abs_entry(&l.apply(&mixed)) < 1e-14);

    let still = spec("particle = \"fermion\"\nsites = 1\nmodes_per_site = 2\n");
    let ops = ModelOperators::<f64>::new(&still, None);
    let psi = DVector::from_fn(4, |i, _| cx::<f64>(0.5, 0.1 * i as f64)).normalize();
    let rho = &psi * psi.adjoint();
    let out = evolve_exact(&still, &ops, &rho, 0.0, 3.0);
    assert!(noisy_lattice::linalg::max_abs_entry(&(out - &rho)) < 1e-15);
}

fn random_state(seed: &[f64], dim: usize) -> CMat<f64> {
    let a = CMat::<f64>::from_fn(dim, dim, |i, j| {
        let k = (i * dim + j) % seed.len();
        cx(
            seed[k] * (1.0 + i as f64),
            seed[(k + 3) % seed.len()] - 0.2 * j as f64,
        )
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn pure(v: &[f64]) -> CMat<f64> {
    let psi = DVector::from_fn(2, |i, _| Cx::new(v[2 * i], v[2 * i + 1]));
    let psi = psi.normalize();
    &psi * psi.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_distance_is_a_metric(
        a in proptest::collection::vec(-1.0f64..1.0, 8),
        b in proptest::collection::vec(-1.0f64..1.0, 8),
        c in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let (ra, rb, rc) = (random_state(&a, 3), random_state(&b, 3), random_state(&c, 3));
        let ab = trace_distance(&ra, &rb);
        let bc = trace_distance(&rb, &rc);
        let ac = trace_distance(&ra, &rc);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - trace_distance(&rb, &ra)).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(trace_distance(&ra, &ra).abs() < 1e-12);
    }

    #[test]
    fn separable_mixtures_have_positive_partial_transpose(
        v in proptest::collection::vec(-1.0f64..1.0, 800),
        w in proptest::collection::vec(0.0f64..1.0, 100),
    ) {
        let mut rho = CMat::<f64>::zeros(4, 4);
        let total: f64 = w.iter().sum::<f64>() + 1e-9;
        for k in 0..100 {
            let pa = pure(&v[8 * k..8 * k + 4]);
            let pb = pure(&v[8 * k + 4..8 * k + 8]);
            rho += kron(&pa, &pb) * cx(w[k] / total, 0.0);
        }
        prop_assert!(pt_min_eigenvalue(&rho, 2, 2) >= -1e-9);
        prop_assert!(hermitian_eigenvalues(&rho)[0] >= -1e-9);
    }
}

#[test]
fn orthogonal_pure_states_are_at_distance_one() {
    let a = pure(&[1.0, 0.0, 0.0, 0.0]);
    let b = pure(&[0.0, 0.0, 1.0, 0.0]);
    assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-12);
}
