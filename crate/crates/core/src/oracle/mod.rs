//! Dense reference solver: exact Lindblad evolution and observables on small systems.

pub mod fidelity;
pub mod liouvillian;
pub mod measures;
pub mod ops;
pub mod state;
pub mod wigner;

pub use fidelity::{gate_fidelity, noise_error_bound, project_onto, GateFidelity};
pub use liouvillian::{build_liouvillian, evolve_exact, Liouvillian, ModelOperators};
pub use measures::*;
pub use state::{coherent_amplitudes, initial_dense, DenseState};
pub use wigner::{hermite_functions, wigner, PhaseGrid, WignerMap};
