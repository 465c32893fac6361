//! Fermionic Gaussian states and the quasi-probability trajectory sampler.

pub mod gaussian;
pub mod wick;

pub use gaussian::{GaussianPropagator, GaussianState};
pub mod sampler;

pub use sampler::{
    dense_pair_channel, exact_pair_channel, run_population, run_trajectory, FermionPlan,
    FermionTrajectory, PairChannelParams, Population, PopulationConfig, StepPlan,
};
