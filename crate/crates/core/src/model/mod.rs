//! Model description, derived constants and run planning.

pub mod constants;
pub mod planning;
pub mod spec;

pub use constants::{
    check_thresholds, noise_split_weights, DerivedConstants, NoiseChannel, ThresholdKind,
    ThresholdReport,
};
pub use planning::{
    boson_trotter_steps, boson_truncation_plan, fermion_trotter_steps, moment_bound, plan_run,
    tail_bound, truncation_error_bound, EpsilonBudget, RunPlan,
};
pub use spec::{
    load_config, InitialState, ModelConfig, ModelSpec, ParticleKind, RunConfig, Schedule,
};
