//! Separable-branch sampler for the truncated bosonic model.

pub mod branches;
pub mod ops;
pub mod sampler;

pub use branches::{
    choi_distance, enumerate_two_site_branches, exact_pair_superop, pair_map_superop, BranchFamily,
    BranchKind, FamilyMember, PairMapParams, TwoModeBranch, TwoSiteMap,
};
pub use ops::{build_truncated_ops, TruncatedOps};
pub use sampler::{
    averaged_dense_step, branch_weights, pair_parameters, run_boson_population,
    run_boson_trajectory, sample_two_site_step, BosonPlan, BosonPopulation, BosonProductState,
    BosonRunConfig, BosonStepPlan, BosonTrajectory, SiteStep,
};
