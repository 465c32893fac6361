// `!(x >= y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boson;
pub mod error;
pub mod experiments;
pub mod fermion;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod stats;
