//! Transition densities of semilinear SDEs via Ornstein–Uhlenbeck bridges,
//! explicit density lower bounds, and computable ergodicity constants.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::type_complexity,
    clippy::should_implement_trait
)]

pub mod bridge;
pub mod density;
pub mod drift;
pub mod ergodicity;
pub mod error;
pub mod linalg;
pub mod linop;
pub mod logscale;
pub mod lower_bounds;
pub mod rng;
pub mod sde;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{Mat, Vector};
pub use linop::LinearModel;
pub use logscale::LogPos;
pub use rng::Stream;
