//! Numerical core for prioritised two-parameter quantum estimation.
//!
//! Everything here works on `alloc` only: models, SLDs and Fisher matrices,
//! a primal-dual SDP solver, Nagaoka-Hayashi trade-off curves, the
//! prioritised-measurement construction and seeded Monte-Carlo simulation.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod bounds;
pub mod fisher;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod prioritised;
pub mod rng;
pub mod simulate;
pub mod sdp;

pub use error::{Error, Result};

/// `Float` supplies `sqrt`, `exp`, ... under `no_std`; with std linked the
/// inherent methods win and the import would otherwise be reported unused.
#[allow(unused_imports)]
pub(crate) mod prelude {
    pub(crate) use num_traits::Float;
}
