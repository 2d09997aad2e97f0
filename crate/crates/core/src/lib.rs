//! Numerical laboratory for mixing rates of billiard flows and suspension flows.
//!
//! The crate is split by role:
//!
//! * [`billiard`]: event-driven Lorentz gas, semidispersing rectangle and stadium dynamics.
//! * [`gibbs_markov`]: full-branch expanding maps, their twisted transfer operators and
//!   the approximate-eigenfunction defect.
//! * [`suspension`]: suspension flows, the stable-fiber coboundary reduction, periodic data
//!   and Hölder diagnostics.
//! * [`stats`]: correlation, tail, variance and Laplace-domain estimators.
//! * [`cli`]: configuration, named experiments and run manifests used by the `mixlab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod billiard;
pub mod cli;
pub mod error;
pub mod gibbs_markov;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod suspension;

pub use error::{Error, Result};
