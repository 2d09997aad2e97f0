//! Full-branch Gibbs-Markov maps, twisted transfer operators and the
//! approximate-eigenfunction defect.

mod defect;
mod roof;
mod spectrum;
mod system;
mod transfer;

pub use defect::{approx_eigenfunction_defect, cis_turns, defect_of, twisted_iterate, Defect};
pub use roof::Roof;
pub use spectrum::{
    invariant_density, lambda_prime_at_zero, leading_eigenvalue, leading_of, roof_mean, Density,
    SpectralOptions, SpectralSample,
};
pub use system::{GmKind, GmSystem, Preimage, Step};
pub use transfer::{build_transfer, build_transfer_with, TransferMatrix, TruncationOptions};
