//! Suspension flows over Gibbs-Markov maps, fibered two-sided models and
//! billiard sections.

mod boxdim;
mod flow;
mod lift;
mod periodic;
mod roof_tail;
mod two_sided;

pub use boxdim::{tdf_range_dimension, BoxDimension};
pub use flow::{FlowPoint, GmBase, GmPoint, SuspensionBase, SuspensionFlow};
pub use lift::{
    billiard_holder, billiard_roof_inequality, billiard_separation, holder_diagnostics,
    lift_observable, section_point, BilliardHolder, HolderReport, LiftReport, RoofInequality,
};
pub use periodic::{
    diophantine_ratio, good_asymptotics_fit, periodic_orbit, periodic_orbits, word_family,
    ContinuedFraction, GoodFit, PeriodicOrbit, LIOUVILLE_QUOTIENT,
};
pub use roof_tail::{roof_tail_check, truncate_roof, RoofTailRow, TruncationReport};
pub use two_sided::{
    chi, chi_auto, chi_depth, chi_sup, conjugacies, conjugacies_with_shift, sample_suspension,
    temporal_distance, tilde_phi, ChiValue, Conjugacies, FatBase, FatPoint, FiberRoof, PlainBase,
    TemporalDistance, TildeBase, TwoSidedModel, CHI_TOL,
};

pub(crate) use periodic::solve_dense;
