//! Event-driven billiards: periodic Lorentz gas on the unit torus, semidispersing
//! rectangles and Bunimovich stadia.
//!
//! Collision coordinates are stored per component as (angle or arclength, outgoing
//! angle). Arclength is available through [`CollisionState::arclength`].

mod corridor;
mod dynamics;
mod geometry;
mod section;
mod table;

pub use corridor::{detect_corridors, has_infinite_horizon, Corridor};
pub use dynamics::{
    billiard_map, billiard_step, flow, flow_tracked, next_collision, CollisionState, FlightSegment,
    FlowState, DEFAULT_T_CAP, EPS_GRAZE,
};
pub use geometry::{ray_enters_circle, ray_exits_circle, reflect, Vec2};
pub use section::{
    draw_invariant, first_return, in_return_section, run_orbit, sample_invariant,
    sample_return_section, section_distance, FirstReturn, OrbitDiagnostics,
};
pub use table::{
    wrap, BilliardTable, Component, Disk, ScattererConfig, StadiumConfig, TableConfig, Variant,
};
