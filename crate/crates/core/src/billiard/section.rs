use rand::Rng as _;

use super::dynamics::{billiard_step, CollisionState, FlightSegment};
use super::table::{BilliardTable, Component, Variant};
use crate::rng::{stream, Rng};
use crate::{Error, Result};

/// One point drawn from the Liouville section measure (density ∝ cos phi dr dphi).
///
/// `r` is uniform over the boundary length and `sin phi` uniform on (-1, 1),
/// which is the exact inverse-CDF form of the cos-weighted angle law.
pub fn draw_invariant(table: &BilliardTable, rng: &mut Rng) -> CollisionState {
    let mut r = rng.gen::<f64>() * table.perimeter();
    let comps = table.components();
    let mut id = comps.len() - 1;
    for (k, c) in comps.iter().enumerate() {
        if r < c.length() {
            id = k;
            break;
        }
        r -= c.length();
    }
    let r = r.min(comps[id].length());
    let phi = (2.0 * rng.gen::<f64>() - 1.0).asin();
    CollisionState::from_arclength(table, id, r, phi)
}

/// `n` i.i.d. samples of the invariant section measure; deterministic in `seed`.
pub fn sample_invariant(table: &BilliardTable, seed: u64, n: usize) -> Vec<CollisionState> {
    let mut rng = stream(seed, 0);
    (0..n).map(|_| draw_invariant(table, &mut rng)).collect()
}

/// Membership in the induced section used by [`first_return`]: collisions on a
/// curved component, and for the stadium only the first of a run on one arc.
pub fn in_return_section(
    table: &BilliardTable,
    x: &CollisionState,
    prev_component: Option<usize>,
) -> bool {
    let comp = table.component(x.component);
    match table.variant() {
        Variant::Stadium => comp.is_curved() && prev_component != Some(x.component),
        _ => matches!(comp, Component::Scatterer { .. }),
    }
}

/// Samples of the invariant measure restricted to the induced section, by rejection.
pub fn sample_return_section(
    table: &BilliardTable,
    seed: u64,
    n: usize,
) -> Result<Vec<CollisionState>> {
    if table.variant() == Variant::LorentzTorus {
        return Err(Error::UnsupportedVariant(table.variant().name()));
    }
    let mut rng = stream(seed, 0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = draw_invariant(table, &mut rng);
        if !table.component(x.component).is_curved() {
            continue;
        }
        let prev = if table.variant() == Variant::Stadium {
            match billiard_step(table, &x.reversed(), super::DEFAULT_T_CAP) {
                Ok(s) => Some(s.end.component),
                Err(_) => continue,
            }
        } else {
            None
        };
        if in_return_section(table, &x, prev) {
            out.push(x);
        }
    }
    Ok(out)
}

/// First return to the induced section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstReturn {
    pub state: CollisionState,
    /// Number of billiard-map steps taken.
    pub steps: usize,
    /// Total flight time along those steps.
    pub flight_time: f64,
}

pub fn first_return(
    table: &BilliardTable,
    x: &CollisionState,
    max_steps: usize,
) -> Result<FirstReturn> {
    if table.variant() == Variant::LorentzTorus {
        return Err(Error::UnsupportedVariant(table.variant().name()));
    }
    let mut cur = *x;
    let mut total = 0.0;
    for steps in 1..=max_steps {
        let seg = billiard_step(table, &cur, super::DEFAULT_T_CAP)?;
        total += seg.flight_time;
        let prev = cur.component;
        cur = seg.end;
        if in_return_section(table, &cur, Some(prev)) {
            return Ok(FirstReturn {
                state: cur,
                steps,
                flight_time: total,
            });
        }
    }
    Err(Error::CapExceeded { t_cap: total })
}

/// Euclidean distance of the (position, velocity) embedding of two section points.
pub fn section_distance(table: &BilliardTable, x: &CollisionState, y: &CollisionState) -> f64 {
    let a = x.outgoing(table);
    let b = y.outgoing(table);
    ((a.pos - b.pos).norm_sq() + (a.vel - b.vel).norm_sq()).sqrt()
}

/// Counts of orbit interruptions during [`run_orbit`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OrbitDiagnostics {
    pub collisions: u64,
    pub grazing: u64,
    pub cap_exceeded: u64,
}

/// Follow a billiard-map orbit from a random invariant sample for `n` collisions.
///
/// Grazing or capped flights are not reported to `visit`; the orbit restarts
/// from a fresh invariant sample and the event is counted.
pub fn run_orbit(
    table: &BilliardTable,
    seed: u64,
    n: u64,
    t_cap: f64,
    mut visit: impl FnMut(u64, &FlightSegment),
) -> OrbitDiagnostics {
    let mut rng = stream(seed, 1);
    let mut diag = OrbitDiagnostics::default();
    let mut x = draw_invariant(table, &mut rng);
    while diag.collisions < n {
        match billiard_step(table, &x, t_cap) {
            Ok(seg) => {
                visit(diag.collisions, &seg);
                diag.collisions += 1;
                x = seg.end;
            }
            Err(e) => {
                match e {
                    Error::Grazing { .. } => diag.grazing += 1,
                    _ => diag.cap_exceeded += 1,
                }
                x = draw_invariant(table, &mut rng);
            }
        }
    }
    diag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{billiard_map, Vec2};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn samples_are_deterministic_and_in_range() {
        let t = BilliardTable::stadium(1.0, 0.5).unwrap();
        let a = sample_invariant(&t, 3, 500);
        assert_eq!(a, sample_invariant(&t, 3, 500));
        for x in &a {
            assert!(x.phi.abs() <= FRAC_PI_2);
            let r = x.arclength(&t);
            assert!(r >= -1e-12 && r <= t.component(x.component).length() + 1e-12);
        }
    }

    #[test]
    fn arc_to_arc_returns_in_one_step() {
        let t = BilliardTable::stadium(1.0, 1.0).unwrap();
        // From the right arc's apex straight across to the left arc.
        let x = CollisionState {
            component: 0,
            param: 0.0,
            phi: 0.0,
        };
        let fr = first_return(&t, &x, 100).unwrap();
        assert_eq!(fr.steps, 1);
        assert_eq!(fr.state.component, 2);
        assert!((fr.flight_time - 4.0).abs() < 1e-12);
    }

    /// Unfold the strip |y| <= rho by reflecting across the straight walls:
    /// the bouncing orbit becomes a straight line, and its length up to the
    /// image of an arc is the first-return flight time.
    #[test]
    fn bouncing_orbit_matches_unfolding() {
        let (a, rho) = (2.0, 1.0);
        let t = BilliardTable::stadium(a, rho).unwrap();
        let x = CollisionState {
            component: 0,
            param: 0.1,
            phi: -0.15,
        };
        let fr = first_return(&t, &x, 1000).unwrap();
        assert_eq!(fr.state.component, 2);
        let start = x.outgoing(&t);
        // Left-arc images: circles of radius rho about (-a, 2 m rho), arc half x <= -a.
        // Reaching image m crosses |m| walls.
        let mut best = f64::INFINITY;
        let mut k_best = 0;
        for m in -20i64..=20 {
            let c = Vec2::new(-a, 2.0 * m as f64 * rho);
            if let Some(tt) = crate::billiard::ray_exits_circle(start.pos, start.vel, c, rho) {
                let q = start.pos + start.vel * tt;
                if q.x <= -a && tt < best && tt > 1e-9 {
                    best = tt;
                    k_best = m.abs();
                }
            }
        }
        assert!(
            (fr.flight_time - best).abs() < 1e-9,
            "{} vs {}",
            fr.flight_time,
            best
        );
        assert_eq!(fr.steps as i64, k_best + 1);
    }

    #[test]
    fn sliding_run_is_bounded_by_chords() {
        let t = BilliardTable::stadium(0.5, 1.0).unwrap();
        let phi = 1.45f64;
        let x = CollisionState {
            component: 2,
            param: 0.5 * std::f64::consts::PI + 0.01,
            phi,
        };
        let fr = first_return(&t, &x, 1000).unwrap();
        assert!(fr.flight_time <= fr.steps as f64 * 2.0 + 1e-12);
    }

    #[test]
    fn reversed_map_is_inverse() {
        let t = BilliardTable::stadium(1.0, 0.7).unwrap();
        for x in sample_invariant(&t, 11, 50) {
            let y = billiard_map(&t, &x).unwrap();
            let back = billiard_map(&t, &y.reversed()).unwrap().reversed();
            assert_eq!(back.component, x.component);
            assert!(section_distance(&t, &back, &x) < 1e-9);
        }
    }
}
