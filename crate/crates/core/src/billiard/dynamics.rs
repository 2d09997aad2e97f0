use std::f64::consts::FRAC_PI_2;

use super::geometry::{ray_enters_circle, ray_exits_circle, reflect, Vec2};
use super::table::{wrap, BilliardTable, Component, Variant};
use crate::{Error, Result};

/// Collisions with |cos phi| below this are reported as grazing.
pub const EPS_GRAZE: f64 = 1e-10;
/// Default cap on a single free flight.
pub const DEFAULT_T_CAP: f64 = 1e4;

/// Phase point of the billiard flow. Torus positions may be given in any
/// lattice frame; results of [`flow`] are wrapped to the unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub pos: Vec2,
    pub vel: Vec2,
}

impl FlowState {
    pub fn new(pos: Vec2, vel: Vec2) -> Self {
        FlowState {
            pos,
            vel: vel.normalized(),
        }
    }
}

/// Point of the collision section: component, internal parameter and outgoing angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionState {
    pub component: usize,
    /// Angle on circular components, arclength on segments.
    pub param: f64,
    /// Outgoing angle from the inward normal, in [-pi/2, pi/2].
    pub phi: f64,
}

impl CollisionState {
    pub fn from_arclength(table: &BilliardTable, component: usize, r: f64, phi: f64) -> Self {
        let param = table.component(component).arclength_to_param(r);
        CollisionState {
            component,
            param,
            phi,
        }
    }

    pub fn arclength(&self, table: &BilliardTable) -> f64 {
        table
            .component(self.component)
            .param_to_arclength(self.param)
    }

    pub fn position(&self, table: &BilliardTable) -> Vec2 {
        table.component(self.component).point(self.param)
    }

    pub fn outgoing(&self, table: &BilliardTable) -> FlowState {
        let c = table.component(self.component);
        let n = c.inward_normal(self.param);
        FlowState {
            pos: c.point(self.param),
            vel: n.rotate(self.phi),
        }
    }

    /// Velocity-reversal involution (r, phi) -> (r, -phi).
    pub fn reversed(&self) -> Self {
        CollisionState {
            phi: -self.phi,
            ..*self
        }
    }
}

/// One free flight ending in a collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightSegment {
    pub start: FlowState,
    pub end: CollisionState,
    pub flight_time: f64,
    /// Lattice translation of the scatterer image that was hit (zero off the torus).
    pub image: [i64; 2],
    /// Hit point in the frame of `start`.
    pub hit_point: Vec2,
    /// Velocity just before the collision.
    pub incoming: Vec2,
    /// Velocity just after the collision.
    pub outgoing: Vec2,
}

struct Hit {
    t: f64,
    component: usize,
    image: [i64; 2],
}

/// First collision along the straight ray from `state`.
pub fn next_collision(
    table: &BilliardTable,
    state: &FlowState,
    t_cap: f64,
) -> Result<FlightSegment> {
    if !(t_cap > 0.0) {
        return Err(Error::BadParams("t_cap must be positive".into()));
    }
    let p = state.pos;
    let v = state.vel;
    let hit = match table.variant() {
        Variant::LorentzTorus => torus_hit(table, p, v, t_cap)?,
        _ => bounded_hit(table, p, v, t_cap)?,
    };
    let comp = table.component(hit.component);
    let shift = Vec2::new(hit.image[0] as f64, hit.image[1] as f64);
    let raw = p + v * hit.t;
    let param = comp.param_of(raw - shift);
    let n = comp.inward_normal(param);
    let cos_in = v.dot(n).abs();
    if cos_in < EPS_GRAZE {
        return Err(Error::Grazing { cos_phi: cos_in });
    }
    let out = reflect(v, n);
    let phi = n.cross(out).atan2(n.dot(out)).clamp(-FRAC_PI_2, FRAC_PI_2);
    let hit_point = comp.point(param) + shift;
    Ok(FlightSegment {
        start: *state,
        end: CollisionState {
            component: hit.component,
            param,
            phi,
        },
        flight_time: hit.t,
        image: hit.image,
        hit_point,
        incoming: v,
        outgoing: out,
    })
}

/// One step of the billiard map with the flight data.
pub fn billiard_step(
    table: &BilliardTable,
    x: &CollisionState,
    t_cap: f64,
) -> Result<FlightSegment> {
    next_collision(table, &x.outgoing(table), t_cap)
}

/// The billiard map f.
pub fn billiard_map(table: &BilliardTable, x: &CollisionState) -> Result<CollisionState> {
    billiard_step(table, x, DEFAULT_T_CAP).map(|s| s.end)
}

/// Flow for time `t >= 0`. Torus positions are returned wrapped to the unit cell.
pub fn flow(table: &BilliardTable, m: &FlowState, t: f64) -> Result<FlowState> {
    flow_tracked(table, m, t).map(|(s, _)| s)
}

/// Flow for time `t` returning the final state and the unfolded displacement.
pub fn flow_tracked(table: &BilliardTable, m: &FlowState, t: f64) -> Result<(FlowState, Vec2)> {
    if !(t >= 0.0) {
        return Err(Error::BadParams("flow time must be nonnegative".into()));
    }
    let mut state = *m;
    let mut remaining = t;
    let mut disp = Vec2::default();
    loop {
        let seg = match next_collision(table, &state, remaining.max(f64::MIN_POSITIVE)) {
            Ok(seg) => seg,
            Err(Error::CapExceeded { .. }) => {
                disp += state.vel * remaining;
                state.pos += state.vel * remaining;
                break;
            }
            Err(e) => return Err(e),
        };
        if seg.flight_time > remaining {
            disp += state.vel * remaining;
            state.pos += state.vel * remaining;
            break;
        }
        remaining -= seg.flight_time;
        disp += seg.hit_point - state.pos;
        state = seg.end.outgoing(table);
    }
    if table.variant() == Variant::LorentzTorus {
        state.pos = wrap(state.pos);
    }
    Ok((state, disp))
}

fn bounded_hit(table: &BilliardTable, p: Vec2, v: Vec2, t_cap: f64) -> Result<Hit> {
    let mut best: Option<Hit> = None;
    for (id, comp) in table.components().iter().enumerate() {
        let t = match *comp {
            Component::Scatterer { center, radius } => ray_enters_circle(p, v, center, radius),
            Component::Arc {
                center,
                radius,
                theta_start,
                span,
            } => ray_exits_circle(p, v, center, radius).filter(|&t| {
                let q = p + v * t - center;
                let mid = Vec2::from_angle(theta_start + 0.5 * span);
                // Semicircular arcs: accept the half facing outward.
                q.dot(mid) >= -1e-12 * radius || span > std::f64::consts::PI
            }),
            Component::Segment {
                start,
                dir,
                length,
                normal,
            } => {
                let vn = v.dot(normal);
                if vn >= 0.0 || length == 0.0 {
                    None
                } else {
                    let t = (start - p).dot(normal) / vn;
                    let s = (p + v * t - start).dot(dir);
                    (t > 0.0 && s >= -1e-12 && s <= length + 1e-12).then_some(t)
                }
            }
        };
        if let Some(t) = t {
            if best.as_ref().map_or(true, |b| t < b.t) {
                best = Some(Hit {
                    t,
                    component: id,
                    image: [0, 0],
                });
            }
        }
    }
    match best {
        Some(h) if h.t <= t_cap => Ok(h),
        _ => Err(Error::CapExceeded { t_cap }),
    }
}

/// Cell walk along the ray; each visited cell's 3x3 neighbourhood of scatterer
/// images is tested. Every hit point lies in a visited cell, and the scatterer
/// containing it has its centre in a neighbouring cell, so stopping once a
/// cell is entered after the best hit is exact.
fn torus_hit(table: &BilliardTable, p: Vec2, v: Vec2, t_cap: f64) -> Result<Hit> {
    let disks = table.disks();
    let mut best = Hit {
        t: f64::INFINITY,
        component: 0,
        image: [0, 0],
    };
    let check = |cx: i64, cy: i64, best: &mut Hit| {
        let shift = Vec2::new(cx as f64, cy as f64);
        for (k, d) in disks.iter().enumerate() {
            if let Some(t) = ray_enters_circle(p, v, d.center + shift, d.radius) {
                if t < best.t {
                    *best = Hit {
                        t,
                        component: k,
                        image: [cx, cy],
                    };
                }
            }
        }
    };
    let mut cx = p.x.floor() as i64;
    let mut cy = p.y.floor() as i64;
    let sx: i64 = if v.x > 0.0 {
        1
    } else if v.x < 0.0 {
        -1
    } else {
        0
    };
    let sy: i64 = if v.y > 0.0 {
        1
    } else if v.y < 0.0 {
        -1
    } else {
        0
    };
    let dtx = if sx != 0 {
        1.0 / v.x.abs()
    } else {
        f64::INFINITY
    };
    let dty = if sy != 0 {
        1.0 / v.y.abs()
    } else {
        f64::INFINITY
    };
    let mut tmx = match sx {
        1 => (cx as f64 + 1.0 - p.x) / v.x,
        -1 => (cx as f64 - p.x) / v.x,
        _ => f64::INFINITY,
    };
    let mut tmy = match sy {
        1 => (cy as f64 + 1.0 - p.y) / v.y,
        -1 => (cy as f64 - p.y) / v.y,
        _ => f64::INFINITY,
    };
    for ox in -1..=1 {
        for oy in -1..=1 {
            check(cx + ox, cy + oy, &mut best);
        }
    }
    loop {
        let t_enter;
        if tmx < tmy {
            t_enter = tmx;
            cx += sx;
            tmx += dtx;
            if t_enter >= best.t || t_enter > t_cap {
                break;
            }
            for oy in -1..=1 {
                check(cx + sx, cy + oy, &mut best);
            }
        } else {
            t_enter = tmy;
            cy += sy;
            tmy += dty;
            if t_enter >= best.t || t_enter > t_cap {
                break;
            }
            for ox in -1..=1 {
                check(cx + ox, cy + sy, &mut best);
            }
        }
    }
    if best.t <= t_cap {
        Ok(best)
    } else {
        Err(Error::CapExceeded { t_cap })
    }
}
