//! Flows seen by the estimators: invariant sampling and exact segment stepping.

use rand::Rng as _;

use crate::billiard::{
    billiard_step, next_collision, wrap, BilliardTable, CollisionState, FlowState, Variant, Vec2,
    DEFAULT_T_CAP,
};
use crate::quad::GaussLegendre;
use crate::rng::Rng;
use crate::suspension::{FlowPoint, SuspensionBase, SuspensionFlow};
use crate::{Error, Result};

/// A flow that is smooth between events: billiard flights, suspension fibers.
pub trait FlowBackend: Sync {
    type State: Clone + Send + Sync;

    /// One draw from the invariant probability measure of the flow.
    fn sample(&self, rng: &mut Rng) -> Result<Self::State>;

    /// Time until the next event.
    fn segment_left(&self, s: &Self::State) -> f64;

    /// Move by `dt <= segment_left(s)`; at equality the event is processed.
    fn drift(&self, s: &Self::State, dt: f64) -> Result<Self::State>;
}

/// Longest quadrature panel inside one segment.
const PANEL: f64 = 0.5;

/// `T_t s`.
pub fn advance<B: FlowBackend + ?Sized>(b: &B, s: &B::State, t: f64) -> Result<B::State> {
    let mut s = s.clone();
    let mut left = t;
    loop {
        let seg = b.segment_left(&s);
        if left < seg {
            return b.drift(&s, left);
        }
        s = b.drift(&s, seg)?;
        left -= seg;
    }
}

/// `(T_t s, int_0^t v(T_r s) dr)`, integrating panel by panel inside each segment.
pub fn integrate<B: FlowBackend + ?Sized>(
    b: &B,
    s: &B::State,
    t: f64,
    v: &(dyn Fn(&B::State) -> f64 + Sync),
    gl: &GaussLegendre,
) -> Result<(B::State, f64)> {
    let mut s = s.clone();
    let mut left = t;
    let mut total = 0.0;
    loop {
        let seg = b.segment_left(&s);
        let piece = left.min(seg);
        let panels = (piece / PANEL).ceil().max(1.0) as usize;
        let h = piece / panels as f64;
        for k in 0..panels {
            let a = k as f64 * h;
            for (x, w) in gl.mapped(a, a + h) {
                total += w * v(&b.drift(&s, x)?);
            }
        }
        if left < seg {
            return Ok((b.drift(&s, left)?, total));
        }
        s = b.drift(&s, seg)?;
        left -= seg;
    }
}

/// Billiard flow state between collisions. Torus positions are kept in the unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilliardState {
    pub pos: Vec2,
    pub vel: Vec2,
    /// Time to the next collision.
    pub left: f64,
    /// The next collision.
    pub next: CollisionState,
}

impl BilliardState {
    pub fn phase(&self) -> FlowState {
        FlowState {
            pos: self.pos,
            vel: self.vel,
        }
    }
}

/// Billiard flow with the Liouville measure (uniform position, uniform direction).
#[derive(Debug, Clone)]
pub struct BilliardBackend {
    pub table: BilliardTable,
    pub t_cap: f64,
}

impl BilliardBackend {
    pub fn new(table: BilliardTable) -> Self {
        BilliardBackend {
            table,
            t_cap: DEFAULT_T_CAP,
        }
    }

    fn bounding_box(&self) -> (Vec2, Vec2) {
        let (a, b) = self.table.dims();
        match self.table.variant() {
            Variant::LorentzTorus => (Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)),
            Variant::SemidispersingRectangle => (Vec2::new(0.0, 0.0), Vec2::new(a, b)),
            Variant::Stadium => (Vec2::new(-a - b, -b), Vec2::new(a + b, b)),
        }
    }

    /// State at phase point `m` (position inside the domain).
    pub fn state_at(&self, m: &FlowState) -> Result<BilliardState> {
        let seg = next_collision(&self.table, m, self.t_cap)?;
        Ok(BilliardState {
            pos: m.pos,
            vel: m.vel,
            left: seg.flight_time,
            next: seg.end,
        })
    }
}

impl FlowBackend for BilliardBackend {
    type State = BilliardState;

    fn sample(&self, rng: &mut Rng) -> Result<BilliardState> {
        let (lo, hi) = self.bounding_box();
        loop {
            let q = Vec2::new(
                lo.x + (hi.x - lo.x) * rng.gen::<f64>(),
                lo.y + (hi.y - lo.y) * rng.gen::<f64>(),
            );
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            if !self.table.contains(q) {
                continue;
            }
            match self.state_at(&FlowState::new(q, Vec2::from_angle(theta))) {
                Ok(s) => return Ok(s),
                Err(Error::Grazing { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }

    fn segment_left(&self, s: &BilliardState) -> f64 {
        s.left
    }

    fn drift(&self, s: &BilliardState, dt: f64) -> Result<BilliardState> {
        if dt < s.left {
            let mut pos = s.pos + s.vel * dt;
            if self.table.variant() == Variant::LorentzTorus {
                pos = wrap(pos);
            }
            return Ok(BilliardState {
                pos,
                left: s.left - dt,
                ..*s
            });
        }
        let out = s.next.outgoing(&self.table);
        let seg = billiard_step(&self.table, &s.next, self.t_cap)?;
        Ok(BilliardState {
            pos: out.pos,
            vel: out.vel,
            left: seg.flight_time,
            next: seg.end,
        })
    }
}

/// Draws base points from the invariant measure of the base map.
pub type BaseSampler<P> = Box<dyn Fn(&mut Rng) -> P + Send + Sync>;

/// Suspension flow with `mu^phi` sampled by rejection under a roof bound.
pub struct SuspensionBackend<B: SuspensionBase> {
    pub flow: SuspensionFlow<B>,
    sampler: BaseSampler<B::Point>,
    roof_sup: f64,
}

impl<B: SuspensionBase> SuspensionBackend<B> {
    /// `roof_sup` must bound the roof from above.
    pub fn new(
        flow: SuspensionFlow<B>,
        sampler: BaseSampler<B::Point>,
        roof_sup: f64,
    ) -> Result<Self> {
        if !(roof_sup > 0.0 && roof_sup.is_finite()) {
            return Err(Error::BadParams(
                "ensemble sampling needs a finite roof bound".into(),
            ));
        }
        Ok(SuspensionBackend {
            flow,
            sampler,
            roof_sup,
        })
    }

    pub fn base_sample(&self, rng: &mut Rng) -> B::Point {
        (self.sampler)(rng)
    }
}

impl<B: SuspensionBase> FlowBackend for SuspensionBackend<B> {
    type State = FlowPoint<B::Point>;

    fn sample(&self, rng: &mut Rng) -> Result<Self::State> {
        loop {
            let y = (self.sampler)(rng);
            let roof = self.flow.base.roof(&y);
            let u = rng.gen::<f64>() * self.roof_sup;
            if u < roof {
                return Ok(FlowPoint { y, u, roof });
            }
        }
    }

    fn segment_left(&self, s: &Self::State) -> f64 {
        s.roof - s.u
    }

    fn drift(&self, s: &Self::State, dt: f64) -> Result<Self::State> {
        if dt < s.roof - s.u {
            return Ok(FlowPoint {
                u: s.u + dt,
                ..s.clone()
            });
        }
        let y = self.flow.base.step(&s.y);
        let roof = self.flow.base.roof(&y);
        Ok(FlowPoint { y, u: 0.0, roof })
    }
}

/// Suspension flow driven from arbitrary starting points, for long-orbit
/// (Birkhoff) estimates when `mu^phi` cannot be sampled directly.
pub struct OrbitBackend<B: SuspensionBase> {
    pub flow: SuspensionFlow<B>,
    sampler: BaseSampler<B::Point>,
}

impl<B: SuspensionBase> OrbitBackend<B> {
    pub fn new(flow: SuspensionFlow<B>, sampler: BaseSampler<B::Point>) -> Self {
        OrbitBackend { flow, sampler }
    }
}

impl<B: SuspensionBase> FlowBackend for OrbitBackend<B> {
    type State = FlowPoint<B::Point>;

    /// Start of the fiber over a base sample; not `mu^phi`-distributed.
    fn sample(&self, rng: &mut Rng) -> Result<Self::State> {
        let y = (self.sampler)(rng);
        let roof = self.flow.base.roof(&y);
        Ok(FlowPoint { y, u: 0.0, roof })
    }

    fn segment_left(&self, s: &Self::State) -> f64 {
        s.roof - s.u
    }

    fn drift(&self, s: &Self::State, dt: f64) -> Result<Self::State> {
        if dt < s.roof - s.u {
            return Ok(FlowPoint {
                u: s.u + dt,
                ..s.clone()
            });
        }
        let y = self.flow.base.step(&s.y);
        let roof = self.flow.base.roof(&y);
        Ok(FlowPoint { y, u: 0.0, roof })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::Disk;
    use crate::gibbs_markov::{GmSystem, Roof};
    use crate::rng::stream;
    use crate::suspension::GmBase;

    #[test]
    fn velocity_integral_is_displacement() {
        let t = BilliardTable::lorentz_torus(vec![Disk {
            center: Vec2::new(0.5, 0.5),
            radius: 0.3,
        }])
        .unwrap();
        let b = BilliardBackend::new(t.clone());
        let mut rng = stream(4, 0);
        let gl = GaussLegendre::new(4);
        for _ in 0..20 {
            let s = b.sample(&mut rng).unwrap();
            let (_, ix) = integrate(&b, &s, 7.3, &|s: &BilliardState| s.vel.x, &gl).unwrap();
            let (_, d) = crate::billiard::flow_tracked(&t, &s.phase(), 7.3).unwrap();
            assert!((ix - d.x).abs() < 1e-9, "{ix} {}", d.x);
        }
    }

    #[test]
    fn suspension_integral_of_one_is_time() {
        let gm = GmSystem::doubling();
        let base = GmBase::new(gm, Roof::poly(&[1.0, 0.5]));
        let sampler: BaseSampler<_> = Box::new(|rng: &mut Rng| crate::suspension::GmPoint {
            y: rng.gen(),
            bits: rng.gen(),
        });
        let b = SuspensionBackend::new(SuspensionFlow::new(base), sampler, 1.5).unwrap();
        let mut rng = stream(2, 0);
        let s = b.sample(&mut rng).unwrap();
        let (end, i) = integrate(&b, &s, 4.2, &|_| 1.0, &GaussLegendre::new(2)).unwrap();
        assert!((i - 4.2).abs() < 1e-12);
        let direct = advance(&b, &s, 4.2).unwrap();
        assert_eq!(end.y, direct.y);
        assert!((end.u - direct.u).abs() < 1e-12);
    }
}
