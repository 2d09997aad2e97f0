use std::fmt::Debug;

use rand::Rng as _;

use crate::gibbs_markov::{Density, GmKind, GmSystem, Roof};
use crate::rng::{splitmix64, Rng};

/// Base dynamics of a suspension: a map and a positive roof.
pub trait SuspensionBase: Sync {
    type Point: Clone + Debug + Send + Sync;
    fn step(&self, y: &Self::Point) -> Self::Point;
    fn roof(&self, y: &Self::Point) -> f64;
}

/// Point `(y, u)` of the suspension, always reduced to `0 <= u < roof(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPoint<P> {
    pub y: P,
    pub u: f64,
    /// Cached `roof(y)`.
    pub roof: f64,
}

/// Suspension flow `(y, u) -> (y, u + t)` modulo `(y, roof(y)) ~ (F y, 0)`.
#[derive(Debug, Clone)]
pub struct SuspensionFlow<B> {
    pub base: B,
}

impl<B: SuspensionBase> SuspensionFlow<B> {
    pub fn new(base: B) -> Self {
        SuspensionFlow { base }
    }

    /// Reduce `(y, u)` with `u >= 0`; returns the point and the number of base steps.
    pub fn reduce(&self, y: B::Point, u: f64) -> (FlowPoint<B::Point>, usize) {
        let mut y = y;
        let mut u = u.max(0.0);
        let mut roof = self.base.roof(&y);
        let mut steps = 0;
        while u >= roof {
            u -= roof;
            y = self.base.step(&y);
            roof = self.base.roof(&y);
            steps += 1;
        }
        (FlowPoint { y, u, roof }, steps)
    }

    pub fn point(&self, y: B::Point, u: f64) -> FlowPoint<B::Point> {
        self.reduce(y, u).0
    }

    /// `F_t(x)` for `t >= 0`, with the number of base steps taken.
    pub fn flow_eval(&self, x: &FlowPoint<B::Point>, t: f64) -> (FlowPoint<B::Point>, usize) {
        let mut y = x.y.clone();
        let mut u = x.u + t.max(0.0);
        let mut roof = x.roof;
        let mut steps = 0;
        while u >= roof {
            u -= roof;
            y = self.base.step(&y);
            roof = self.base.roof(&y);
            steps += 1;
        }
        (FlowPoint { y, u, roof }, steps)
    }
}

/// Point of a Gibbs-Markov base. For the doubling map `y` lives on the grid
/// `k / 2^53` and `bits` seeds the refill of the bit shifted out at each step,
/// so long orbits stay typical instead of collapsing to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmPoint {
    pub y: f64,
    pub bits: u64,
}

const GRID: f64 = 9007199254740992.0; // 2^53

/// Gibbs-Markov map with a roof, as a suspension base.
#[derive(Debug, Clone)]
pub struct GmBase {
    pub gm: GmSystem,
    pub roof: Roof,
}

impl GmBase {
    pub fn new(gm: GmSystem, roof: Roof) -> Self {
        GmBase { gm, roof }
    }

    /// A point drawn from the invariant density.
    pub fn sample(&self, density: &Density, rng: &mut Rng) -> GmPoint {
        let bits = rng.gen::<u64>();
        if self.gm.kind() == GmKind::Doubling {
            let k = rng.gen::<u64>() >> 11;
            return GmPoint {
                y: k as f64 / GRID,
                bits,
            };
        }
        GmPoint {
            y: density.sample(rng),
            bits,
        }
    }

    pub fn at(&self, y: f64) -> GmPoint {
        GmPoint {
            y,
            bits: y.to_bits(),
        }
    }
}

impl SuspensionBase for GmBase {
    type Point = GmPoint;

    fn step(&self, p: &GmPoint) -> GmPoint {
        if self.gm.kind() == GmKind::Doubling {
            let mut bits = p.bits;
            let k = (p.y * GRID) as u64;
            let fresh = splitmix64(&mut bits) >> 63;
            let k2 = ((k << 1) & ((1u64 << 53) - 1)) | fresh;
            return GmPoint {
                y: k2 as f64 / GRID,
                bits,
            };
        }
        GmPoint {
            y: self.gm.map(p.y),
            bits: p.bits,
        }
    }

    fn roof(&self, p: &GmPoint) -> f64 {
        self.roof.eval(&self.gm, p.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow() -> SuspensionFlow<GmBase> {
        SuspensionFlow::new(GmBase::new(GmSystem::gauss(), Roof::poly(&[1.0, 1.0])))
    }

    #[test]
    fn below_roof_moves_vertically() {
        let f = flow();
        let x = f.point(f.base.at(0.3), 0.2);
        let (y, steps) = f.flow_eval(&x, 0.5);
        assert_eq!(steps, 0);
        assert_eq!(y.y, x.y);
        assert!((y.u - 0.7).abs() < 1e-15);
    }

    #[test]
    fn hitting_the_roof_identifies() {
        let f = flow();
        let x = f.point(f.base.at(0.3), 0.2);
        let (y, steps) = f.flow_eval(&x, 1.3 - 0.2);
        assert_eq!(steps, 1);
        assert_eq!(y.u, 0.0);
        assert!((y.y.y - f.base.gm.map(0.3)).abs() < 1e-15);
    }

    #[test]
    fn doubling_refresh_stays_on_grid() {
        let b = GmBase::new(GmSystem::doubling(), Roof::constant(1.0));
        let mut p = GmPoint { y: 0.5, bits: 1 };
        let mut nonzero = 0;
        for _ in 0..500 {
            p = b.step(&p);
            assert!((p.y * GRID).fract() == 0.0 && p.y < 1.0);
            nonzero += usize::from(p.y != 0.0);
        }
        assert!(nonzero > 400);
    }
}
