//! Lifting ambient observables to the section suspension, and empirical
//! Hölder constants of roofs.

use rand::Rng as _;

use super::two_sided::{FatPoint, FiberRoof, TwoSidedModel};
use crate::billiard::{
    billiard_step, draw_invariant, section_distance, wrap, BilliardTable, CollisionState,
    FlowState, Variant, DEFAULT_T_CAP,
};
use crate::rng::{stream, Rng};

/// `pi(y, u) = T_u y` for `0 <= u < h(y)`: straight motion along the outgoing ray.
pub fn section_point(table: &BilliardTable, y: &CollisionState, u: f64) -> FlowState {
    let m = y.outgoing(table);
    let pos = m.pos + m.vel * u;
    let pos = if table.variant() == Variant::LorentzTorus {
        wrap(pos)
    } else {
        pos
    };
    FlowState { pos, vel: m.vel }
}

/// Nearby section point: arclength and angle perturbed by about `scale`.
fn perturb(table: &BilliardTable, y: &CollisionState, scale: f64, rng: &mut Rng) -> CollisionState {
    let comp = table.component(y.component);
    let r = (y.arclength(table) + scale * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, comp.length());
    let lim = std::f64::consts::FRAC_PI_2 - 1e-6;
    let phi = (y.phi + scale * (2.0 * rng.gen::<f64>() - 1.0)).clamp(-lim, lim);
    CollisionState::from_arclength(table, y.component, r, phi)
}

/// Collisions until the two orbits hit different components (capped).
pub fn billiard_separation(
    table: &BilliardTable,
    y: &CollisionState,
    y2: &CollisionState,
    cap: usize,
) -> usize {
    let (mut a, mut b) = (*y, *y2);
    for n in 0..cap {
        if a.component != b.component {
            return n;
        }
        match (
            billiard_step(table, &a, DEFAULT_T_CAP),
            billiard_step(table, &b, DEFAULT_T_CAP),
        ) {
            (Ok(sa), Ok(sb)) => {
                a = sa.end;
                b = sb.end;
            }
            _ => return n,
        }
    }
    cap
}

/// Close pairs of section points together with both free-flight times.
struct Pair {
    y: CollisionState,
    y2: CollisionState,
    h: f64,
    h2: f64,
    d: f64,
    s: usize,
}

fn sample_pairs(table: &BilliardTable, n: usize, seed: u64, sep_cap: usize) -> Vec<Pair> {
    let mut rng = stream(seed, 7);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let y = draw_invariant(table, &mut rng);
        let scale = 10f64.powf(-2.0 - 6.0 * rng.gen::<f64>());
        let y2 = perturb(table, &y, scale, &mut rng);
        let (Ok(a), Ok(b)) = (
            billiard_step(table, &y, DEFAULT_T_CAP),
            billiard_step(table, &y2, DEFAULT_T_CAP),
        ) else {
            continue;
        };
        let d = section_distance(table, &y, &y2);
        if d == 0.0 {
            continue;
        }
        let s = billiard_separation(table, &y, &y2, sep_cap);
        out.push(Pair {
            y,
            y2,
            h: a.flight_time,
            h2: b.flight_time,
            d,
            s,
        });
    }
    out
}

/// Sampled norm estimates of a lifted observable (lower bounds of the true norms).
#[derive(Debug, Clone, PartialEq)]
pub struct LiftReport {
    pub sup: f64,
    /// Smallest `C` with `|v(y,u) - v(y',u)| <= C h(y) (d^(eta^2) + gamma^s)` on the pairs.
    pub pair_constant: f64,
    /// Sampled `eta`-Hölder constant in the flow direction.
    pub holder_u: f64,
    pub eta: f64,
    pub gamma: f64,
    pub pairs: usize,
}

/// Lift `v` on phase space to the section suspension and estimate its norms.
pub fn lift_observable(
    table: &BilliardTable,
    v: &dyn Fn(&FlowState) -> f64,
    eta: f64,
    gamma: f64,
    pairs: usize,
    seed: u64,
) -> LiftReport {
    let mut rng = stream(seed, 8);
    let mut rep = LiftReport {
        sup: 0.0,
        pair_constant: 0.0,
        holder_u: 0.0,
        eta,
        gamma,
        pairs,
    };
    for p in sample_pairs(table, pairs, seed, 64) {
        let hmin = p.h.min(p.h2);
        let u = rng.gen::<f64>() * hmin;
        let u2 = rng.gen::<f64>() * p.h;
        let a = v(&section_point(table, &p.y, u));
        let b = v(&section_point(table, &p.y2, u));
        let c = v(&section_point(table, &p.y, u2));
        rep.sup = rep.sup.max(a.abs()).max(b.abs()).max(c.abs());
        let weight = p.h * (p.d.powf(eta * eta) + gamma.powi(p.s as i32));
        rep.pair_constant = rep.pair_constant.max((a - b).abs() / weight);
        if u != u2 {
            rep.holder_u = rep.holder_u.max((a - c).abs() / (u - u2).abs().powf(eta));
        }
    }
    rep
}

/// Roof regularity on the billiard section.
#[derive(Debug, Clone, PartialEq)]
pub struct BilliardHolder {
    /// Smallest `C` with `|h(y) - h(y')| <= C (d(y,y') + gamma^s)` on the pairs.
    pub roof_constant: f64,
    /// Worst `min_t' |T_u y - T_t' y'| / d(y,y')^(1/2)` over the pairs.
    pub shadowing_constant: f64,
    pub gamma: f64,
    pub pairs: usize,
}

pub fn billiard_holder(
    table: &BilliardTable,
    gamma: f64,
    pairs: usize,
    seed: u64,
) -> BilliardHolder {
    let mut rng = stream(seed, 9);
    let mut roof_constant: f64 = 0.0;
    let mut shadow: f64 = 0.0;
    for p in sample_pairs(table, pairs, seed, 64) {
        roof_constant = roof_constant.max((p.h - p.h2).abs() / (p.d + gamma.powi(p.s as i32)));
        let u = rng.gen::<f64>() * p.h;
        let a = p.y.outgoing(table);
        let b = p.y2.outgoing(table);
        let target = a.pos + a.vel * u;
        // Closest point of the second flight segment to the target.
        let t = (target - b.pos).dot(b.vel).clamp(0.0, p.h2);
        let gap = ((target - (b.pos + b.vel * t)).norm_sq() + (a.vel - b.vel).norm_sq()).sqrt();
        shadow = shadow.max(gap / p.d.sqrt());
    }
    BilliardHolder {
        roof_constant,
        shadowing_constant: shadow,
        gamma,
        pairs,
    }
}

/// Sampled check of `|h(x) - h(x')| <= d(x,x') + d(fx,fx')` on pairs whose
/// flights start and end on the same scatterer image.
#[derive(Debug, Clone, PartialEq)]
pub struct RoofInequality {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `|h(x) - h(x')| / (d(x,x') + d(fx,fx'))`.
    pub max_ratio: f64,
}

pub fn billiard_roof_inequality(table: &BilliardTable, pairs: usize, seed: u64) -> RoofInequality {
    let mut rng = stream(seed, 12);
    let mut rep = RoofInequality {
        pairs: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    while rep.pairs < pairs {
        let y = draw_invariant(table, &mut rng);
        let scale = 10f64.powf(-2.0 - 6.0 * rng.gen::<f64>());
        let y2 = perturb(table, &y, scale, &mut rng);
        let (Ok(a), Ok(b)) = (
            billiard_step(table, &y, DEFAULT_T_CAP),
            billiard_step(table, &y2, DEFAULT_T_CAP),
        ) else {
            continue;
        };
        if a.end.component != b.end.component || a.image != b.image {
            continue;
        }
        rep.pairs += 1;
        let rhs = section_distance(table, &y, &y2) + section_distance(table, &a.end, &b.end);
        let lhs = (a.flight_time - b.flight_time).abs();
        if lhs > rhs + 1e-12 {
            rep.violations += 1;
        }
        if rhs > 0.0 {
            rep.max_ratio = rep.max_ratio.max(lhs / rhs);
        }
    }
    rep
}

/// Roof regularity on the fattened model.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    /// `sup |phi(y) - phi(y')| / d(y,y')` over stable pairs.
    pub stable_constant: f64,
    /// `sup |phi(y) - phi(y')| / theta^s` over unstable pairs (`theta = 1/2`).
    pub unstable_constant: f64,
    /// Fitted per-step contraction along stable fibers.
    pub contraction_rate: f64,
    pub pairs: usize,
}

pub fn holder_diagnostics(
    model: &TwoSidedModel,
    roof: &FiberRoof,
    pairs: usize,
    seed: u64,
) -> HolderReport {
    let mut rng = stream(seed, 10);
    let mut stable: f64 = 0.0;
    let mut unstable: f64 = 0.0;
    let mut log_rates = Vec::new();
    for _ in 0..pairs {
        let y = model.sample(&mut rng);
        let y2 = FatPoint::new(y.ybar, rng.gen::<f64>());
        let d = model.distance(&y, &y2);
        if d > 0.0 {
            stable = stable.max((roof.eval(&y) - roof.eval(&y2)).abs() / d);
            let (mut a, mut b) = (y, y2);
            for _ in 0..8 {
                a = model.forward(&a);
                b = model.forward(&b);
            }
            let d8 = model.distance(&a, &b);
            if d8 > 0.0 {
                log_rates.push((d8 / d).ln() / 8.0);
            }
        }
        // Unstable pair: same past, futures agreeing for s steps.
        let s = rng.gen_range(1..30);
        let w = 0.5f64.powi(s);
        let base = (y.ybar / w).floor() * w;
        let y3 = FatPoint::new(base + rng.gen::<f64>() * w, y.z);
        let y4 = FatPoint::new(base + rng.gen::<f64>() * w, y.z);
        let sep = model
            .future(&y3, 64)
            .iter()
            .zip(model.future(&y4, 64))
            .take_while(|(a, b)| **a == *b)
            .count();
        unstable = unstable.max((roof.eval(&y3) - roof.eval(&y4)).abs() / 0.5f64.powi(sep as i32));
    }
    let contraction_rate = if log_rates.is_empty() {
        model.gamma()
    } else {
        (log_rates.iter().sum::<f64>() / log_rates.len() as f64).exp()
    };
    HolderReport {
        stable_constant: stable,
        unstable_constant: unstable,
        contraction_rate,
        pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{Disk, Vec2};

    fn torus() -> BilliardTable {
        BilliardTable::lorentz_torus(vec![Disk {
            center: Vec2::new(0.5, 0.5),
            radius: 0.3,
        }])
        .unwrap()
    }

    #[test]
    fn constant_observable_has_zero_seminorms() {
        let r = lift_observable(&torus(), &|_| 2.5, 0.5, 0.5, 200, 1);
        assert_eq!(r.sup, 2.5);
        assert_eq!(r.pair_constant, 0.0);
        assert_eq!(r.holder_u, 0.0);
    }

    #[test]
    fn linear_fiber_roof_constants() {
        let m = TwoSidedModel::default();
        let rep = holder_diagnostics(
            &m,
            &FiberRoof {
                c: 1.0,
                b: 0.25,
                ..Default::default()
            },
            2000,
            3,
        );
        assert!((rep.stable_constant - 0.25).abs() < 1e-9);
        assert!((rep.contraction_rate - 0.5).abs() < 1e-9);
        assert!(rep.unstable_constant < 1e-12);
        let c = holder_diagnostics(&m, &FiberRoof::constant(2.0), 500, 3);
        assert_eq!((c.stable_constant, c.unstable_constant), (0.0, 0.0));
    }
}
