//! Fattened doubling map: a two-sided model with explicit stable fibers.
//!
//! `Y = [0,1) x [0,1]`, `F(ybar, z) = (2 ybar mod 1, g_j(z))` where `j` is the
//! doubling branch of `ybar`, `g_0(z) = gamma z` and `g_1(z) = gamma z + 1 - gamma`.
//! Stable fibers are the vertical segments `{ybar} x [0,1]`; the reference
//! unstable leaf is `z = 0`. The `z` coordinate stores the symbolic past, so the
//! backward map is well defined on the attractor.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::flow::{FlowPoint, SuspensionBase, SuspensionFlow};
use crate::rng::{splitmix64, Rng};
use crate::{Error, Result};

/// Default target for the χ remainder bound.
pub const CHI_TOL: f64 = 1e-9;
const K_MAX: usize = 4000;
const GRID: f64 = 9007199254740992.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FatPoint {
    pub ybar: f64,
    pub z: f64,
}

impl FatPoint {
    pub fn new(ybar: f64, z: f64) -> Self {
        FatPoint { ybar, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSidedModel {
    gamma: f64,
}

impl Default for TwoSidedModel {
    fn default() -> Self {
        TwoSidedModel { gamma: 0.5 }
    }
}

impl TwoSidedModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 0.5) {
            return Err(Error::BadParams(format!(
                "fiber contraction {gamma} outside (0, 1/2]"
            )));
        }
        Ok(TwoSidedModel { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Constant in `d(F^n y, F^n y') <= C2 gamma^n d(y, y')` on stable fibers.
    pub fn c2(&self) -> f64 {
        1.0
    }

    pub fn branch(&self, p: &FatPoint) -> usize {
        usize::from(p.ybar >= 0.5)
    }

    pub fn forward(&self, p: &FatPoint) -> FatPoint {
        let j = self.branch(p);
        let jf = j as f64;
        FatPoint {
            ybar: 2.0 * p.ybar - jf,
            z: self.gamma * p.z + jf * (1.0 - self.gamma),
        }
    }

    /// Inverse of [`Self::forward`] on the image `g_0[0,1] u g_1[0,1]`.
    pub fn backward(&self, p: &FatPoint) -> FatPoint {
        let j = usize::from(p.z >= 1.0 - self.gamma);
        let jf = j as f64;
        FatPoint {
            ybar: 0.5 * (p.ybar + jf),
            z: ((p.z - jf * (1.0 - self.gamma)) / self.gamma).clamp(0.0, 1.0),
        }
    }

    /// Projection along stable fibers onto `z = 0`.
    pub fn project(&self, p: &FatPoint) -> FatPoint {
        FatPoint {
            ybar: p.ybar,
            z: 0.0,
        }
    }

    pub fn distance(&self, p: &FatPoint, q: &FatPoint) -> f64 {
        (p.ybar - q.ybar).hypot(p.z - q.z)
    }

    /// Symbolic future of length `n` (doubling digits of `ybar`).
    pub fn future(&self, p: &FatPoint, n: usize) -> Vec<usize> {
        let mut q = *p;
        (0..n)
            .map(|_| {
                let j = self.branch(&q);
                q = self.forward(&q);
                j
            })
            .collect()
    }

    /// Symbolic past of depth `n`, most recent symbol first.
    pub fn past(&self, p: &FatPoint, n: usize) -> Vec<usize> {
        let mut q = *p;
        (0..n)
            .map(|_| {
                let j = usize::from(q.z >= 1.0 - self.gamma);
                q = self.backward(&q);
                j
            })
            .collect()
    }

    /// A sample of the invariant measure: `ybar` uniform, `z` built from
    /// 64 independent past symbols.
    pub fn sample(&self, rng: &mut Rng) -> FatPoint {
        let k = rng.gen::<u64>() >> 11;
        let ybar = k as f64 / GRID;
        let mut z = 0.0;
        let mut w = 1.0 - self.gamma;
        let bits = rng.gen::<u64>();
        for i in 0..64 {
            if (bits >> i) & 1 == 1 {
                z += w;
            }
            w *= self.gamma;
        }
        FatPoint {
            ybar,
            z: z.min(1.0),
        }
    }
}

/// Roof on the fattened model:
/// `c + a ybar + s sin(2 pi ybar) + b z + q z^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FiberRoof {
    pub c: f64,
    pub a: f64,
    pub s: f64,
    pub b: f64,
    pub q: f64,
}

impl FiberRoof {
    pub fn constant(c: f64) -> Self {
        FiberRoof {
            c,
            ..Default::default()
        }
    }

    pub fn eval(&self, p: &FatPoint) -> f64 {
        let tau = std::f64::consts::TAU;
        self.c + self.a * p.ybar + self.s * (tau * p.ybar).sin() + p.z * (self.b + self.q * p.z)
    }

    /// Lipschitz constant in `z`.
    pub fn lip_z(&self) -> f64 {
        self.b.abs() + 2.0 * self.q.abs()
    }

    /// Lipschitz constant in `ybar` on each doubling branch.
    pub fn lip_ybar(&self) -> f64 {
        self.a.abs() + std::f64::consts::TAU * self.s.abs()
    }

    fn fiber_range(&self) -> (f64, f64) {
        let mut vals = vec![0.0, self.b + self.q];
        if self.q != 0.0 {
            let v = -self.b / (2.0 * self.q);
            if (0.0..=1.0).contains(&v) {
                vals.push(v * (self.b + self.q * v));
            }
        }
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Lower bound of the roof over `Y`.
    pub fn inf(&self) -> f64 {
        self.c + self.a.min(0.0) - self.s.abs() + self.fiber_range().0
    }

    /// Upper bound of the roof over `Y`.
    pub fn sup(&self) -> f64 {
        self.c + self.a.max(0.0) + self.s.abs() + self.fiber_range().1
    }

    /// True when the roof does not depend on `z`.
    pub fn is_skew_product(&self) -> bool {
        self.b == 0.0 && self.q == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiValue {
    pub value: f64,
    /// Bound on the discarded tail.
    pub bound: f64,
    pub terms: usize,
}

/// `chi(y) = sum_{n<K} phi(F^n pi y) - phi(F^n y)` with its remainder bound.
pub fn chi(
    model: &TwoSidedModel,
    roof: &FiberRoof,
    y: &FatPoint,
    k: usize,
    tol: f64,
) -> Result<ChiValue> {
    if k == 0 {
        return Err(Error::BadParams("chi needs at least one term".into()));
    }
    let g = model.gamma();
    let bound = model.c2() * roof.lip_z() * y.z.abs() * g.powi(k as i32) / (1.0 - g);
    if bound > tol {
        return Err(Error::NoConvergence { bound, tol });
    }
    let mut p = *y;
    let mut q = model.project(y);
    let mut value = 0.0;
    for _ in 0..k {
        value += roof.eval(&q) - roof.eval(&p);
        p = model.forward(&p);
        q = model.forward(&q);
    }
    Ok(ChiValue {
        value,
        bound,
        terms: k,
    })
}

/// Least truncation depth whose remainder bound is at most `tol`.
pub fn chi_depth(model: &TwoSidedModel, roof: &FiberRoof, y: &FatPoint, tol: f64) -> usize {
    let g = model.gamma();
    let scale = model.c2() * roof.lip_z() * y.z.abs() / (1.0 - g);
    if scale <= tol {
        return 1;
    }
    let k = ((tol / scale).ln() / g.ln()).ceil() as usize;
    k.clamp(1, K_MAX)
}

/// [`chi`] with the depth chosen from the remainder bound.
pub fn chi_auto(
    model: &TwoSidedModel,
    roof: &FiberRoof,
    y: &FatPoint,
    tol: f64,
) -> Result<ChiValue> {
    chi(model, roof, y, chi_depth(model, roof, y, tol), tol)
}

/// `phi~(y) = phi(y) + chi(y) - chi(F y)`.
pub fn tilde_phi(model: &TwoSidedModel, roof: &FiberRoof, y: &FatPoint, tol: f64) -> Result<f64> {
    let c0 = chi_auto(model, roof, y, tol)?;
    let c1 = chi_auto(model, roof, &model.forward(y), tol)?;
    Ok(roof.eval(y) + c0.value - c1.value)
}

/// Sample supremum of `|chi|` over `n` invariant-measure points, with a 10% margin.
pub fn chi_sup(model: &TwoSidedModel, roof: &FiberRoof, n: usize, rng: &mut Rng) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for _ in 0..n {
        let y = model.sample(rng);
        sup = sup.max(chi_auto(model, roof, &y, CHI_TOL)?.value.abs());
    }
    Ok(1.1 * sup)
}

/// Suspension base over the fattened model. Orbits refill the low `ybar` bit
/// from a hash of the point so long orbits do not collapse to `ybar = 0`.
#[derive(Debug, Clone, Copy)]
pub struct FatBase {
    pub model: TwoSidedModel,
    pub roof: FiberRoof,
}

impl SuspensionBase for FatBase {
    type Point = FatPoint;

    fn step(&self, p: &FatPoint) -> FatPoint {
        let mut q = self.model.forward(p);
        let mut h = p.ybar.to_bits() ^ p.z.to_bits().rotate_left(29);
        if splitmix64(&mut h) >> 63 == 1 {
            q.ybar += 1.0 / GRID;
        }
        q
    }

    fn roof(&self, p: &FatPoint) -> f64 {
        self.roof.eval(p)
    }
}

/// The roof `phi~` as a suspension base; exact forward map, no refresh.
#[derive(Debug, Clone, Copy)]
pub struct TildeBase {
    pub model: TwoSidedModel,
    pub roof: FiberRoof,
    pub tol: f64,
}

impl SuspensionBase for TildeBase {
    type Point = FatPoint;

    fn step(&self, p: &FatPoint) -> FatPoint {
        self.model.forward(p)
    }

    fn roof(&self, p: &FatPoint) -> f64 {
        // Depth is bounded by K_MAX, far beyond what tol needs for lip_z <= 1e6.
        tilde_phi(&self.model, &self.roof, p, self.tol).unwrap_or_else(|_| self.roof.eval(p))
    }
}

/// The semiconjugacies between `Y^phi` and `Y^phi~`.
#[derive(Debug, Clone)]
pub struct Conjugacies {
    pub tilde: SuspensionFlow<TildeBase>,
    pub plain: SuspensionFlow<PlainBase>,
    /// Estimated `|chi|_inf`.
    pub shift: f64,
}

/// The roof `phi` with the exact forward map (no bit refresh).
#[derive(Debug, Clone, Copy)]
pub struct PlainBase {
    pub model: TwoSidedModel,
    pub roof: FiberRoof,
}

impl SuspensionBase for PlainBase {
    type Point = FatPoint;

    fn step(&self, p: &FatPoint) -> FatPoint {
        self.model.forward(p)
    }

    fn roof(&self, p: &FatPoint) -> f64 {
        self.roof.eval(p)
    }
}

/// Build `g+` and `g-` with `|chi|_inf` estimated from `n_sup` samples.
pub fn conjugacies(
    model: &TwoSidedModel,
    roof: &FiberRoof,
    n_sup: usize,
    rng: &mut Rng,
) -> Result<Conjugacies> {
    let shift = chi_sup(model, roof, n_sup, rng)?;
    conjugacies_with_shift(model, roof, shift)
}

pub fn conjugacies_with_shift(
    model: &TwoSidedModel,
    roof: &FiberRoof,
    shift: f64,
) -> Result<Conjugacies> {
    let inf = roof.inf();
    let need = 4.0 * shift + 1.0;
    if inf < need {
        let power = if inf > 0.0 {
            (need / inf).ceil() as usize
        } else {
            0
        };
        return Err(Error::InducePowerNeeded {
            inf_roof: inf,
            chi_sup: shift,
            power,
        });
    }
    Ok(Conjugacies {
        tilde: SuspensionFlow::new(TildeBase {
            model: *model,
            roof: *roof,
            tol: CHI_TOL,
        }),
        plain: SuspensionFlow::new(PlainBase {
            model: *model,
            roof: *roof,
        }),
        shift,
    })
}

impl Conjugacies {
    fn chi(&self, y: &FatPoint) -> f64 {
        let b = &self.tilde.base;
        chi_auto(&b.model, &b.roof, y, b.tol).map_or(0.0, |c| c.value)
    }

    /// `g+(y, u) = (y, u + chi(y) + |chi|)` in `Y^phi~`.
    pub fn g_plus(&self, x: &FlowPoint<FatPoint>) -> FlowPoint<FatPoint> {
        self.tilde.point(x.y, x.u + self.chi(&x.y) + self.shift)
    }

    /// `g-(y, u) = (y, u - chi(y) + |chi|)` in `Y^phi`.
    pub fn g_minus(&self, x: &FlowPoint<FatPoint>) -> FlowPoint<FatPoint> {
        self.plain.point(x.y, x.u - self.chi(&x.y) + self.shift)
    }

    /// Distance between suspension points sharing a base map.
    pub fn distance(&self, a: &FlowPoint<FatPoint>, b: &FlowPoint<FatPoint>) -> f64 {
        self.plain.base.model.distance(&a.y, &b.y) + (a.u - b.u).abs()
    }
}

/// Sample of `mu^phi`: base point from the invariant measure, height uniform
/// under the roof (rejection against the roof bound).
pub fn sample_suspension<B>(
    flow: &SuspensionFlow<B>,
    model: &TwoSidedModel,
    sup: f64,
    rng: &mut Rng,
) -> FlowPoint<FatPoint>
where
    B: SuspensionBase<Point = FatPoint>,
{
    loop {
        let y = model.sample(rng);
        let roof = flow.base.roof(&y);
        let u = rng.gen::<f64>() * sup;
        if u < roof {
            return FlowPoint { y, u, roof };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalDistance {
    pub value: f64,
    pub bound: f64,
}

/// Temporal distance `D(y1, y4)` truncated to `|n| < k`.
pub fn temporal_distance(
    model: &TwoSidedModel,
    roof: &FiberRoof,
    y1: &FatPoint,
    y4: &FatPoint,
    k: usize,
    tol: f64,
) -> Result<TemporalDistance> {
    if k == 0 {
        return Err(Error::BadParams("temporal distance needs k >= 1".into()));
    }
    let g = model.gamma();
    // y2 on the stable fiber of y1 and the unstable leaf of y4; y3 the other way round.
    let y2 = FatPoint::new(y1.ybar, y4.z);
    let y3 = FatPoint::new(y4.ybar, y1.z);
    let fwd = 2.0 * model.c2() * roof.lip_z() * (y1.z - y4.z).abs() * g.powi(k as i32) / (1.0 - g);
    let bwd = 2.0 * roof.lip_ybar() * (y1.ybar - y4.ybar).abs() * 0.5f64.powi(k as i32) / 0.5;
    let bound = fwd + bwd;
    if bound > tol {
        return Err(Error::NoConvergence { bound, tol });
    }
    let term = |p: &[FatPoint; 4]| {
        roof.eval(&p[0]) - roof.eval(&p[1]) - roof.eval(&p[2]) + roof.eval(&p[3])
    };
    let mut value = 0.0;
    let mut pts = [*y1, y2, y3, *y4];
    for _ in 0..k {
        value += term(&pts);
        pts = pts.map(|p| model.forward(&p));
    }
    let mut pts = [*y1, y2, y3, *y4].map(|p| model.backward(&p));
    for _ in 1..k {
        value += term(&pts);
        pts = pts.map(|p| model.backward(&p));
    }
    Ok(TemporalDistance { value, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn linear() -> FiberRoof {
        FiberRoof {
            c: 1.0,
            b: 0.25,
            ..Default::default()
        }
    }

    #[test]
    fn forward_backward_roundtrip() {
        let m = TwoSidedModel::default();
        let p = FatPoint::new(0.3125, 0.625);
        let q = m.backward(&m.forward(&p));
        assert!(m.distance(&p, &q) < 1e-15);
    }

    #[test]
    fn chi_closed_form_linear_roof() {
        let m = TwoSidedModel::default();
        let r = linear();
        for z in [0.0, 0.1, 0.5, 0.99] {
            let y = FatPoint::new(0.37, z);
            let c = chi_auto(&m, &r, &y, 1e-12).unwrap();
            assert!((c.value + z / 2.0).abs() < 1e-12, "{z}");
        }
    }

    #[test]
    fn chi_vanishes_for_skew_product() {
        let m = TwoSidedModel::default();
        let r = FiberRoof {
            c: 2.0,
            a: 0.5,
            s: 0.1,
            ..Default::default()
        };
        let c = chi(&m, &r, &FatPoint::new(0.2, 0.8), 3, 1e-12).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn chi_small_depth_reports_no_convergence() {
        let m = TwoSidedModel::default();
        assert!(matches!(
            chi(&m, &linear(), &FatPoint::new(0.2, 0.8), 3, 1e-9),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn tilde_phi_depends_on_branch_only() {
        let m = TwoSidedModel::default();
        let r = linear();
        for (yb, expect) in [(0.2, 1.0), (0.7, 1.25)] {
            for z in [0.0, 0.3, 0.9] {
                let v = tilde_phi(&m, &r, &FatPoint::new(yb, z), 1e-12).unwrap();
                assert!((v - expect).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn small_roof_needs_induced_power() {
        let m = TwoSidedModel::default();
        let err = conjugacies_with_shift(&m, &linear(), 0.55).unwrap_err();
        assert!(
            matches!(err, Error::InducePowerNeeded { power: 4, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn temporal_distance_trivial_cases() {
        let m = TwoSidedModel::default();
        let r = FiberRoof {
            c: 3.0,
            a: 0.5,
            b: 0.25,
            q: 0.1,
            s: 0.05,
        };
        let y1 = FatPoint::new(0.3, 0.4);
        let same_fiber = FatPoint::new(0.3, 0.9);
        assert_eq!(
            temporal_distance(&m, &r, &y1, &y1, 40, 1e-9).unwrap().value,
            0.0
        );
        assert!(
            temporal_distance(&m, &r, &y1, &same_fiber, 40, 1e-9)
                .unwrap()
                .value
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn sampled_z_is_uniform_for_half_contraction() {
        let m = TwoSidedModel::default();
        let mut rng = stream(1, 0);
        let n = 20000;
        let mean = (0..n).map(|_| m.sample(&mut rng).z).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
    }
}
