use std::f64::consts::TAU;

use num_complex::Complex64;

use super::roof::Roof;
use super::system::GmSystem;
use crate::{Error, Result};

/// `exp(2 pi i t)` reduced by whole turns first, so integer `t` gives exactly 1.
pub fn cis_turns(t: f64) -> Complex64 {
    let f = t - t.floor();
    if f == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::from_polar(1.0, TAU * f)
}

/// One application of the twisted composition operator `v -> e^{i b roof} v∘F` at `points`.
pub fn twisted_iterate(
    gm: &GmSystem,
    roof: &Roof,
    b: f64,
    v: impl Fn(f64) -> Complex64,
    points: &[f64],
) -> Vec<Complex64> {
    let bt = b / TAU;
    points
        .iter()
        .map(|&y| {
            let s = gm.step(y);
            cis_turns(bt * roof.eval_parts(y, s.branch, s.tau, s.orbit_sum)) * v(s.image)
        })
        .collect()
}

/// Result of an approximate-eigenfunction search on a finite subsystem.
#[derive(Debug, Clone)]
pub struct Defect {
    pub b: f64,
    pub xi: f64,
    /// Iterate `n = floor(xi ln|b|)`.
    pub n: usize,
    /// `sup |M_b^n u - e^{i psi} u|` over the subsystem sample.
    pub defect: f64,
    pub psi: f64,
    pub u: Vec<Complex64>,
    /// Subsystem sample points (one per word).
    pub points: Vec<f64>,
}

/// Optimal phase and defect for a candidate `u` given `M_b^n u` on the same points.
pub fn defect_of(mnu: &[Complex64], u: &[Complex64]) -> (f64, f64) {
    let inner: Complex64 = mnu.iter().zip(u).map(|(a, b)| a * b.conj()).sum();
    let psi = inner.arg();
    let rot = Complex64::from_polar(1.0, psi);
    let defect = mnu
        .iter()
        .zip(u)
        .map(|(a, b)| (a - rot * b).norm())
        .fold(0.0, f64::max);
    (defect, psi)
}

const MAX_POINTS: usize = 4096;
const POWER_STEPS: usize = 60;

/// Measure the approximate-eigenfunction defect of `M_b` on the subsystem whose
/// orbits stay in the branches `z0`.
///
/// The subsystem is sampled by the points `h_w(p)` for all words `w` of a fixed
/// length over `z0`, where `p` is the fixed point of the first branch in `z0`;
/// the map acts on these points exactly as the shift with `z0[0]` appended.
/// The candidate `u` comes from unimodular power iteration of the restricted
/// twisted transfer operator.
pub fn approx_eigenfunction_defect(
    gm: &GmSystem,
    roof: &Roof,
    z0: &[usize],
    b: f64,
    xi: f64,
) -> Result<Defect> {
    if z0.is_empty() {
        return Err(Error::EmptySubsystem);
    }
    if let Some(nb) = gm.branch_count() {
        if z0.iter().any(|&j| j >= nb) {
            return Err(Error::BadParams(format!(
                "branch index out of range (system has {nb})"
            )));
        }
    }
    if b == 0.0 || !(xi > 0.0) {
        return Err(Error::BadParams("need b != 0 and xi > 0".into()));
    }
    let k = z0.len();
    let mut m = 1;
    while k.pow(m as u32 + 1) <= MAX_POINTS && m < 40 {
        m += 1;
    }
    let count = k.pow(m as u32);
    let n = (xi * b.abs().ln()).floor().max(0.0) as usize;
    let bt = b / TAU;

    // Fixed point of the first subsystem branch.
    let (lo, hi) = gm.domain();
    let mut p = 0.5 * (lo + hi);
    for _ in 0..200 {
        p = gm.preimage(z0[0], p).y;
    }

    // Words are base-k integers with the first letter most significant.
    // point[w] = h_{w_1}(point[shift(w)]) where shift drops w_1 and appends letter 0.
    let shift = |w: usize| (w % k.pow(m as u32 - 1)) * k;
    let first = |w: usize| w / k.pow(m as u32 - 1);
    let mut points = vec![p; count];
    let mut roof_at = vec![0.0; count];
    // Build from the innermost letter outwards: depth d handles words whose
    // letters after position d are all 0.
    for _ in 0..m {
        let prev = points.clone();
        for w in 0..count {
            let pre = gm.preimage(z0[first(w)], prev[shift(w)]);
            points[w] = pre.y;
            roof_at[w] = roof.eval_preimage(&pre);
        }
    }

    // Restricted twisted transfer operator on the word sample: preimage j of
    // point[w] is identified with the word (j, w_1 .. w_{m-1}).
    let prefix = |j: usize, w: usize| j * k.pow(m as u32 - 1) + w / k;
    let mut weights = vec![Complex64::new(0.0, 0.0); count * k];
    for w in 0..count {
        for (ji, &j) in z0.iter().enumerate() {
            let pre = gm.preimage(j, points[w]);
            weights[w * k + ji] = pre.jacobian * cis_turns(-bt * roof.eval_preimage(&pre));
        }
    }
    let mut u = vec![Complex64::new(1.0, 0.0); count];
    for _ in 0..POWER_STEPS {
        let next: Vec<Complex64> = (0..count)
            .map(|w| {
                let z: Complex64 = (0..k)
                    .map(|ji| weights[w * k + ji] * u[prefix(ji, w)])
                    .sum();
                let r = z.norm();
                if r > 0.0 {
                    z / r
                } else {
                    u[w]
                }
            })
            .collect();
        u = next;
    }

    // M_b^n u at each word: accumulate the roof along the exact shift orbit.
    let mnu: Vec<Complex64> = (0..count)
        .map(|w| {
            let mut turns = 0.0;
            let mut cur = w;
            for _ in 0..n {
                turns += roof_at[cur];
                cur = shift(cur);
            }
            cis_turns(bt * turns) * u[cur]
        })
        .collect();
    let (defect, psi) = defect_of(&mnu, &u);
    Ok(Defect {
        b,
        xi,
        n,
        defect,
        psi,
        u,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_roof_resonance_is_exact() {
        let gm = GmSystem::doubling();
        for k in [1.0, 2.0, 4.0] {
            let d = approx_eigenfunction_defect(&gm, &Roof::constant(1.0), &[0, 1], TAU * k, 2.0)
                .unwrap();
            assert_eq!(d.defect, 0.0);
            assert_eq!(d.psi, 0.0);
            assert!(d.u.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn twisted_iterate_basics() {
        let gm = GmSystem::doubling();
        let pts = [0.1, 0.3, 0.7];
        let v = |x: f64| Complex64::new(x, 0.0);
        let out = twisted_iterate(&gm, &Roof::poly(&[1.0, 1.0]), 0.0, v, &pts);
        for (o, y) in out.iter().zip(pts) {
            assert!((o.re - gm.map(y)).abs() < 1e-15 && o.im == 0.0);
        }
        let out = twisted_iterate(
            &gm,
            &Roof::constant(1.0),
            TAU,
            |_| Complex64::new(1.0, 0.0),
            &pts,
        );
        assert!(out.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
        let out = twisted_iterate(
            &gm,
            &Roof::poly(&[1.0, 1.0]),
            3.3,
            |x| Complex64::from_polar(2.0, x),
            &pts,
        );
        assert!(out.iter().all(|z| (z.norm() - 2.0).abs() < 1e-14));
    }

    #[test]
    fn points_are_closed_under_the_map() {
        let gm = GmSystem::doubling();
        let d =
            approx_eigenfunction_defect(&gm, &Roof::poly(&[1.0, 1.0]), &[0, 1], 20.0, 1.0).unwrap();
        let mut sorted = d.points.clone();
        sorted.sort_by(f64::total_cmp);
        for &y in d.points.iter().take(50) {
            let fy = gm.map(y);
            let near = sorted
                .iter()
                .map(|p| (p - fy).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(near < 1e-12);
        }
    }

    #[test]
    fn gauge_invariance() {
        let u: Vec<Complex64> = (0..20)
            .map(|i| Complex64::from_polar(1.0, 0.3 * i as f64))
            .collect();
        let mnu: Vec<Complex64> = (0..20)
            .map(|i| Complex64::from_polar(1.0, 0.31 * i as f64 + 0.2))
            .collect();
        let (d1, psi1) = defect_of(&mnu, &u);
        let rot = Complex64::from_polar(1.0, 0.77);
        // M_b^n is linear, so rotating u rotates M_b^n u by the same phase.
        let ru: Vec<Complex64> = u.iter().map(|z| z * rot).collect();
        let rm: Vec<Complex64> = mnu.iter().map(|z| z * rot).collect();
        let (d2, psi2) = defect_of(&rm, &ru);
        assert!((d1 - d2).abs() < 1e-14);
        assert!((psi1 - psi2).abs() < 1e-14);
    }

    #[test]
    fn empty_subsystem() {
        let gm = GmSystem::doubling();
        assert!(matches!(
            approx_eigenfunction_defect(&gm, &Roof::constant(1.0), &[], 7.0, 1.0),
            Err(Error::EmptySubsystem)
        ));
    }
}
