use num_complex::Complex64;
use rayon::prelude::*;

use super::correlation::{batch_sizes, batch_stats, CorrelationSeries, BATCHES, MIN_BUDGET};
use crate::gibbs_markov::Density;
use crate::quad::GaussLegendre;
use crate::rng::stream;
use crate::suspension::{GmBase, SuspensionBase};
use crate::{Error, Result};

/// Observable on a fiber: `(y, u, roof(y)) -> value`.
pub type FiberObs<'a> = &'a (dyn Fn(f64, f64, f64) -> f64 + Sync);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceTerm {
    pub n: usize,
    pub value: Complex64,
    /// Standard error of the modulus.
    pub se: f64,
    /// Analytic bound on `|J_n(s)|` (infinite at `n = 0` or `Re s <= 0`).
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceEstimate {
    pub s: Complex64,
    pub value: Complex64,
    pub se: f64,
    pub terms: Vec<LaplaceTerm>,
    pub n_max: usize,
    /// Bound on the discarded terms `n > n_max` (infinite when `Re s <= 0`).
    pub tail_bound: f64,
    /// Sampled `|v - mean|_inf` and `|w|_inf`.
    pub v_sup: f64,
    pub w_sup: f64,
}

const NODES: usize = 24;

/// Per-sample contributions `J_0 .. J_{n_max}` (before division by the mean roof).
fn contributions(
    orbit: &[(f64, f64)],
    v: &dyn Fn(f64, f64, f64) -> f64,
    w: FiberObs,
    s: Complex64,
    gl: &GaussLegendre,
    n_max: usize,
) -> Vec<Complex64> {
    let (y0, phi0) = orbit[0];
    let mut out = Vec::with_capacity(n_max + 1);
    // In-fiber part: both times on the first fiber.
    let mut j0 = Complex64::new(0.0, 0.0);
    for (u, wu) in gl.mapped(0.0, phi0) {
        let vu = v(y0, u, phi0);
        let mut inner = Complex64::new(0.0, 0.0);
        for (u2, wu2) in gl.mapped(u, phi0) {
            inner += wu2 * (-s * (u2 - u)).exp() * w(y0, u2, phi0);
        }
        j0 += wu * vu * inner;
    }
    out.push(j0);
    let vs: Complex64 = gl
        .mapped(0.0, phi0)
        .map(|(u, wu)| wu * (s * u).exp() * v(y0, u, phi0))
        .sum();
    let mut phin = phi0;
    for &(yn, phi) in &orbit[1..=n_max] {
        let wh: Complex64 = gl
            .mapped(0.0, phi)
            .map(|(u, wu)| wu * (-s * u).exp() * w(yn, u, phi))
            .sum();
        out.push((-s * phin).exp() * vs * wh);
        phin += phi;
    }
    out
}

/// `rho^(s) = sum_n J_n(s)` for the suspension over a Gibbs-Markov base, by
/// per-fiber quadrature and Monte Carlo over the base. `v` is centered first.
#[allow(clippy::too_many_arguments)]
pub fn laplace_series(
    base: &GmBase,
    density: &Density,
    v: FiberObs,
    w: FiberObs,
    s_list: &[Complex64],
    n_max: usize,
    budget: usize,
    seed: u64,
) -> Result<Vec<LaplaceEstimate>> {
    if budget < MIN_BUDGET {
        return Err(Error::BudgetTooSmall {
            budget,
            min: MIN_BUDGET,
        });
    }
    if n_max == 0 {
        return Err(Error::BadParams("n_max must be at least 1".into()));
    }
    let gl = GaussLegendre::new(NODES);
    let sizes = batch_sizes(budget);
    // Orbits are regenerated from their streams on every pass instead of stored.
    let orbits_of = |b: usize| {
        let mut rng = stream(seed, 5000 + b as u64);
        (0..sizes[b]).map(move |_| {
            let mut p = base.sample(density, &mut rng);
            (0..=n_max)
                .map(|_| {
                    let here = (p.y, base.roof(&p));
                    p = base.step(&p);
                    here
                })
                .collect::<Vec<(f64, f64)>>()
        })
    };
    // Centering constant and mean roof from the same samples.
    let (iv, iphi) = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            orbits_of(b).fold((0.0, 0.0), |(iv, ip), o| {
                let (y, phi) = o[0];
                (iv + gl.integrate(0.0, phi, |u| v(y, u, phi)), ip + phi)
            })
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let vbar = iv / iphi;
    let mean_roof = iphi / budget as f64;
    let vc = |y: f64, u: f64, phi: f64| v(y, u, phi) - vbar;
    let mut v_sup: f64 = 0.0;
    let mut w_sup: f64 = 0.0;
    for o in orbits_of(0).take(2000) {
        for &(y, phi) in &o {
            for (u, _) in gl.mapped(0.0, phi) {
                v_sup = v_sup.max(vc(y, u, phi).abs());
                w_sup = w_sup.max(w(y, u, phi).abs());
            }
        }
    }
    let mut out = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let per_batch: Vec<Vec<Complex64>> = (0..BATCHES)
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![Complex64::new(0.0, 0.0); n_max + 1];
                for o in orbits_of(b) {
                    for (a, c) in acc.iter_mut().zip(contributions(&o, &vc, w, s, &gl, n_max)) {
                        *a += c;
                    }
                }
                acc.iter()
                    .map(|a| a / (sizes[b] as f64 * mean_roof))
                    .collect()
            })
            .collect();
        let a = s.re;
        let mut terms = Vec::with_capacity(n_max + 1);
        let mut value = Complex64::new(0.0, 0.0);
        for n in 0..=n_max {
            let pooled: Complex64 = per_batch
                .iter()
                .zip(&sizes)
                .map(|(b, &k)| b[n] * k as f64)
                .sum::<Complex64>()
                / budget as f64;
            let mods: Vec<f64> = per_batch.iter().map(|b| b[n].norm()).collect();
            let bound = if n >= 1 && a > 0.0 {
                v_sup * w_sup * (-a * (n as f64 - 1.0)).exp() * 2.0 / (a * a * mean_roof)
            } else {
                f64::INFINITY
            };
            terms.push(LaplaceTerm {
                n,
                value: pooled,
                se: batch_stats(&mods).1,
                bound,
            });
            value += pooled;
        }
        let sums_re: Vec<f64> = per_batch
            .iter()
            .map(|b| b.iter().sum::<Complex64>().re)
            .collect();
        let sums_im: Vec<f64> = per_batch
            .iter()
            .map(|b| b.iter().sum::<Complex64>().im)
            .collect();
        let se = batch_stats(&sums_re).1.hypot(batch_stats(&sums_im).1);
        let tail_bound = if a > 0.0 {
            v_sup * w_sup * 2.0 / (a * a * mean_roof) * (-a * n_max as f64).exp()
                / (1.0 - (-a).exp())
        } else {
            f64::INFINITY
        };
        let biggest = terms.iter().map(|t| t.value.norm()).fold(0.0, f64::max);
        let last = terms[n_max];
        if last.value.norm() > 3.0 * last.se + 1e-3 * biggest {
            return Err(Error::SeriesNotDecaying {
                s_re: s.re,
                s_im: s.im,
                last_term: last.value.norm(),
            });
        }
        out.push(LaplaceEstimate {
            s,
            value,
            se,
            terms,
            n_max,
            tail_bound,
            v_sup,
            w_sup,
        });
    }
    Ok(out)
}

/// `int_0^T e^{-st} rho(t) dt` over the series grid (trapezoid), with a batch SE.
pub fn laplace_transform(series: &CorrelationSeries, s: Complex64) -> (Complex64, f64) {
    let tr = |rho: &[f64]| -> Complex64 {
        series
            .t
            .windows(2)
            .zip(rho.windows(2))
            .map(|(t, r)| {
                0.5 * (t[1] - t[0]) * ((-s * t[0]).exp() * r[0] + (-s * t[1]).exp() * r[1])
            })
            .sum()
    };
    let value = tr(&series.rho);
    let per: Vec<Complex64> = series.batches.iter().map(|b| tr(b)).collect();
    let re: Vec<f64> = per.iter().map(|c| c.re).collect();
    let im: Vec<f64> = per.iter().map(|c| c.im).collect();
    let se = if per.len() > 1 {
        batch_stats(&re).1.hypot(batch_stats(&im).1)
    } else {
        0.0
    };
    (value, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs_markov::{invariant_density, GmSystem, Roof};

    #[test]
    fn zero_observable_gives_zero() {
        let gm = GmSystem::doubling();
        let d = invariant_density(&gm, 8).unwrap();
        let base = GmBase::new(gm, Roof::constant(1.0));
        let est = laplace_series(
            &base,
            &d,
            &|_, _, _| 0.0,
            &|_, u, _| u,
            &[Complex64::new(1.0, 0.0)],
            5,
            MIN_BUDGET,
            1,
        )
        .unwrap();
        assert_eq!(est[0].value, Complex64::new(0.0, 0.0));
    }
}
