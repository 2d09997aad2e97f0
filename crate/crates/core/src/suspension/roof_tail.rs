use rayon::prelude::*;

use crate::gibbs_markov::{Density, GmSystem, Roof};
use crate::rng::stream;
use crate::Result;

/// Checks made while truncating a roof at a level `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub level: f64,
    /// First branch of `Y(N)`; `None` when `Y(N)` is empty.
    pub from_branch: Option<usize>,
    /// Ratio constant `C1` of the untruncated roof.
    pub c1: f64,
    /// Largest sampled truncated value.
    pub max_value: f64,
    /// Samples with truncated roof above `2 C1 N`.
    pub violations: usize,
    /// Samples off `Y(N)` where the truncated roof differs from the roof.
    pub mismatches: usize,
    /// Sampled `mu(Y(N))`.
    pub mass_sampled: f64,
    /// `sum_{j in Y(N)} mu(Y_j)` by branch enumeration.
    pub mass_branches: f64,
    pub samples: usize,
}

const ENUMERATED: usize = 4000;

/// `phi(N)`: the roof set to `N` on `Y(N)`, with sampled sanity checks.
pub fn truncate_roof(
    gm: &GmSystem,
    roof: &Roof,
    level: f64,
    density: &Density,
    samples: usize,
    seed: u64,
) -> Result<(Roof, TruncationReport)> {
    let truncated = roof.truncate(gm, level)?;
    let from = match truncated {
        Roof::Truncated { from_branch, .. } => from_branch,
        _ => usize::MAX,
    };
    let empty = gm.branch_count().is_some_and(|n| from >= n) || from == usize::MAX;
    let c1 = roof.ratio_constant(gm, 256);
    let mut rng = stream(seed, 11);
    let (mut max_value, mut violations, mut mismatches, mut inside) = (0.0f64, 0, 0, 0usize);
    for _ in 0..samples {
        let y = density.sample(&mut rng);
        let s = gm.step(y);
        let v = truncated.eval_parts(y, s.branch, s.tau, s.orbit_sum);
        max_value = max_value.max(v);
        if v > 2.0 * c1 * level {
            violations += 1;
        }
        if s.branch >= from {
            inside += 1;
        } else if v != roof.eval_parts(y, s.branch, s.tau, s.orbit_sum) {
            mismatches += 1;
        }
    }
    let mass_branches = if empty {
        0.0
    } else {
        let stop = gm.branch_count().unwrap_or(from + ENUMERATED);
        let mut m: f64 = (from..stop)
            .map(|j| {
                let (a, b) = gm.branch_interval(j);
                density.mass(a, b)
            })
            .sum();
        if gm.branch_count().is_none() {
            m += density.bound * gm.tail_mass(stop);
        }
        m
    };
    let report = TruncationReport {
        level,
        from_branch: (!empty).then_some(from),
        c1,
        max_value,
        violations,
        mismatches,
        mass_sampled: inside as f64 / samples.max(1) as f64,
        mass_branches,
        samples,
    };
    Ok((truncated, report))
}

/// One cell of the roof-tail inequality grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoofTailRow {
    pub i: usize,
    pub n: usize,
    pub t: f64,
    /// `E[phi^eta o F^i ; phi_n > t]`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `(n+1) E[phi^eta ; phi > t/n]`.
    pub rhs: f64,
    pub rhs_se: f64,
    /// `lhs <= rhs` within three combined standard errors.
    pub holds: bool,
}

/// Monte Carlo check of the roof-tail inequality over a grid of `(i, n, t)`.
#[allow(clippy::too_many_arguments)]
pub fn roof_tail_check(
    gm: &GmSystem,
    roof: &Roof,
    density: &Density,
    eta: f64,
    is: &[usize],
    ns: &[usize],
    ts: &[f64],
    samples: usize,
    seed: u64,
) -> Vec<RoofTailRow> {
    let depth = is
        .iter()
        .map(|i| i + 1)
        .chain(ns.iter().cloned())
        .max()
        .unwrap_or(1);
    let batches = 16usize;
    let per = samples.div_ceil(batches);
    let orbits: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream(seed, 100 + b as u64);
            (0..per)
                .map(|_| {
                    let mut y = density.sample(&mut rng);
                    (0..depth)
                        .map(|_| {
                            let s = gm.step(y);
                            let v = roof.eval_parts(y, s.branch, s.tau, s.orbit_sum);
                            y = s.image;
                            v
                        })
                        .collect::<Vec<f64>>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let m = orbits.len() as f64;
    let mean_se = |vals: &mut dyn Iterator<Item = f64>| {
        let (mut s, mut s2) = (0.0, 0.0);
        for v in vals {
            s += v;
            s2 += v * v;
        }
        let mean = s / m;
        (mean, ((s2 / m - mean * mean).max(0.0) / m).sqrt())
    };
    let mut rows = Vec::new();
    for &i in is {
        for &n in ns {
            for &t in ts {
                let (lhs, lhs_se) = mean_se(&mut orbits.iter().map(|o| {
                    let sum: f64 = o[..n].iter().sum();
                    if sum > t {
                        o[i].powf(eta)
                    } else {
                        0.0
                    }
                }));
                let (r, r_se) = mean_se(&mut orbits.iter().map(|o| {
                    if o[0] > t / n as f64 {
                        o[0].powf(eta)
                    } else {
                        0.0
                    }
                }));
                let k = (n + 1) as f64;
                let (rhs, rhs_se) = (k * r, k * r_se);
                let holds = lhs - rhs <= 3.0 * lhs_se.hypot(rhs_se);
                rows.push(RoofTailRow {
                    i,
                    n,
                    t,
                    lhs,
                    lhs_se,
                    rhs,
                    rhs_se,
                    holds,
                });
            }
        }
    }
    rows
}
