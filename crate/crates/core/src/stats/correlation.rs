use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::backend::{advance, FlowBackend};
use crate::rng::stream;
use crate::{Error, Result};

/// Smallest accepted ensemble budget.
pub const MIN_BUDGET: usize = 10_000;
/// Number of batches for batch-mean standard errors.
pub const BATCHES: usize = 32;

pub type Obs<'a, S> = &'a (dyn Fn(&S) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub se: Vec<f64>,
    pub n_samples: usize,
    /// Per-batch estimates, one row per batch.
    pub batches: Vec<Vec<f64>>,
    /// Trajectories restarted after grazing or capped flights.
    pub restarts: usize,
    pub seed: u64,
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::GridMismatch("empty time grid".into()));
    }
    if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridMismatch(
            "time grid must be nonnegative and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Mean and batch-mean standard error of per-batch values.
pub(crate) fn batch_stats(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub(crate) fn batch_sizes(budget: usize) -> Vec<usize> {
    (0..BATCHES)
        .map(|b| budget / BATCHES + usize::from(b < budget % BATCHES))
        .collect()
}

struct Partial {
    n: usize,
    sv: f64,
    sw: f64,
    svw: Vec<f64>,
    swt: Vec<f64>,
    restarts: usize,
}

fn assemble(grid: &[f64], parts: Vec<Partial>, seed: u64) -> CorrelationSeries {
    let n: usize = parts.iter().map(|p| p.n).sum();
    let vbar = parts.iter().map(|p| p.sv).sum::<f64>() / n as f64;
    let wbar = parts.iter().map(|p| p.sw).sum::<f64>() / n as f64;
    // Batch value of mean((v0 - vbar)(w_t - wbar)).
    let batches: Vec<Vec<f64>> = parts
        .iter()
        .map(|p| {
            let m = p.n as f64;
            (0..grid.len())
                .map(|j| (p.svw[j] - vbar * p.swt[j] - wbar * p.sv) / m + vbar * wbar)
                .collect()
        })
        .collect();
    let mut rho = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        // Pooled estimate weights batches by size; SE from the batch spread.
        let pooled = parts
            .iter()
            .map(|p| p.svw[j] - vbar * p.swt[j] - wbar * p.sv)
            .sum::<f64>()
            / n as f64
            + vbar * wbar;
        let col: Vec<f64> = batches.iter().map(|b| b[j]).collect();
        rho.push(pooled);
        se.push(batch_stats(&col).1);
    }
    CorrelationSeries {
        t: grid.to_vec(),
        rho,
        se,
        n_samples: n,
        batches,
        restarts: parts.iter().map(|p| p.restarts).sum(),
        seed,
    }
}

/// Ensemble estimate of `rho_{v,w}(t)` from `budget` invariant samples.
pub fn correlation<B: FlowBackend>(
    backend: &B,
    v: Obs<B::State>,
    w: Obs<B::State>,
    grid: &[f64],
    budget: usize,
    seed: u64,
) -> Result<CorrelationSeries> {
    if budget < MIN_BUDGET {
        return Err(Error::BudgetTooSmall {
            budget,
            min: MIN_BUDGET,
        });
    }
    check_grid(grid)?;
    let parts = batch_sizes(budget)
        .into_par_iter()
        .enumerate()
        .map(|(b, size)| -> Result<Partial> {
            let mut rng = stream(seed, 1000 + b as u64);
            let k = grid.len();
            let mut p = Partial {
                n: size,
                sv: 0.0,
                sw: 0.0,
                svw: vec![0.0; k],
                swt: vec![0.0; k],
                restarts: 0,
            };
            let mut wt = vec![0.0; k];
            let mut done = 0;
            while done < size {
                let x0 = backend.sample(&mut rng)?;
                let mut x = x0.clone();
                let mut now = 0.0;
                let mut ok = true;
                for (j, &t) in grid.iter().enumerate() {
                    match advance(backend, &x, t - now) {
                        Ok(next) => x = next,
                        Err(Error::Grazing { .. } | Error::CapExceeded { .. }) => {
                            ok = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                    now = t;
                    wt[j] = w(&x);
                }
                if !ok {
                    p.restarts += 1;
                    continue;
                }
                let v0 = v(&x0);
                p.sv += v0;
                p.sw += w(&x0);
                for j in 0..k {
                    p.svw[j] += v0 * wt[j];
                    p.swt[j] += wt[j];
                }
                done += 1;
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(grid, parts, seed))
}

/// Long-orbit estimate: each of `orbits` trajectories is sampled every `dt`
/// after a burn-in, and lagged products are averaged over `origins` start
/// times per orbit. Lags are multiples of `dt`; one batch per orbit.
#[allow(clippy::too_many_arguments)]
pub fn correlation_birkhoff<B: FlowBackend>(
    backend: &B,
    v: Obs<B::State>,
    w: Obs<B::State>,
    dt: f64,
    lags: &[usize],
    orbits: usize,
    origins: usize,
    burn_in: f64,
    seed: u64,
) -> Result<CorrelationSeries> {
    if orbits * origins < MIN_BUDGET {
        return Err(Error::BudgetTooSmall {
            budget: orbits * origins,
            min: MIN_BUDGET,
        });
    }
    if orbits < 2 || !(dt > 0.0) {
        return Err(Error::BadParams("need at least 2 orbits and dt > 0".into()));
    }
    let grid: Vec<f64> = lags.iter().map(|&m| m as f64 * dt).collect();
    check_grid(&grid)?;
    let max_lag = *lags.last().unwrap();
    let traces = (0..orbits)
        .into_par_iter()
        .map(|o| -> Result<(Vec<f64>, Vec<f64>, usize)> {
            let mut rng = stream(seed, 2000 + o as u64);
            let mut restarts = 0;
            'retry: loop {
                let mut x = match backend
                    .sample(&mut rng)
                    .and_then(|x| advance(backend, &x, burn_in))
                {
                    Ok(x) => x,
                    Err(Error::Grazing { .. } | Error::CapExceeded { .. }) => {
                        restarts += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let len = origins + max_lag;
                let mut vs = Vec::with_capacity(len);
                let mut ws = Vec::with_capacity(len);
                for k in 0..len {
                    if k > 0 {
                        x = match advance(backend, &x, dt) {
                            Ok(x) => x,
                            Err(Error::Grazing { .. } | Error::CapExceeded { .. }) => {
                                restarts += 1;
                                continue 'retry;
                            }
                            Err(e) => return Err(e),
                        };
                    }
                    vs.push(v(&x));
                    ws.push(w(&x));
                }
                return Ok((vs, ws, restarts));
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let total = (orbits * origins) as f64;
    let vbar = traces
        .iter()
        .map(|t| t.0[..origins].iter().sum::<f64>())
        .sum::<f64>()
        / total;
    let wbar = traces
        .iter()
        .map(|t| t.1[..origins].iter().sum::<f64>())
        .sum::<f64>()
        / total;
    let batches: Vec<Vec<f64>> = traces
        .par_iter()
        .map(|(vs, ws, _)| {
            let vc: Vec<f64> = vs[..origins].iter().map(|x| x - vbar).collect();
            lags.iter()
                .map(|&m| {
                    vc.iter()
                        .zip(&ws[m..m + origins])
                        .map(|(a, b)| a * (b - wbar))
                        .sum::<f64>()
                        / origins as f64
                })
                .collect()
        })
        .collect();
    let mut rho = Vec::new();
    let mut se = Vec::new();
    for j in 0..lags.len() {
        let col: Vec<f64> = batches.iter().map(|b| b[j]).collect();
        let (m, s) = batch_stats(&col);
        rho.push(m);
        se.push(s);
    }
    Ok(CorrelationSeries {
        t: grid,
        rho,
        se,
        n_samples: orbits * origins,
        batches,
        restarts: traces.iter().map(|t| t.2).sum(),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub se: f64,
    /// 95% confidence interval.
    pub ci: (f64, f64),
    /// Window actually fitted, after the noise-floor knee.
    pub window: (f64, f64),
    pub used: usize,
    /// Window points dropped as noise-dominated.
    pub excluded: usize,
}

/// Weighted least-squares fit of `log|rho|` against `log t` over `window`.
///
/// Points with `|rho| <= 2 SE` are noise-dominated. The window is cut at the
/// first pair of consecutive noise-dominated points (the knee).
pub fn decay_exponent_fit(series: &CorrelationSeries, window: (f64, f64)) -> Result<DecayFit> {
    let idx: Vec<usize> = (0..series.t.len())
        .filter(|&i| series.t[i] > 0.0 && series.t[i] >= window.0 && series.t[i] <= window.1)
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let noisy = |i: usize| series.rho[i].abs() <= 2.0 * series.se[i] || series.rho[i] == 0.0;
    if idx.iter().all(|&i| noisy(i)) {
        return Err(Error::NoiseDominated);
    }
    let mut end = idx.len();
    for k in 0..idx.len().saturating_sub(1) {
        if noisy(idx[k]) && noisy(idx[k + 1]) {
            end = k;
            break;
        }
    }
    let kept: Vec<usize> = idx[..end].iter().cloned().filter(|&i| !noisy(i)).collect();
    let excluded = idx.len() - kept.len();
    if kept.len() < 3 {
        return Err(Error::NoiseDominated);
    }
    let xs: Vec<f64> = kept.iter().map(|&i| series.t[i].ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|&i| series.rho[i].abs().ln()).collect();
    let all_exact = kept.iter().all(|&i| series.se[i] == 0.0);
    let ws: Vec<f64> = kept
        .iter()
        .map(|&i| {
            if all_exact {
                1.0
            } else {
                (series.rho[i] / series.se[i].max(1e-300)).powi(2)
            }
        })
        .collect();
    let (slope, se) = wls_slope(&xs, &ys, &ws, all_exact);
    let dof = (kept.len() - 2).max(1) as f64;
    let q = StudentsT::new(0.0, 1.0, dof).map_or(1.96, |d| d.inverse_cdf(0.975));
    Ok(DecayFit {
        exponent: slope,
        se,
        ci: (slope - q * se, slope + q * se),
        window: (series.t[kept[0]], series.t[*kept.last().unwrap()]),
        used: kept.len(),
        excluded,
    })
}

/// Weighted slope and its standard error. With known weights the error is
/// inflated by the reduced chi-square when the fit is worse than the noise.
pub(crate) fn wls_slope(xs: &[f64], ys: &[f64], ws: &[f64], unit_weights: bool) -> (f64, f64) {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let chi2: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (y - my - slope * (x - mx)).powi(2))
        .sum();
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let red = chi2 / dof;
    let se = if unit_weights {
        (red / sxx).sqrt()
    } else {
        (red.max(1.0) / sxx).sqrt()
    };
    (slope, se)
}
