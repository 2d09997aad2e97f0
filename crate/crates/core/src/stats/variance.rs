use rayon::prelude::*;

use super::backend::{integrate, FlowBackend};
use super::correlation::{batch_sizes, batch_stats, check_grid, CorrelationSeries, Obs};
use crate::quad::GaussLegendre;
use crate::rng::stream;
use crate::{Error, Result};

/// Smallest accepted trajectory ensemble.
pub const MIN_ENSEMBLE: usize = 1000;

/// Through-origin fit `Var(t) ~ c f(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelFit {
    pub c: f64,
    /// Weighted sum of squared residuals over the window.
    pub ssr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSeries {
    pub t: Vec<f64>,
    pub var: Vec<f64>,
    pub se: Vec<f64>,
    pub ensemble: usize,
    pub window: (f64, f64),
    /// `c t`.
    pub linear: ModelFit,
    /// `c t log t`.
    pub tlogt: ModelFit,
    /// Per-batch estimates, one row per batch.
    pub batches: Vec<Vec<f64>>,
    pub restarts: usize,
}

impl VarianceSeries {
    pub fn tlogt_wins(&self) -> bool {
        self.tlogt.ssr < self.linear.ssr
    }
}

/// Fit `c f(t)` to `(t, y)` with inverse-variance weights (unit weights when
/// every SE vanishes).
pub fn fit_through_origin(t: &[f64], y: &[f64], se: &[f64], f: impl Fn(f64) -> f64) -> ModelFit {
    let unit = se.iter().all(|&s| s == 0.0);
    let w: Vec<f64> = se
        .iter()
        .map(|&s| if unit { 1.0 } else { 1.0 / (s * s).max(1e-300) })
        .collect();
    let fx: Vec<f64> = t.iter().map(|&x| f(x)).collect();
    let num: f64 = (0..t.len()).map(|i| w[i] * fx[i] * y[i]).sum();
    let den: f64 = (0..t.len()).map(|i| w[i] * fx[i] * fx[i]).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let ssr = (0..t.len())
        .map(|i| w[i] * (y[i] - c * fx[i]).powi(2))
        .sum();
    ModelFit { c, ssr }
}

/// Ensemble estimate of `E[(int_0^t v o T_s ds)^2]` on `grid`, with the two
/// growth models fitted over `window`.
pub fn variance_growth<B: FlowBackend>(
    backend: &B,
    v: Obs<B::State>,
    grid: &[f64],
    ensemble: usize,
    window: (f64, f64),
    seed: u64,
) -> Result<VarianceSeries> {
    if ensemble < MIN_ENSEMBLE {
        return Err(Error::BudgetTooSmall {
            budget: ensemble,
            min: MIN_ENSEMBLE,
        });
    }
    check_grid(grid)?;
    let gl = GaussLegendre::new(8);
    let parts = batch_sizes(ensemble)
        .into_par_iter()
        .enumerate()
        .map(|(b, size)| -> Result<(Vec<f64>, usize)> {
            let mut rng = stream(seed, 4000 + b as u64);
            let mut acc = vec![0.0; grid.len()];
            let mut ints = vec![0.0; grid.len()];
            let mut restarts = 0;
            let mut done = 0;
            while done < size {
                let mut x = backend.sample(&mut rng)?;
                let (mut now, mut total) = (0.0, 0.0);
                let mut ok = true;
                for (j, &t) in grid.iter().enumerate() {
                    match integrate(backend, &x, t - now, v, &gl) {
                        Ok((next, i)) => {
                            x = next;
                            total += i;
                        }
                        Err(Error::Grazing { .. } | Error::CapExceeded { .. }) => {
                            ok = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                    now = t;
                    ints[j] = total;
                }
                if !ok {
                    restarts += 1;
                    continue;
                }
                for j in 0..grid.len() {
                    acc[j] += ints[j] * ints[j];
                }
                done += 1;
            }
            Ok((acc.into_iter().map(|s| s / size as f64).collect(), restarts))
        })
        .collect::<Result<Vec<_>>>()?;
    let sizes = batch_sizes(ensemble);
    let mut var = Vec::new();
    let mut se = Vec::new();
    for j in 0..grid.len() {
        let col: Vec<f64> = parts.iter().map(|p| p.0[j]).collect();
        let pooled = col
            .iter()
            .zip(&sizes)
            .map(|(x, &n)| x * n as f64)
            .sum::<f64>()
            / ensemble as f64;
        var.push(pooled);
        se.push(batch_stats(&col).1);
    }
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&i| grid[i] >= window.0 && grid[i] <= window.1 && grid[i] > 1.0)
        .collect();
    if idx.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let (tw, vw, sw) = (pick(grid), pick(&var), pick(&se));
    let linear = fit_through_origin(&tw, &vw, &sw, |t| t);
    let tlogt = fit_through_origin(&tw, &vw, &sw, |t| t * t.ln());
    Ok(VarianceSeries {
        t: grid.to_vec(),
        var,
        se,
        ensemble,
        window: (tw[0], *tw.last().unwrap()),
        linear,
        tlogt,
        batches: parts.iter().map(|p| p.0.clone()).collect(),
        restarts: parts.iter().map(|p| p.1).sum(),
    })
}

/// `2 int_0^t (t - r) rho(r) dr` by the trapezoid rule on the grid; a partial
/// last panel ends at `t`, where the integrand vanishes.
pub fn identity_prediction(grid: &[f64], rho: &[f64], t: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..grid.len() - 1 {
        let (a, b) = (grid[k], grid[k + 1]);
        if a >= t {
            break;
        }
        let fa = (t - a) * rho[k];
        let (fb, end) = if b > t {
            (0.0, t)
        } else {
            ((t - b) * rho[k + 1], b)
        };
        total += 0.5 * (fa + fb) * (end - a);
    }
    2.0 * total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityRow {
    pub t: f64,
    pub var: f64,
    pub var_se: f64,
    pub predicted: f64,
    pub predicted_se: f64,
    pub rel_err: f64,
}

/// Compare `Var(t)` with `2 int_0^t (t - r) rho(r) dr` at each variance time.
pub fn variance_correlation_identity(
    series: &CorrelationSeries,
    var: &VarianceSeries,
) -> Result<Vec<IdentityRow>> {
    if series.t.first() != Some(&0.0) {
        return Err(Error::GridMismatch(
            "correlation grid must start at 0".into(),
        ));
    }
    let last = *series.t.last().unwrap();
    if var.t.iter().any(|&t| t > last + 1e-12) {
        return Err(Error::GridMismatch(format!(
            "variance times exceed the correlation grid end {last}"
        )));
    }
    let rows = var
        .t
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let predicted = identity_prediction(&series.t, &series.rho, t);
            let per_batch: Vec<f64> = series
                .batches
                .iter()
                .map(|b| identity_prediction(&series.t, b, t))
                .collect();
            let predicted_se = if per_batch.len() > 1 {
                batch_stats(&per_batch).1
            } else {
                0.0
            };
            let rel_err = if predicted != 0.0 {
                (var.var[j] - predicted).abs() / predicted.abs()
            } else {
                var.var[j].abs()
            };
            IdentityRow {
                t,
                var: var.var[j],
                var_se: var.se[j],
                predicted,
                predicted_se,
                rel_err,
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_correlation_closed_form() {
        let grid: Vec<f64> = (0..=20_000).map(|k| k as f64 * 1e-3).collect();
        let rho: Vec<f64> = grid.iter().map(|r| (-r).exp()).collect();
        for t in [0.5f64, 3.0, 10.0, 19.9] {
            let exact = 2.0 * (t - 1.0 + (-t).exp());
            let got = identity_prediction(&grid, &rho, t);
            assert!((got - exact).abs() < 1e-6 * exact, "{t}: {got} vs {exact}");
        }
    }

    #[test]
    fn zero_correlation_gives_zero() {
        let grid: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(identity_prediction(&grid, &[0.0; 11], 7.5), 0.0);
    }

    #[test]
    fn linear_data_prefers_linear_model() {
        let t: Vec<f64> = (1..=20).map(|k| 10.0 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x).collect();
        let a = fit_through_origin(&t, &y, &[0.0; 20], |x| x);
        let b = fit_through_origin(&t, &y, &[0.0; 20], |x| x * x.ln());
        assert!((a.c - 3.0).abs() < 1e-12 && a.ssr < 1e-12 && b.ssr > 1.0);
    }
}
