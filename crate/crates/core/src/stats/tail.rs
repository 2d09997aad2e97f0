use rand::Rng as _;
use statrs::distribution::{DiscreteCDF, Poisson};

use super::correlation::wls_slope;
use crate::rng::stream;
use crate::suspension::solve_dense;
use crate::{Error, Result};

/// Smallest sample count accepted by [`tail_survival`].
pub const MIN_TAIL_SAMPLES: usize = 100_000;
const BOOTSTRAP: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub t: Vec<f64>,
    pub survival: Vec<f64>,
    pub se: Vec<f64>,
    pub n: u64,
    /// Fitted log-log slope, i.e. `-beta`.
    pub slope: f64,
    /// 95% bootstrap interval of the slope.
    pub ci: (f64, f64),
    pub window: (f64, f64),
    /// Quadratic coefficient of `log S` in `log t` over the window.
    pub curvature: f64,
    pub curvature_se: f64,
    /// False when the log-log curvature is significant.
    pub power_law: bool,
}

/// Survival counts `#{x > t}` on a threshold grid, built incrementally.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCounts {
    pub t: Vec<f64>,
    pub above: Vec<u64>,
    pub n: u64,
}

impl SurvivalCounts {
    pub fn new(t: &[f64]) -> Result<Self> {
        super::correlation::check_grid(t)?;
        Ok(SurvivalCounts {
            t: t.to_vec(),
            above: vec![0; t.len()],
            n: 0,
        })
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        // Thresholds strictly below x.
        let k = self.t.partition_point(|&t| t < x);
        if k > 0 {
            self.above[k - 1] += 1;
        }
    }

    /// Cumulative survival counts from the per-bin tallies.
    fn cumulative(bins: &[u64]) -> Vec<u64> {
        let mut out = vec![0; bins.len()];
        let mut acc = 0;
        for i in (0..bins.len()).rev() {
            acc += bins[i];
            out[i] = acc;
        }
        out
    }

    pub fn merge(&mut self, other: &SurvivalCounts) {
        self.n += other.n;
        for (a, b) in self.above.iter_mut().zip(&other.above) {
            *a += b;
        }
    }
}

pub fn tail_survival(samples: &[f64], t_grid: &[f64], window: (f64, f64)) -> Result<TailEstimate> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::BudgetTooSmall {
            budget: samples.len(),
            min: MIN_TAIL_SAMPLES,
        });
    }
    let mut c = SurvivalCounts::new(t_grid)?;
    for &x in samples {
        c.push(x);
    }
    tail_fit(&c, window, 0)
}

fn fit_counts(t: &[f64], cum: &[u64], n: u64, idx: &[usize]) -> Option<f64> {
    let pts: Vec<usize> = idx.iter().cloned().filter(|&i| cum[i] > 0).collect();
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|&i| t[i].ln()).collect();
    let ys: Vec<f64> = pts
        .iter()
        .map(|&i| (cum[i] as f64 / n as f64).ln())
        .collect();
    // Var(log S) ~ (1 - S) / (n S).
    let ws: Vec<f64> = pts
        .iter()
        .map(|&i| {
            let s = cum[i] as f64 / n as f64;
            n as f64 * s / (1.0 - s).max(1e-12)
        })
        .collect();
    Some(wls_slope(&xs, &ys, &ws, false).0)
}

/// Log-log fit of binned survival counts over `window`, with a Poisson
/// bootstrap interval (`seed` drives the resampling).
pub fn tail_fit(c: &SurvivalCounts, window: (f64, f64), seed: u64) -> Result<TailEstimate> {
    let cum = SurvivalCounts::cumulative(&c.above);
    let n = c.n;
    let idx: Vec<usize> = (0..c.t.len())
        .filter(|&i| c.t[i] >= window.0 && c.t[i] <= window.1 && c.t[i] > 0.0)
        .collect();
    let slope = fit_counts(&c.t, &cum, n, &idx).ok_or(Error::EmptyWindow)?;
    let survival: Vec<f64> = cum.iter().map(|&k| k as f64 / n as f64).collect();
    let se: Vec<f64> = survival
        .iter()
        .map(|&s| (s * (1.0 - s) / n as f64).sqrt())
        .collect();

    let mut rng = stream(seed, 3000);
    let mut boot: Vec<f64> = (0..BOOTSTRAP)
        .filter_map(|_| {
            let mut redraw = |k: u64| {
                if k == 0 {
                    return 0;
                }
                let u: f64 = rng.gen();
                Poisson::new(k as f64).map_or(k, |p| p.inverse_cdf(u))
            };
            let bins: Vec<u64> = c.above.iter().map(|&k| redraw(k)).collect();
            let below = redraw(n - c.above.iter().sum::<u64>());
            let nb = below + bins.iter().sum::<u64>();
            fit_counts(&c.t, &SurvivalCounts::cumulative(&bins), nb, &idx)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let q = |p: f64| boot[((boot.len() - 1) as f64 * p).round() as usize];
    let ci = if boot.is_empty() {
        (slope, slope)
    } else {
        (q(0.025), q(0.975))
    };

    let (curvature, curvature_se) = quadratic_term(&c.t, &cum, n, &idx);
    let power_law = curvature.abs() <= (3.0 * curvature_se).max(0.05);
    let used: Vec<f64> = idx.iter().map(|&i| c.t[i]).collect();
    Ok(TailEstimate {
        t: c.t.clone(),
        survival,
        se,
        n,
        slope,
        ci,
        window: (used[0], *used.last().unwrap()),
        curvature,
        curvature_se,
        power_law,
    })
}

/// Weighted quadratic fit of `log S` in centered `log t`; returns the
/// quadratic coefficient and its standard error.
fn quadratic_term(t: &[f64], cum: &[u64], n: u64, idx: &[usize]) -> (f64, f64) {
    let pts: Vec<usize> = idx.iter().cloned().filter(|&i| cum[i] > 0).collect();
    if pts.len() < 4 {
        return (0.0, f64::INFINITY);
    }
    let xs: Vec<f64> = pts.iter().map(|&i| t[i].ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut atb = vec![0.0; 3];
    let mut rows = Vec::new();
    for (k, &i) in pts.iter().enumerate() {
        let s = cum[i] as f64 / n as f64;
        let w = n as f64 * s / (1.0 - s).max(1e-12);
        let x = xs[k] - xm;
        let row = [1.0, x, x * x];
        let y = s.ln();
        for a in 0..3 {
            for b in 0..3 {
                ata[a][b] += w * row[a] * row[b];
            }
            atb[a] += w * row[a] * y;
        }
        rows.push((row, y, w));
    }
    let Some(beta) = solve_dense(ata.clone(), atb) else {
        return (0.0, f64::INFINITY);
    };
    let chi2: f64 = rows
        .iter()
        .map(|(r, y, w)| w * (y - (beta[0] + beta[1] * r[1] + beta[2] * r[2])).powi(2))
        .sum();
    let red = (chi2 / (rows.len() as f64 - 3.0).max(1.0)).max(1.0);
    // Variance of the quadratic coefficient: (A^T W A)^{-1}[2][2].
    let var = solve_dense(ata, vec![0.0, 0.0, 1.0]).map_or(f64::INFINITY, |col| col[2]);
    (beta[2], (var * red).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..=40).map(|k| 10f64.powf(k as f64 / 20.0)).collect()
    }

    #[test]
    fn pareto_slope() {
        let mut rng = stream(5, 0);
        let xs: Vec<f64> = (0..400_000).map(|_| rng.gen::<f64>().powf(-0.5)).collect();
        let est = tail_survival(&xs, &grid(), (1.5, 30.0)).unwrap();
        assert!((est.slope + 2.0).abs() < 0.05, "{est:?}");
        assert!(est.ci.0 < -2.0 + 0.05 && est.ci.1 > -2.0 - 0.05);
        assert!(est.power_law);
        assert!(est.survival.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn exponential_is_curved() {
        let mut rng = stream(6, 0);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let est = tail_survival(&xs, &grid(), (1.0, 8.0)).unwrap();
        assert!(!est.power_law, "{est:?}");
    }

    #[test]
    fn window_without_grid_points() {
        let xs = vec![1.0; MIN_TAIL_SAMPLES];
        assert_eq!(
            tail_survival(&xs, &grid(), (1000.0, 2000.0)).unwrap_err(),
            Error::EmptyWindow
        );
    }
}
