use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Box-counting estimate of the dimension of a finite value set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDimension {
    pub slope: f64,
    /// 95% confidence interval of the slope.
    pub ci: (f64, f64),
    /// `(eps, boxes)` with `eps` relative to the value range.
    pub counts: Vec<(f64, usize)>,
}

/// Fit `log N(eps)` against `log(1/eps)`, with `eps` taken relative to the
/// range of `values` so the estimate is unchanged by affine rescaling.
pub fn tdf_range_dimension(values: &[f64], scales: &[f64]) -> Result<BoxDimension> {
    if scales.len() < 3 || scales.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::BadParams(
            "need at least 3 relative scales in (0, 1]".into(),
        ));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if values.is_empty() || !(range > 1e-12 * hi.abs().max(lo.abs())) {
        return Err(Error::DegenerateRange);
    }
    let counts: Vec<(f64, usize)> = scales
        .iter()
        .map(|&eps| {
            // The top of the range belongs to the last box.
            let last = (1.0 / eps).ceil() as i64 - 1;
            let mut boxes: Vec<i64> = values
                .iter()
                .map(|v| ((((v - lo) / range) / eps).floor() as i64).min(last))
                .collect();
            boxes.sort_unstable();
            boxes.dedup();
            (eps, boxes.len())
        })
        .collect();
    let xs: Vec<f64> = counts.iter().map(|c| -c.0.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.1 as f64).ln()).collect();
    let (slope, se) = ols_slope(&xs, &ys);
    let dof = (xs.len() - 2).max(1) as f64;
    let t = StudentsT::new(0.0, 1.0, dof).map_or(1.96, |d| d.inverse_cdf(0.975));
    Ok(BoxDimension {
        slope,
        ci: (slope - t * se, slope + t * se),
        counts,
    })
}

/// OLS slope and its standard error.
fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let se = if xs.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se)
}
