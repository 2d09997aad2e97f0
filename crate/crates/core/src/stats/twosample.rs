use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl TwoSampleTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Bin index of `x` in `n` equal cells over `[lo, hi]` (ends clamped).
pub fn grid_bin(x: f64, lo: f64, hi: f64, n: usize) -> usize {
    (((x - lo) / (hi - lo) * n as f64).floor().max(0.0) as usize).min(n - 1)
}

/// Chi-square test that two samples of bin labels in `0..bins` share one law.
pub fn chi2_two_sample(a: &[usize], b: &[usize], bins: usize) -> Result<TwoSampleTest> {
    if a.is_empty() || b.is_empty() || bins < 2 {
        return Err(Error::BadParams(
            "two-sample test needs nonempty samples and at least 2 bins".into(),
        ));
    }
    let mut ca = vec![0u64; bins];
    let mut cb = vec![0u64; bins];
    for &i in a {
        ca[i.min(bins - 1)] += 1;
    }
    for &i in b {
        cb[i.min(bins - 1)] += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut used = 0;
    for (&x, &y) in ca.iter().zip(&cb) {
        if x + y == 0 {
            continue;
        }
        used += 1;
        stat += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
    }
    let dof = used.max(2) - 1;
    let p_value = ChiSquared::new(dof as f64).map_or(0.0, |d| d.sf(stat));
    Ok(TwoSampleTest {
        statistic: stat,
        dof,
        p_value,
    })
}
