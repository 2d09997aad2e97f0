use serde::{Deserialize, Serialize};

use super::system::{GmSystem, Preimage};
use crate::{Error, Result};

/// Roof function over a Gibbs-Markov base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Roof {
    /// Polynomial in `y` with coefficients in increasing degree.
    Poly { coeffs: Vec<f64> },
    /// Induced roof `sum_{l < tau} (c0 + c1 x_l)` over the underlying orbit; on
    /// non-induced systems this is `c0 + c1 y`.
    InducedAffine { c0: f64, c1: f64 },
    /// Roof replaced by `level` on the branches where its infimum reaches `level`.
    Truncated {
        inner: Box<Roof>,
        level: f64,
        from_branch: usize,
    },
}

impl Roof {
    pub fn constant(c: f64) -> Self {
        Roof::Poly { coeffs: vec![c] }
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        Roof::Poly {
            coeffs: coeffs.to_vec(),
        }
    }

    /// Value at a point given its branch, return time and orbit sum.
    pub fn eval_parts(&self, y: f64, branch: usize, tau: u64, orbit_sum: f64) -> f64 {
        match self {
            Roof::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c),
            Roof::InducedAffine { c0, c1 } => c0 * tau as f64 + c1 * orbit_sum,
            Roof::Truncated {
                inner,
                level,
                from_branch,
            } => {
                if branch >= *from_branch {
                    *level
                } else {
                    inner.eval_parts(y, branch, tau, orbit_sum)
                }
            }
        }
    }

    pub fn eval(&self, gm: &GmSystem, y: f64) -> f64 {
        match self {
            Roof::Poly { .. } => self.eval_parts(y, 0, 1, y),
            _ => {
                let s = gm.step(y);
                self.eval_parts(y, s.branch, s.tau, s.orbit_sum)
            }
        }
    }

    pub fn eval_preimage(&self, p: &Preimage) -> f64 {
        self.eval_parts(p.y, p.branch, p.tau, p.orbit_sum)
    }

    /// Infimum over branch `j`.
    pub fn branch_inf(&self, gm: &GmSystem, j: usize) -> f64 {
        self.branch_range(gm, j).0
    }

    /// `(inf, sup)` over branch `j`, from the branch endpoints for monotone
    /// roofs and a 33-point scan otherwise.
    pub fn branch_range(&self, gm: &GmSystem, j: usize) -> (f64, f64) {
        let (lo, hi) = gm.domain();
        let pts = 33;
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        let monotone = matches!(self, Roof::InducedAffine { .. });
        for i in 0..pts {
            if monotone && i != 0 && i != pts - 1 {
                continue;
            }
            let z = lo + (hi - lo) * i as f64 / (pts - 1) as f64;
            let v = self.eval_preimage(&gm.preimage(j, z));
            inf = inf.min(v);
            sup = sup.max(v);
        }
        (inf, sup)
    }

    /// Global infimum over the first `n` branches (all of them when finite).
    pub fn inf(&self, gm: &GmSystem) -> f64 {
        let n = gm.branch_count().unwrap_or(64);
        let mut inf = (0..n)
            .map(|j| self.branch_inf(gm, j))
            .fold(f64::INFINITY, f64::min);
        if let (Some(acc), Roof::Poly { .. }) = (gm.accumulation(), self) {
            inf = inf.min(self.eval_parts(acc, 0, 1, acc));
        }
        inf
    }

    /// Ratio constant `C1 = max(1, max_j sup_j / inf_j)` over the first `n` branches.
    pub fn ratio_constant(&self, gm: &GmSystem, n: usize) -> f64 {
        let n = gm.branch_count().map_or(n, |b| b.min(n));
        (0..n)
            .map(|j| {
                let (lo, hi) = self.branch_range(gm, j);
                hi / lo
            })
            .fold(1.0, f64::max)
    }

    /// Truncation at `level`: the roof becomes `level` on every branch whose
    /// infimum is at least `level`. Requires branch infima nondecreasing in the
    /// branch index, which holds for the induced roofs.
    pub fn truncate(&self, gm: &GmSystem, level: f64) -> Result<Roof> {
        if !(level > 0.0) {
            return Err(Error::BadParams("truncation level must be positive".into()));
        }
        let reaches = |j: usize| self.branch_inf(gm, j) >= level;
        let from_branch = match gm.branch_count() {
            Some(n) => (0..n).find(|&j| reaches(j)).unwrap_or(n),
            None if matches!(self, Roof::InducedAffine { .. }) => {
                // Exponential search, then bisection on the monotone infima.
                let (mut a, mut b) = (0usize, 1usize);
                if reaches(0) {
                    return Ok(Roof::Truncated {
                        inner: Box::new(self.clone()),
                        level,
                        from_branch: 0,
                    });
                }
                while !reaches(b) {
                    a = b;
                    b *= 2;
                }
                while b - a > 1 {
                    let m = (a + b) / 2;
                    if reaches(m) {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                b
            }
            // Bounded roofs on countable systems: scan a generous prefix.
            None => (0..4096).find(|&j| reaches(j)).unwrap_or(usize::MAX),
        };
        Ok(Roof::Truncated {
            inner: Box::new(self.clone()),
            level,
            from_branch,
        })
    }
}
