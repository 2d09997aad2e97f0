use num_integer::Integer;

use super::table::{BilliardTable, Variant};
use crate::{Error, Result};

/// An empty strip of the torus cover in a rational direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corridor {
    /// Coprime direction `(p, q)`, normalized so that `p > 0` or `(p, q) = (0, 1)`.
    pub direction: (i64, i64),
    /// Width of the widest scatterer-free strip; zero when blocked.
    pub width: f64,
    /// Blocked only by tangency: the scatterer shadows touch without overlapping.
    pub touching: bool,
}

const TOUCH_TOL: f64 = 1e-12;

/// Widest empty strip for every coprime direction with `|p|, |q| <= max_dir`.
///
/// Lattice points project onto the strip normal at multiples of `1/|(p,q)|`, so
/// each scatterer shadows one interval of that circle; the width is the largest gap.
pub fn detect_corridors(table: &BilliardTable, max_dir: u32) -> Result<Vec<Corridor>> {
    if table.variant() != Variant::LorentzTorus {
        return Err(Error::UnsupportedVariant(table.variant().name()));
    }
    if max_dir == 0 {
        return Err(Error::BadParams("max_dir must be >= 1".into()));
    }
    let m = max_dir as i64;
    let mut out = Vec::new();
    for p in 0..=m {
        for q in -m..=m {
            if (p == 0 && q != 1) || p.gcd(&q) != 1 {
                continue;
            }
            let gap = largest_gap(table, p, q);
            out.push(Corridor {
                direction: (p, q),
                width: gap.max(0.0),
                touching: gap.abs() <= TOUCH_TOL,
            });
        }
    }
    Ok(out)
}

pub fn has_infinite_horizon(corridors: &[Corridor]) -> bool {
    corridors.iter().any(|c| c.width > TOUCH_TOL)
}

/// Signed largest gap between scatterer shadows; negative when the shadows overlap everywhere.
fn largest_gap(table: &BilliardTable, p: i64, q: i64) -> f64 {
    let len = ((p * p + q * q) as f64).sqrt();
    let period = 1.0 / len;
    let (nx, ny) = (-q as f64 / len, p as f64 / len);
    let mut iv: Vec<(f64, f64)> = table
        .disks()
        .iter()
        .map(|d| {
            let s = (d.center.x * nx + d.center.y * ny - d.radius).rem_euclid(period);
            (s, s + 2.0 * d.radius)
        })
        .collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let origin = iv[0].0;
    let mut reach = iv[0].1;
    let mut best = f64::NEG_INFINITY;
    for &(s, e) in iv.iter().skip(1) {
        best = best.max(s - reach);
        reach = reach.max(e);
    }
    best.max(origin + period - reach)
}
