use num_complex::Complex64;
use rayon::prelude::*;

use super::roof::Roof;
use super::system::{GmKind, GmSystem, Preimage};
use crate::quad::Chebyshev;
use crate::{Error, Result};

/// Discretization of `v -> sum_j |h_j'| e^{-s roof(h_j)} v(h_j)` on a
/// Chebyshev-Lobatto grid of the base domain (Lebesgue reference measure).
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub s: Complex64,
    pub grid: Chebyshev,
    /// Row-major `n x n`.
    pub data: Vec<Complex64>,
    /// Mass not represented (bound on the discarded branch weight).
    pub mass_defect: f64,
}

/// Truncation controls for countable partitions.
#[derive(Debug, Clone, Copy)]
pub struct TruncationOptions {
    /// Branches evaluated exactly on the grid.
    pub explicit_branches: usize,
    /// Maximum allowed mass defect.
    pub mass_bound: f64,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        TruncationOptions {
            explicit_branches: 200,
            mass_bound: 1e-8,
        }
    }
}

const GAUSS_EXPLICIT: usize = 10_000;
const LSV_TAIL_MAX: usize = 2_000_000;

/// `sum_{j >= 0} (j + z)^{-2}` for `z >= 1000` (asymptotic series of the trigamma function).
fn trigamma_large(z: f64) -> f64 {
    let z2 = z * z;
    1.0 / z + 1.0 / (2.0 * z2) + 1.0 / (6.0 * z2 * z) - 1.0 / (30.0 * z2 * z2 * z)
}

pub fn build_transfer(
    gm: &GmSystem,
    roof: &Roof,
    s: Complex64,
    resolution: usize,
) -> Result<TransferMatrix> {
    build_transfer_with(gm, roof, s, resolution, TruncationOptions::default())
}

pub fn build_transfer_with(
    gm: &GmSystem,
    roof: &Roof,
    s: Complex64,
    resolution: usize,
    opts: TruncationOptions,
) -> Result<TransferMatrix> {
    if resolution < 8 {
        return Err(Error::BadParams(format!(
            "resolution must be >= 8, got {resolution}"
        )));
    }
    if s.re < 0.0 {
        return Err(Error::BadParams("Re s must be >= 0".into()));
    }
    let (lo, hi) = gm.domain();
    let grid = Chebyshev::new(resolution, lo, hi);
    let n = resolution;
    let rows: Vec<(Vec<Complex64>, f64)> = grid
        .nodes
        .par_iter()
        .map(|&z| {
            let mut row = vec![Complex64::new(0.0, 0.0); n];
            let mut card = vec![0.0; n];
            let mut add = |p: &Preimage, weight: Complex64, row: &mut Vec<Complex64>| {
                grid.cardinals(p.y, &mut card);
                for (r, c) in row.iter_mut().zip(&card) {
                    *r += weight * c;
                }
            };
            let twist = |p: &Preimage| p.jacobian * (-s * roof.eval_preimage(p)).exp();
            let defect = match gm.kind() {
                GmKind::Doubling => {
                    gm.for_each_preimage(z, 2, |p| add(p, twist(p), &mut row));
                    0.0
                }
                GmKind::Gauss => {
                    let j_exp = GAUSS_EXPLICIT;
                    gm.for_each_preimage(z, j_exp, |p| add(p, twist(p), &mut row));
                    // Remaining branches sit within 1/(J+1) of 0. Lump them at
                    // their Jacobian-weighted mean position, which is exact to first order.
                    let zz = j_exp as f64 + 1.0 + z;
                    let w = trigamma_large(zz);
                    let first = 0.5 / (zz * zz) + 0.5 / (zz * zz * zz) + 0.25 / (zz * zz * zz * zz);
                    let y = first / w;
                    let lump = Preimage {
                        branch: j_exp,
                        y,
                        jacobian: w,
                        tau: 1,
                        orbit_sum: y,
                    };
                    add(&lump, twist(&lump), &mut row);
                    1.0 / (j_exp as f64).powi(3)
                }
                GmKind::LsvInduced { .. } => {
                    let j_exp = opts.explicit_branches;
                    let mut tail = Complex64::new(0.0, 0.0);
                    let (mut mass, mut moment) = (0.0, 0.0);
                    let mut remaining = f64::INFINITY;
                    gm.walk_preimages(z, LSV_TAIL_MAX, |p| {
                        if p.branch < j_exp {
                            add(p, twist(p), &mut row);
                            return true;
                        }
                        // Branches past this one lie in [1/2, p.y); their mass is about p.y - 1/2.
                        tail += twist(p);
                        mass += p.jacobian;
                        moment += p.jacobian * p.y;
                        remaining = p.y - 0.5;
                        remaining >= 0.1 * opts.mass_bound
                    });
                    // Tail branches accumulate at 1/2; lump them at their weighted mean.
                    let y = if mass > 0.0 { moment / mass } else { 0.5 };
                    let lump = Preimage {
                        branch: usize::MAX,
                        y,
                        jacobian: 0.0,
                        tau: 0,
                        orbit_sum: 0.0,
                    };
                    add(&lump, tail, &mut row);
                    remaining
                }
            };
            (row, defect)
        })
        .collect();
    let mass_defect = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if mass_defect > opts.mass_bound {
        return Err(Error::TruncationTooCoarse {
            mass: mass_defect,
            bound: opts.mass_bound,
        });
    }
    let data = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(TransferMatrix {
        s,
        grid,
        data,
        mass_defect,
    })
}

impl TransferMatrix {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for k in 0..n {
                out[k] += self.data[i * n + k].conj() * v[i];
            }
        }
        out
    }

    /// Apply to a real function given by its node values.
    pub fn apply_real(&self, v: &[f64]) -> Vec<Complex64> {
        let c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.apply(&c)
    }
}
