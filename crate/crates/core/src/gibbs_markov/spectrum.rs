use num_complex::Complex64;
use rand::Rng as _;

use super::roof::Roof;
use super::system::{GmKind, GmSystem};
use super::transfer::{build_transfer, TransferMatrix};
use crate::quad::{Chebyshev, GaussLegendre};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub resolution: usize,
    /// Window `|s| <= delta_spec` where the leading eigenvalue is tracked.
    pub delta_spec: f64,
    pub max_iter: usize,
    /// Residual target `|Mu - lambda u|_inf / |u|_inf`.
    pub tol: f64,
    /// Relative gap below which the leading eigenvalue is not considered simple.
    pub gap_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            resolution: 32,
            delta_spec: 0.2,
            max_iter: 10_000,
            tol: 1e-10,
            gap_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub s: Complex64,
    pub lambda: Complex64,
    /// Right eigenvector on the grid nodes, normalized to unit sup norm.
    pub eigvec: Vec<Complex64>,
    pub residual: f64,
    /// Modulus of the second eigenvalue (from the deflated iteration).
    pub second_modulus: f64,
    pub iterations: usize,
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Power iteration; returns (lambda, vector, residual, iterations).
fn power(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    n: usize,
    max_iter: usize,
    tol: f64,
) -> (Complex64, Vec<Complex64>, f64, usize) {
    // A slightly non-constant start avoids accidental orthogonality.
    let mut u: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 1e-3 * i as f64 / n as f64, 0.0))
        .collect();
    let mut lambda = Complex64::new(0.0, 0.0);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let w = apply(&u);
        lambda = dot(&u, &w) / dot(&u, &u);
        residual = w
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - lambda * b).norm())
            .fold(0.0, f64::max)
            / sup(&u);
        let norm = sup(&w);
        if norm == 0.0 {
            return (Complex64::new(0.0, 0.0), u, 0.0, it);
        }
        u = w.into_iter().map(|x| x / norm).collect();
        if residual < tol {
            return (lambda, u, residual, it);
        }
    }
    (lambda, u, residual, max_iter)
}

/// Leading eigenvalue of an assembled matrix, with the gap measured by deflation.
pub fn leading_of(m: &TransferMatrix, opts: &SpectralOptions) -> Result<SpectralSample> {
    let n = m.dim();
    let (lambda, r, residual, iterations) = power(|v| m.apply(v), n, opts.max_iter, opts.tol);
    let (_, l, _, _) = power(|v| m.apply_adjoint(v), n, opts.max_iter, opts.tol);
    let lr = dot(&l, &r);
    // Deflated iteration: growth rate of M - lambda r l^H / (l^H r).
    let deflate = |v: &[Complex64]| {
        let mut w = m.apply(v);
        let c = lambda * dot(&l, v) / lr;
        for (wi, ri) in w.iter_mut().zip(&r) {
            *wi -= c * ri;
        }
        w
    };
    let mut u: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(((i * 7919) % 97) as f64 / 97.0 - 0.5, 0.0))
        .collect();
    let steps = 400;
    let mut log_growth = 0.0;
    let mut counted = 0;
    for k in 0..steps {
        let w = deflate(&u);
        let nu = sup(&u);
        let nw = sup(&w);
        if nw == 0.0 || nu == 0.0 {
            log_growth = f64::NEG_INFINITY;
            counted = 1;
            break;
        }
        if k >= steps / 2 {
            log_growth += (nw / nu).ln();
            counted += 1;
        }
        u = w.into_iter().map(|x| x / nw).collect();
    }
    let second_modulus = (log_growth / counted as f64).exp();
    let l1 = lambda.norm();
    if second_modulus >= l1 * (1.0 - opts.gap_tol) {
        return Err(Error::NoGap {
            lambda1: l1,
            lambda2: second_modulus,
        });
    }
    Ok(SpectralSample {
        s: m.s,
        lambda,
        eigvec: r,
        residual,
        second_modulus,
        iterations,
    })
}

pub fn leading_eigenvalue(
    gm: &GmSystem,
    roof: &Roof,
    s: Complex64,
    opts: &SpectralOptions,
) -> Result<SpectralSample> {
    if s.norm() > opts.delta_spec {
        return Err(Error::BadParams(format!(
            "|s| = {} outside the spectral window {}",
            s.norm(),
            opts.delta_spec
        )));
    }
    let m = build_transfer(gm, roof, s, opts.resolution)?;
    leading_of(&m, opts)
}

/// `lambda'(0)` by central differences along the imaginary axis at `±h i`.
pub fn lambda_prime_at_zero(
    gm: &GmSystem,
    roof: &Roof,
    h: f64,
    opts: &SpectralOptions,
) -> Result<f64> {
    let plus = leading_eigenvalue(gm, roof, Complex64::new(0.0, h), opts)?.lambda;
    let minus = leading_eigenvalue(gm, roof, Complex64::new(0.0, -h), opts)?.lambda;
    let d = (plus - minus) / Complex64::new(0.0, 2.0 * h);
    Ok(d.re)
}

/// Invariant density of the base map, from the fixed point of the s = 0 operator.
#[derive(Debug, Clone)]
pub struct Density {
    pub grid: Chebyshev,
    pub values: Vec<f64>,
    /// Upper bound used for rejection sampling.
    pub bound: f64,
    uniform: bool,
}

pub fn invariant_density(gm: &GmSystem, resolution: usize) -> Result<Density> {
    let (lo, hi) = gm.domain();
    if gm.kind() == GmKind::Doubling {
        let grid = Chebyshev::new(resolution.max(8), lo, hi);
        let values = vec![1.0; grid.len()];
        return Ok(Density {
            grid,
            values,
            bound: 1.0,
            uniform: true,
        });
    }
    let m = build_transfer(
        gm,
        &Roof::constant(1.0),
        Complex64::new(0.0, 0.0),
        resolution,
    )?;
    let sample = leading_of(
        &m,
        &SpectralOptions {
            resolution,
            ..Default::default()
        },
    )?;
    let mut values: Vec<f64> = sample.eigvec.iter().map(|c| c.re).collect();
    let total = m.grid.integrate(&values);
    values.iter_mut().for_each(|v| *v /= total);
    let grid = m.grid;
    let scan = (0..=2000)
        .map(|i| grid.eval(&values, lo + (hi - lo) * i as f64 / 2000.0))
        .fold(0.0, f64::max);
    Ok(Density {
        grid,
        values,
        bound: 1.05 * scan,
        uniform: false,
    })
}

impl Density {
    pub fn eval(&self, x: f64) -> f64 {
        if self.uniform {
            return 1.0 / (self.grid.hi - self.grid.lo);
        }
        self.grid.eval(&self.values, x).max(0.0)
    }

    /// One draw by rejection against the uniform law on the domain.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let (lo, hi) = (self.grid.lo, self.grid.hi);
        if self.uniform {
            return lo + (hi - lo) * rng.gen::<f64>();
        }
        let height = self.bound * (hi - lo);
        loop {
            let x = lo + (hi - lo) * rng.gen::<f64>();
            if rng.gen::<f64>() * height <= self.eval(x) * (hi - lo) {
                return x;
            }
        }
    }

    /// `mu(A)` for an interval.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        GaussLegendre::new(16).integrate(a, b, |x| self.eval(x))
    }
}

/// `∫ roof dmu` computed branch by branch as `∫_Y L(roof * rho)`, with a
/// 16-point Gauss rule on the base domain.
pub fn roof_mean(gm: &GmSystem, roof: &Roof, density: &Density) -> f64 {
    let (lo, hi) = gm.domain();
    let gl = GaussLegendre::new(16);
    let mut total = 0.0;
    for (z, w) in gl.mapped(lo, hi) {
        let mut acc = 0.0;
        match gm.kind() {
            GmKind::Doubling => gm.for_each_preimage(z, 2, |p| {
                acc += p.jacobian * roof.eval_preimage(p) * density.eval(p.y)
            }),
            GmKind::Gauss => {
                let j = 10_000;
                gm.for_each_preimage(z, j, |p| {
                    acc += p.jacobian * roof.eval_preimage(p) * density.eval(p.y)
                });
                acc += roof.eval_parts(0.0, j, 1, 0.0) * density.eval(0.0) / (j as f64 + 0.5 + z);
            }
            GmKind::LsvInduced { .. } => gm.walk_preimages(z, 2_000_000, |p| {
                acc += p.jacobian * roof.eval_preimage(p) * density.eval(p.y);
                p.y - 0.5 > 1e-11
            }),
        }
        total += w * acc;
    }
    total
}
