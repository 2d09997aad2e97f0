//! Quadrature and polynomial interpolation helpers.

use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1] with `n` nodes.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            weights[i] = w;
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Chebyshev-Lobatto interpolation on `[lo, hi]` with barycentric evaluation
/// and Clenshaw-Curtis integration weights.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
    pub cc_weights: Vec<f64>,
}

impl Chebyshev {
    /// `n` nodes (polynomial degree `n - 1`), `n >= 2`.
    pub fn new(n: usize, lo: f64, hi: f64) -> Self {
        assert!(n >= 2 && hi > lo);
        let m = n - 1;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        // Ascending order: x_i = mid - half cos(pi i / m).
        let nodes: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 {
                    lo
                } else if i == m {
                    hi
                } else {
                    mid - half * (PI * i as f64 / m as f64).cos()
                }
            })
            .collect();
        let bary: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                if i == 0 || i == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let cc_weights = clenshaw_curtis(m).into_iter().map(|w| w * half).collect();
        Chebyshev {
            lo,
            hi,
            nodes,
            bary,
            cc_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cardinal function values `l_k(x)` for all k, written into `out`.
    pub fn cardinals(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nodes.len());
        for (k, &xk) in self.nodes.iter().enumerate() {
            if x == xk {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[k] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for (k, (&xk, &wk)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let t = wk / (x - xk);
            out[k] = t;
            denom += t;
        }
        out.iter_mut().for_each(|o| *o /= denom);
    }

    /// Evaluate the interpolant with node values `values` at `x`.
    pub fn eval<T>(&self, values: &[T], x: f64) -> T
    where
        T: Copy
            + std::ops::Mul<f64, Output = T>
            + std::ops::Add<Output = T>
            + std::ops::Div<f64, Output = T>,
    {
        let mut num: Option<T> = None;
        let mut denom = 0.0;
        for (k, (&xk, &wk)) in self.nodes.iter().zip(&self.bary).enumerate() {
            if x == xk {
                return values[k];
            }
            let t = wk / (x - xk);
            denom += t;
            num = Some(match num {
                None => values[k] * t,
                Some(acc) => acc + values[k] * t,
            });
        }
        num.expect("nonempty grid") / denom
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.cc_weights)
            .map(|(v, w)| v * w)
            .sum()
    }
}

/// Clenshaw-Curtis weights on [-1, 1] for the m+1 Chebyshev-Lobatto points.
fn clenshaw_curtis(m: usize) -> Vec<f64> {
    let n = m + 1;
    let mut w = vec![0.0; n];
    if m == 0 {
        w[0] = 2.0;
        return w;
    }
    for (i, wi) in w.iter_mut().enumerate() {
        let theta = PI * i as f64 / m as f64;
        let mut s = 0.0;
        for j in 1..=m / 2 {
            let b = if 2 * j == m { 1.0 } else { 2.0 };
            s += b / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
        }
        let c = if i == 0 || i == m { 1.0 } else { 2.0 };
        *wi = c / m as f64 * (1.0 - s);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(6);
        // degree 11 is exact for 6 nodes
        let v = gl.integrate(0.0, 2.0, |x| x.powi(11));
        assert_relative_eq!(v, 2f64.powi(12) / 12.0, max_relative = 1e-13);
        let v = GaussLegendre::new(16).integrate(-1.0, 3.0, |x| x.exp());
        assert_relative_eq!(v, 3f64.exp() - (-1f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn chebyshev_interpolation_and_integration() {
        let ch = Chebyshev::new(33, 0.5, 1.0);
        let vals: Vec<f64> = ch.nodes.iter().map(|&x| (3.0 * x).sin()).collect();
        for &x in &[0.5, 0.61, 0.777, 0.999] {
            assert!((ch.eval(&vals, x) - (3.0 * x).sin()).abs() < 1e-13);
        }
        let exact = ((3.0f64 * 0.5).cos() - (3.0f64).cos()) / 3.0;
        assert!((ch.integrate(&vals) - exact).abs() < 1e-14);
        let mut card = vec![0.0; 33];
        ch.cardinals(0.73, &mut card);
        assert!((card.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
