use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::gibbs_markov::{GmSystem, Roof};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub word: Vec<usize>,
    /// Fixed point of `h_{w0} o ... o h_{w(p-1)}`.
    pub y: f64,
    pub p: usize,
    /// Flow period `phi_p(y)`.
    pub period: f64,
}

fn compose_fixed_point(gm: &GmSystem, word: &[usize]) -> f64 {
    let (lo, hi) = gm.domain();
    let mut y = 0.5 * (lo + hi);
    for _ in 0..5000 {
        let mut z = y;
        for &j in word.iter().rev() {
            z = gm.preimage(j, z).y;
        }
        if z == y {
            return z;
        }
        y = z;
    }
    y
}

/// Periodic orbit of the base map with the given branch word.
pub fn periodic_orbit(gm: &GmSystem, roof: &Roof, word: &[usize]) -> Result<PeriodicOrbit> {
    if word.is_empty() {
        return Err(Error::BadParams("empty word".into()));
    }
    if let Some(n) = gm.branch_count() {
        if word.iter().any(|&j| j >= n) {
            return Err(Error::BadParams(format!("word symbol outside 0..{n}")));
        }
    }
    let p = word.len();
    // Orbit point i is the fixed point of the word rotated by i.
    let mut rotated = word.to_vec();
    let mut points = Vec::with_capacity(p);
    for _ in 0..p {
        points.push(compose_fixed_point(gm, &rotated));
        rotated.rotate_left(1);
    }
    let period = (0..p)
        .map(|i| roof.eval_preimage(&gm.preimage(word[i], points[(i + 1) % p])))
        .sum();
    Ok(PeriodicOrbit {
        word: word.to_vec(),
        y: points[0],
        p,
        period,
    })
}

pub fn periodic_orbits(
    gm: &GmSystem,
    roof: &Roof,
    words: &[Vec<usize>],
) -> Result<Vec<PeriodicOrbit>> {
    words.iter().map(|w| periodic_orbit(gm, roof, w)).collect()
}

/// Words `base^n tail` for each `n`.
pub fn word_family(base: &[usize], tail: &[usize], ns: &[usize]) -> Vec<Vec<usize>> {
    ns.iter()
        .map(|&n| {
            let mut w: Vec<usize> = base.iter().cycle().take(n * base.len()).cloned().collect();
            w.extend_from_slice(tail);
            w
        })
        .collect()
}

/// Partial quotients above this are flagged.
pub const LIOUVILLE_QUOTIENT: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuedFraction {
    pub ratio: f64,
    pub quotients: Vec<u64>,
    /// The expansion of the float ratio ended (the ratio is rational).
    pub terminated: bool,
    /// Index at which float precision ran out, if before `depth`.
    pub exhausted_at: Option<usize>,
    /// Indices of quotients above [`LIOUVILLE_QUOTIENT`].
    pub suspicious: Vec<usize>,
    /// Propagated absolute uncertainty of the ratio.
    pub uncertainty: f64,
}

/// Continued fraction of `(t1 - t3) / (t2 - t3)`, stopping when float
/// uncertainty makes the next quotient unreliable.
pub fn diophantine_ratio(t1: f64, t2: f64, t3: f64, depth: usize) -> Result<ContinuedFraction> {
    let den = t2 - t3;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::BadParams("T2 must differ from T3".into()));
    }
    let ratio = (t1 - t3) / den;
    let eps = f64::EPSILON;
    let uncertainty = 4.0 * eps * (t1.abs() + t2.abs() + t3.abs()) * (1.0 + ratio.abs())
        / den.abs()
        + eps * ratio.abs();
    let mut x = BigRational::from_float(ratio)
        .ok_or_else(|| Error::BadParams("non-finite ratio".into()))?;
    // Denominators of the last two convergents.
    let (mut q0, mut q1) = (BigInt::zero(), BigInt::one());
    let mut quotients = Vec::new();
    let mut terminated = false;
    let mut exhausted_at = None;
    while quotients.len() < depth {
        let a = x.floor().to_integer();
        let q2 = &a * &q0 + &q1;
        // Cylinder of this prefix has width about 1/(q (q + q_prev)).
        let width = 1.0
            / (q2.to_f64().unwrap_or(f64::INFINITY)
                * (&q2 + &q0).to_f64().unwrap_or(f64::INFINITY));
        let frac = &x - BigRational::from_integer(a.clone());
        if !frac.is_zero() && width < 4.0 * uncertainty {
            exhausted_at = Some(quotients.len());
            break;
        }
        quotients.push(if a.is_negative() {
            0
        } else {
            a.to_u64().unwrap_or(u64::MAX)
        });
        q1 = std::mem::replace(&mut q0, q2);
        if frac.is_zero() {
            terminated = true;
            break;
        }
        x = frac.recip();
    }
    if quotients.len() < 3 && !terminated && quotients.len() < depth {
        return Err(Error::PrecisionExhausted {
            quotients: quotients.len(),
        });
    }
    let suspicious = quotients
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &a)| a > LIOUVILLE_QUOTIENT)
        .map(|(i, _)| i)
        .collect();
    Ok(ContinuedFraction {
        ratio,
        quotients,
        terminated,
        exhausted_at,
        suspicious,
        uncertainty,
    })
}

/// Fit of `T_N - N T0 = kappa + gamma^N (alpha cos(N omega) + beta sin(N omega))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodFit {
    pub kappa: f64,
    pub gamma: f64,
    pub omega: f64,
    /// `hypot(alpha, beta)`: the fitted `E_N`.
    pub amplitude: f64,
    /// `omega_N` in `cos(N omega + omega_N)`.
    pub phase: f64,
    /// `(N, |T_N - N T0 - kappa| / gamma^N)`, a lower bound of `|E_N|`.
    pub envelope: Vec<(usize, f64)>,
    /// Fit residuals per `N`.
    pub residuals: Vec<(usize, f64)>,
    /// No oscillating correction detected.
    pub degenerate: bool,
}

fn model(p: &[f64; 5], n: f64) -> f64 {
    let [kappa, gamma, omega, alpha, beta] = *p;
    let g = gamma.powf(n);
    kappa + g * (alpha * (n * omega).cos() + beta * (n * omega).sin())
}

fn gradient(p: &[f64; 5], n: f64) -> [f64; 5] {
    let [_, gamma, omega, alpha, beta] = *p;
    let g = gamma.powf(n);
    let (s, c) = (n * omega).sin_cos();
    let osc = alpha * c + beta * s;
    [
        1.0,
        n * gamma.powf(n - 1.0) * osc,
        g * n * (-alpha * s + beta * c),
        g * c,
        g * s,
    ]
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn linear_amplitudes(ns: &[f64], rs: &[f64], gamma: f64, omega: f64) -> Option<[f64; 3]> {
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut atb = vec![0.0; 3];
    for (&n, &r) in ns.iter().zip(rs) {
        let g = gamma.powf(n);
        let row = [1.0, g * (n * omega).cos(), g * (n * omega).sin()];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * r;
        }
    }
    // A vanishing sine column (omega = 0) is handled by a tiny ridge.
    for (i, r) in ata.iter_mut().enumerate() {
        r[i] += 1e-30 + 1e-14 * r[i];
    }
    solve_dense(ata, atb).map(|x| [x[0], x[1], x[2]])
}

/// Prony-style initial guess for `(gamma, omega)` from first differences.
fn prony(d: &[f64]) -> Option<(f64, f64)> {
    if d.len() >= 4 {
        let mut ata = vec![vec![0.0; 2]; 2];
        let mut atb = vec![0.0; 2];
        for w in d.windows(3) {
            let row = [w[1], w[0]];
            for i in 0..2 {
                for j in 0..2 {
                    ata[i][j] += row[i] * row[j];
                }
                atb[i] += row[i] * w[2];
            }
        }
        if let Some(c) = solve_dense(ata, atb) {
            let (c1, c2) = (c[0], c[1]);
            if c2 < 0.0 {
                let gamma = (-c2).sqrt();
                let omega = (c1 / (2.0 * gamma)).clamp(-1.0, 1.0).acos();
                if gamma.is_finite() && gamma > 0.0 {
                    return Some((gamma, omega));
                }
            }
        }
    }
    // Order one: d_{N+1} = g d_N with g possibly negative.
    let num: f64 = d.windows(2).map(|w| w[0] * w[1]).sum();
    let den: f64 = d.iter().take(d.len() - 1).map(|x| x * x).sum();
    if den <= 0.0 {
        return None;
    }
    let g = num / den;
    Some((g.abs(), if g < 0.0 { std::f64::consts::PI } else { 0.0 }))
}

/// Nonlinear fit of the correction term in `T_N - N T0`.
pub fn good_asymptotics_fit(records: &[(usize, f64)], t0: f64) -> Result<GoodFit> {
    if records.len() < 6 {
        return Err(Error::FitDiverged(format!(
            "{} records, need at least 6",
            records.len()
        )));
    }
    let mut recs = records.to_vec();
    recs.sort_by_key(|r| r.0);
    let ns: Vec<f64> = recs.iter().map(|r| r.0 as f64).collect();
    let rs: Vec<f64> = recs.iter().map(|r| r.1 - r.0 as f64 * t0).collect();
    let scale = rs.iter().fold(1.0f64, |m, r| m.max(r.abs()));
    let d: Vec<f64> = rs.windows(2).map(|w| w[1] - w[0]).collect();
    let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if dmax <= 1e-12 * scale {
        let kappa = rs.iter().sum::<f64>() / rs.len() as f64;
        return Ok(GoodFit {
            kappa,
            gamma: 0.0,
            omega: 0.0,
            amplitude: 0.0,
            phase: 0.0,
            envelope: Vec::new(),
            residuals: recs
                .iter()
                .zip(&rs)
                .map(|(r, x)| (r.0, x - kappa))
                .collect(),
            degenerate: true,
        });
    }
    let (gamma, omega) = prony(&d).ok_or_else(|| Error::FitDiverged("no initial guess".into()))?;
    let lin = linear_amplitudes(&ns, &rs, gamma, omega)
        .ok_or_else(|| Error::FitDiverged("singular linear stage".into()))?;
    let mut p = [lin[0], gamma, omega, lin[1], lin[2]];
    let ssr = |p: &[f64; 5]| {
        ns.iter()
            .zip(&rs)
            .map(|(&n, &r)| (r - model(p, n)).powi(2))
            .sum::<f64>()
    };
    let mut cost = ssr(&p);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let mut jtj = vec![vec![0.0; 5]; 5];
        let mut jtr = vec![0.0; 5];
        for (&n, &r) in ns.iter().zip(&rs) {
            let g = gradient(&p, n);
            let e = r - model(&p, n);
            for i in 0..5 {
                for j in 0..5 {
                    jtj[i][j] += g[i] * g[j];
                }
                jtr[i] += g[i] * e;
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * (row[i] + 1e-300);
                row[i] += 1e-30;
            }
            if let Some(step) = solve_dense(a, jtr.clone()) {
                let mut trial = p;
                for i in 0..5 {
                    trial[i] += step[i];
                }
                let c = ssr(&trial);
                if c.is_finite() && c < cost {
                    let rel = (cost - c) / cost.max(1e-300);
                    p = trial;
                    cost = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = rel > 1e-15;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !p.iter().all(|x| x.is_finite()) || !(p[1] > 0.0 && p[1] < 1.0 + 1e-9) {
        return Err(Error::FitDiverged(format!("parameters {p:?}")));
    }
    let [kappa, gamma, omega, alpha, beta] = p;
    // Fold omega into [0, pi] (sign of beta absorbs the reflection).
    let (omega, beta) = {
        let w = omega.rem_euclid(std::f64::consts::TAU);
        if w > std::f64::consts::PI {
            (std::f64::consts::TAU - w, -beta)
        } else {
            (w, beta)
        }
    };
    let envelope = recs
        .iter()
        .zip(&rs)
        .map(|(r, x)| (r.0, (x - kappa).abs() / gamma.powf(r.0 as f64)))
        .collect();
    let residuals = ns
        .iter()
        .zip(&rs)
        .zip(&recs)
        .map(|((&n, &r), rec)| (rec.0, r - model(&[kappa, gamma, omega, alpha, beta], n)))
        .collect();
    Ok(GoodFit {
        kappa,
        gamma,
        omega,
        amplitude: alpha.hypot(beta),
        phase: (-beta).atan2(alpha),
        envelope,
        residuals,
        degenerate: false,
    })
}
