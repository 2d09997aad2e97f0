use crate::{Error, Result};

/// The built-in full-branch maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GmKind {
    /// `x -> 2x mod 1`, branches `[0,1/2)`, `[1/2,1)`.
    Doubling,
    /// `x -> 1/x mod 1`; branch `j` is `(1/(j+2), 1/(j+1)]` (digit `j+1`).
    Gauss,
    /// First return of the Liverani-Saussol-Vaienti map
    /// `x -> x(1+(2x)^alpha)` on `[0,1/2)`, `2x-1` on `[1/2,1]`, to `Y = [1/2,1]`.
    /// Branch `j` collects the points with return time `j+1`.
    LsvInduced { alpha: f64 },
}

/// A full-branch Gibbs-Markov map with its recorded constants.
#[derive(Debug, Clone)]
pub struct GmSystem {
    kind: GmKind,
    theta: f64,
    distortion: f64,
    /// LSV partition points `x_j` (left-branch preimages of 1/2), `x_0 = 1/2`.
    partition: Vec<f64>,
}

/// Preimage of a point under one inverse branch, with what the roof needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub branch: usize,
    pub y: f64,
    /// `|h_j'(z)|`.
    pub jacobian: f64,
    /// Return time to the inducing set (1 off LSV).
    pub tau: u64,
    /// Sum of the underlying orbit over the return time (`y` off LSV).
    pub orbit_sum: f64,
}

/// One forward step with its roof data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub branch: usize,
    pub image: f64,
    pub tau: u64,
    pub orbit_sum: f64,
}

const LSV_CACHE: usize = 4096;
/// Smallest excursion start tracked by the forward LSV map.
const LSV_FLOOR: f64 = 1e-14;

impl GmSystem {
    pub fn doubling() -> Self {
        GmSystem {
            kind: GmKind::Doubling,
            theta: 0.5,
            distortion: 0.0,
            partition: Vec::new(),
        }
    }

    pub fn gauss() -> Self {
        // Two-step contraction of the inverse branches is at most the golden ratio squared.
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        GmSystem {
            kind: GmKind::Gauss,
            theta: golden,
            distortion: 2.0,
            partition: Vec::new(),
        }
    }

    pub fn lsv_induced(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::BadParams(format!(
                "lsv_induced needs alpha in (0,1), got {alpha}"
            )));
        }
        let mut partition = Vec::with_capacity(LSV_CACHE);
        let mut x = 0.5;
        for _ in 0..LSV_CACHE {
            partition.push(x);
            x = lsv_left_inverse(alpha, x);
        }
        let mut gm = GmSystem {
            kind: GmKind::LsvInduced { alpha },
            theta: 0.5,
            distortion: 0.0,
            partition,
        };
        gm.distortion = gm.estimate_distortion();
        Ok(gm)
    }

    /// `name` is one of `doubling`, `gauss`, `lsv_induced`.
    pub fn builtin(name: &str, alpha: Option<f64>) -> Result<Self> {
        match name {
            "doubling" => Ok(Self::doubling()),
            "gauss" => Ok(Self::gauss()),
            "lsv_induced" => Self::lsv_induced(
                alpha.ok_or_else(|| Error::BadParams("lsv_induced needs alpha".into()))?,
            ),
            other => Err(Error::BadParams(format!("unknown system `{other}`"))),
        }
    }

    pub fn kind(&self) -> GmKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GmKind::Doubling => "doubling",
            GmKind::Gauss => "gauss",
            GmKind::LsvInduced { .. } => "lsv_induced",
        }
    }

    /// Symbolic metric parameter.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Recorded bound on `|d/dz log|h_j'(z)||`, uniform in `j`.
    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            GmKind::LsvInduced { .. } => (0.5, 1.0),
            _ => (0.0, 1.0),
        }
    }

    /// Number of branches, `None` when countable.
    pub fn branch_count(&self) -> Option<usize> {
        match self.kind {
            GmKind::Doubling => Some(2),
            _ => None,
        }
    }

    /// Point where countably many branches accumulate.
    pub fn accumulation(&self) -> Option<f64> {
        match self.kind {
            GmKind::Doubling => None,
            GmKind::Gauss => Some(0.0),
            GmKind::LsvInduced { .. } => Some(0.5),
        }
    }

    /// LSV partition point `x_j`, extending the cache when needed.
    fn lsv_point(&self, alpha: f64, j: usize) -> f64 {
        if j < self.partition.len() {
            return self.partition[j];
        }
        let mut x = *self.partition.last().unwrap();
        for _ in self.partition.len() - 1..j {
            x = lsv_left_inverse(alpha, x);
        }
        x
    }

    /// Closed-open interval of branch `j` (Gauss branches are open-closed).
    pub fn branch_interval(&self, j: usize) -> (f64, f64) {
        match self.kind {
            GmKind::Doubling => (0.5 * j as f64, 0.5 * (j + 1) as f64),
            GmKind::Gauss => (1.0 / (j + 2) as f64, 1.0 / (j + 1) as f64),
            GmKind::LsvInduced { alpha } => {
                let hi = if j == 0 {
                    1.0
                } else {
                    self.lsv_point(alpha, j - 1)
                };
                (0.5 * (1.0 + self.lsv_point(alpha, j)), 0.5 * (1.0 + hi))
            }
        }
    }

    /// Lebesgue mass of all branches with index `>= j`.
    pub fn tail_mass(&self, j: usize) -> f64 {
        match self.kind {
            GmKind::Doubling => {
                if j >= 2 {
                    0.0
                } else {
                    0.5 * (2 - j) as f64
                }
            }
            GmKind::Gauss => 1.0 / (j + 1) as f64,
            GmKind::LsvInduced { alpha } => {
                if j == 0 {
                    0.5
                } else {
                    0.5 * self.lsv_point(alpha, j - 1)
                }
            }
        }
    }

    /// Forward map with roof data.
    pub fn step(&self, y: f64) -> Step {
        match self.kind {
            GmKind::Doubling => {
                let j = usize::from(y >= 0.5);
                Step {
                    branch: j,
                    image: 2.0 * y - j as f64,
                    tau: 1,
                    orbit_sum: y,
                }
            }
            GmKind::Gauss => {
                if y <= 0.0 {
                    return Step {
                        branch: usize::MAX,
                        image: 0.0,
                        tau: 1,
                        orbit_sum: 0.0,
                    };
                }
                let inv = 1.0 / y;
                let d = inv.floor();
                let mut image = inv - d;
                let mut digit = d as usize;
                // 1/y lands on an integer: the point is a right endpoint.
                if image == 0.0 && digit > 1 {
                    digit -= 1;
                    image = 1.0;
                }
                Step {
                    branch: digit.max(1) - 1,
                    image,
                    tau: 1,
                    orbit_sum: y,
                }
            }
            GmKind::LsvInduced { alpha } => {
                let mut x = 2.0 * y - 1.0;
                if x < LSV_FLOOR {
                    x = LSV_FLOOR;
                }
                let mut tau = 1u64;
                let mut sum = y;
                while x < 0.5 {
                    sum += x;
                    x = lsv_left(alpha, x);
                    tau += 1;
                }
                Step {
                    branch: (tau - 1) as usize,
                    image: x,
                    tau,
                    orbit_sum: sum,
                }
            }
        }
    }

    pub fn map(&self, y: f64) -> f64 {
        self.step(y).image
    }

    pub fn branch_of(&self, y: f64) -> usize {
        self.step(y).branch
    }

    /// Inverse branch `j` at `z` with Jacobian and roof data.
    pub fn preimage(&self, j: usize, z: f64) -> Preimage {
        match self.kind {
            GmKind::Doubling => Preimage {
                branch: j,
                y: 0.5 * (z + j as f64),
                jacobian: 0.5,
                tau: 1,
                orbit_sum: 0.5 * (z + j as f64),
            },
            GmKind::Gauss => {
                let d = (j + 1) as f64 + z;
                Preimage {
                    branch: j,
                    y: 1.0 / d,
                    jacobian: 1.0 / (d * d),
                    tau: 1,
                    orbit_sum: 1.0 / d,
                }
            }
            GmKind::LsvInduced { alpha } => {
                let mut chain = LsvChain::new(alpha, z);
                for _ in 0..j {
                    chain.advance();
                }
                chain.preimage()
            }
        }
    }

    /// Visit the preimages of `z` for branches `0..n` in order (cheap for LSV).
    pub fn for_each_preimage(&self, z: f64, n: usize, mut f: impl FnMut(&Preimage)) {
        self.walk_preimages(z, n, |p| {
            f(p);
            true
        });
    }

    /// Like [`Self::for_each_preimage`], stopping early when `f` returns false.
    pub fn walk_preimages(&self, z: f64, n: usize, mut f: impl FnMut(&Preimage) -> bool) {
        match self.kind {
            GmKind::LsvInduced { alpha } => {
                let mut chain = LsvChain::new(alpha, z);
                for j in 0..n {
                    if j > 0 {
                        chain.advance();
                    }
                    if !f(&chain.preimage()) {
                        return;
                    }
                }
            }
            _ => {
                let n = self.branch_count().map_or(n, |b| b.min(n));
                for j in 0..n {
                    if !f(&self.preimage(j, z)) {
                        return;
                    }
                }
            }
        }
    }

    /// `log |F'(y)|`.
    pub fn log_expansion(&self, y: f64) -> f64 {
        match self.kind {
            GmKind::Doubling => std::f64::consts::LN_2,
            GmKind::Gauss => -2.0 * y.ln(),
            GmKind::LsvInduced { alpha } => {
                let mut x = (2.0 * y - 1.0).max(LSV_FLOOR);
                let mut s = std::f64::consts::LN_2;
                while x < 0.5 {
                    s += lsv_left_derivative(alpha, x).ln();
                    x = lsv_left(alpha, x);
                }
                s
            }
        }
    }

    /// Separation time: least `n` with `F^n y`, `F^n y'` in different branches.
    /// Returns `(n_cap, true)` when no separation happens before `n_cap`.
    pub fn separation_time(&self, y: f64, y2: f64, n_cap: usize) -> (usize, bool) {
        let (mut a, mut b) = (y, y2);
        for n in 0..n_cap {
            let sa = self.step(a);
            let sb = self.step(b);
            if sa.branch != sb.branch {
                return (n, false);
            }
            a = sa.image;
            b = sb.image;
        }
        (n_cap, true)
    }

    fn estimate_distortion(&self) -> f64 {
        // Finite differences of log|h_j'| over a grid; 50% safety margin.
        let (lo, hi) = self.domain();
        let m = 64;
        let mut worst: f64 = 0.0;
        for j in [0usize, 1, 2, 5, 10, 50, 200] {
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..=m {
                let z = lo + (hi - lo) * i as f64 / m as f64;
                let lj = self.preimage(j, z).jacobian.ln();
                if let Some((pz, pl)) = prev {
                    worst = worst.max(((lj - pl) / (z - pz)).abs());
                }
                prev = Some((z, lj));
            }
        }
        1.5 * worst
    }
}

fn lsv_left(alpha: f64, x: f64) -> f64 {
    x * (1.0 + (2.0 * x).powf(alpha))
}

fn lsv_left_derivative(alpha: f64, x: f64) -> f64 {
    1.0 + (1.0 + alpha) * (2.0 * x).powf(alpha)
}

/// Solve `x (1 + (2x)^alpha) = w` on `[0, w]`. Newton started at `w` decreases
/// monotonically to the root because the left branch is convex and increasing.
fn lsv_left_inverse(alpha: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let mut x = w;
    for _ in 0..100 {
        let dx = (lsv_left(alpha, x) - w) / lsv_left_derivative(alpha, x);
        if dx <= x * 1e-16 {
            break;
        }
        x -= dx;
    }
    x
}

/// Incremental walk down the left-branch preimage chain of a point of `Y`.
struct LsvChain {
    alpha: f64,
    j: usize,
    /// Current left-branch preimage `w_j` (with `w_0 = z`).
    w: f64,
    /// Product of `1/L'(w_i)` for `i = 1..=j`.
    jac: f64,
    /// `sum_{i=1}^{j} w_i`.
    sum: f64,
}

impl LsvChain {
    fn new(alpha: f64, z: f64) -> Self {
        LsvChain {
            alpha,
            j: 0,
            w: z,
            jac: 1.0,
            sum: 0.0,
        }
    }

    fn advance(&mut self) {
        self.w = lsv_left_inverse(self.alpha, self.w);
        self.jac /= lsv_left_derivative(self.alpha, self.w);
        self.sum += self.w;
        self.j += 1;
    }

    fn preimage(&self) -> Preimage {
        let y = 0.5 * (1.0 + self.w);
        Preimage {
            branch: self.j,
            y,
            jacobian: 0.5 * self.jac,
            tau: self.j as u64 + 1,
            orbit_sum: y + self.sum,
        }
    }
}
