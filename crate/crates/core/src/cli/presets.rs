//! Built-in experiments, one per acceptance criterion of the laboratory.

use super::config::Experiment;

pub struct Preset {
    pub name: &'static str,
    pub experiment: Experiment,
    /// What the run checks.
    pub probes: &'static str,
    pub config: &'static str,
}

pub const PRESETS: [Preset; 10] = [
    Preset {
        name: "lorentz-flight-tail",
        experiment: Experiment::Tail,
        probes: "free-flight survival decays like t^-2 on an infinite-horizon table",
        config: r#"
seed = 1

[table]
variant = "lorentz-torus"
radius = 0.3
scatterers = [{ center = [0.5, 0.5] }]

[tail]
source = "flight"
samples = 10000000
grid = { start = 0.5, stop = 500.0, points = 61, log = true }
window = [5.0, 100.0]
"#,
    },
    Preset {
        name: "beta2-decay",
        experiment: Experiment::Correlate,
        probes: "correlations decay like t^-(beta-1) = t^-1 for a roof with tail exponent beta = 2",
        config: r#"
seed = 2

[system]
name = "lsv_induced"
alpha = 0.5

[roof]
kind = "induced_affine"
c0 = 1.0
c1 = 0.5

[correlate]
mode = "birkhoff"
v = { kind = "tent", cap = 1.0 }
grid = { start = 1.0, stop = 400.0, points = 48, log = true }
dt = 0.5
orbits = 32
origins = 312500
burn_in = 2000.0
fit_window = [10.0, 200.0]
"#,
    },
    Preset {
        name: "spectral-identities",
        experiment: Experiment::Spectrum,
        probes: "leading eigenvalue of the twisted transfer operator: lambda(0) = 1 and lambda'(0) = -mean roof",
        config: r#"
seed = 3

[system]
name = "doubling"

[roof]
kind = "poly"
coeffs = [1.0, 0.5]

[spectrum]
resolution = 64
b = { start = -0.2, stop = 0.2, points = 50 }
"#,
    },
    Preset {
        name: "coboundary-reduction",
        experiment: Experiment::Chi,
        probes: "chi vanishes for fiber-constant roofs; g- o g+ is the time-2|chi| flow; the new roof is fiber-constant",
        config: r#"
seed = 4

[model]
gamma = 0.5
roof = { c = 4.0, a = 0.5, b = 0.25 }

[chi]
samples = 10000
sup_samples = 100000
round_trips = 10000
"#,
    },
    Preset {
        name: "variance-tlogt",
        experiment: Experiment::Variance,
        probes: "displacement variance grows like t log t with infinite horizon (switch the table to a blocked one to see c t win)",
        config: r#"
seed = 5

[table]
variant = "lorentz-torus"
radius = 0.3
scatterers = [{ center = [0.5, 0.5] }]

[variance]
v = { kind = "vel_x" }
grid = { start = 10.0, stop = 1000.0, points = 25, log = true }
ensemble = 4000
window = [10.0, 1000.0]
"#,
    },
    Preset {
        name: "nonmixing-resonance",
        experiment: Experiment::Defect,
        probes: "a constant roof has exact approximate eigenfunctions (defect 0, u = 1) at b = 2 pi k",
        config: r#"
seed = 6

[system]
name = "doubling"

[roof]
kind = "poly"
coeffs = [1.0]

[defect]
words = [0, 1]
b = [6.283185307179586, 12.566370614359172, 25.132741228718345]
xi = 1.0
"#,
    },
    Preset {
        name: "laplace-crosscheck",
        experiment: Experiment::Laplace,
        probes: "the series of Laplace-domain terms equals the transform of the time-domain correlation",
        config: r#"
seed = 7

[system]
name = "doubling"

[roof]
kind = "poly"
coeffs = [1.0, 0.5]

[laplace]
v = { kind = "bump" }
s = [[0.5, 0.0], [1.0, 0.0], [2.0, 0.0]]
n_max = 40
budget = 200000
cross_check = { step = 0.05, horizon = 40.0, budget = 200000 }
"#,
    },
    Preset {
        name: "variance-correlation-identity",
        experiment: Experiment::Variance,
        probes: "Var(int_0^t v) = 2 int_0^t (t - r) rho(r) dr on a simulated suspension",
        config: r#"
seed = 8

[system]
name = "doubling"

[roof]
kind = "poly"
coeffs = [1.0, 0.5]

[variance]
v = { kind = "base_cos", k = 1.0 }
grid = { start = 5.0, stop = 20.0, points = 4 }
ensemble = 200000
window = [5.0, 20.0]
identity = { step = 0.01, budget = 200000 }
"#,
    },
    Preset {
        name: "roof-tail-inequality",
        experiment: Experiment::Tail,
        probes: "E[phi^eta o F^i; phi_n > t] <= (n+1) E[phi^eta; phi > t/n] on the induced intermittent map",
        config: r#"
seed = 9

[system]
name = "lsv_induced"
alpha = 0.5

[roof]
kind = "induced_affine"
c0 = 1.0
c1 = 0.0

[tail]
source = "roof"
samples = 1000000
grid = { start = 1.0, stop = 1000.0, points = 40, log = true }
window = [5.0, 100.0]
inequality = { eta = 0.5, i = [0, 1, 5], n = [1, 2, 4], t = [5.0, 10.0, 20.0, 50.0, 100.0], samples = 1000000 }
"#,
    },
    Preset {
        name: "billiard-invariants",
        experiment: Experiment::Simulate,
        probes: "unit speed, reflection law, reversibility, the free-flight roof inequality and invariance of the collision measure",
        config: r#"
seed = 10

[table]
variant = "lorentz-torus"
radius = 0.3
scatterers = [{ center = [0.5, 0.5] }]

[simulate]
collisions = 1000000
stride = 1000
invariants = { round_trips = 1000, roof_pairs = 10000, invariance_samples = 100000 }
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// `name  subcommand  probes`, one preset per line.
pub fn list_experiments() -> String {
    let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for p in &PRESETS {
        s.push_str(&format!(
            "{:width$}  {:9}  {}\n",
            p.name,
            p.experiment.name(),
            p.probes
        ));
    }
    s
}
