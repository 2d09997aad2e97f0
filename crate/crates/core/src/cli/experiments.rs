//! Execution of each subcommand: config in, CSV tables out.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng as _;

use super::config::{
    roof_sup, CorrelationMode, Experiment, ExperimentConfig, ObservableSpec, TailSource,
};
use super::output::{Col, Table};
use crate::billiard::{
    billiard_step, draw_invariant, run_orbit, section_distance, BilliardTable, CollisionState,
    DEFAULT_T_CAP,
};
use crate::gibbs_markov::{
    approx_eigenfunction_defect, invariant_density, lambda_prime_at_zero, leading_eigenvalue,
    roof_mean, Density, GmSystem, Roof, SpectralOptions,
};
use crate::rng::stream;
use crate::row;
use crate::stats::{
    chi2_two_sample, correlation, correlation_birkhoff, decay_exponent_fit, grid_bin,
    laplace_series, laplace_transform, tail_fit, variance_correlation_identity, variance_growth,
    BaseSampler, BilliardBackend, BilliardState, CorrelationSeries, OrbitBackend, SurvivalCounts,
    SuspensionBackend, VarianceSeries,
};
use crate::suspension::{
    billiard_roof_inequality, chi_auto, conjugacies, diophantine_ratio, good_asymptotics_fit,
    periodic_orbit, roof_tail_check, sample_suspension, tdf_range_dimension, temporal_distance,
    tilde_phi, word_family, FatPoint, FlowPoint, GmBase, GmPoint, SuspensionFlow,
};
use crate::{Error, Result};

use Col::{Bool, Float, Int, Text};

pub fn run(cfg: &ExperimentConfig, experiment: Experiment) -> Result<Vec<Table>> {
    cfg.validate(experiment)?;
    match experiment {
        Experiment::Simulate => simulate(cfg),
        Experiment::Tail => tail(cfg),
        Experiment::Correlate => correlate(cfg),
        Experiment::Variance => variance(cfg),
        Experiment::Spectrum => spectrum(cfg),
        Experiment::Defect => defect(cfg),
        Experiment::Chi => chi(cfg),
        Experiment::Tdf => tdf(cfg),
        Experiment::Periods => periods(cfg),
        Experiment::Laplace => laplace(cfg),
    }
}

/// Attach the config key to an error raised inside a module.
fn at(key: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::ConfigInvalid { .. } => e,
        e => Error::config(key, e.to_string()),
    }
}

fn billiard_obs(o: ObservableSpec) -> impl Fn(&BilliardState) -> f64 + Sync {
    move |s: &BilliardState| match o {
        ObservableSpec::VelX => s.vel.x,
        ObservableSpec::VelY => s.vel.y,
        ObservableSpec::PosCos { k } => (TAU * k * s.pos.x).cos(),
        _ => unreachable!("validated"),
    }
}

/// Observable on a suspension point given base coordinate, height and roof value.
fn fiber_obs(o: ObservableSpec) -> impl Fn(f64, f64, f64) -> f64 + Sync {
    move |y: f64, u: f64, roof: f64| match o {
        ObservableSpec::BaseCos { k } => (TAU * k * y).cos(),
        ObservableSpec::Bump => (PI * u / roof).sin() - 2.0 / PI,
        ObservableSpec::Tent { cap } => u.min(roof - u).min(cap),
        _ => unreachable!("validated"),
    }
}

struct GmContext {
    gm: GmSystem,
    roof: Roof,
    density: Density,
}

fn gm_context(cfg: &ExperimentConfig) -> Result<GmContext> {
    let gm = cfg.gm()?;
    let roof = cfg.roof.clone().expect("validated");
    let res = cfg.system.as_ref().expect("validated").density_resolution;
    let density = invariant_density(&gm, res).map_err(at("system.density_resolution"))?;
    Ok(GmContext { gm, roof, density })
}

fn sampler(ctx: &GmContext) -> BaseSampler<GmPoint> {
    let base = GmBase::new(ctx.gm.clone(), ctx.roof.clone());
    let density = ctx.density.clone();
    Box::new(move |rng| base.sample(&density, rng))
}

fn simulate(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let table = cfg.billiard()?;
    let p = cfg.simulate.as_ref().expect("validated");
    let cap = p.t_cap.unwrap_or(DEFAULT_T_CAP);
    let mut out = Table::new(
        "collisions",
        &[
            ("collision", Int),
            ("time", Float),
            ("component", Int),
            ("param", Float),
            ("phi", Float),
            ("x", Float),
            ("y", Float),
            ("vx", Float),
            ("vy", Float),
            ("flight", Float),
        ],
    );
    let mut clock = 0.0;
    let mut drift: f64 = 0.0;
    let mut reflection: f64 = 0.0;
    let diag = run_orbit(&table, cfg.seed, p.collisions, cap, |k, seg| {
        clock += seg.flight_time;
        drift = drift.max((seg.outgoing.norm() - 1.0).abs());
        let n = table
            .component(seg.end.component)
            .inward_normal(seg.end.param);
        reflection = reflection.max((seg.incoming.dot(n) + seg.outgoing.dot(n)).abs());
        if k % p.stride == 0 {
            let q = table.component(seg.end.component).point(seg.end.param);
            out.push(row![
                k,
                clock,
                seg.end.component,
                seg.end.param,
                seg.end.phi,
                q.x,
                q.y,
                seg.outgoing.x,
                seg.outgoing.y,
                seg.flight_time
            ]);
        }
    });
    let mut tables = vec![out];
    if let Some(inv) = &p.invariants {
        let mut t = Table::new(
            "invariants",
            &[
                ("check", Text),
                ("value", Float),
                ("threshold", Float),
                ("pass", Bool),
            ],
        );
        let mut rng = stream(cfg.seed, 2);
        let round = round_trips(&table, inv.round_trips, cap, &mut rng);
        let ineq = billiard_roof_inequality(&table, inv.roof_pairs, cfg.seed ^ 0x5eed);
        let p_value = invariance_p_value(&table, inv.invariance_samples, cap, &mut rng)?;
        t.push(row!["speed_drift", drift, 1e-12, drift < 1e-12]);
        t.push(row![
            "reflection_error",
            reflection,
            1e-12,
            reflection < 1e-12
        ]);
        t.push(row!["round_trip_error", round, 1e-9, round < 1e-9]);
        t.push(row![
            "roof_inequality_violations",
            ineq.violations as f64,
            0.0,
            ineq.violations == 0
        ]);
        t.push(row!["invariance_p_value", p_value, 0.01, p_value > 0.01]);
        t.push(row![
            "restarts",
            (diag.grazing + diag.cap_exceeded) as f64,
            f64::NAN,
            true
        ]);
        tables.push(t);
    }
    Ok(tables)
}

/// Worst single-collision round trip `R f R f x` against `x`.
fn round_trips(table: &BilliardTable, n: usize, cap: f64, rng: &mut crate::rng::Rng) -> f64 {
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n {
        let x = draw_invariant(table, rng);
        let Ok(a) = billiard_step(table, &x, cap) else {
            continue;
        };
        let Ok(b) = billiard_step(table, &a.end.reversed(), cap) else {
            continue;
        };
        worst = worst.max(section_distance(table, &x, &b.end.reversed()));
        done += 1;
    }
    worst
}

/// Chi-square two-sample test of `x` against `f(x)` on a 10 x 10 grid in
/// (relative arclength, sin phi).
fn invariance_p_value(
    table: &BilliardTable,
    n: usize,
    cap: f64,
    rng: &mut crate::rng::Rng,
) -> Result<f64> {
    let total = table.perimeter();
    let offsets: Vec<f64> = table
        .components()
        .iter()
        .scan(0.0, |acc, c| {
            let o = *acc;
            *acc += c.length();
            Some(o)
        })
        .collect();
    let bin = |x: &CollisionState| {
        let r = (offsets[x.component] + x.arclength(table)) / total;
        grid_bin(r, 0.0, 1.0, 10) * 10 + grid_bin(x.phi.sin(), -1.0, 1.0, 10)
    };
    let a: Vec<usize> = (0..n).map(|_| bin(&draw_invariant(table, rng))).collect();
    let mut b = Vec::with_capacity(n);
    while b.len() < n {
        if let Ok(seg) = billiard_step(table, &draw_invariant(table, rng), cap) {
            b.push(bin(&seg.end));
        }
    }
    Ok(chi2_two_sample(&a, &b, 100)?.p_value)
}

fn tail(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.tail.as_ref().expect("validated");
    let grid = p.grid.values();
    let mut counts = SurvivalCounts::new(&grid).map_err(at("tail.grid"))?;
    let mut tables = Vec::new();
    match p.source {
        TailSource::Flight => {
            let table = cfg.billiard()?;
            run_orbit(
                &table,
                cfg.seed,
                p.samples,
                p.t_cap.unwrap_or(DEFAULT_T_CAP),
                |_, seg| counts.push(seg.flight_time),
            );
        }
        TailSource::Roof => {
            let ctx = gm_context(cfg)?;
            let mut rng = stream(cfg.seed, 1);
            for _ in 0..p.samples {
                let y = ctx.density.sample(&mut rng);
                counts.push(ctx.roof.eval(&ctx.gm, y));
            }
            if let Some(q) = &p.inequality {
                let rows = roof_tail_check(
                    &ctx.gm,
                    &ctx.roof,
                    &ctx.density,
                    q.eta,
                    &q.i,
                    &q.n,
                    &q.t,
                    q.samples,
                    cfg.seed,
                );
                let mut t = Table::new(
                    "roof_tail",
                    &[
                        ("i", Int),
                        ("n", Int),
                        ("t", Float),
                        ("lhs", Float),
                        ("lhs_se", Float),
                        ("rhs", Float),
                        ("rhs_se", Float),
                        ("holds", Bool),
                    ],
                );
                for r in rows {
                    t.push(row![
                        r.i, r.n, r.t, r.lhs, r.lhs_se, r.rhs, r.rhs_se, r.holds
                    ]);
                }
                tables.push(t);
            }
        }
    }
    let est = tail_fit(&counts, (p.window[0], p.window[1]), cfg.seed).map_err(at("tail.window"))?;
    let mut s = Table::new(
        "survival",
        &[("t", Float), ("survival", Float), ("se", Float)],
    );
    for i in 0..est.t.len() {
        s.push(row![est.t[i], est.survival[i], est.se[i]]);
    }
    let mut f = Table::new(
        "tail_fit",
        &[
            ("n", Int),
            ("slope", Float),
            ("ci_lo", Float),
            ("ci_hi", Float),
            ("window_lo", Float),
            ("window_hi", Float),
            ("curvature", Float),
            ("curvature_se", Float),
            ("power_law", Bool),
        ],
    );
    f.push(row![
        est.n,
        est.slope,
        est.ci.0,
        est.ci.1,
        est.window.0,
        est.window.1,
        est.curvature,
        est.curvature_se,
        est.power_law
    ]);
    tables.insert(0, f);
    tables.insert(0, s);
    Ok(tables)
}

fn correlation_table(series: &CorrelationSeries) -> Table {
    let mut t = Table::new(
        "correlation",
        &[("t", Float), ("rho", Float), ("se", Float)],
    );
    for i in 0..series.t.len() {
        t.push(row![series.t[i], series.rho[i], series.se[i]]);
    }
    t
}

fn correlate(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.correlate.as_ref().expect("validated");
    let grid = p.grid.values();
    let w_spec = p.w.unwrap_or(p.v);
    let series = if cfg.table.is_some() {
        let backend = BilliardBackend::new(cfg.billiard()?);
        let (v, w) = (billiard_obs(p.v), billiard_obs(w_spec));
        match p.mode {
            CorrelationMode::Ensemble => {
                correlation(&backend, &v, &w, &grid, p.budget.unwrap(), cfg.seed)
            }
            CorrelationMode::Birkhoff => {
                let dt = p.dt.unwrap();
                let lags = lags(&grid, dt);
                correlation_birkhoff(
                    &backend,
                    &v,
                    &w,
                    dt,
                    &lags,
                    p.orbits.unwrap(),
                    p.origins.unwrap(),
                    p.burn_in,
                    cfg.seed,
                )
            }
        }
    } else {
        let ctx = gm_context(cfg)?;
        let (fv, fw) = (fiber_obs(p.v), fiber_obs(w_spec));
        let v = |x: &FlowPoint<GmPoint>| fv(x.y.y, x.u, x.roof);
        let w = |x: &FlowPoint<GmPoint>| fw(x.y.y, x.u, x.roof);
        let flow = SuspensionFlow::new(GmBase::new(ctx.gm.clone(), ctx.roof.clone()));
        match p.mode {
            CorrelationMode::Ensemble => {
                let sup = roof_sup(&ctx.gm, &ctx.roof).expect("validated");
                let backend =
                    SuspensionBackend::new(flow, sampler(&ctx), sup).map_err(at("roof"))?;
                correlation(&backend, &v, &w, &grid, p.budget.unwrap(), cfg.seed)
            }
            CorrelationMode::Birkhoff => {
                let backend = OrbitBackend::new(flow, sampler(&ctx));
                let dt = p.dt.unwrap();
                let lags = lags(&grid, dt);
                correlation_birkhoff(
                    &backend,
                    &v,
                    &w,
                    dt,
                    &lags,
                    p.orbits.unwrap(),
                    p.origins.unwrap(),
                    p.burn_in,
                    cfg.seed,
                )
            }
        }
    }
    .map_err(at("correlate"))?;
    let mut tables = vec![correlation_table(&series)];
    if let Some(win) = p.fit_window {
        let fit =
            decay_exponent_fit(&series, (win[0], win[1])).map_err(at("correlate.fit_window"))?;
        let mut t = Table::new(
            "decay_fit",
            &[
                ("exponent", Float),
                ("se", Float),
                ("ci_lo", Float),
                ("ci_hi", Float),
                ("window_lo", Float),
                ("window_hi", Float),
                ("used", Int),
                ("excluded", Int),
            ],
        );
        t.push(row![
            fit.exponent,
            fit.se,
            fit.ci.0,
            fit.ci.1,
            fit.window.0,
            fit.window.1,
            fit.used,
            fit.excluded
        ]);
        tables.push(t);
    }
    Ok(tables)
}

/// Grid times rounded to multiples of `dt`, deduplicated.
fn lags(grid: &[f64], dt: f64) -> Vec<usize> {
    let mut l: Vec<usize> = grid.iter().map(|t| (t / dt).round() as usize).collect();
    l.dedup();
    l
}

fn variance_tables(var: &VarianceSeries) -> Vec<Table> {
    let mut t = Table::new("variance", &[("t", Float), ("var", Float), ("se", Float)]);
    for i in 0..var.t.len() {
        t.push(row![var.t[i], var.var[i], var.se[i]]);
    }
    let mut f = Table::new(
        "variance_fit",
        &[
            ("model", Text),
            ("c", Float),
            ("ssr", Float),
            ("wins", Bool),
        ],
    );
    let wins = var.tlogt_wins();
    f.push(row!["t", var.linear.c, var.linear.ssr, !wins]);
    f.push(row!["t_log_t", var.tlogt.c, var.tlogt.ssr, wins]);
    vec![t, f]
}

fn variance(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.variance.as_ref().expect("validated");
    let grid = p.grid.values();
    let win = (p.window[0], p.window[1]);
    let corr_grid = |step: f64| -> Vec<f64> {
        let end = *grid.last().unwrap();
        let n = (end / step).ceil() as usize;
        (0..=n).map(|k| k as f64 * step).collect()
    };
    let (var, series) = if cfg.table.is_some() {
        let backend = BilliardBackend::new(cfg.billiard()?);
        let v = billiard_obs(p.v);
        let var = variance_growth(&backend, &v, &grid, p.ensemble, win, cfg.seed)
            .map_err(at("variance"))?;
        let series = match &p.identity {
            Some(id) => Some(
                correlation(&backend, &v, &v, &corr_grid(id.step), id.budget, cfg.seed)
                    .map_err(at("variance.identity"))?,
            ),
            None => None,
        };
        (var, series)
    } else {
        let ctx = gm_context(cfg)?;
        let fv = fiber_obs(p.v);
        let v = |x: &FlowPoint<GmPoint>| fv(x.y.y, x.u, x.roof);
        let sup = roof_sup(&ctx.gm, &ctx.roof).expect("validated");
        let flow = SuspensionFlow::new(GmBase::new(ctx.gm.clone(), ctx.roof.clone()));
        let backend = SuspensionBackend::new(flow, sampler(&ctx), sup).map_err(at("roof"))?;
        let var = variance_growth(&backend, &v, &grid, p.ensemble, win, cfg.seed)
            .map_err(at("variance"))?;
        let series = match &p.identity {
            Some(id) => Some(
                correlation(&backend, &v, &v, &corr_grid(id.step), id.budget, cfg.seed)
                    .map_err(at("variance.identity"))?,
            ),
            None => None,
        };
        (var, series)
    };
    let mut tables = variance_tables(&var);
    if let Some(series) = series {
        let rows = variance_correlation_identity(&series, &var).map_err(at("variance.identity"))?;
        let mut t = Table::new(
            "identity",
            &[
                ("t", Float),
                ("var", Float),
                ("var_se", Float),
                ("predicted", Float),
                ("predicted_se", Float),
                ("rel_err", Float),
            ],
        );
        for r in rows {
            t.push(row![
                r.t,
                r.var,
                r.var_se,
                r.predicted,
                r.predicted_se,
                r.rel_err
            ]);
        }
        tables.push(t);
        tables.push(correlation_table(&series));
    }
    Ok(tables)
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.spectrum.as_ref().expect("validated");
    let gm = cfg.gm()?;
    let roof = cfg.roof.clone().expect("validated");
    let opts = SpectralOptions {
        resolution: p.resolution,
        ..Default::default()
    };
    let mut t = Table::new(
        "spectrum",
        &[
            ("re_s", Float),
            ("im_s", Float),
            ("re_lambda", Float),
            ("im_lambda", Float),
            ("modulus", Float),
            ("second_modulus", Float),
            ("residual", Float),
            ("iterations", Int),
        ],
    );
    for b in p.b.values() {
        let s = Complex64::new(p.re, b);
        let r = leading_eigenvalue(&gm, &roof, s, &opts).map_err(at("spectrum.b"))?;
        t.push(row![
            s.re,
            s.im,
            r.lambda.re,
            r.lambda.im,
            r.lambda.norm(),
            r.second_modulus,
            r.residual,
            r.iterations
        ]);
    }
    let zero =
        leading_eigenvalue(&gm, &roof, Complex64::new(0.0, 0.0), &opts).map_err(at("spectrum"))?;
    let deriv = lambda_prime_at_zero(&gm, &roof, p.derivative_step, &opts)
        .map_err(at("spectrum.derivative_step"))?;
    let mean = roof_mean(
        &gm,
        &roof,
        &invariant_density(&gm, p.resolution).map_err(at("spectrum.resolution"))?,
    );
    let mut id = Table::new(
        "identities",
        &[
            ("quantity", Text),
            ("value", Float),
            ("expected", Float),
            ("abs_err", Float),
        ],
    );
    id.push(row![
        "lambda(0)",
        zero.lambda.re,
        1.0,
        (zero.lambda - 1.0).norm()
    ]);
    id.push(row!["lambda'(0)", deriv, -mean, (deriv + mean).abs()]);
    Ok(vec![t, id])
}

fn defect(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.defect.as_ref().expect("validated");
    let gm = cfg.gm()?;
    let roof = cfg.roof.clone().expect("validated");
    let mut t = Table::new(
        "defect",
        &[
            ("b", Float),
            ("xi", Float),
            ("n", Int),
            ("defect", Float),
            ("psi", Float),
            ("u_spread", Float),
        ],
    );
    for &b in &p.b {
        let d = approx_eigenfunction_defect(&gm, &roof, &p.words, b, p.xi).map_err(at("defect"))?;
        let spread = d.u.iter().map(|z| (z - d.u[0]).norm()).fold(0.0, f64::max);
        t.push(row![d.b, d.xi, d.n, d.defect, d.psi, spread]);
    }
    Ok(vec![t])
}

fn chi(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.chi.as_ref().expect("validated");
    let (model, roof) = cfg.two_sided()?;
    let mut rng = stream(cfg.seed, 1);
    let mut values = Table::new(
        "chi",
        &[
            ("ybar", Float),
            ("z", Float),
            ("chi", Float),
            ("bound", Float),
            ("terms", Int),
            ("tilde_phi", Float),
        ],
    );
    let mut chi_max: f64 = 0.0;
    for _ in 0..p.samples {
        let y = model.sample(&mut rng);
        let c = chi_auto(&model, &roof, &y, p.tol).map_err(at("chi.tol"))?;
        let tp = tilde_phi(&model, &roof, &y, p.tol).map_err(at("chi.tol"))?;
        chi_max = chi_max.max(c.value.abs());
        values.push(row![y.ybar, y.z, c.value, c.bound, c.terms, tp]);
    }
    let conj = conjugacies(&model, &roof, p.sup_samples, &mut rng).map_err(at("model.roof"))?;
    let mut round: f64 = 0.0;
    for _ in 0..p.round_trips {
        let x = sample_suspension(&conj.plain, &model, roof.sup(), &mut rng);
        let back = conj.g_minus(&conj.g_plus(&x));
        let (direct, _) = conj.plain.flow_eval(&x, 2.0 * conj.shift);
        round = round.max(conj.distance(&back, &direct));
    }
    let mut fiber_var: f64 = 0.0;
    for _ in 0..p.fibers[0] {
        let yb = model.sample(&mut rng).ybar;
        let vals = (0..p.fibers[1])
            .map(|_| tilde_phi(&model, &roof, &FatPoint::new(yb, rng.gen()), p.tol))
            .collect::<Result<Vec<f64>>>()
            .map_err(at("chi.tol"))?;
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        fiber_var =
            fiber_var.max(vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64);
    }
    let mut s = Table::new("chi_summary", &[("quantity", Text), ("value", Float)]);
    s.push(row!["chi_sup_sampled", chi_max]);
    s.push(row!["shift", conj.shift]);
    s.push(row!["round_trip_error", round]);
    s.push(row!["tilde_phi_fiber_variance", fiber_var]);
    s.push(row![
        "skew_product",
        if roof.is_skew_product() { 1.0 } else { 0.0 }
    ]);
    Ok(vec![values, s])
}

fn tdf(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.tdf.as_ref().expect("validated");
    let (model, roof) = cfg.two_sided()?;
    let mut rng = stream(cfg.seed, 1);
    let mut pairs = Table::new(
        "tdf",
        &[
            ("ybar1", Float),
            ("z1", Float),
            ("ybar4", Float),
            ("z4", Float),
            ("d", Float),
            ("bound", Float),
        ],
    );
    let mut values = Vec::with_capacity(p.pairs);
    for _ in 0..p.pairs {
        let (y1, y4) = (model.sample(&mut rng), model.sample(&mut rng));
        let d = temporal_distance(&model, &roof, &y1, &y4, p.k, p.tol).map_err(at("tdf.k"))?;
        values.push(d.value);
        pairs.push(row![y1.ybar, y1.z, y4.ybar, y4.z, d.value, d.bound]);
    }
    let mut dim = Table::new("tdf_dimension", &[("scale", Float), ("boxes", Int)]);
    let mut fit = Table::new(
        "tdf_fit",
        &[
            ("slope", Float),
            ("ci_lo", Float),
            ("ci_hi", Float),
            ("degenerate", Bool),
        ],
    );
    match tdf_range_dimension(&values, &p.scales) {
        Ok(b) => {
            for (e, n) in &b.counts {
                dim.push(row![*e, *n]);
            }
            fit.push(row![b.slope, b.ci.0, b.ci.1, false]);
        }
        Err(Error::DegenerateRange) => fit.push(row![0.0, 0.0, 0.0, true]),
        Err(e) => return Err(at("tdf.scales")(e)),
    }
    Ok(vec![pairs, dim, fit])
}

fn periods(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.periods.as_ref().expect("validated");
    let gm = cfg.gm()?;
    let roof = cfg.roof.clone().expect("validated");
    let mut words: Vec<Vec<usize>> = p.words.clone();
    let family_words = p
        .family
        .as_ref()
        .map(|f| word_family(&f.base, &f.tail, &f.n))
        .unwrap_or_default();
    words.extend(family_words.iter().cloned());
    let mut t = Table::new(
        "periods",
        &[
            ("word", Text),
            ("length", Int),
            ("y", Float),
            ("period", Float),
        ],
    );
    let mut periods = Vec::new();
    for w in &words {
        let o = periodic_orbit(&gm, &roof, w).map_err(at("periods"))?;
        let word: Vec<String> = w.iter().map(|j| j.to_string()).collect();
        t.push(row![word.join("-"), w.len(), o.y, o.period]);
        periods.push(o.period);
    }
    let mut tables = vec![t];
    if let Some(depth) = p.ratio_depth {
        let cf = diophantine_ratio(periods[0], periods[1], periods[2], depth)
            .map_err(at("periods.ratio_depth"))?;
        let mut r = Table::new(
            "ratio",
            &[("index", Int), ("quotient", Int), ("suspicious", Bool)],
        );
        for (i, q) in cf.quotients.iter().enumerate() {
            r.push(row![i, *q, cf.suspicious.contains(&i)]);
        }
        let mut s = Table::new(
            "ratio_summary",
            &[
                ("ratio", Float),
                ("uncertainty", Float),
                ("terminated", Bool),
                ("exhausted_at", Int),
            ],
        );
        s.push(row![
            cf.ratio,
            cf.uncertainty,
            cf.terminated,
            cf.exhausted_at.map_or(-1, |i| i as i64)
        ]);
        tables.push(r);
        tables.push(s);
    }
    if let Some(f) = p.family.as_ref().filter(|f| f.fit) {
        let t0 = periodic_orbit(&gm, &roof, &f.base)
            .map_err(at("periods.family.base"))?
            .period;
        let offset = p.words.len();
        let records: Vec<(usize, f64)> =
            f.n.iter()
                .enumerate()
                .map(|(i, &n)| (n, periods[offset + i]))
                .collect();
        let g = good_asymptotics_fit(&records, t0).map_err(at("periods.family"))?;
        let mut s = Table::new(
            "asymptotics",
            &[
                ("kappa", Float),
                ("gamma", Float),
                ("omega", Float),
                ("amplitude", Float),
                ("phase", Float),
                ("degenerate", Bool),
            ],
        );
        s.push(row![
            g.kappa,
            g.gamma,
            g.omega,
            g.amplitude,
            g.phase,
            g.degenerate
        ]);
        tables.push(s);
    }
    Ok(tables)
}

fn laplace(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = cfg.laplace.as_ref().expect("validated");
    let ctx = gm_context(cfg)?;
    let base = GmBase::new(ctx.gm.clone(), ctx.roof.clone());
    let (fv, fw) = (fiber_obs(p.v), fiber_obs(p.w.unwrap_or(p.v)));
    let s_list: Vec<Complex64> = p.s.iter().map(|s| Complex64::new(s[0], s[1])).collect();
    let est = laplace_series(
        &base,
        &ctx.density,
        &fv,
        &fw,
        &s_list,
        p.n_max,
        p.budget,
        cfg.seed,
    )
    .map_err(at("laplace"))?;
    let mut main = Table::new(
        "laplace",
        &[
            ("re_s", Float),
            ("im_s", Float),
            ("re", Float),
            ("im", Float),
            ("se", Float),
            ("tail_bound", Float),
        ],
    );
    let mut terms = Table::new(
        "laplace_terms",
        &[
            ("re_s", Float),
            ("im_s", Float),
            ("n", Int),
            ("re", Float),
            ("im", Float),
            ("se", Float),
            ("bound", Float),
        ],
    );
    for e in &est {
        main.push(row![
            e.s.re,
            e.s.im,
            e.value.re,
            e.value.im,
            e.se,
            e.tail_bound
        ]);
        for term in &e.terms {
            terms.push(row![
                e.s.re,
                e.s.im,
                term.n,
                term.value.re,
                term.value.im,
                term.se,
                term.bound
            ]);
        }
    }
    let mut tables = vec![main, terms];
    if let Some(c) = &p.cross_check {
        let sup = roof_sup(&ctx.gm, &ctx.roof).expect("validated");
        let flow = SuspensionFlow::new(base);
        let backend = SuspensionBackend::new(flow, sampler(&ctx), sup).map_err(at("roof"))?;
        let v = |x: &FlowPoint<GmPoint>| fv(x.y.y, x.u, x.roof);
        let w = |x: &FlowPoint<GmPoint>| fw(x.y.y, x.u, x.roof);
        let n = (c.horizon / c.step).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| k as f64 * c.step).collect();
        let series = correlation(&backend, &v, &w, &grid, c.budget, cfg.seed ^ 0x1a9)
            .map_err(at("laplace.cross_check"))?;
        let mut t = Table::new(
            "laplace_check",
            &[
                ("re_s", Float),
                ("im_s", Float),
                ("series", Float),
                ("series_se", Float),
                ("direct", Float),
                ("direct_se", Float),
                ("rel_err", Float),
            ],
        );
        for e in &est {
            let (direct, se) = laplace_transform(&series, e.s);
            t.push(row![
                e.s.re,
                e.s.im,
                e.value.re,
                e.se,
                direct.re,
                se,
                (e.value - direct).norm() / direct.norm()
            ]);
        }
        tables.push(t);
        tables.push(correlation_table(&series));
    }
    Ok(tables)
}
