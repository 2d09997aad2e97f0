use mixlab::rng::stream;
use mixlab::stats::*;
use mixlab::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng as _;

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64))
        .collect()
}

fn exact_series(t: Vec<f64>, rho: impl Fn(f64) -> f64) -> CorrelationSeries {
    let r: Vec<f64> = t.iter().map(|&x| rho(x)).collect();
    CorrelationSeries {
        se: vec![0.0; t.len()],
        rho: r.clone(),
        batches: vec![r],
        t,
        n_samples: 1,
        restarts: 0,
        seed: 0,
    }
}

#[test]
fn pareto_tail_recovers_its_exponent() {
    let mut rng = stream(1, 0);
    // S(t) = t^-2 for t >= 1.
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| (1.0 - rng.gen::<f64>()).powf(-0.5))
        .collect();
    let est = tail_survival(&xs, &log_grid(1.0, 1000.0, 40), (2.0, 100.0)).unwrap();
    assert!(
        est.ci.0 <= -2.0 && -2.0 <= est.ci.1,
        "{} {:?}",
        est.slope,
        est.ci
    );
    assert!((est.slope + 2.0).abs() < 0.05);
    assert!(est.power_law);
}

#[test]
fn exponential_tail_is_flagged_as_curved() {
    let mut rng = stream(2, 0);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let est = tail_survival(&xs, &log_grid(0.1, 10.0, 30), (0.5, 8.0)).unwrap();
    assert!(
        !est.power_law,
        "curvature {} +- {}",
        est.curvature, est.curvature_se
    );
}

#[test]
fn tail_needs_enough_samples() {
    let xs = vec![1.0; 1000];
    assert!(matches!(
        tail_survival(&xs, &[1.0, 2.0], (1.0, 2.0)),
        Err(Error::BudgetTooSmall { .. })
    ));
}

proptest! {
    #[test]
    fn survival_counts_merge_like_one_pass(a in prop::collection::vec(0.0f64..50.0, 0..200), b in prop::collection::vec(0.0f64..50.0, 0..200)) {
        let grid = log_grid(0.5, 40.0, 12);
        let mut whole = SurvivalCounts::new(&grid).unwrap();
        let mut left = SurvivalCounts::new(&grid).unwrap();
        let mut right = SurvivalCounts::new(&grid).unwrap();
        for &x in &a { whole.push(x); left.push(x); }
        for &x in &b { whole.push(x); right.push(x); }
        left.merge(&right);
        prop_assert_eq!(&left, &whole);
        // Direct count of values above each threshold.
        let above: u64 = left.above.iter().sum();
        let direct = a.iter().chain(&b).filter(|&&x| x > grid[0]).count() as u64;
        prop_assert_eq!(above, direct);
    }

    #[test]
    fn through_origin_fit_is_exact_on_model_data(c in -5.0f64..5.0, n in 3usize..20) {
        let t: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|x| c * x * x.ln().max(1.0)).collect();
        let fit = fit_through_origin(&t, &y, &vec![0.0; n], |x| x * x.ln().max(1.0));
        prop_assert!((fit.c - c).abs() < 1e-10);
        prop_assert!(fit.ssr < 1e-18);
    }
}

#[test]
fn identity_prediction_of_an_exponential_correlation() {
    // 2 int_0^t (t - r) e^-r dr = 2 (t - 1 + e^-t).
    let grid: Vec<f64> = (0..=10_000).map(|k| k as f64 * 1e-3).collect();
    let rho: Vec<f64> = grid.iter().map(|r| (-r).exp()).collect();
    for t in [0.5, 2.0, 5.0, 7.3] {
        let got = identity_prediction(&grid, &rho, t);
        let want = 2.0 * (t - 1.0 + (-t).exp());
        // Trapezoid error is O(h^2 t).
        assert!((got - want).abs() < 1e-5, "t={t}: {got} vs {want}");
    }
}

#[test]
fn decay_fit_of_a_pure_power() {
    let s = exact_series(log_grid(1.0, 1000.0, 30), |t| 3.0 * t.powf(-1.5));
    let fit = decay_exponent_fit(&s, (5.0, 500.0)).unwrap();
    assert!((fit.exponent + 1.5).abs() < 1e-10);
    assert_eq!(fit.excluded, 0);

    let mut noisy = s.clone();
    noisy.se = noisy.rho.iter().map(|r| 10.0 * r).collect();
    assert!(matches!(
        decay_exponent_fit(&noisy, (5.0, 500.0)),
        Err(Error::NoiseDominated)
    ));
    assert!(matches!(
        decay_exponent_fit(&s, (2000.0, 3000.0)),
        Err(Error::EmptyWindow)
    ));
}

#[test]
fn laplace_transform_of_an_exponential() {
    let t: Vec<f64> = (0..=40_000).map(|k| k as f64 * 1e-3).collect();
    let s = exact_series(t, |x| (-x).exp());
    for z in [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0, 2.0),
        Complex64::new(2.0, -1.0),
    ] {
        let (got, se) = laplace_transform(&s, z);
        let want = 1.0 / (z + 1.0);
        assert!((got - want).norm() < 1e-6, "{z}: {got} vs {want}");
        assert_eq!(se, 0.0);
    }
}

#[test]
fn two_sample_chi_square() {
    let mut rng = stream(3, 0);
    let mut draw = |shift: f64| -> Vec<usize> {
        (0..20_000)
            .map(|_| grid_bin(rng.gen::<f64>().powf(1.0 + shift), 0.0, 1.0, 20))
            .collect()
    };
    let a = draw(0.0);
    let b = draw(0.0);
    let c = draw(0.1);
    let same = chi2_two_sample(&a, &b, 20).unwrap();
    assert_eq!(same.dof, 19);
    assert!(same.passes(0.001), "p = {}", same.p_value);
    assert!(!chi2_two_sample(&a, &c, 20).unwrap().passes(0.001));
    assert!(chi2_two_sample(&a, &[], 20).is_err());
    assert_eq!(grid_bin(1.0, 0.0, 1.0, 20), 19);
    assert_eq!(grid_bin(-0.5, 0.0, 1.0, 20), 0);
}
