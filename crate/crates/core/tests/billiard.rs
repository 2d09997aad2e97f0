use std::f64::consts::{FRAC_PI_2, PI, TAU};

use mixlab::billiard::*;
use mixlab::rng::stream;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn single(r: f64) -> BilliardTable {
    BilliardTable::lorentz_torus(vec![Disk {
        center: Vec2::new(0.5, 0.5),
        radius: r,
    }])
    .unwrap()
}

fn two_disk() -> BilliardTable {
    BilliardTable::lorentz_torus(vec![
        Disk {
            center: Vec2::new(0.0, 0.0),
            radius: 0.4,
        },
        Disk {
            center: Vec2::new(0.5, 0.5),
            radius: 0.2,
        },
    ])
    .unwrap()
}

/// First entry of the ray into any disk image with `|i|, |j| <= n`, by plain
/// enumeration and the textbook quadratic.
fn image_oracle(table: &BilliardTable, p: Vec2, v: Vec2, n: i64) -> Option<(f64, Vec2)> {
    let mut best: Option<(f64, Vec2)> = None;
    for d in table.disks() {
        for i in -n..=n {
            for j in -n..=n {
                let c = Vec2::new(d.center.x + i as f64, d.center.y + j as f64);
                let w = p - c;
                let b = w.dot(v);
                let disc = b * b - (w.norm_sq() - d.radius * d.radius);
                if disc < 0.0 {
                    continue;
                }
                let t = -b - disc.sqrt();
                if t > 1e-12 && best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, p + v * t));
                }
            }
        }
    }
    best
}

fn outside(table: &BilliardTable, p: Vec2) -> bool {
    table.disks().iter().all(|d| {
        (-1..=1).all(|i| {
            (-1..=1)
                .all(|j| (p - d.center - Vec2::new(i as f64, j as f64)).norm() > d.radius + 1e-6)
        })
    })
}

fn torus_gap(a: Vec2, b: Vec2) -> f64 {
    let d = |x: f64| {
        let r = x.rem_euclid(1.0);
        r.min(1.0 - r)
    };
    d(a.x - b.x).hypot(d(a.y - b.y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn next_collision_matches_image_enumeration(x in 0.0f64..1.0, y in 0.0f64..1.0, theta in 0.0f64..TAU, two in any::<bool>()) {
        let table = if two { two_disk() } else { single(0.25) };
        let p = Vec2::new(x, y);
        prop_assume!(outside(&table, p));
        let v = Vec2::from_angle(theta);
        match next_collision(&table, &FlowState::new(p, v), 20.0) {
            Ok(seg) => {
                let (t, q) = image_oracle(&table, p, v, 22).expect("oracle finds the hit");
                prop_assert!((seg.flight_time - t).abs() < 1e-10, "{} vs {t}", seg.flight_time);
                prop_assert!((seg.hit_point - q).norm() < 1e-10);
                prop_assert!((seg.outgoing.norm() - 1.0).abs() < 1e-12);
            }
            Err(mixlab::Error::CapExceeded { .. }) => {
                prop_assert!(image_oracle(&table, p, v, 22).map_or(true, |(t, _)| t > 20.0 - 1e-9));
            }
            Err(mixlab::Error::Grazing { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        }
    }

    #[test]
    fn billiard_map_matches_oracle_from_collisions(seed in 0u64..10_000) {
        let table = single(0.25);
        let x = draw_invariant(&table, &mut stream(seed, 0));
        let out = x.outgoing(&table);
        if let Ok(fx) = billiard_map(&table, &x) {
            // Any earlier hit would lie within the flight length, so this box is enough.
            let seg = billiard_step(&table, &x, DEFAULT_T_CAP).unwrap();
            let n = seg.flight_time.ceil() as i64 + 2;
            let (t, q) = image_oracle(&table, out.pos, out.vel, n).unwrap();
            prop_assert!((t - seg.flight_time).abs() < 1e-10);
            let d = table.disks()[0].center;
            let rel = q - d;
            let shifted = Vec2::new(rel.x - (rel.x).round(), rel.y - (rel.y).round());
            prop_assert!((fx.position(&table) - d - shifted).norm() < 1e-10);
        }
    }

    #[test]
    fn flow_is_a_semigroup(seed in 0u64..10_000, t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let table = single(0.3);
        let m = draw_invariant(&table, &mut stream(seed, 1)).outgoing(&table);
        let (Ok(a), Ok(b)) = (flow(&table, &m, t + s), flow(&table, &m, s).and_then(|ms| flow(&table, &ms, t))) else {
            return Ok(());
        };
        prop_assert!(torus_gap(a.pos, b.pos) < 1e-9);
        prop_assert!((a.vel - b.vel).norm() < 1e-9);
        prop_assert!((a.vel.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_is_one_lipschitz_in_time_within_a_flight(seed in 0u64..10_000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let table = single(0.3);
        let x = draw_invariant(&table, &mut stream(seed, 2));
        let Ok(seg) = billiard_step(&table, &x, DEFAULT_T_CAP) else { return Ok(()) };
        let m = x.outgoing(&table);
        let (t1, t2) = (a * seg.flight_time, b * seg.flight_time);
        let p1 = flow(&table, &m, t1).unwrap();
        let p2 = flow(&table, &m, t2).unwrap();
        prop_assert!(torus_gap(p1.pos, p2.pos) <= (t1 - t2).abs() + 1e-12);
    }
}

#[test]
fn flow_zero_and_half_flight() {
    let table = single(0.3);
    let mut rng = stream(5, 0);
    for _ in 0..100 {
        let x = draw_invariant(&table, &mut rng);
        let m = x.outgoing(&table);
        let same = flow(&table, &m, 0.0).unwrap();
        assert!(torus_gap(same.pos, m.pos) < 1e-15 && same.vel == m.vel);
        let Ok(seg) = billiard_step(&table, &x, DEFAULT_T_CAP) else {
            continue;
        };
        let mid = flow(&table, &m, seg.flight_time / 2.0).unwrap();
        assert!(torus_gap(mid.pos, m.pos + m.vel * (seg.flight_time / 2.0)) < 1e-12);
    }
}

#[test]
fn invariant_samples_have_symmetric_angles_and_uniform_marginals() {
    let table = single(0.3);
    let n = 1_000_000;
    let xs = sample_invariant(&table, 11, n);
    let s: Vec<f64> = xs.iter().map(|x| x.phi.sin()).collect();
    let mean = s.iter().sum::<f64>() / n as f64;
    // sin phi is uniform on (-1, 1): variance 1/3.
    assert!(
        mean.abs() < 3.0 * (1.0 / 3.0 / n as f64).sqrt(),
        "mean {mean}"
    );

    let k = 10;
    let mut counts = vec![0.0; k * k];
    let len = table.component(0).length();
    for x in &xs {
        let r = ((x.arclength(&table) / len) * k as f64).min(k as f64 - 1.0) as usize;
        let a = (((x.phi.sin() + 1.0) / 2.0) * k as f64).min(k as f64 - 1.0) as usize;
        counts[r * k + a] += 1.0;
    }
    let e = n as f64 / (k * k) as f64;
    let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
    let p = ChiSquared::new((k * k - 1) as f64).unwrap().sf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn speed_and_reflection_over_a_long_orbit() {
    let table = two_disk();
    let mut worst_speed: f64 = 0.0;
    let mut worst_angle: f64 = 0.0;
    let diag = run_orbit(&table, 3, 1_000_000, DEFAULT_T_CAP, |_, seg| {
        worst_speed = worst_speed.max((seg.outgoing.norm() - 1.0).abs());
        let n = table
            .component(seg.end.component)
            .inward_normal(seg.end.param);
        let (i, o) = (seg.incoming.dot(n), seg.outgoing.dot(n));
        worst_angle = worst_angle
            .max((i + o).abs())
            .max((seg.incoming.cross(n) - seg.outgoing.cross(n)).abs());
    });
    assert_eq!(diag.collisions, 1_000_000);
    assert!(
        worst_speed < 1e-12 && worst_angle < 1e-12,
        "{worst_speed} {worst_angle}"
    );
}

#[test]
fn reversal_inverts_each_step_along_an_orbit() {
    let table = single(0.3);
    let mut x = draw_invariant(&table, &mut stream(8, 0));
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let fx = billiard_map(&table, &x).unwrap();
        let back = billiard_map(&table, &fx.reversed()).unwrap().reversed();
        worst = worst.max(section_distance(&table, &x, &back));
        x = fx;
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn flight_times_follow_the_horizon() {
    let mut max_inf: f64 = 0.0;
    run_orbit(&single(0.3), 4, 1_000_000, DEFAULT_T_CAP, |_, s| {
        max_inf = max_inf.max(s.flight_time)
    });
    let mut max_fin: f64 = 0.0;
    run_orbit(&two_disk(), 4, 1_000_000, DEFAULT_T_CAP, |_, s| {
        max_fin = max_fin.max(s.flight_time)
    });
    assert!(has_infinite_horizon(
        &detect_corridors(&single(0.3), 10).unwrap()
    ));
    assert!(!has_infinite_horizon(
        &detect_corridors(&two_disk(), 10).unwrap()
    ));
    // Free flights on the blocked table are bounded by its geometry; with
    // corridors they grow with the sample size.
    assert!(max_fin < 2.0, "{max_fin}");
    assert!(max_inf > 20.0, "{max_inf}");
}

#[test]
fn mean_free_path_matches_the_liouville_identity() {
    // Under the collision measure E[h] = pi |Q| / |boundary|.
    let table = single(0.3);
    let mut sum = 0.0;
    let n = 2_000_000u64;
    run_orbit(&table, 9, n, DEFAULT_T_CAP, |_, s| sum += s.flight_time);
    let exact = PI * (1.0 - PI * 0.09) / (TAU * 0.3);
    assert!((table.mean_free_path() - exact).abs() < 1e-12);
    assert!(
        (sum / n as f64 - exact).abs() / exact < 0.02,
        "{} vs {exact}",
        sum / n as f64
    );
}

#[test]
fn stadium_orbit_stays_inside() {
    let table = BilliardTable::stadium(1.0, 1.0).unwrap();
    let mut rng = stream(12, 0);
    let mut x = draw_invariant(&table, &mut rng);
    for _ in 0..10_000 {
        match billiard_map(&table, &x) {
            Ok(fx) => {
                assert!(fx.phi.abs() <= FRAC_PI_2);
                let q = fx.position(&table);
                assert!(q.x.abs() <= 2.0 + 1e-9 && q.y.abs() <= 1.0 + 1e-9);
                x = fx;
            }
            Err(_) => x = draw_invariant(&table, &mut rng),
        }
    }
}
