use hetnet_ec::capacity::{simulate_mean_interference, InterferenceSource, LowerBoundOptions};
use hetnet_ec::harness::{eta_grid_db, sweep_eta};
use hetnet_ec::{
    ec_exact_mc, ec_exact_mc_many, ec_lower_bound, interferer_distance, mean_pathloss_numeric, mean_pathloss_taylor,
    sample_uniform_disk, total_mean_interference, DuplexMode, McSettings, PolarPoint, Scenario, ScenarioConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(density: f64, topology_seed: u64, mode: DuplexMode, eta_db: f64) -> Scenario {
    let mut c = ScenarioConfig::default();
    c.small_cells.density_per_km2 = density;
    c.seeds.topology = topology_seed;
    c.duplex.mode = mode;
    c.duplex.eta_db = Some(eta_db);
    Scenario::from_config(c).unwrap()
}

fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn uniform_disk_passes_ks_in_radius_and_angle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pts: Vec<PolarPoint> = (0..100_000).map(|_| sample_uniform_disk(90.0, &mut rng)).collect();
    // 1% critical value 1.63 / sqrt(n).
    let critical = 1.63 / (pts.len() as f64).sqrt();
    let radial = ks_statistic(pts.iter().map(|p| p.r).collect(), |r| (r / 90.0).powi(2));
    let angular = ks_statistic(pts.iter().map(|p| p.theta).collect(), |t| t / std::f64::consts::TAU);
    assert!(radial < critical, "radial KS {radial} >= {critical}");
    assert!(angular < critical, "angular KS {angular} >= {critical}");
}

#[test]
fn interferer_distance_matches_cartesian_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10_000 {
        let d = rng.random_range(180.0..2000.0);
        let a = sample_uniform_disk(90.0, &mut rng);
        let b = sample_uniform_disk(90.0, &mut rng);
        // Interferer cell at the origin, victim cell at (d, 0).
        let (ax, ay) = (a.r * a.theta.cos(), a.r * a.theta.sin());
        let (bx, by) = (d + b.r * b.theta.cos(), b.r * b.theta.sin());
        let expected = (bx - ax).hypot(by - ay);
        let got = interferer_distance(a, b, d);
        assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
    }
}

#[test]
fn taylor_error_decreases_with_distance() {
    for alpha in [2.0, 3.0, 4.0] {
        let errors: Vec<f64> = (0..8)
            .map(|i| 90.0 * 2.0 * 1.5f64.powi(i))
            .map(|d| {
                let num = mean_pathloss_numeric(d, 90.0, alpha, 1e-11).unwrap();
                (mean_pathloss_taylor(d, 90.0, alpha).unwrap() - num).abs() / num
            })
            .collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "alpha {alpha}: {errors:?}");
    }
}

#[test]
fn taylor_within_one_percent_for_well_separated_disks() {
    // Interferer and victim disks of equal radius R: d >= 2(R + R).
    for k in [4.0, 5.0, 8.0, 12.0, 20.0] {
        for alpha in [2.0, 3.0, 4.0] {
            let d = k * 90.0;
            let num = mean_pathloss_numeric(d, 90.0, alpha, 1e-10).unwrap();
            let err = (mean_pathloss_taylor(d, 90.0, alpha).unwrap() - num).abs() / num;
            assert!(err < 0.01, "d/R={k} alpha={alpha}: {err}");
        }
    }
}

#[test]
fn analytic_mean_interference_matches_simulation() {
    let s = scenario(5.0, 1, DuplexMode::Fd, -80.0);
    let analytic = total_mean_interference(&s.topology, &s.duplex).unwrap().total;
    let sim = simulate_mean_interference(&s.topology, &s.duplex, &McSettings::new(100_000, 5)).unwrap();
    let z = (analytic - sim.mean) / sim.std_error;
    assert!(z.abs() <= 3.0, "analytic {analytic:e}, simulated {:e} +- {:e} (z = {z:.2})", sim.mean, sim.std_error);
}

#[test]
fn analytic_and_simulated_lower_bounds_agree() {
    let s = scenario(5.0, 1, DuplexMode::Fd, -80.0);
    let settings = McSettings::new(100_000, 6);
    let lb = |source| {
        ec_lower_bound(
            &s.topology,
            &s.duplex,
            &s.qos,
            s.noise_w,
            &settings,
            LowerBoundOptions { source, ..Default::default() },
        )
        .unwrap()
    };
    let (a, b) = (lb(InterferenceSource::Analytic), lb(InterferenceSource::Simulated));
    // Both bounds share the signal samples, so only the simulated mean
    // interference contributes independent noise.
    let se = a.std_error.hypot(b.std_error);
    assert!((a.ec - b.ec).abs() <= 3.0 * se, "analytic {} vs simulated {} (se {se})", a.ec, b.ec);
}

#[test]
fn ec_is_nonincreasing_in_theta() {
    let s = scenario(5.0, 2, DuplexMode::Fd, -60.0);
    let settings = McSettings::new(20_000, 8);
    let ecs: Vec<f64> = [1e-6, 1e-5, 1e-4, 1e-3, 3e-3, 7e-3]
        .iter()
        .map(|&theta| {
            let qos = s.qos.with_theta(theta).unwrap();
            ec_exact_mc(&s.topology, &s.duplex, &qos, s.noise_w, &settings).unwrap().ec
        })
        .collect();
    assert!(ecs.windows(2).all(|w| w[1] <= w[0]), "{ecs:?}");
}

#[test]
fn fd_ec_is_nonincreasing_in_eta_and_hd_is_constant() {
    let s = scenario(5.0, 3, DuplexMode::Fd, 0.0);
    let grid = eta_grid_db(-120.0, 0.0, 5.0).unwrap();
    let settings = McSettings::new(20_000, 9);
    let sweep = sweep_eta(&s, &grid, &settings, &settings).unwrap();
    assert!(sweep.rows.windows(2).all(|w| w[1].fd_exact.ec <= w[0].fd_exact.ec));
    assert!(sweep.rows.windows(2).all(|w| w[1].fd_lb.ec <= w[0].fd_lb.ec));
    assert!(sweep.rows.iter().all(|r| r.hd_exact == sweep.rows[0].hd_exact && r.hd_lb == sweep.rows[0].hd_lb));
}

#[test]
fn lower_bound_below_exact_along_sweep() {
    let s = scenario(5.0, 4, DuplexMode::Fd, 0.0);
    let grid = eta_grid_db(-120.0, 0.0, 10.0).unwrap();
    let settings = McSettings::new(20_000, 10);
    for row in sweep_eta(&s, &grid, &settings, &settings).unwrap().rows {
        for (exact, lb) in [(row.hd_exact, row.hd_lb), (row.fd_exact, row.fd_lb)] {
            assert!(lb.ec <= exact.ec + 3.0 * exact.std_error.hypot(lb.std_error), "eta {} dB", row.eta_db);
        }
    }
}

#[test]
fn lower_bound_is_tighter_in_dense_networks() {
    let gap = |density: f64| {
        let gaps: Vec<f64> = (1..=10)
            .map(|seed| {
                let s = scenario(density, seed, DuplexMode::Fd, -120.0);
                let settings = McSettings::new(20_000, 100 + seed);
                let exact = ec_exact_mc(&s.topology, &s.duplex, &s.qos, s.noise_w, &settings).unwrap();
                let lb =
                    ec_lower_bound(&s.topology, &s.duplex, &s.qos, s.noise_w, &settings, Default::default()).unwrap();
                (exact.ec - lb.ec) / exact.ec
            })
            .collect();
        gaps.iter().sum::<f64>() / gaps.len() as f64
    };
    let (sparse, dense) = (gap(5.0), gap(50.0));
    assert!(dense < sparse, "dense gap {dense} not below sparse gap {sparse}");
}

#[test]
fn common_random_numbers_across_duplex_configs() {
    let s = scenario(5.0, 1, DuplexMode::Fd, -40.0);
    let settings = McSettings::new(10_000, 12);
    let hd = s.duplex.with_mode(DuplexMode::Hd);
    let many = ec_exact_mc_many(&s.topology, &[s.duplex, hd], &s.qos, s.noise_w, &settings).unwrap();
    let alone = ec_exact_mc(&s.topology, &s.duplex, &s.qos, s.noise_w, &settings).unwrap();
    assert_eq!(many[0], alone);
}
