//! Experiments: η sweeps of HD/FD effective capacity, FD gain and crossover
//! extraction, runtime benchmarking and the validation suites.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    ec_exact_mc, ec_exact_mc_many, ec_lower_bound, ec_lower_bound_many, g_concavity_check, EcEstimate, GParams,
    LowerBoundOptions, McSettings,
};
use crate::channel::{db_to_linear, DuplexMode};
use crate::error::{Error, Result};
use crate::geometry::sample_uniform_disk;
use crate::interference::{mean_interference_ue_ue, mean_pathloss_numeric, mean_pathloss_taylor, ORACLE_TOLERANCE};
use crate::io::{Scenario, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta_db: f64,
    pub eta: f64,
    pub hd_exact: EcEstimate,
    pub fd_exact: EcEstimate,
    pub hd_lb: EcEstimate,
    pub fd_lb: EcEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFingerprint {
    pub topology_hash: String,
    pub topology_seed: Option<u64>,
    pub seed: u64,
    pub exact_trials: u64,
    pub lower_bound_trials: u64,
    pub theta: f64,
    pub kappa: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub eta_grid_db: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub fingerprint: SweepFingerprint,
}

/// Inclusive dB grid `from, from + step, ..., <= to`.
pub fn eta_grid_db(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(to >= from) {
        return Err(Error::param("eta grid", format!("need step > 0 and to >= from, got {from}..{to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| from + i as f64 * step).collect())
}

/// Evaluates HD and FD exact EC and lower bounds over an η grid (dB).
///
/// All FD points and the HD reference share one set of Monte Carlo draws;
/// the lower bounds share one set of signal samples. HD does not depend on η
/// and is computed once.
pub fn sweep_eta(
    scenario: &Scenario,
    eta_grid_db: &[f64],
    exact: &McSettings,
    lower_bound: &McSettings,
) -> Result<SweepResult> {
    if eta_grid_db.is_empty() {
        return Err(Error::param("eta grid", "must not be empty"));
    }
    if eta_grid_db.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("eta grid", "must be strictly increasing"));
    }
    if let Some(bad) = eta_grid_db.iter().find(|&&db| !(db <= 0.0)) {
        return Err(Error::param("eta grid", format!("eta must be at most 0 dB, got {bad}")));
    }
    let base = scenario.duplex;
    let mut duplexes = vec![base.with_mode(DuplexMode::Hd)];
    for &db in eta_grid_db {
        duplexes.push(base.with_mode(DuplexMode::Fd).with_eta(db_to_linear(db))?);
    }
    let exact_est = ec_exact_mc_many(&scenario.topology, &duplexes, &scenario.qos, scenario.noise_w, exact)?;
    let lb_est = ec_lower_bound_many(
        &scenario.topology,
        &duplexes,
        &scenario.qos,
        scenario.noise_w,
        lower_bound,
        LowerBoundOptions::default(),
    )?;
    let rows = eta_grid_db
        .iter()
        .enumerate()
        .map(|(i, &db)| SweepRow {
            eta_db: db,
            eta: duplexes[i + 1].eta,
            hd_exact: exact_est[0],
            fd_exact: exact_est[i + 1],
            hd_lb: lb_est[0],
            fd_lb: lb_est[i + 1],
        })
        .collect();
    Ok(SweepResult {
        eta_grid_db: eta_grid_db.to_vec(),
        rows,
        fingerprint: SweepFingerprint {
            topology_hash: scenario.topology_hash(),
            topology_seed: scenario.config.topology_file.is_none().then_some(scenario.config.seeds.topology),
            seed: exact.seed,
            exact_trials: exact.trials,
            lower_bound_trials: lower_bound.trials,
            theta: scenario.qos.theta,
            kappa: base.kappa,
            cells: scenario.topology.len(),
        },
    })
}

/// Largest FD/HD exact EC ratio over the sweep.
pub fn fd_gain(sweep: &SweepResult) -> f64 {
    sweep.rows.iter().map(|r| r.fd_exact.ec / r.hd_exact.ec).fold(f64::NEG_INFINITY, f64::max)
}

/// η (dB) where FD and HD exact EC cross, by linear interpolation in dB
/// between the first pair of grid points whose difference changes sign.
pub fn find_crossover(sweep: &SweepResult) -> Option<f64> {
    let diff: Vec<(f64, f64)> = sweep.rows.iter().map(|r| (r.eta_db, r.fd_exact.ec - r.hd_exact.ec)).collect();
    if let Some(&(db, _)) = diff.iter().find(|(_, d)| *d == 0.0) {
        return Some(db);
    }
    diff.windows(2).find(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0)).map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        x0 + (x1 - x0) * y0 / (y0 - y1)
    })
}

/// Relative gap `(exact - LB) / exact` of the FD curves at the first grid point.
pub fn fd_lower_bound_gap(sweep: &SweepResult) -> f64 {
    let r = &sweep.rows[0];
    (r.fd_exact.ec - r.fd_lb.ec) / r.fd_exact.ec
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub exact_seconds: f64,
    pub lb_seconds: f64,
    pub exact_trials: u64,
    pub lb_trials: u64,
    pub exact_std_error: f64,
    pub lb_std_error: f64,
    pub target_std_error: f64,
    pub cells: usize,
    pub workers: usize,
}

impl BenchmarkReport {
    pub fn speedup(&self) -> f64 {
        self.exact_seconds / self.lb_seconds
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkPlan {
    /// EC standard error both methods must reach, bits per block.
    pub target_std_error: f64,
    pub pilot_trials: u64,
    pub seed: u64,
}

impl Default for BenchmarkPlan {
    fn default() -> Self {
        Self { target_std_error: 0.25, pilot_trials: 4 * crate::capacity::BATCH_TRIALS, seed: 1 }
    }
}

fn trials_for(pilot: &EcEstimate, target: f64) -> u64 {
    let per_trial_sd = pilot.std_error * (pilot.trials as f64).sqrt();
    ((per_trial_sd / target).powi(2).ceil() as u64).max(1)
}

/// Times exact Monte Carlo against the analytic lower bound when each runs
/// long enough to reach the same EC standard error. Pilot runs size the
/// trial counts and are not timed; the timed runs use a single worker.
pub fn benchmark_runtime(scenario: &Scenario, plan: &BenchmarkPlan) -> Result<BenchmarkReport> {
    let t = &scenario.topology;
    let (d, q, n) = (&scenario.duplex, &scenario.qos, scenario.noise_w);
    let pilot = McSettings::new(plan.pilot_trials, plan.seed ^ 0x9e37_79b9_7f4a_7c15).workers(0);
    let exact_trials = trials_for(&ec_exact_mc(t, d, q, n, &pilot)?, plan.target_std_error);
    let lb_trials =
        trials_for(&ec_lower_bound(t, d, q, n, &pilot, LowerBoundOptions::default())?, plan.target_std_error);

    let start = Instant::now();
    let exact = ec_exact_mc(t, d, q, n, &McSettings::new(exact_trials, plan.seed).workers(1))?;
    let exact_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let lb =
        ec_lower_bound(t, d, q, n, &McSettings::new(lb_trials, plan.seed).workers(1), LowerBoundOptions::default())?;
    let lb_seconds = start.elapsed().as_secs_f64();

    Ok(BenchmarkReport {
        exact_seconds: exact_seconds.max(f64::MIN_POSITIVE),
        lb_seconds: lb_seconds.max(f64::MIN_POSITIVE),
        exact_trials,
        lb_trials,
        exact_std_error: exact.std_error,
        lb_std_error: lb.std_error,
        target_std_error: plan.target_std_error,
        cells: t.len(),
        workers: 1,
    })
}

// ---------------------------------------------------------------------------
// Validation suites

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCheck {
    pub distance: f64,
    pub radius: f64,
    pub alpha: f64,
    pub taylor: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

/// Closed-form mean path loss against the quadrature oracle on a grid of
/// `d/R` ratios and path-loss exponents.
pub fn taylor_vs_oracle(radius: f64, ratios: &[f64], alphas: &[f64]) -> Result<Vec<TaylorCheck>> {
    let mut out = Vec::with_capacity(ratios.len() * alphas.len());
    for &k in ratios {
        for &alpha in alphas {
            let distance = k * radius;
            let taylor = mean_pathloss_taylor(distance, radius, alpha)?;
            let numeric = mean_pathloss_numeric(distance, radius, alpha, ORACLE_TOLERANCE)?;
            out.push(TaylorCheck {
                distance,
                radius,
                alpha,
                taylor,
                numeric,
                relative_error: (taylor - numeric).abs() / numeric,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeUeCheck {
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
}

impl UeUeCheck {
    pub fn z_score(&self) -> f64 {
        (self.closed_form - self.monte_carlo) / self.std_error
    }
}

/// Closed-form UE→UE mean interference against a Monte Carlo average over
/// independent uniform positions of both UEs.
pub fn ue_ue_vs_monte_carlo(
    ue_power_w: f64,
    distance: f64,
    interferer_radius: f64,
    victim_radius: f64,
    alpha: f64,
    pairs: u64,
    seed: u64,
) -> Result<UeUeCheck> {
    let closed_form = mean_interference_ue_ue(ue_power_w, distance, interferer_radius, victim_radius, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..pairs {
        let a = sample_uniform_disk(interferer_radius, &mut rng).to_cartesian();
        let b = sample_uniform_disk(victim_radius, &mut rng).to_cartesian();
        let v = ue_power_w * (distance + b.x - a.x).hypot(b.y - a.y).powf(-alpha);
        sum += v;
        sum_sq += v * v;
    }
    let n = pairs as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    Ok(UeUeCheck { closed_form, monte_carlo: mean, std_error: (var / n).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenCheck {
    pub scenario_seed: u64,
    pub mode: DuplexMode,
    pub beta: f64,
    pub exact: EcEstimate,
    pub lower_bound: EcEstimate,
}

impl JensenCheck {
    pub fn combined_std_error(&self) -> f64 {
        self.exact.std_error.hypot(self.lower_bound.std_error)
    }

    /// `LB <= exact + 3σ`.
    pub fn holds(&self) -> bool {
        self.lower_bound.ec <= self.exact.ec + 3.0 * self.combined_std_error()
    }
}

/// Random valid scenario with `β <= 1`: topology density, cancellation,
/// duplex mode and QoS exponent are all drawn from `seed`.
pub fn random_scenario(seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..100u64 {
        let mut c = ScenarioConfig::default();
        c.small_cells.density_per_km2 = rng.random_range(1.0..20.0);
        c.seeds.topology = seed.wrapping_mul(1000).wrapping_add(attempt);
        c.seeds.trials = rng.random();
        c.duplex.mode = if rng.random_bool(0.5) { DuplexMode::Fd } else { DuplexMode::Hd };
        c.duplex.eta_db = Some(rng.random_range(-110.0..0.0));
        c.duplex.kappa = rng.random_range(0.5..=1.0);
        let bound = 1.0 / (c.qos.frame_time_s * c.qos.bandwidth_hz * std::f64::consts::LOG2_E);
        c.qos.theta = bound * 10f64.powf(rng.random_range(-4.0..0.0));
        let scenario = Scenario::from_config(c)?;
        if scenario.topology.tagged.is_some() {
            return Ok(scenario);
        }
    }
    Err(Error::Validation(format!("no non-empty topology found for scenario seed {seed}")))
}

/// Jensen ordering of the analytic lower bound against exact Monte Carlo
/// over `count` random scenarios.
pub fn jensen_ordering_suite(count: u64, trials: u64, seed: u64) -> Result<Vec<JensenCheck>> {
    (0..count)
        .map(|i| {
            let scenario_seed = seed.wrapping_add(i);
            let s = random_scenario(scenario_seed)?;
            let settings = McSettings::new(trials, s.config.seeds.trials);
            let exact = ec_exact_mc(&s.topology, &s.duplex, &s.qos, s.noise_w, &settings)?;
            let lower_bound =
                ec_lower_bound(&s.topology, &s.duplex, &s.qos, s.noise_w, &settings, LowerBoundOptions::default())?;
            Ok(JensenCheck { scenario_seed, mode: s.duplex.mode, beta: s.qos.beta(), exact, lower_bound })
        })
        .collect()
}

/// Concavity of `g` in the interference for random `(s, I, a)` with `β ∈ [0, 1]`.
/// Returns the number of samples that failed.
pub fn concavity_suite(samples: u64, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .filter(|_| {
            let beta = rng.random_range(0.0..=1.0);
            let a = 10f64.powf(rng.random_range(-16.0..-6.0));
            let s = 10f64.powf(rng.random_range(-16.0..-3.0));
            let i = 10f64.powf(rng.random_range(-16.0..-4.0));
            let params = GParams::new(a, beta).expect("valid g parameters");
            !g_concavity_check(&params, s, &[i])
        })
        .count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub theta: f64,
    pub ec: f64,
    pub mean_rate: f64,
    pub relative_gap: f64,
}

/// EC at a vanishing QoS exponent against the sample mean rate of the same draws.
pub fn small_theta_limit(scenario: &Scenario, theta: f64, settings: &McSettings) -> Result<LimitReport> {
    let qos = scenario.qos.with_theta(theta)?;
    let est = ec_exact_mc(&scenario.topology, &scenario.duplex, &qos, scenario.noise_w, settings)?;
    Ok(LimitReport {
        theta,
        ec: est.ec,
        mean_rate: est.mean_rate,
        relative_gap: (est.ec - est.mean_rate).abs() / est.mean_rate,
    })
}
