use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetnet_ec::capacity::{check_theta_constraint, ThetaCheck};
use hetnet_ec::harness::{
    benchmark_runtime, concavity_suite, eta_grid_db, fd_gain, find_crossover, jensen_ordering_suite, small_theta_limit,
    sweep_eta, taylor_vs_oracle, ue_ue_vs_monte_carlo, BenchmarkPlan,
};
use hetnet_ec::io::{emit_benchmark, emit_breakdown, emit_sweep, save_topology};
use hetnet_ec::{dbm_to_watts, load_scenario, total_mean_interference, DuplexMode, Error, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "hetnet-ec", version, about = "Effective capacity of HD/FD heterogeneous cellular networks")]
struct Cli {
    /// Worker threads for Monte Carlo (0 = all cores, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file (TOML). Built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Trial seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the small-cell deployment.
    #[arg(long)]
    topology_seed: Option<u64>,
    /// Monte Carlo trials for both exact and lower-bound estimates.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Hd,
    Fd,
    Both,
}

impl ModeArg {
    fn modes(self) -> &'static [DuplexMode] {
        match self {
            ModeArg::Hd => &[DuplexMode::Hd],
            ModeArg::Fd => &[DuplexMode::Fd],
            ModeArg::Both => &[DuplexMode::Hd, DuplexMode::Fd],
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a small-cell deployment and save it as JSON.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-interferer mean interference of the tagged cell.
        #[arg(long)]
        breakdown: Option<PathBuf>,
    },
    /// HD/FD effective capacity over a grid of self-interference suppression values.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = -120.0, allow_negative_numbers = true)]
        eta_from: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        eta_to: f64,
        #[arg(long, default_value_t = 5.0)]
        eta_step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form interference and lower-bound checks against numerical oracles.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Random scenarios in the bound-ordering suite.
        #[arg(long, default_value_t = 100)]
        count: u64,
    },
    /// Runtime of exact Monte Carlo against the lower bound at matched standard error.
    Bench {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Fd)]
        mode: ModeArg,
        /// Target EC standard error, bits per block.
        #[arg(long, default_value_t = 0.25)]
        target_se: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// QoS-exponent constraint and the vanishing-exponent limit.
    Limits {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-6)]
        theta: f64,
    },
}

enum Outcome {
    Ok,
    ChecksFailed,
}

fn resolve(args: &ScenarioArgs) -> Result<Scenario, Error> {
    let mut config = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seeds.trials = seed;
    }
    if let Some(seed) = args.topology_seed {
        config.seeds.topology = seed;
    }
    if let Some(trials) = args.trials {
        config.trials.exact = trials;
        config.trials.lower_bound = trials;
    }
    Scenario::from_config(config)
}

fn with_mode_suffix(path: &Path, mode: DuplexMode) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{}{ext}", mode.to_string().to_lowercase()))
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let workers = cli.workers;
    match cli.command {
        Command::Generate { scenario, out, breakdown } => {
            let s = resolve(&scenario)?;
            save_topology(&s.topology, &out)?;
            let (tagged, _) = s.topology.tagged_cell()?;
            println!(
                "{} cells, tagged cell {tagged}, hash {} -> {}",
                s.topology.len(),
                s.topology_hash(),
                out.display()
            );
            if let Some(path) = breakdown {
                let b = total_mean_interference(&s.topology, &s.duplex)?;
                emit_breakdown(&b, &path)?;
                println!("mean interference {:.6e} W -> {}", b.total, path.display());
            }
            Ok(Outcome::Ok)
        }
        Command::Sweep { scenario, eta_from, eta_to, eta_step, out } => {
            let s = resolve(&scenario)?;
            let grid = eta_grid_db(eta_from, eta_to, eta_step)?;
            let result =
                sweep_eta(&s, &grid, &s.exact_settings().workers(workers), &s.lower_bound_settings().workers(workers))?;
            let meta = emit_sweep(&result, &out)?;
            println!("{} points -> {} ({})", grid.len(), out.display(), meta.display());
            println!("max FD/HD gain {:.3}", fd_gain(&result));
            match find_crossover(&result) {
                Some(x) => println!("crossover {x:.2} dB"),
                None => println!("no crossover on this grid"),
            }
            Ok(Outcome::Ok)
        }
        Command::Validate { scenario, count } => {
            let s = resolve(&scenario)?;
            let radius = s.config.small_cells.radius_m;
            let mut ok = true;

            // Interferer and victim disks of equal radius: d >= 2(R1 + R2) = 4R.
            let taylor = taylor_vs_oracle(radius, &[4.0, 5.0, 10.0, 20.0], &[2.0, 3.0, 4.0])?;
            let worst = taylor.iter().map(|c| c.relative_error).fold(0.0, f64::max);
            let pass = worst < 0.01;
            ok &= pass;
            println!("{} taylor vs quadrature, d/R in [4, 20]: worst relative error {worst:.3e}", status(pass));

            let ue_power = dbm_to_watts(s.config.radio.ue_power_dbm);
            let alpha = s.config.small_cells.alpha;
            let u =
                ue_ue_vs_monte_carlo(ue_power, 5.0 * radius, radius, radius, alpha, 1_000_000, s.config.seeds.trials)?;
            println!(
                "INFO ue-ue closed form {:.6e} W vs Monte Carlo {:.6e} W (z = {:.2}, relative {:.3e})",
                u.closed_form,
                u.monte_carlo,
                u.z_score(),
                (u.closed_form / u.monte_carlo - 1.0).abs()
            );

            let checks = jensen_ordering_suite(count, s.config.trials.exact, s.config.seeds.trials)?;
            let held = checks.iter().filter(|c| c.holds()).count();
            let pass = held == checks.len();
            ok &= pass;
            println!("{} lower bound <= exact + 3 sigma in {held}/{} random scenarios", status(pass), checks.len());

            let failures = concavity_suite(10_000, s.config.seeds.trials);
            ok &= failures == 0;
            println!("{} concavity in interference: {failures} failures in 10000 samples", status(failures == 0));
            Ok(if ok { Outcome::Ok } else { Outcome::ChecksFailed })
        }
        Command::Bench { scenario, mode, target_se, out } => {
            let s = resolve(&scenario)?;
            for &m in mode.modes() {
                let mut scenario_m = s.clone();
                scenario_m.duplex = s.duplex.with_mode(m);
                let plan =
                    BenchmarkPlan { target_std_error: target_se, seed: s.config.seeds.trials, ..Default::default() };
                let report = benchmark_runtime(&scenario_m, &plan)?;
                let path = if mode == ModeArg::Both { with_mode_suffix(&out, m) } else { out.clone() };
                emit_benchmark(&report, &path)?;
                println!(
                    "{m}: M={} exact {:.3} s ({} trials), lower bound {:.3} s ({} trials), speedup {:.1} -> {}",
                    report.cells,
                    report.exact_seconds,
                    report.exact_trials,
                    report.lb_seconds,
                    report.lb_trials,
                    report.speedup(),
                    path.display()
                );
            }
            Ok(Outcome::Ok)
        }
        Command::Limits { scenario, mode, theta } => {
            let s = resolve(&scenario)?;
            let mut ok = true;
            match check_theta_constraint(&s.qos) {
                ThetaCheck::Ok { bound } => println!("PASS theta {} within bound {bound:.4e}", s.qos.theta),
                ThetaCheck::Warn { bound } => {
                    ok = false;
                    println!("WARN theta {} exceeds bound {bound:.4e}", s.qos.theta)
                }
            }
            for &m in mode.modes() {
                let mut scenario_m = s.clone();
                scenario_m.duplex = s.duplex.with_mode(m);
                let r = small_theta_limit(&scenario_m, theta, &s.exact_settings().workers(workers))?;
                let pass = r.relative_gap < 0.01;
                ok &= pass;
                println!(
                    "{} {m}: EC({theta:e}) = {:.6e}, mean rate {:.6e}, relative gap {:.3e}",
                    status(pass),
                    r.ec,
                    r.mean_rate,
                    r.relative_gap
                );
            }
            Ok(if ok { Outcome::Ok } else { Outcome::ChecksFailed })
        }
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
