//! Effective capacity of the tagged UE.
//!
//! `EC(θ) = -(1/θ) ln E[(1 + SINR)^-β]` with `β = θ T_f BW log2 e`, estimated
//! either exactly by Monte Carlo over UE placements and fading, or through the
//! Jensen lower bound that replaces the random interference by its mean.
//!
//! Monte Carlo work is split into fixed batches of [`BATCH_TRIALS`]; batch `b`
//! draws from its own ChaCha stream keyed by `(seed, b)` and batches are
//! reduced in index order, so estimates are bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{path_loss_gain, resource_share, DuplexConfig, DuplexMode, Fading, QosConfig};
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform_disk, NetworkTopology, Point, PolarPoint, SmallCell};
use crate::interference::total_mean_interference;
use crate::quadrature::{integrate, Tolerance};

pub const BATCH_TRIALS: u64 = 4096;

const STREAM_EXACT: u64 = 0;
const STREAM_SIGNAL: u64 = 1 << 40;
const STREAM_INTERFERENCE: u64 = 2 << 40;

/// Truncation point of the fading integral in the quadrature lower bound.
const FADING_INTEGRAL_CUTOFF: f64 = 60.0;

/// Relative step used to differentiate the simulated lower bound w.r.t. Ī.
const INTERFERENCE_SLOPE_STEP: f64 = 1e-4;

// ---------------------------------------------------------------------------
// g-function and concavity

/// Parameters of `g(s, I) = (1 + s/(I + a))^-β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GParams {
    /// RSI plus noise, watts.
    pub a: f64,
    pub beta: f64,
}

impl GParams {
    pub fn new(a: f64, beta: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::param("a", format!("must be positive, got {a}")));
        }
        if !(beta >= 0.0) {
            return Err(Error::param("beta", format!("must be non-negative, got {beta}")));
        }
        Ok(Self { a, beta })
    }
}

pub fn g(s: f64, interference: f64, params: &GParams) -> f64 {
    (-params.beta * (s / (interference + params.a)).ln_1p()).exp()
}

/// Second derivative of `g` in the interference, in closed form:
///
/// `β s / (I+a)⁴ · (1 + s/(I+a))^-(β+2) · ((β−1) s − 2(I+a))`
pub fn g_second_derivative(s: f64, interference: f64, params: &GParams) -> f64 {
    let x = interference + params.a;
    let beta = params.beta;
    beta * s / x.powi(4) * (1.0 + s / x).powf(-(beta + 2.0)) * ((beta - 1.0) * s - 2.0 * x)
}

/// True when `g` is concave in the interference at every grid point.
///
/// Concavity at a point is equivalent to `β ≤ 1 + 2/SINR` with
/// `SINR = s/(I+a)`; the two tests are cross-checked here.
pub fn g_concavity_check(params: &GParams, s: f64, interference_grid: &[f64]) -> bool {
    interference_grid.iter().all(|&i| {
        let concave = g_second_derivative(s, i, params) <= 0.0;
        let sinr = s / (i + params.a);
        let sharp = s == 0.0 || params.beta == 0.0 || params.beta <= 1.0 + 2.0 / sinr;
        debug_assert_eq!(concave, sharp, "second-derivative sign disagrees with β ≤ 1 + 2/SINR at I = {i}");
        concave && sharp
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ThetaCheck {
    Ok { bound: f64 },
    Warn { bound: f64 },
}

impl ThetaCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, ThetaCheck::Ok { .. })
    }
}

/// `θ ≤ 1/(T_f BW log2 e)`, the range where the lower bound is guaranteed.
pub fn check_theta_constraint(qos: &QosConfig) -> ThetaCheck {
    let bound = qos.theta_bound();
    if qos.theta <= bound {
        ThetaCheck::Ok { bound }
    } else {
        ThetaCheck::Warn { bound }
    }
}

// ---------------------------------------------------------------------------
// Settings and results

/// Placement of every UE relative to its serving BS.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UePlacement {
    #[default]
    Uniform,
    /// Every UE sits at the same offset from its BS (degenerate test scenarios).
    Fixed(PolarPoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub fading: Fading,
    pub placement: UePlacement,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seed, workers: 0, fading: Fading::Rayleigh, placement: UePlacement::Uniform }
    }

    pub fn workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::NoTrials);
        }
        Ok(())
    }

    fn batches(&self) -> impl Iterator<Item = (u64, u64)> {
        let trials = self.trials;
        (0..trials.div_ceil(BATCH_TRIALS)).map(move |b| (b, (trials - b * BATCH_TRIALS).min(BATCH_TRIALS)))
    }

    fn rng(&self, domain: u64, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(domain | batch);
        rng
    }

    fn place<R: Rng + ?Sized>(&self, radius: f64, rng: &mut R) -> PolarPoint {
        match self.placement {
            UePlacement::Uniform => sample_uniform_disk(radius, rng),
            UePlacement::Fixed(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcMethod {
    ExactMc,
    LowerBoundAnalytic,
    LowerBoundSimulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcEstimate {
    /// Bits per scheduling block.
    pub ec: f64,
    pub std_error: f64,
    pub trials: u64,
    pub theta: f64,
    pub mode: DuplexMode,
    pub method: EcMethod,
    /// Sample mean of the per-block rate over the same draws.
    pub mean_rate: f64,
    /// Mean interference plugged into a lower bound.
    pub mean_interference: Option<f64>,
    /// False when the exponent exceeds 1 and the bound is not guaranteed.
    pub bound_guaranteed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Running mean/variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

/// Accumulates `w = (1+SINR)^-exponent - 1` and the block rate for one target.
#[derive(Debug, Clone, Copy, Default)]
struct EcAccumulator {
    w: Moments,
    rate: Moments,
}

impl EcAccumulator {
    fn merge(&mut self, other: &EcAccumulator) {
        self.w.merge(&other.w);
        self.rate.merge(&other.rate);
    }

    /// EC from the accumulated moments, with a delta-method standard error.
    fn estimate(&self, theta: f64) -> (f64, f64) {
        let z = 1.0 + self.w.mean;
        let ec = -self.w.mean.ln_1p() / theta + 0.0;
        (ec, self.w.std_error() / (theta * z))
    }
}

fn run_batches<T, F>(settings: &McSettings, batch: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let batches: Vec<(u64, u64)> = settings.batches().collect();
    match settings.workers {
        1 => batches.into_iter().map(|(b, n)| batch(b, n)).collect(),
        0 => batches.into_par_iter().map(|(b, n)| batch(b, n)).collect(),
        w => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("thread pool")
            .install(|| batches.into_par_iter().map(|(b, n)| batch(b, n)).collect()),
    }
}

fn reduce(parts: Vec<Vec<EcAccumulator>>, targets: usize) -> Vec<EcAccumulator> {
    let mut total = vec![EcAccumulator::default(); targets];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Per-trial draws

/// One Monte Carlo realization of UE positions and fading.
///
/// `ue_positions` holds one UE per small cell (the tagged entry equals
/// `tagged_ue`); fading vectors follow the same cell order, with index 0 of
/// `bs_fading` reserved for the macro BS.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDraw {
    pub tagged_ue: PolarPoint,
    pub ue_positions: Vec<PolarPoint>,
    pub signal_fading: f64,
    pub bs_fading: Vec<f64>,
    pub ue_fading: Vec<f64>,
}

/// Received powers at the tagged UE for one draw, watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedPowers {
    pub signal: f64,
    pub bs_interference: f64,
    pub ue_interference: f64,
}

/// Geometry of the tagged UE's surroundings prepared for repeated draws.
pub struct InterferenceField<'a> {
    topology: &'a NetworkTopology,
    tagged: usize,
    cell: SmallCell,
    ue_power: f64,
}

impl<'a> InterferenceField<'a> {
    pub fn new(topology: &'a NetworkTopology, ue_power_w: f64) -> Result<Self> {
        topology.validate()?;
        let (tagged, cell) = topology.tagged_cell()?;
        Ok(Self { topology, tagged, cell: *cell, ue_power: ue_power_w })
    }

    pub fn empty_draw(&self) -> TrialDraw {
        let n = self.topology.len();
        TrialDraw {
            tagged_ue: PolarPoint::CENTER,
            ue_positions: vec![PolarPoint::CENTER; n],
            signal_fading: 1.0,
            bs_fading: vec![1.0; n + 1],
            ue_fading: vec![1.0; n],
        }
    }

    /// Fills `draw` in a fixed order: tagged UE, its fading, macro fading,
    /// then for each other cell its BS fading, UE position and UE fading.
    pub fn draw<R: Rng + ?Sized>(&self, settings: &McSettings, rng: &mut R, draw: &mut TrialDraw) {
        let fading = settings.fading;
        draw.tagged_ue = settings.place(self.cell.radius, rng);
        draw.ue_positions[self.tagged] = draw.tagged_ue;
        draw.signal_fading = fading.draw(rng);
        draw.bs_fading[0] = fading.draw(rng);
        for (k, cell) in self.topology.small_cells.iter().enumerate() {
            if k == self.tagged {
                continue;
            }
            draw.bs_fading[k + 1] = fading.draw(rng);
            draw.ue_positions[k] = settings.place(cell.radius, rng);
            draw.ue_fading[k] = fading.draw(rng);
        }
    }

    pub fn powers(&self, draw: &TrialDraw) -> ReceivedPowers {
        let ue: Point = self.cell.center.offset(draw.tagged_ue);
        let signal = self.cell.power_w * draw.signal_fading * path_loss_gain(draw.tagged_ue.r, self.cell.alpha);
        let m = &self.topology.macro_bs;
        let mut bs = m.power_w * draw.bs_fading[0] * path_loss_gain(m.position.distance(&ue), m.alpha);
        let mut ue_sum = 0.0;
        for (k, cell) in self.topology.small_cells.iter().enumerate() {
            if k == self.tagged {
                continue;
            }
            bs += cell.power_w * draw.bs_fading[k + 1] * path_loss_gain(cell.center.distance(&ue), cell.alpha);
            let other = cell.center.offset(draw.ue_positions[k]);
            ue_sum += self.ue_power * draw.ue_fading[k] * path_loss_gain(other.distance(&ue), cell.alpha);
        }
        ReceivedPowers { signal, bs_interference: bs, ue_interference: ue_sum }
    }
}

// ---------------------------------------------------------------------------
// Exact Monte Carlo

#[derive(Debug, Clone, Copy)]
struct ExactTarget {
    mode: DuplexMode,
    floor: f64,
    exponent: f64,
    rate_scale: f64,
}

impl ExactTarget {
    fn new(duplex: &DuplexConfig, qos: &QosConfig, noise_w: f64) -> Self {
        let share = resource_share(duplex.mode);
        Self {
            mode: duplex.mode,
            floor: duplex.rsi() + noise_w,
            exponent: share * qos.beta(),
            rate_scale: share * qos.block_symbols() * std::f64::consts::LOG2_E,
        }
    }

    #[inline]
    fn accumulate(&self, p: &ReceivedPowers, acc: &mut EcAccumulator) {
        let interference = match self.mode {
            DuplexMode::Fd => p.bs_interference + p.ue_interference,
            DuplexMode::Hd => p.bs_interference,
        };
        let log_gain = (p.signal / (interference + self.floor)).ln_1p();
        acc.w.push((-self.exponent * log_gain).exp_m1());
        acc.rate.push(self.rate_scale * log_gain);
    }
}

fn check_noise(noise_w: f64) -> Result<()> {
    if !(noise_w > 0.0) {
        return Err(Error::param("noise", format!("must be positive, got {noise_w}")));
    }
    Ok(())
}

/// Exact EC for several duplex configurations on shared draws (common
/// random numbers across the configurations).
pub fn ec_exact_mc_many(
    topology: &NetworkTopology,
    duplexes: &[DuplexConfig],
    qos: &QosConfig,
    noise_w: f64,
    settings: &McSettings,
) -> Result<Vec<EcEstimate>> {
    settings.check()?;
    check_noise(noise_w)?;
    let ue_power = duplexes.first().map_or(0.0, |d| d.ue_tx_power_w);
    if duplexes.iter().any(|d| d.ue_tx_power_w != ue_power) {
        return Err(Error::param("ue_tx_power", "shared draws need one UE transmit power"));
    }
    let field = InterferenceField::new(topology, ue_power)?;
    let targets: Vec<ExactTarget> = duplexes.iter().map(|d| ExactTarget::new(d, qos, noise_w)).collect();

    let parts = run_batches(settings, |b, n| {
        let mut rng = settings.rng(STREAM_EXACT, b);
        let mut draw = field.empty_draw();
        let mut acc = vec![EcAccumulator::default(); targets.len()];
        for _ in 0..n {
            field.draw(settings, &mut rng, &mut draw);
            let p = field.powers(&draw);
            for (t, a) in targets.iter().zip(acc.iter_mut()) {
                t.accumulate(&p, a);
            }
        }
        acc
    });
    let totals = reduce(parts, targets.len());
    Ok(totals
        .iter()
        .zip(duplexes)
        .map(|(acc, d)| {
            let (ec, std_error) = acc.estimate(qos.theta);
            EcEstimate {
                ec,
                std_error,
                trials: settings.trials,
                theta: qos.theta,
                mode: d.mode,
                method: EcMethod::ExactMc,
                mean_rate: acc.rate.mean,
                mean_interference: None,
                bound_guaranteed: true,
            }
        })
        .collect())
}

/// Exact EC of the tagged UE by Monte Carlo over every UE position and every
/// link's fading.
pub fn ec_exact_mc(
    topology: &NetworkTopology,
    duplex: &DuplexConfig,
    qos: &QosConfig,
    noise_w: f64,
    settings: &McSettings,
) -> Result<EcEstimate> {
    Ok(ec_exact_mc_many(topology, std::slice::from_ref(duplex), qos, noise_w, settings)?.remove(0))
}

/// Monte Carlo mean of the interference (BS plus, in FD, UE) at the tagged UE.
pub fn simulate_mean_interference(
    topology: &NetworkTopology,
    duplex: &DuplexConfig,
    settings: &McSettings,
) -> Result<InterferenceEstimate> {
    settings.check()?;
    let field = InterferenceField::new(topology, duplex.ue_tx_power_w)?;
    let parts = run_batches(settings, |b, n| {
        let mut rng = settings.rng(STREAM_INTERFERENCE, b);
        let mut draw = field.empty_draw();
        let mut m = Moments::default();
        for _ in 0..n {
            field.draw(settings, &mut rng, &mut draw);
            let p = field.powers(&draw);
            m.push(match duplex.mode {
                DuplexMode::Fd => p.bs_interference + p.ue_interference,
                DuplexMode::Hd => p.bs_interference,
            });
        }
        m
    });
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(InterferenceEstimate { mean: total.mean, std_error: total.std_error(), trials: settings.trials })
}

// ---------------------------------------------------------------------------
// Jensen lower bound

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceSource {
    /// Closed-form Taylor mean interference.
    #[default]
    Analytic,
    /// Monte Carlo average of the interference.
    Simulated,
}

/// How the remaining expectation over the desired signal power is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalExpectation {
    #[default]
    MonteCarlo,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LowerBoundOptions {
    pub source: InterferenceSource,
    pub signal: SignalExpectation,
}

/// `E_s[(1 + s/offset)^-exponent] - 1` target for the signal-only pass.
#[derive(Debug, Clone, Copy)]
struct LbTarget {
    offset: f64,
    exponent: f64,
    rate_scale: f64,
}

impl LbTarget {
    #[inline]
    fn accumulate(&self, s: f64, acc: &mut EcAccumulator) {
        let log_gain = (s / self.offset).ln_1p();
        acc.w.push((-self.exponent * log_gain).exp_m1());
        acc.rate.push(self.rate_scale * log_gain);
    }
}

fn lb_monte_carlo(cell: &SmallCell, targets: &[LbTarget], settings: &McSettings) -> Vec<EcAccumulator> {
    let parts = run_batches(settings, |b, n| {
        let mut rng = settings.rng(STREAM_SIGNAL, b);
        let mut acc = vec![EcAccumulator::default(); targets.len()];
        for _ in 0..n {
            let ue = settings.place(cell.radius, &mut rng);
            let s = cell.power_w * settings.fading.draw(&mut rng) * path_loss_gain(ue.r, cell.alpha);
            for (t, a) in targets.iter().zip(acc.iter_mut()) {
                t.accumulate(s, a);
            }
        }
        acc
    });
    reduce(parts, targets.len())
}

/// `E_s[w]` by quadrature over the tagged UE's distance and its fading.
fn lb_quadrature(cell: &SmallCell, target: &LbTarget, settings: &McSettings) -> Result<f64> {
    let tol = Tolerance::relative(1e-10);
    let w_of = |s: f64| (-target.exponent * (s / target.offset).ln_1p()).exp_m1();
    let faded = |mean_signal: f64| -> Result<f64> {
        match settings.fading {
            Fading::Unit => Ok(w_of(mean_signal)),
            Fading::Rayleigh => Ok(integrate(
                |h| (-h).exp() * w_of(h * mean_signal),
                0.0,
                FADING_INTEGRAL_CUTOFF,
                Tolerance { relative: 1e-12, absolute: 1e-300, max_evaluations: 200_000 },
            )?
            .value),
        }
    };
    let at_distance = |r: f64| cell.power_w * path_loss_gain(r, cell.alpha);
    match settings.placement {
        UePlacement::Fixed(p) => faded(at_distance(p.r)),
        UePlacement::Uniform => {
            let radius = cell.radius;
            let mut failure = None;
            let mut density_weighted = |r: f64| match faded(at_distance(r)) {
                Ok(v) => 2.0 * r / (radius * radius) * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            };
            let kink = crate::channel::NEAR_FIELD_CLAMP_M.min(radius);
            let near = integrate(&mut density_weighted, 0.0, kink, tol);
            let far = integrate(&mut density_weighted, kink, radius, tol);
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(near?.value + far?.value)
        }
    }
}

/// Mean interference for the lower bound, with its standard error.
fn bound_interference(
    topology: &NetworkTopology,
    duplex: &DuplexConfig,
    settings: &McSettings,
    source: InterferenceSource,
) -> Result<(f64, f64)> {
    match source {
        InterferenceSource::Analytic => Ok((total_mean_interference(topology, duplex)?.total, 0.0)),
        InterferenceSource::Simulated => {
            let sim = simulate_mean_interference(topology, duplex, settings)?;
            Ok((sim.mean, sim.std_error))
        }
    }
}

/// Jensen lower bound on EC for several duplex configurations sharing the
/// same signal samples.
pub fn ec_lower_bound_many(
    topology: &NetworkTopology,
    duplexes: &[DuplexConfig],
    qos: &QosConfig,
    noise_w: f64,
    settings: &McSettings,
    options: LowerBoundOptions,
) -> Result<Vec<EcEstimate>> {
    settings.check()?;
    check_noise(noise_w)?;
    let (_, cell) = topology.tagged_cell()?;
    let cell = *cell;
    let method = match options.source {
        InterferenceSource::Analytic => EcMethod::LowerBoundAnalytic,
        InterferenceSource::Simulated => EcMethod::LowerBoundSimulated,
    };

    // Ī only depends on the mode (and UE power), not on the RSI.
    let mut interference: Vec<((DuplexMode, u64), (f64, f64))> = Vec::new();
    let mut targets = Vec::with_capacity(2 * duplexes.len());
    let mut slots = Vec::with_capacity(duplexes.len());
    for d in duplexes {
        let key = (d.mode, d.ue_tx_power_w.to_bits());
        let (mean, se) = match interference.iter().find(|(k, _)| *k == key) {
            Some((_, v)) => *v,
            None => {
                let v = bound_interference(topology, d, settings, options.source)?;
                interference.push((key, v));
                v
            }
        };
        let base = ExactTarget::new(d, qos, noise_w);
        let offset = mean + base.floor;
        let primary = targets.len();
        targets.push(LbTarget { offset, exponent: base.exponent, rate_scale: base.rate_scale });
        // A shifted copy on the same samples gives dEC/dĪ for error propagation.
        let shifted = (se > 0.0).then(|| {
            targets.push(LbTarget {
                offset: offset + INTERFERENCE_SLOPE_STEP * mean,
                exponent: base.exponent,
                rate_scale: base.rate_scale,
            });
            targets.len() - 1
        });
        slots.push((primary, shifted, mean, se));
    }

    let accs: Vec<EcAccumulator> = match options.signal {
        SignalExpectation::MonteCarlo => lb_monte_carlo(&cell, &targets, settings),
        SignalExpectation::Quadrature => targets
            .iter()
            .map(|t| {
                let w = lb_quadrature(&cell, t, settings)?;
                Ok(EcAccumulator { w: Moments { n: 1, mean: w, m2: 0.0 }, rate: Moments::default() })
            })
            .collect::<Result<_>>()?,
    };

    Ok(duplexes
        .iter()
        .zip(&slots)
        .map(|(d, &(primary, shifted, mean, mean_se))| {
            let (ec, mut std_error) = accs[primary].estimate(qos.theta);
            if let Some(j) = shifted {
                let (ec_up, _) = accs[j].estimate(qos.theta);
                let slope = (ec_up - ec) / (INTERFERENCE_SLOPE_STEP * mean);
                std_error = std_error.hypot(slope * mean_se);
            }
            let exponent = targets[primary].exponent;
            if exponent > 1.0 {
                log::warn!("lower bound exponent {exponent:.3} exceeds 1; the bound is not guaranteed");
            }
            EcEstimate {
                ec,
                std_error,
                trials: match options.signal {
                    SignalExpectation::MonteCarlo => settings.trials,
                    SignalExpectation::Quadrature => 1,
                },
                theta: qos.theta,
                mode: d.mode,
                method,
                mean_rate: accs[primary].rate.mean,
                mean_interference: Some(mean),
                bound_guaranteed: exponent <= 1.0,
            }
        })
        .collect())
}

/// Jensen lower bound `-(1/θ) ln E_s[(1 + s/(Ī + a))^-β]`.
pub fn ec_lower_bound(
    topology: &NetworkTopology,
    duplex: &DuplexConfig,
    qos: &QosConfig,
    noise_w: f64,
    settings: &McSettings,
    options: LowerBoundOptions,
) -> Result<EcEstimate> {
    Ok(ec_lower_bound_many(topology, std::slice::from_ref(duplex), qos, noise_w, settings, options)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dbm_to_watts, sinr, LinkBudget};
    use crate::geometry::{MacroBs, Region};

    const NOISE: f64 = 1e-15;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn toy(cells: &[(f64, f64)], tagged: usize) -> NetworkTopology {
        NetworkTopology::new(
            Region::new(1000.0).unwrap(),
            MacroBs { position: Point::ORIGIN, power_w: dbm_to_watts(46.0), alpha: 3.0 },
            cells
                .iter()
                .map(|&(x, y)| SmallCell {
                    center: Point::new(x, y),
                    radius: 90.0,
                    power_w: dbm_to_watts(35.0),
                    alpha: 3.0,
                })
                .collect(),
            180.0,
            Some(tagged),
        )
        .unwrap()
    }

    fn fd(eta: f64) -> DuplexConfig {
        DuplexConfig::new(DuplexMode::Fd, eta, 1.0, 0.2).unwrap()
    }

    #[test]
    fn g_examples() {
        let p = GParams::new(1.0, 0.7).unwrap();
        assert_eq!(g(0.0, 5.0, &p), 1.0);
        assert_eq!(g(3.0, 2.0, &GParams::new(1.0, 0.0).unwrap()), 1.0);
        assert!(rel(g(3.0, 0.0, &GParams::new(1.0, 1.0).unwrap()), 0.25) < 1e-15);
        assert!(GParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn concavity_examples() {
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
        for beta in [0.0, 0.5, 1.0] {
            assert!(g_concavity_check(&GParams::new(0.1, beta).unwrap(), 7.0, &grid));
        }
        // SINR = 10 with β = 5 breaks β < 1 + 2/SINR.
        assert!(!g_concavity_check(&GParams::new(1.0, 5.0).unwrap(), 10.0, &[0.0]));
    }

    #[test]
    fn theta_constraint() {
        assert!(check_theta_constraint(&QosConfig::lte_rb(1e-3).unwrap()).is_ok());
        match check_theta_constraint(&QosConfig::lte_rb(1e-1).unwrap()) {
            ThetaCheck::Warn { bound } => assert!(rel(bound, 7.7016e-3) < 1e-3),
            other => panic!("{other:?}"),
        }
        assert!(check_theta_constraint(&QosConfig::lte_rb(1e-12).unwrap()).is_ok());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut one = Moments::default();
        xs.iter().for_each(|&x| one.push(x));
        let mut merged = Moments::default();
        for chunk in xs.chunks(77) {
            let mut m = Moments::default();
            chunk.iter().for_each(|&x| m.push(x));
            merged.merge(&m);
        }
        assert!(rel(merged.mean, one.mean) < 1e-12);
        assert!(rel(merged.m2, one.m2) < 1e-10);
    }

    #[test]
    fn zero_trials_rejected() {
        let t = toy(&[(500.0, 0.0)], 0);
        let q = QosConfig::lte_rb(1e-3).unwrap();
        assert!(matches!(ec_exact_mc(&t, &fd(0.0), &q, NOISE, &McSettings::new(0, 1)), Err(Error::NoTrials)));
    }

    #[test]
    fn frozen_single_interferer_is_deterministic() {
        // Tagged UE fixed 40 m from its BS, fading frozen: EC is the block rate.
        let t = toy(&[(500.0, 0.0), (-500.0, 0.0)], 0);
        let q = QosConfig::lte_rb(1e-3).unwrap();
        let ue = PolarPoint::new(40.0, 0.5);
        let settings =
            McSettings { fading: Fading::Unit, placement: UePlacement::Fixed(ue), ..McSettings::new(500, 3) };
        let duplex = fd(1e-6);
        let est = ec_exact_mc(&t, &duplex, &q, NOISE, &settings).unwrap();

        let tagged = t.small_cells[0].center.offset(ue);
        let other_ue = t.small_cells[1].center.offset(ue);
        let link = LinkBudget {
            signal: dbm_to_watts(35.0) * 40f64.powi(-3),
            bs_interference: dbm_to_watts(46.0) * tagged.norm().powi(-3)
                + dbm_to_watts(35.0) * tagged.distance(&t.small_cells[1].center).powi(-3),
            ue_interference: 0.2 * tagged.distance(&other_ue).powi(-3),
            rsi: 0.2e-6,
            noise: NOISE,
        };
        let expected = crate::channel::rate_bits(sinr(&link, DuplexMode::Fd), &q, DuplexMode::Fd);
        assert!(rel(est.ec, expected) < 1e-9, "{} vs {expected}", est.ec);
        assert!(est.std_error < 1e-9 * expected);
    }

    #[test]
    fn draws_are_consumed_in_documented_order() {
        let t = toy(&[(500.0, 0.0), (-500.0, 0.0), (0.0, 500.0)], 1);
        let field = InterferenceField::new(&t, 0.2).unwrap();
        let settings = McSettings::new(1, 9);
        let mut rng = settings.rng(STREAM_EXACT, 0);
        let mut d = field.empty_draw();
        field.draw(&settings, &mut rng, &mut d);
        let mut replay = settings.rng(STREAM_EXACT, 0);
        assert_eq!(d.tagged_ue, sample_uniform_disk(90.0, &mut replay));
        assert_eq!(d.ue_positions[1], d.tagged_ue);
        assert_eq!(d.signal_fading, crate::channel::sample_fading(&mut replay));
        assert_eq!(d.bs_fading[0], crate::channel::sample_fading(&mut replay));
        assert_eq!(d.bs_fading[1], crate::channel::sample_fading(&mut replay));
        assert_eq!(d.ue_positions[0], sample_uniform_disk(90.0, &mut replay));
        for p in &d.ue_positions {
            assert!(p.r <= 90.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let t = toy(&[(500.0, 0.0), (-500.0, 0.0), (0.0, 500.0)], 0);
        let q = QosConfig::lte_rb(1e-3).unwrap();
        let base = McSettings::new(3 * BATCH_TRIALS + 17, 11);
        let a = ec_exact_mc(&t, &fd(1e-5), &q, NOISE, &base.workers(1)).unwrap();
        let b = ec_exact_mc(&t, &fd(1e-5), &q, NOISE, &base.workers(3)).unwrap();
        let c = ec_exact_mc(&t, &fd(1e-5), &q, NOISE, &base.workers(0)).unwrap();
        assert_eq!(a.ec.to_bits(), b.ec.to_bits());
        assert_eq!(a.ec.to_bits(), c.ec.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn degenerate_lower_bound_is_tight() {
        let t = toy(&[(500.0, 0.0), (-500.0, 0.0)], 0);
        let q = QosConfig::lte_rb(1e-3).unwrap();
        let settings = McSettings {
            fading: Fading::Unit,
            placement: UePlacement::Fixed(PolarPoint::new(30.0, 1.0)),
            ..McSettings::new(1000, 5)
        };
        let opts = LowerBoundOptions { source: InterferenceSource::Simulated, ..Default::default() };
        for duplex in [fd(1e-6), fd(1e-6).with_mode(DuplexMode::Hd)] {
            let exact = ec_exact_mc(&t, &duplex, &q, NOISE, &settings).unwrap();
            let lb = ec_lower_bound(&t, &duplex, &q, NOISE, &settings, opts).unwrap();
            assert!(rel(lb.ec, exact.ec) < 1e-10, "{} vs {}", lb.ec, exact.ec);
        }
    }

    #[test]
    fn quadrature_and_monte_carlo_bounds_agree() {
        let t = toy(&[(500.0, 0.0), (-500.0, 0.0), (0.0, 500.0)], 0);
        let q = QosConfig::lte_rb(1e-3).unwrap();
        let settings = McSettings::new(200_000, 21);
        for duplex in [fd(1e-5), fd(1e-5).with_mode(DuplexMode::Hd)] {
            let mc = ec_lower_bound(&t, &duplex, &q, NOISE, &settings, LowerBoundOptions::default()).unwrap();
            let quad = ec_lower_bound(
                &t,
                &duplex,
                &q,
                NOISE,
                &settings,
                LowerBoundOptions { signal: SignalExpectation::Quadrature, ..Default::default() },
            )
            .unwrap();
            assert!((mc.ec - quad.ec).abs() < 4.0 * mc.std_error, "{} vs {} ± {}", mc.ec, quad.ec, mc.std_error);
        }
    }

    #[test]
    fn hd_beats_fd_without_cancellation() {
        let t = toy(&[(500.0, 0.0), (-500.0, 0.0), (0.0, 500.0)], 0);
        let q = QosConfig::lte_rb(1e-3).unwrap();
        let settings = McSettings::new(20_000, 2);
        let both = ec_exact_mc_many(&t, &[fd(1.0), fd(1.0).with_mode(DuplexMode::Hd)], &q, NOISE, &settings).unwrap();
        assert!(both[0].ec < both[1].ec);
        let hd_alone = ec_exact_mc(&t, &fd(1.0).with_mode(DuplexMode::Hd), &q, NOISE, &settings).unwrap();
        assert_eq!(hd_alone.ec.to_bits(), both[1].ec.to_bits());
    }

    #[test]
    fn estimates_are_non_negative() {
        let t = toy(&[(500.0, 0.0)], 0);
        let q = QosConfig::lte_rb(5e-3).unwrap();
        let est = ec_exact_mc(&t, &fd(1.0), &q, NOISE, &McSettings::new(1000, 1)).unwrap();
        assert!(est.ec >= 0.0 && est.std_error >= 0.0 && est.trials == 1000);
    }
}
