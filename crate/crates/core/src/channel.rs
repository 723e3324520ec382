//! Link-level model: path loss, Rayleigh fading, residual self-interference,
//! SINR and bits per scheduling block.

use std::f64::consts::LOG2_E;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Near-field clamp on link distance, in meters.
pub const NEAR_FIELD_CLAMP_M: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Linear gain `max(d, 1 m)^-alpha`.
#[inline]
pub fn path_loss_gain(distance: f64, alpha: f64) -> f64 {
    distance.max(NEAR_FIELD_CLAMP_M).powf(-alpha)
}

/// Rayleigh power fading, `h ~ Exp(1)`.
#[inline]
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Fading model used by the Monte Carlo engines. `Unit` freezes every
/// coefficient to 1 and consumes no randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    #[default]
    Rayleigh,
    Unit,
}

impl Fading {
    #[inline]
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Fading::Rayleigh => sample_fading(rng),
            Fading::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DuplexMode {
    Hd,
    Fd,
}

impl std::fmt::Display for DuplexMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DuplexMode::Hd => "HD",
            DuplexMode::Fd => "FD",
        })
    }
}

/// Duplexing mode plus the self-interference cancellation model
/// `RSI = eta * P^kappa` of the victim UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuplexConfig {
    pub mode: DuplexMode,
    pub eta: f64,
    pub kappa: f64,
    pub ue_tx_power_w: f64,
}

impl DuplexConfig {
    pub fn new(mode: DuplexMode, eta: f64, kappa: f64, ue_tx_power_w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param("eta", format!("must lie in [0, 1], got {eta}")));
        }
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::param("kappa", format!("must lie in [0, 1], got {kappa}")));
        }
        if !(ue_tx_power_w >= 0.0 && ue_tx_power_w.is_finite()) {
            return Err(Error::param("ue_tx_power", format!("must be non-negative, got {ue_tx_power_w}")));
        }
        Ok(Self { mode, eta, kappa, ue_tx_power_w })
    }

    pub fn with_mode(self, mode: DuplexMode) -> Self {
        Self { mode, ..self }
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(self.mode, eta, self.kappa, self.ue_tx_power_w)
    }

    /// Residual self-interference of the victim UE's own uplink.
    pub fn rsi(&self) -> f64 {
        rsi_power(self.ue_tx_power_w, self)
    }
}

/// `eta * P^kappa` in full duplex, zero in half duplex.
pub fn rsi_power(tx_power_w: f64, duplex: &DuplexConfig) -> f64 {
    match duplex.mode {
        DuplexMode::Hd => 0.0,
        DuplexMode::Fd => duplex.eta * tx_power_w.powf(duplex.kappa),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosConfig {
    /// QoS exponent, 1/bit.
    pub theta: f64,
    /// Scheduling block duration, seconds.
    pub frame_time: f64,
    /// Resource block bandwidth, Hz.
    pub bandwidth: f64,
}

impl QosConfig {
    pub fn new(theta: f64, frame_time: f64, bandwidth: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("frame_time", frame_time), ("bandwidth", bandwidth)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(Self { theta, frame_time, bandwidth })
    }

    /// One LTE resource block: 0.5 ms by 180 kHz.
    pub fn lte_rb(theta: f64) -> Result<Self> {
        Self::new(theta, 0.5e-3, 180e3)
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(theta, self.frame_time, self.bandwidth)
    }

    /// Bits per block per bit/s/Hz of spectral efficiency.
    pub fn block_symbols(&self) -> f64 {
        self.frame_time * self.bandwidth
    }

    /// `theta * T_f * BW * log2(e)`.
    pub fn beta(&self) -> f64 {
        self.theta * self.block_symbols() * LOG2_E
    }

    /// Largest theta for which the lower bound's concavity argument holds.
    pub fn theta_bound(&self) -> f64 {
        1.0 / (self.block_symbols() * LOG2_E)
    }
}

/// Received powers at the tagged UE, all in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub signal: f64,
    pub bs_interference: f64,
    pub ue_interference: f64,
    pub rsi: f64,
    pub noise: f64,
}

pub fn sinr(link: &LinkBudget, mode: DuplexMode) -> f64 {
    let denominator = match mode {
        DuplexMode::Fd => link.bs_interference + link.ue_interference + link.rsi + link.noise,
        DuplexMode::Hd => link.bs_interference + link.noise,
    };
    link.signal / denominator
}

/// Fraction of the block's spectral resource a link gets; HD (FDD) halves it.
#[inline]
pub fn resource_share(mode: DuplexMode) -> f64 {
    match mode {
        DuplexMode::Fd => 1.0,
        DuplexMode::Hd => 0.5,
    }
}

/// Bits delivered in one block, `share * T_f * BW * log2(1 + sinr)`.
pub fn rate_bits(sinr: f64, qos: &QosConfig, mode: DuplexMode) -> f64 {
    resource_share(mode) * qos.block_symbols() * sinr.ln_1p() * LOG2_E
}
