//! Statistical QoS (effective capacity) of a tagged user in a heterogeneous
//! cellular network, under half-duplex and imperfect full-duplex operation.
//!
//! Small cells are laid out by a Matérn hard-core process inside a macro
//! cell. The effective capacity of a user in one "tagged" small cell is
//! obtained either by exact Monte Carlo over user placements and Rayleigh
//! fading ([`ec_exact_mc`]) or through a Jensen lower bound that only needs the
//! mean interference, available in closed form ([`ec_lower_bound`]).

// Negated comparisons reject NaN parameters along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod interference;
pub mod io;
pub mod quadrature;

pub use capacity::{
    check_theta_constraint, ec_exact_mc, ec_exact_mc_many, ec_lower_bound, ec_lower_bound_many, g, g_concavity_check,
    g_second_derivative, simulate_mean_interference, EcEstimate, EcMethod, GParams, InterferenceSource,
    LowerBoundOptions, McSettings, SignalExpectation, ThetaCheck, TrialDraw, UePlacement,
};
pub use channel::{
    dbm_to_watts, path_loss_gain, rate_bits, rsi_power, sample_fading, sinr, DuplexConfig, DuplexMode, Fading,
    LinkBudget, QosConfig,
};
pub use error::{Error, Result};
pub use geometry::{
    interferer_distance, sample_matern_hcpp, sample_uniform_disk, CellTier, HcppParams, MacroBs, NetworkTopology,
    Point, PolarPoint, Region, SmallCell,
};
pub use harness::{benchmark_runtime, fd_gain, find_crossover, sweep_eta, BenchmarkReport, SweepResult};
pub use interference::{
    mean_interference_bs_ue, mean_interference_ue_ue, mean_pathloss_numeric, mean_pathloss_taylor,
    total_mean_interference, InterfererId, MeanInterferenceBreakdown,
};
pub use io::{load_scenario, Scenario, ScenarioConfig};
