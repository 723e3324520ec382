//! Shared fixtures for the criterion benchmarks.

use hetnet_ec::{
    dbm_to_watts, sample_matern_hcpp, CellTier, DuplexConfig, DuplexMode, HcppParams, MacroBs, NetworkTopology, Point,
    QosConfig, Region,
};

/// Default-parameter network in a macro cell of `macro_radius` metres with
/// `density_per_km2` small cells.
pub fn fixture(macro_radius: f64, density_per_km2: f64, seed: u64) -> (NetworkTopology, DuplexConfig, QosConfig, f64) {
    let region = Region::new(macro_radius).expect("valid region");
    let params = HcppParams {
        region,
        macro_bs: MacroBs { position: Point::ORIGIN, power_w: dbm_to_watts(46.0), alpha: 3.0 },
        tier: CellTier { radius: 90.0, power_w: dbm_to_watts(35.0), alpha: 3.0 },
        density: density_per_km2 * 1e-6,
        hard_core: 180.0,
    };
    let topology = sample_matern_hcpp(&params, seed).expect("valid deployment").topology;
    let duplex = DuplexConfig::new(DuplexMode::Fd, 1e-9, 1.0, dbm_to_watts(23.0)).expect("valid duplex");
    let qos = QosConfig::lte_rb(1e-3).expect("valid qos");
    (topology, duplex, qos, dbm_to_watts(-120.0))
}
