//! Mean interference at a UE placed uniformly in its cell.
//!
//! The closed forms truncate the Taylor expansion of the disk-averaged path
//! loss after three terms. [`mean_pathloss_numeric`] evaluates the exact disk
//! average by adaptive quadrature and serves as the reference.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{DuplexConfig, DuplexMode};
use crate::error::{Error, Result};
use crate::geometry::NetworkTopology;
use crate::quadrature::{integrate, Tolerance};

/// Default relative tolerance of the quadrature oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererId {
    Macro,
    Cell(usize),
}

impl std::fmt::Display for InterfererId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InterfererId::Macro => f.write_str("macro"),
            InterfererId::Cell(i) => write!(f, "cell{i}"),
        }
    }
}

/// How far the closed form can be trusted for a given geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaylorAccuracy {
    /// `d >= 2R`.
    Nominal,
    /// `R < d < 2R`: the expansion converges but three terms are not enough.
    Degraded,
}

pub fn taylor_accuracy(distance: f64, radius: f64) -> TaylorAccuracy {
    if distance >= 2.0 * radius {
        TaylorAccuracy::Nominal
    } else {
        TaylorAccuracy::Degraded
    }
}

/// Three-term Taylor closed form of the path loss `d^-alpha` averaged over a
/// point uniform in a disk of radius `radius` centered `distance` away:
///
/// `d^-α [1 + (α²/8)(R⁴/(3d⁴) + R²/d²) + (α/4) R⁴/(3d⁴)]`
pub fn mean_pathloss_taylor(distance: f64, radius: f64, alpha: f64) -> Result<f64> {
    if !(distance > radius) || radius < 0.0 {
        return Err(Error::TaylorDomain { distance, radius });
    }
    if taylor_accuracy(distance, radius) == TaylorAccuracy::Degraded {
        log::warn!("Taylor mean path loss at d = {distance} m, R = {radius} m (d < 2R) loses accuracy");
    }
    let q2 = (radius / distance).powi(2);
    let q4 = q2 * q2 / 3.0;
    let bracket = 1.0 + alpha * alpha / 8.0 * (q4 + q2) + alpha / 4.0 * q4;
    Ok(distance.powf(-alpha) * bracket)
}

fn disk_average(distance: f64, radius: f64, alpha: f64, rel_tol: f64, phase: f64) -> Result<f64> {
    let tol = Tolerance::relative(rel_tol);
    let inner_tol = Tolerance::relative(rel_tol * 0.01);
    let d2 = distance * distance;
    let mut inner_failure = None;
    let outer = integrate(
        |r| {
            let ring = integrate(
                |t| (d2 + r * r - 2.0 * distance * r * (t - phase).cos()).powf(-0.5 * alpha),
                phase,
                phase + 2.0 * PI,
                inner_tol,
            );
            match ring {
                Ok(v) => v.value * r,
                Err(e) => {
                    inner_failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        radius,
        tol,
    );
    if let Some(e) = inner_failure {
        return Err(e);
    }
    Ok(outer?.value / (PI * radius * radius))
}

/// Disk-averaged path loss by adaptive 2-D quadrature in polar coordinates:
///
/// `1/(πR²) ∫₀^{2π} ∫₀^R (d² + r² − 2dr cos θ)^{−α/2} r dr dθ`
///
/// The integrand is singular inside the disk when `d <= R`; that regime is
/// reported as non-convergence rather than integrated.
pub fn mean_pathloss_numeric(distance: f64, radius: f64, alpha: f64, rel_tol: f64) -> Result<f64> {
    if !(distance > 0.0) || radius < 0.0 {
        return Err(Error::param("distance", format!("need d > 0 and R >= 0, got d = {distance}, R = {radius}")));
    }
    if radius == 0.0 {
        return Ok(distance.powf(-alpha));
    }
    if distance <= radius {
        return Err(Error::NonConvergence(format!(
            "path loss singular inside the disk (d = {distance} m <= R = {radius} m)"
        )));
    }
    disk_average(distance, radius, alpha, rel_tol, 0.0)
}

/// Mean power received from a BS `distance` away by a UE uniform in a disk of
/// radius `victim_radius` (unit-mean fading).
pub fn mean_interference_bs_ue(bs_power_w: f64, distance: f64, victim_radius: f64, alpha: f64) -> Result<f64> {
    Ok(bs_power_w * mean_pathloss_taylor(distance, victim_radius, alpha)?)
}

/// Mean power received from a UE uniform in a disk of radius
/// `interferer_radius` by a UE uniform in a disk of radius `victim_radius`,
/// the two centers `distance` apart.
pub fn mean_interference_ue_ue(
    ue_power_w: f64,
    distance: f64,
    interferer_radius: f64,
    victim_radius: f64,
    alpha: f64,
) -> Result<f64> {
    if !(distance > victim_radius) {
        return Err(Error::TaylorDomain { distance, radius: victim_radius });
    }
    let r2 = victim_radius * victim_radius;
    let t0 = mean_pathloss_taylor(distance, interferer_radius, alpha)?;
    let t1 = mean_pathloss_taylor(distance, interferer_radius, alpha + 2.0)?;
    let t2 = mean_pathloss_taylor(distance, interferer_radius, alpha + 4.0)?;
    Ok(ue_power_w * (t0 + alpha * alpha * r2 / 8.0 * t1 + alpha * (alpha + 2.0) * r2 * r2 / 24.0 * t2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanInterferenceBreakdown {
    pub per_bs: Vec<(InterfererId, f64)>,
    pub per_ue: Vec<(InterfererId, f64)>,
    pub total: f64,
}

/// Mean interference at the tagged UE: every non-tagged small-cell BS and the
/// macro BS, plus in full duplex one co-channel UE per non-tagged small cell.
/// The macro-attached UE is scheduled on other resources and never counted.
pub fn total_mean_interference(topology: &NetworkTopology, duplex: &DuplexConfig) -> Result<MeanInterferenceBreakdown> {
    let (tag, victim) = topology.tagged_cell()?;
    let too_close = |interferer, distance| Error::InterfererTooClose { interferer, distance, radius: victim.radius };

    let mut per_bs = Vec::with_capacity(topology.len());
    let m = &topology.macro_bs;
    let d_macro = m.position.distance(&victim.center);
    if d_macro <= victim.radius {
        return Err(too_close(InterfererId::Macro, d_macro));
    }
    per_bs.push((InterfererId::Macro, mean_interference_bs_ue(m.power_w, d_macro, victim.radius, m.alpha)?));

    let mut per_ue = Vec::new();
    for (k, cell) in topology.small_cells.iter().enumerate().filter(|(k, _)| *k != tag) {
        let id = InterfererId::Cell(k);
        let d = cell.center.distance(&victim.center);
        if d <= victim.radius || d <= cell.radius {
            return Err(too_close(id, d));
        }
        per_bs.push((id, mean_interference_bs_ue(cell.power_w, d, victim.radius, cell.alpha)?));
        if duplex.mode == DuplexMode::Fd {
            per_ue
                .push((id, mean_interference_ue_ue(duplex.ue_tx_power_w, d, cell.radius, victim.radius, cell.alpha)?));
        }
    }
    let total = per_bs.iter().chain(per_ue.iter()).map(|(_, w)| w).sum();
    Ok(MeanInterferenceBreakdown { per_bs, per_ue, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MacroBs, Point, Region, SmallCell};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn taylor_examples() {
        assert!(rel(mean_pathloss_taylor(500.0, 0.0, 3.0).unwrap(), 8e-9) < 1e-14);
        assert!(rel(mean_pathloss_taylor(500.0, 90.0, 0.0).unwrap(), 1.0) < 1e-15);
        let v = mean_pathloss_taylor(500.0, 90.0, 3.0).unwrap();
        assert!(rel(v, 8.2969e-9) < 1e-4, "{v}");
        assert!(rel(v / 8e-9, 1.037106) < 1e-6);
    }

    #[test]
    fn taylor_domain() {
        assert!(matches!(mean_pathloss_taylor(90.0, 90.0, 3.0), Err(Error::TaylorDomain { .. })));
        assert!(mean_pathloss_taylor(100.0, 90.0, 3.0).is_ok());
        assert_eq!(taylor_accuracy(100.0, 90.0), TaylorAccuracy::Degraded);
        assert_eq!(taylor_accuracy(180.0, 90.0), TaylorAccuracy::Nominal);
    }

    #[test]
    fn taylor_never_below_point_loss() {
        for d in [100.0, 200.0, 500.0, 2000.0] {
            for alpha in [0.0, 2.0, 3.0, 4.0] {
                assert!(mean_pathloss_taylor(d, 90.0, alpha).unwrap() >= d.powf(-alpha));
            }
        }
    }

    #[test]
    fn numeric_examples() {
        assert!(rel(mean_pathloss_numeric(500.0, 0.0, 3.0, 1e-8).unwrap(), 8e-9) < 1e-14);
        let v = mean_pathloss_numeric(500.0, 90.0, 3.0, 1e-8).unwrap();
        assert!(rel(v, 8.2969e-9) < 0.01);
        assert!(matches!(mean_pathloss_numeric(80.0, 90.0, 3.0, 1e-8), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn numeric_alpha_four_closed_form() {
        // For α = 4 the disk average is d^-4 / (1 - R²/d²)².
        for k in [2.0f64, 3.0, 5.0] {
            let d = 90.0 * k;
            let exact = d.powi(-4) / (1.0 - 1.0 / (k * k)).powi(2);
            assert!(rel(mean_pathloss_numeric(d, 90.0, 4.0, 1e-10).unwrap(), exact) < 1e-8);
        }
    }

    #[test]
    fn numeric_is_rotation_invariant() {
        let base = disk_average(300.0, 90.0, 3.0, 1e-10, 0.0).unwrap();
        for phase in [0.3, 1.7, 4.0] {
            assert!(rel(disk_average(300.0, 90.0, 3.0, 1e-10, phase).unwrap(), base) < 1e-9);
        }
    }

    #[test]
    fn bs_ue_examples() {
        let p = crate::channel::dbm_to_watts(35.0);
        assert!(rel(mean_interference_bs_ue(p, 500.0, 90.0, 3.0).unwrap(), 2.6237e-8) < 1e-4);
        assert_eq!(mean_interference_bs_ue(0.0, 500.0, 90.0, 3.0).unwrap(), 0.0);
        assert!(rel(mean_interference_bs_ue(1.0, 500.0, 0.0, 3.0).unwrap(), 8e-9) < 1e-14);
    }

    #[test]
    fn ue_ue_examples() {
        let v = mean_interference_ue_ue(0.2, 500.0, 90.0, 90.0, 3.0).unwrap();
        assert!(rel(v, 1.7249e-9) < 1e-4, "{v}");
        assert!(rel(v / 0.2, 8.6247e-9) < 1e-4);
        assert!(rel(mean_interference_ue_ue(0.2, 500.0, 0.0, 0.0, 3.0).unwrap(), 0.2 * 8e-9) < 1e-14);
        assert_eq!(mean_interference_ue_ue(0.0, 500.0, 90.0, 90.0, 3.0).unwrap(), 0.0);
    }

    fn two_cell(mode: DuplexMode) -> (NetworkTopology, DuplexConfig) {
        let cell = |x: f64| SmallCell {
            center: Point::new(x, 0.0),
            radius: 90.0,
            power_w: crate::channel::dbm_to_watts(35.0),
            alpha: 3.0,
        };
        let t = NetworkTopology::new(
            Region::new(1000.0).unwrap(),
            MacroBs { position: Point::ORIGIN, power_w: crate::channel::dbm_to_watts(46.0), alpha: 3.0 },
            vec![cell(-250.0), cell(250.0)],
            180.0,
            Some(1),
        )
        .unwrap();
        (t, DuplexConfig::new(mode, 1e-6, 1.0, 0.2).unwrap())
    }

    #[test]
    fn two_cell_breakdown() {
        let (t, fd) = two_cell(DuplexMode::Fd);
        let b = total_mean_interference(&t, &fd).unwrap();
        let macro_term = mean_interference_bs_ue(crate::channel::dbm_to_watts(46.0), 250.0, 90.0, 3.0).unwrap();
        assert_eq!(b.per_bs.len(), 2);
        assert_eq!(b.per_ue.len(), 1);
        let expected = macro_term + 2.6237e-8 + 1.7249e-9;
        assert!(rel(b.total, expected) < 1e-4);
        let sum: f64 = b.per_bs.iter().chain(&b.per_ue).map(|p| p.1).sum();
        assert_eq!(sum, b.total);

        let (t, hd) = two_cell(DuplexMode::Hd);
        let b_hd = total_mean_interference(&t, &hd).unwrap();
        assert!(b_hd.per_ue.is_empty());
        assert_eq!(b_hd.total, b_hd.per_bs.iter().map(|p| p.1).sum::<f64>());
    }

    #[test]
    fn single_cell_has_only_macro_term() {
        let (mut t, fd) = two_cell(DuplexMode::Fd);
        t.small_cells.truncate(1);
        t.tagged = Some(0);
        let b = total_mean_interference(&t, &fd).unwrap();
        assert_eq!(b.per_bs.len(), 1);
        assert_eq!(b.per_bs[0].0, InterfererId::Macro);
        assert!(b.per_ue.is_empty());
    }

    #[test]
    fn macro_inside_tagged_cell_is_reported() {
        let (mut t, fd) = two_cell(DuplexMode::Fd);
        t.small_cells[1].center = Point::new(50.0, 0.0);
        t.small_cells[0].center = Point::new(-300.0, 0.0);
        match total_mean_interference(&t, &fd) {
            Err(Error::InterfererTooClose { interferer: InterfererId::Macro, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn powers_scale_linearly() {
        let (t, fd) = two_cell(DuplexMode::Fd);
        let base = total_mean_interference(&t, &fd).unwrap();
        let k = 4.0;
        let mut scaled = t.clone();
        scaled.macro_bs.power_w *= k;
        for c in &mut scaled.small_cells {
            c.power_w *= k;
        }
        let fd_k = DuplexConfig { ue_tx_power_w: fd.ue_tx_power_w * k, ..fd };
        let b = total_mean_interference(&scaled, &fd_k).unwrap();
        for (x, y) in base.per_bs.iter().chain(&base.per_ue).zip(b.per_bs.iter().chain(&b.per_ue)) {
            assert_eq!(x.1 * k, y.1);
        }
    }
}
