//! Deployment geometry: the macro region, hard-core small-cell layouts and
//! user placement inside circular cells.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Slack used when re-validating topologies that went through a text round trip.
const GEOMETRY_SLACK: f64 = 1e-9;

/// Type-II thinning is only used while the requested count stays below this
/// fraction of its asymptotic ceiling; beyond it the parent intensity blows up.
const TYPE_II_SATURATION: f64 = 0.9;

/// Consecutive rejected darts after which sequential inhibition gives up.
const SSI_MAX_CONSECUTIVE_REJECTIONS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Absolute position of a point given in polar form relative to `self`.
    pub fn offset(&self, local: PolarPoint) -> Point {
        let (sin, cos) = local.theta.sin_cos();
        Point { x: self.x + local.r * cos, y: self.y + local.r * sin }
    }
}

/// Position relative to a cell center. `theta` is measured from the common
/// x axis shared by every cell-local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub const CENTER: PolarPoint = PolarPoint { r: 0.0, theta: 0.0 };

    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta: theta.rem_euclid(TAU) }
    }

    pub fn to_cartesian(self) -> Point {
        Point::ORIGIN.offset(self)
    }
}

/// The macro coverage disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub macro_radius: f64,
    pub macro_center: Point,
}

impl Region {
    pub fn new(macro_radius: f64) -> Result<Self> {
        if !(macro_radius > 0.0 && macro_radius.is_finite()) {
            return Err(Error::param("macro_radius", format!("must be positive, got {macro_radius}")));
        }
        Ok(Self { macro_radius, macro_center: Point::ORIGIN })
    }

    pub fn area(&self) -> f64 {
        PI * self.macro_radius * self.macro_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroBs {
    pub position: Point,
    pub power_w: f64,
    pub alpha: f64,
}

/// A small-cell base station with its circular coverage disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallCell {
    pub center: Point,
    pub radius: f64,
    pub power_w: f64,
    pub alpha: f64,
}

/// Radio parameters shared by every cell of a small-cell tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellTier {
    pub radius: f64,
    pub power_w: f64,
    pub alpha: f64,
}

impl CellTier {
    fn at(&self, center: Point) -> SmallCell {
        SmallCell { center, radius: self.radius, power_w: self.power_w, alpha: self.alpha }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub region: Region,
    pub macro_bs: MacroBs,
    pub small_cells: Vec<SmallCell>,
    pub hard_core: f64,
    pub tagged: Option<usize>,
}

impl NetworkTopology {
    pub fn new(
        region: Region,
        macro_bs: MacroBs,
        small_cells: Vec<SmallCell>,
        hard_core: f64,
        tagged: Option<usize>,
    ) -> Result<Self> {
        let topology = Self { region, macro_bs, small_cells, hard_core, tagged };
        topology.validate()?;
        Ok(topology)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTopology(msg));
        if !(self.macro_bs.power_w >= 0.0) || !(self.macro_bs.alpha >= 0.0) {
            return bad("macro BS power and path-loss exponent must be non-negative".into());
        }
        let rm = self.region.macro_radius;
        for (i, cell) in self.small_cells.iter().enumerate() {
            if !(cell.radius > 0.0) || !(cell.power_w >= 0.0) || !(cell.alpha >= 0.0) {
                return bad(format!("cell {i} has a non-positive radius or negative power/exponent"));
            }
            let reach = cell.center.distance(&self.region.macro_center) + cell.radius;
            if reach > rm * (1.0 + GEOMETRY_SLACK) {
                return bad(format!("cell {i} extends {reach:.3} m from the macro center, beyond {rm} m"));
            }
        }
        for i in 0..self.small_cells.len() {
            for j in (i + 1)..self.small_cells.len() {
                let (a, b) = (&self.small_cells[i], &self.small_cells[j]);
                let d = a.center.distance(&b.center);
                if d < self.hard_core * (1.0 - GEOMETRY_SLACK) {
                    return bad(format!(
                        "cells {i} and {j} are {d:.3} m apart, closer than the hard core {}",
                        self.hard_core
                    ));
                }
                if self.hard_core < (a.radius + b.radius) * (1.0 - GEOMETRY_SLACK) {
                    return bad(format!("hard core {} is below R_{i} + R_{j}; cells may overlap", self.hard_core));
                }
            }
        }
        if let Some(t) = self.tagged {
            if t >= self.small_cells.len() {
                return bad(format!("tagged index {t} out of range for {} cells", self.small_cells.len()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.small_cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.small_cells.is_empty()
    }

    pub fn tagged_cell(&self) -> Result<(usize, &SmallCell)> {
        let idx = self.tagged.ok_or(Error::NoTaggedCell)?;
        Ok((idx, &self.small_cells[idx]))
    }

    /// Index of the cell whose center is closest to `point`.
    pub fn nearest_cell(&self, point: Point) -> Option<usize> {
        self.small_cells
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.center.distance(&point).total_cmp(&b.1.center.distance(&point)))
            .map(|(i, _)| i)
    }

    /// Default tagged-cell anchor: halfway between the macro BS and the edge.
    pub fn default_tag_anchor(&self) -> Point {
        let c = self.region.macro_center;
        Point::new(c.x + 0.5 * self.region.macro_radius, c.y)
    }

    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let cells = &self.small_cells;
        (0..cells.len())
            .flat_map(|i| ((i + 1)..cells.len()).map(move |j| (i, j)))
            .map(|(i, j)| cells[i].center.distance(&cells[j].center))
            .min_by(f64::total_cmp)
    }
}

/// How a hard-core layout was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HcppConstruction {
    /// Matérn type-II thinning of a Poisson parent process.
    MaternTypeII,
    /// Sequential inhibition (random sequential adsorption), used once the
    /// requested density is beyond what type-II thinning can deliver.
    SequentialInhibition,
}

/// Raised when the requested density cannot be produced by type-II thinning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationWarning {
    /// Requested expected number of cells.
    pub requested: f64,
    /// Largest expected count type-II thinning can reach in this region.
    pub type_ii_ceiling: f64,
    /// Cells actually placed.
    pub achieved: usize,
}

#[derive(Debug, Clone)]
pub struct HcppSample {
    pub topology: NetworkTopology,
    pub construction: HcppConstruction,
    pub parent_intensity: Option<f64>,
    pub warning: Option<SaturationWarning>,
}

/// Parameters of a Matérn hard-core small-cell deployment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcppParams {
    pub region: Region,
    pub macro_bs: MacroBs,
    pub tier: CellTier,
    /// Target density in cells per m², counted against the full macro disk.
    pub density: f64,
    pub hard_core: f64,
}

impl HcppParams {
    fn admissible_radius(&self) -> f64 {
        self.region.macro_radius - self.tier.radius
    }

    /// Expected number of cells asked for: density × macro area.
    pub fn requested_count(&self) -> f64 {
        self.density * self.region.area()
    }

    fn check(&self) -> Result<()> {
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::param("density", format!("must be a non-negative number, got {}", self.density)));
        }
        if !(self.tier.radius > 0.0) {
            return Err(Error::param("cell_radius", format!("must be positive, got {}", self.tier.radius)));
        }
        if !(self.hard_core >= 2.0 * self.tier.radius) {
            return Err(Error::param(
                "hard_core",
                format!(
                    "{} m is below twice the cell radius ({} m); cells would overlap",
                    self.hard_core,
                    2.0 * self.tier.radius
                ),
            ));
        }
        if self.admissible_radius() <= 0.0 {
            return Err(Error::InfeasibleRegion {
                macro_radius: self.region.macro_radius,
                cell_radius: self.tier.radius,
            });
        }
        Ok(())
    }

    /// Expected number of type-II survivors for a parent intensity, with
    /// parents restricted to the admissible disk (edge effects included).
    pub fn expected_retained(&self, parent_intensity: f64) -> f64 {
        let ra = self.admissible_radius();
        let rh = self.hard_core;
        let f = |rho: f64| {
            let a = lens_area(rho, rh, ra);
            let x = parent_intensity * a;
            let retention = if x < 1e-12 { parent_intensity } else { -(-x).exp_m1() / a };
            TAU * rho * retention
        };
        radial_integral(f, ra, rh)
    }

    /// Supremum of [`expected_retained`](Self::expected_retained) as the
    /// parent intensity grows without bound.
    pub fn type_ii_ceiling(&self) -> f64 {
        let ra = self.admissible_radius();
        let rh = self.hard_core;
        radial_integral(|rho| TAU * rho / lens_area(rho, rh, ra), ra, rh)
    }

    /// Parent intensity whose type-II survivors match the requested count.
    pub fn solve_parent_intensity(&self) -> Option<f64> {
        let target = self.requested_count();
        if target == 0.0 {
            return Some(0.0);
        }
        if target > TYPE_II_SATURATION * self.type_ii_ceiling() {
            return None;
        }
        let area = PI * self.admissible_radius().powi(2);
        let mut lo = target / area;
        let mut hi = 2.0 * lo;
        while self.expected_retained(hi) < target {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.expected_retained(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

fn radial_integral<F: FnMut(f64) -> f64>(mut f: F, ra: f64, rh: f64) -> f64 {
    // The lens area has a kink where the inhibition disk first touches the edge.
    let kink = (ra - rh).clamp(0.0, ra);
    let tol = Tolerance::relative(1e-10);
    let inner = integrate(&mut f, 0.0, kink, tol).map(|r| r.value).unwrap_or(f64::NAN);
    let outer = integrate(&mut f, kink, ra, tol).map(|r| r.value).unwrap_or(f64::NAN);
    inner + outer
}

/// Area of the intersection of a disk of radius `rh` centered `rho` away from
/// the center of a disk of radius `ra`.
fn lens_area(rho: f64, rh: f64, ra: f64) -> f64 {
    if rho + rh <= ra {
        return PI * rh * rh;
    }
    if rho + ra <= rh {
        return PI * ra * ra;
    }
    let d = rho;
    let a1 = ((d * d + rh * rh - ra * ra) / (2.0 * d * rh)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + ra * ra - rh * rh) / (2.0 * d * ra)).clamp(-1.0, 1.0).acos();
    let k = ((-d + rh + ra) * (d + rh - ra) * (d - rh + ra) * (d + rh + ra)).max(0.0).sqrt();
    rh * rh * a1 + ra * ra * a2 - 0.5 * k
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, center: Point, radius: f64) -> Point {
    center.offset(sample_uniform_disk(radius, rng))
}

/// Samples a Matérn hard-core small-cell deployment inside the macro disk.
///
/// Cell centers are restricted to the disk of radius `macro_radius - R` so
/// every coverage disk lies inside the macro cell. The parent intensity is
/// solved so the expected number of survivors equals `density × π R_macro²`.
/// When that count is out of reach for type-II thinning the sampler falls
/// back to sequential inhibition and reports a [`SaturationWarning`].
///
/// The tagged cell is the one nearest to `(R_macro / 2, 0)`.
pub fn sample_matern_hcpp(params: &HcppParams, seed: u64) -> Result<HcppSample> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = params.region.macro_center;
    let ra = params.admissible_radius();
    let rh = params.hard_core;

    let (centers, construction, parent_intensity, warning) = match params.solve_parent_intensity() {
        Some(lambda_p) => {
            let mean = lambda_p * PI * ra * ra;
            let n = if mean > 0.0 {
                Poisson::new(mean).expect("positive Poisson mean").sample(&mut rng) as usize
            } else {
                0
            };
            let parents: Vec<(Point, f64)> = (0..n)
                .map(|_| {
                    let p = uniform_in_disk(&mut rng, center, ra);
                    (p, rng.random::<f64>())
                })
                .collect();
            let kept = parents
                .iter()
                .enumerate()
                .filter(|(i, (p, mark))| {
                    !parents.iter().enumerate().any(|(j, (q, other))| {
                        j != *i && p.distance(q) < rh && (other < mark || (other == mark && j < *i))
                    })
                })
                .map(|(_, (p, _))| *p)
                .collect::<Vec<_>>();
            (kept, HcppConstruction::MaternTypeII, Some(lambda_p), None)
        }
        None => {
            let requested = params.requested_count();
            let target = requested.round() as usize;
            let mut placed: Vec<Point> = Vec::with_capacity(target);
            let mut misses = 0;
            while placed.len() < target && misses < SSI_MAX_CONSECUTIVE_REJECTIONS {
                let p = uniform_in_disk(&mut rng, center, ra);
                if placed.iter().all(|q| p.distance(q) >= rh) {
                    placed.push(p);
                    misses = 0;
                } else {
                    misses += 1;
                }
            }
            let warning =
                SaturationWarning { requested, type_ii_ceiling: params.type_ii_ceiling(), achieved: placed.len() };
            log::warn!(
                "requested {:.1} cells exceeds the hard-core packing capacity of type-II thinning ({:.1}); \
                 placed {} by sequential inhibition",
                warning.requested,
                warning.type_ii_ceiling,
                warning.achieved
            );
            (placed, HcppConstruction::SequentialInhibition, None, Some(warning))
        }
    };

    let small_cells: Vec<SmallCell> = centers.into_iter().map(|c| params.tier.at(c)).collect();
    let mut topology =
        NetworkTopology { region: params.region, macro_bs: params.macro_bs, small_cells, hard_core: rh, tagged: None };
    topology.tagged = topology.nearest_cell(topology.default_tag_anchor());
    topology.validate()?;
    Ok(HcppSample { topology, construction, parent_intensity, warning })
}

/// Uniform point in a disk of the given radius, in polar form.
pub fn sample_uniform_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> PolarPoint {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = TAU * rng.random::<f64>();
    PolarPoint { r, theta }
}

/// Distance between an interfering UE and a victim UE, each given relative to
/// its own cell center, with the victim's center `separation` meters from the
/// interferer's center along the positive x axis.
///
/// Composed through the law of cosines twice: first the distance `c` from the
/// interferer to the victim's BS, then the angle between that line and the
/// victim's offset.
pub fn interferer_distance(interferer: PolarPoint, victim: PolarPoint, separation: f64) -> f64 {
    let (r1, t1) = (interferer.r, interferer.theta);
    let (r2, t2) = (victim.r, victim.theta);
    let d = separation;
    let c2 = (r1 * r1 + d * d - 2.0 * r1 * d * t1.cos()).max(0.0);
    let c = c2.sqrt();
    // Angle at the victim's BS between the line of centers and the interferer.
    let psi = (r1 * t1.sin()).atan2(d - r1 * t1.cos());
    (c2 + r2 * r2 + 2.0 * c * r2 * (t2 + psi).cos()).max(0.0).sqrt()
}
