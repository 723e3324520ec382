use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, watts_to_dbm};
use crate::error::{Error, Result};
use crate::geometry::{MacroBs, NetworkTopology, Point, Region, SmallCell};

/// On-disk topology layout: positions and radii in meters, powers in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub macro_radius_m: f64,
    pub hard_core_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tagged_index: Option<usize>,
    pub macro_bs: StationRecord,
    #[serde(default)]
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationRecord {
    pub x_m: f64,
    pub y_m: f64,
    pub power_dbm: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub x_m: f64,
    pub y_m: f64,
    pub radius_m: f64,
    pub power_dbm: f64,
    pub alpha: f64,
}

impl From<&NetworkTopology> for TopologyFile {
    fn from(t: &NetworkTopology) -> Self {
        Self {
            macro_radius_m: t.region.macro_radius,
            hard_core_m: t.hard_core,
            tagged_index: t.tagged,
            macro_bs: StationRecord {
                x_m: t.macro_bs.position.x,
                y_m: t.macro_bs.position.y,
                power_dbm: watts_to_dbm(t.macro_bs.power_w),
                alpha: t.macro_bs.alpha,
            },
            cells: t
                .small_cells
                .iter()
                .map(|c| CellRecord {
                    x_m: c.center.x,
                    y_m: c.center.y,
                    radius_m: c.radius,
                    power_dbm: watts_to_dbm(c.power_w),
                    alpha: c.alpha,
                })
                .collect(),
        }
    }
}

impl TopologyFile {
    pub fn into_topology(self) -> Result<NetworkTopology> {
        let m = &self.macro_bs;
        NetworkTopology::new(
            Region::new(self.macro_radius_m)?,
            MacroBs { position: Point::new(m.x_m, m.y_m), power_w: dbm_to_watts(m.power_dbm), alpha: m.alpha },
            self.cells
                .iter()
                .map(|c| SmallCell {
                    center: Point::new(c.x_m, c.y_m),
                    radius: c.radius_m,
                    power_w: dbm_to_watts(c.power_dbm),
                    alpha: c.alpha,
                })
                .collect(),
            self.hard_core_m,
            self.tagged_index,
        )
    }
}

pub fn save_topology(topology: &NetworkTopology, path: impl AsRef<Path>) -> Result<()> {
    let text = toml::to_string(&TopologyFile::from(topology)).expect("topology serializes");
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<NetworkTopology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let file: TopologyFile =
        toml::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    file.into_topology()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_matern_hcpp, CellTier, HcppParams};

    #[test]
    fn saved_topology_reloads() {
        let params = HcppParams {
            region: Region::new(1000.0).unwrap(),
            macro_bs: MacroBs { position: Point::ORIGIN, power_w: dbm_to_watts(46.0), alpha: 3.0 },
            tier: CellTier { radius: 90.0, power_w: dbm_to_watts(35.0), alpha: 3.0 },
            density: 5e-6,
            hard_core: 180.0,
        };
        let t = sample_matern_hcpp(&params, 8).unwrap().topology;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topo.toml");
        save_topology(&t, &path).unwrap();
        let back = load_topology(&path).unwrap();
        assert_eq!(back.small_cells.len(), t.small_cells.len());
        assert_eq!(back.tagged, t.tagged);
        for (a, b) in back.small_cells.iter().zip(&t.small_cells) {
            assert_eq!(a.center, b.center);
            assert!((a.power_w / b.power_w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_cells_rejected_on_load() {
        let text = r#"
macro_radius_m = 1000.0
hard_core_m = 180.0
[macro_bs]
x_m = 0.0
y_m = 0.0
power_dbm = 46.0
alpha = 3.0
[[cells]]
x_m = 100.0
y_m = 0.0
radius_m = 90.0
power_dbm = 35.0
alpha = 3.0
[[cells]]
x_m = 200.0
y_m = 0.0
radius_m = 90.0
power_dbm = 35.0
alpha = 3.0
"#;
        let file: TopologyFile = toml::from_str(text).unwrap();
        assert!(matches!(file.into_topology(), Err(Error::InvalidTopology(_))));
    }
}
