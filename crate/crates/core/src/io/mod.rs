//! Scenario files, topology replay files and CSV result emission.

mod output;
mod scenario;
mod topology_file;

pub use output::{emit_benchmark, emit_breakdown, emit_sweep, format_value, sidecar_path, SweepMetadata};
pub use scenario::{load_scenario, Scenario, ScenarioConfig};
pub use topology_file::{load_topology, save_topology, TopologyFile};
