//! The 12-agent CW experiment: setup, ILQR, sparsification sweep,
//! closed-loop rollouts, information graphs and file export.

mod config;
mod export;
mod graph;
mod measure;
mod scenario;

pub use config::{DiagStd, Formation, LoopMode, PlantConfig, ScenarioConfig, SensorConfig, SparseConfig};
pub use export::{export_results, format_f64, read_matrix_csv, summary_json};
pub use graph::{edge_count, information_graph};
pub use measure::{generate_measurements, match_estimates, Region};
pub use scenario::{
    build_scenario, formation_means, normalize_problem, rollout_closed_loop, run_scenario, sparse_problem, Baseline, GammaEntry, GammaRecord,
    Normalization, Rollout, ScenarioResult, ScenarioSetup, AGENT_CONTROL_DIM, AGENT_STATE_DIM,
};
