//! Scenario configuration, closed-loop runs and parameter sweeps.

mod config;
mod run;
mod sweep;

pub use config::{ControllerKind, HistorySource, ScenarioConfig, SizePreset, WeatherSource};
pub use run::{
    build_secondary_profile, run_scenario, run_with_inputs, write_gnuplot, write_run_outputs, RunOptions, RunOutput,
    ScenarioError, ScenarioInputs,
};
pub use sweep::{
    compare_house_models, fast_charge_cells, horizon_cells, house_cells, run_cells, size_cells, sweep_fast_charge,
    sweep_horizon, sweep_sizes, write_sweep_csv, SweepCell, SweepRow, DEFAULT_BUDGETS_H, DEFAULT_HORIZONS_H,
    SWEEP_PARAM_COLUMNS,
};
