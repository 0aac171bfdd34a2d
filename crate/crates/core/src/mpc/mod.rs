//! Receding-horizon MILP controller.

mod controller;
mod problem;

pub use controller::{snap_gamma, MpcController, MpcDiagnostics, GAMMA_SNAP};
pub use problem::{
    all_off_point, build_problem, map_gamma, predict_house_temp, BatteryTerm, HorizonForecast, HousePrediction,
    MpcConfig, MpcDecisionLayout, MpcError,
};
