pub mod metrics;
pub mod milp;
pub mod mpc;
pub mod plant;
pub mod rules;
pub mod scenario;
pub mod weather;
