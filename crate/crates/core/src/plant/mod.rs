//! Physical plant: PV, battery bucket, thermostat-latched fridge and house
//! temperature, advanced one step at a time.

mod config;
mod fridge;
mod house;
mod step;

pub use config::{sized, ConfigError, SystemConfig};
pub use fridge::{discretize_fridge, thermostat_output, FridgeDiscretization};
pub use house::HouseModel;
pub use step::{pv_energy, thermostat, ControlCommand, Plant, PlantState, StepAccounting};
