//! Weather ingestion, resampling, historical temperature profiles and
//! forecasts.

mod forecast;
mod ingest;
mod profile;
mod resample;
pub mod synthetic;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forecast::{forecast, ForecastMode};
pub use ingest::{parse_timestamp, parse_weather_csv, CsvSchema, TimestampColumns};
pub use profile::{
    build_historical_profile, day_of_year, HistoricalProfiles, HistoricalTempProfile, MAX_INTERP_GAP_HOURS,
};
pub use resample::{resample, resample_span};

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("empty weather file")]
    EmptyFile,
    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),
    #[error("horizon [{k}, {k}+{n}) out of range for series of length {len}")]
    HorizonOutOfRange { k: usize, n: usize, len: usize },
    #[error("invalid step length {0} h")]
    InvalidStep(f64),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub timestamp: NaiveDateTime,
    /// Global horizontal irradiance, W/m².
    pub ghi: f64,
    pub ambient_temp: f64,
}

/// Uniformly sampled exogenous inputs for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousTrace {
    pub dt_hours: f64,
    pub ghi: Vec<f64>,
    pub ambient_temp: Vec<f64>,
    /// Desired secondary-load energy per step, Wh.
    pub secondary_demand: Vec<f64>,
    pub start: NaiveDateTime,
}

impl ExogenousTrace {
    pub fn len(&self) -> usize {
        self.ghi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ghi.is_empty()
    }

    pub fn timestamp(&self, k: usize) -> NaiveDateTime {
        self.start + resample::step_duration(self.dt_hours) * k as i32
    }

    pub fn steps_per_day(&self) -> Result<usize, WeatherError> {
        steps_per_day(self.dt_hours)
    }

    pub fn validate(&self) -> Result<(), WeatherError> {
        let n = self.ghi.len();
        if self.ambient_temp.len() != n || self.secondary_demand.len() != n {
            return Err(WeatherError::LengthMismatch(format!(
                "ghi {n}, temperature {}, secondary {}",
                self.ambient_temp.len(),
                self.secondary_demand.len()
            )));
        }
        if self
            .ghi
            .iter()
            .chain(&self.secondary_demand)
            .any(|&v| !(v >= 0.0 && v.is_finite()))
        {
            return Err(WeatherError::LengthMismatch(
                "ghi and secondary demand must be finite and >= 0".into(),
            ));
        }
        if self.ambient_temp.iter().any(|v| !v.is_finite()) {
            return Err(WeatherError::LengthMismatch("non-finite temperature".into()));
        }
        Ok(())
    }
}

/// Whole number of steps in a day, or `InvalidStep`.
pub fn steps_per_day(dt_hours: f64) -> Result<usize, WeatherError> {
    let spd = 24.0 / dt_hours;
    if !(dt_hours > 0.0) || !spd.is_finite() || (spd - spd.round()).abs() > 1e-9 || spd.round() < 1.0 {
        return Err(WeatherError::InvalidStep(dt_hours));
    }
    Ok(spd.round() as usize)
}
