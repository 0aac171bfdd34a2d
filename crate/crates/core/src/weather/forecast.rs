use serde::{Deserialize, Serialize};

use super::WeatherError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    /// The true future values.
    #[default]
    Perfect,
    /// Values observed exactly one day earlier, repeated for horizons longer
    /// than a day.
    Persistence,
}

/// Forecast of `series[k..k+n]`.
pub fn forecast(
    series: &[f64],
    k: usize,
    n: usize,
    mode: ForecastMode,
    steps_per_day: usize,
) -> Result<Vec<f64>, WeatherError> {
    let out_of_range = || WeatherError::HorizonOutOfRange {
        k,
        n,
        len: series.len(),
    };
    match mode {
        ForecastMode::Perfect => series.get(k..k + n).map(<[f64]>::to_vec).ok_or_else(out_of_range),
        ForecastMode::Persistence => {
            if k < steps_per_day || k > series.len() || steps_per_day == 0 {
                return Err(out_of_range());
            }
            Ok((0..n).map(|i| series[k + i % steps_per_day - steps_per_day]).collect())
        }
    }
}
