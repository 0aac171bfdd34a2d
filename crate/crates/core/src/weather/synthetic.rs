//! Bundled synthetic week resembling a hurricane landfall followed by
//! gradual clearing, used when no NSRDB file is supplied.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};

use super::{steps_per_day, HistoricalProfiles, HistoricalTempProfile, WeatherError, WeatherRecord};

pub const PEAK_GHI: f64 = 950.0;
pub const SUNRISE_H: f64 = 6.25;
pub const SUNSET_H: f64 = 18.6;
/// Hours from the start covered by the storm.
pub const STORM_HOURS: f64 = 36.0;
pub const STORM_CLEARNESS: f64 = 0.05;
/// Clearness for each day after the storm, the last value repeating.
pub const RECOVERY_CLEARNESS: [f64; 6] = [0.6, 0.6, 0.7, 0.8, 0.9, 0.9];
pub const TEMP_MEAN: f64 = 27.0;
pub const TEMP_AMPLITUDE: f64 = 4.0;
pub const TEMP_PEAK_H: f64 = 15.0;
pub const STORM_TEMP_MEAN: f64 = 25.0;
pub const STORM_TEMP_AMPLITUDE: f64 = 1.5;

pub fn default_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2017, 9, 11)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

fn hour_of_day(t: NaiveDateTime) -> f64 {
    f64::from(t.num_seconds_from_midnight()) / 3600.0
}

pub fn clear_sky_ghi(hour: f64) -> f64 {
    if hour <= SUNRISE_H || hour >= SUNSET_H {
        0.0
    } else {
        PEAK_GHI * (PI * (hour - SUNRISE_H) / (SUNSET_H - SUNRISE_H)).sin()
    }
}

pub fn historical_temp(hour: f64) -> f64 {
    TEMP_MEAN + TEMP_AMPLITUDE * (2.0 * PI * (hour - TEMP_PEAK_H) / 24.0).cos()
}

/// Weather at `elapsed_h` hours after `start` of the synthetic scenario.
pub fn sample(start: NaiveDateTime, elapsed_h: f64) -> WeatherRecord {
    let t = start + Duration::milliseconds((elapsed_h * 3.6e6).round() as i64);
    let hour = hour_of_day(t);
    let (clearness, mean, amp) = if elapsed_h < STORM_HOURS {
        (STORM_CLEARNESS, STORM_TEMP_MEAN, STORM_TEMP_AMPLITUDE)
    } else {
        let storm_end_day = (STORM_HOURS / 24.0).floor();
        let day = ((elapsed_h / 24.0).floor() - storm_end_day).max(0.0) as usize;
        let c = RECOVERY_CLEARNESS[day.min(RECOVERY_CLEARNESS.len() - 1)];
        (c, TEMP_MEAN, TEMP_AMPLITUDE)
    };
    WeatherRecord {
        timestamp: t,
        ghi: clearness * clear_sky_ghi(hour),
        ambient_temp: mean + amp * (2.0 * PI * (hour - TEMP_PEAK_H) / 24.0).cos(),
    }
}

/// Records at `cadence_minutes` spanning `hours` from `start`, inclusive of
/// both ends.
pub fn records(start: NaiveDateTime, hours: f64, cadence_minutes: u32) -> Vec<WeatherRecord> {
    let step = f64::from(cadence_minutes) / 60.0;
    let n = (hours / step).floor() as usize + 1;
    (0..n).map(|i| sample(start, i as f64 * step)).collect()
}

/// The undisturbed diurnal temperature shape for every day of year.
pub fn historical_profiles(dt_hours: f64) -> Result<HistoricalProfiles, WeatherError> {
    let spd = steps_per_day(dt_hours)?;
    let values: Vec<f64> = (0..spd).map(|i| historical_temp(i as f64 * dt_hours)).collect();
    let mut days = BTreeMap::new();
    for doy in 1..=366 {
        days.insert(
            doy,
            HistoricalTempProfile {
                day_of_year: doy,
                values: values.clone(),
            },
        );
    }
    Ok(HistoricalProfiles { dt_hours, days })
}
