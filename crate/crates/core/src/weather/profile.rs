use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::resample::interpolate;
use super::{steps_per_day, WeatherError, WeatherRecord};

/// Samples are only interpolated between records at most this far apart.
pub const MAX_INTERP_GAP_HOURS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalTempProfile {
    pub day_of_year: u32,
    /// One mean temperature per step of the day, starting at midnight.
    pub values: Vec<f64>,
}

/// Mean daily temperature shapes keyed by day of year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalProfiles {
    pub dt_hours: f64,
    pub days: BTreeMap<u32, HistoricalTempProfile>,
}

/// Day index that is stable across leap and common years: the common-year
/// ordinal, with 29 February mapped to 366.
pub fn day_of_year(date: NaiveDate) -> u32 {
    if date.month() == 2 && date.day() == 29 {
        return 366;
    }
    let ord = date.ordinal();
    if date.leap_year() && date.month() > 2 {
        ord - 1
    } else {
        ord
    }
}

fn slot_of(t: NaiveDateTime, dt_hours: f64) -> Option<usize> {
    let secs = f64::from(t.num_seconds_from_midnight());
    let slot = secs / (dt_hours * 3600.0);
    ((slot - slot.round()).abs() < 1e-9).then_some(slot.round() as usize)
}

/// Averages every sample falling on each (day of year, time of day) bucket.
/// Days not covered at every step are left out.
pub fn build_historical_profile(records: &[WeatherRecord], dt_hours: f64) -> Result<HistoricalProfiles, WeatherError> {
    let spd = steps_per_day(dt_hours)?;
    if records.is_empty() {
        return Err(WeatherError::InsufficientCoverage("no records".into()));
    }
    let step = super::resample::step_duration(dt_hours);
    let max_gap = chrono::Duration::milliseconds((MAX_INTERP_GAP_HOURS * 3.6e6) as i64);
    let mut sums: BTreeMap<u32, (Vec<f64>, Vec<u32>)> = BTreeMap::new();
    let first = records[0].timestamp;
    let last = records[records.len() - 1].timestamp;
    let mut t = first.date().and_hms_opt(0, 0, 0).expect("midnight");
    while t < first {
        t += step;
    }
    while t <= last {
        let i = records.partition_point(|r| r.timestamp <= t);
        let exact = i > 0 && records[i - 1].timestamp == t;
        let bridged = i > 0 && i < records.len() && records[i].timestamp - records[i - 1].timestamp <= max_gap;
        if exact || bridged {
            if let Some(slot) = slot_of(t, dt_hours) {
                let (_, temp) = interpolate(records, t);
                let e = sums
                    .entry(day_of_year(t.date()))
                    .or_insert_with(|| (vec![0.0; spd], vec![0; spd]));
                e.0[slot] += temp;
                e.1[slot] += 1;
            }
        }
        t += step;
    }
    let days: BTreeMap<u32, HistoricalTempProfile> = sums
        .into_iter()
        .filter(|(_, (_, n))| n.iter().all(|&c| c > 0))
        .map(|(doy, (s, n))| {
            let values = s.iter().zip(&n).map(|(v, &c)| v / f64::from(c)).collect();
            (
                doy,
                HistoricalTempProfile {
                    day_of_year: doy,
                    values,
                },
            )
        })
        .collect();
    if days.is_empty() {
        return Err(WeatherError::InsufficientCoverage("no fully covered day".into()));
    }
    Ok(HistoricalProfiles { dt_hours, days })
}

impl HistoricalProfiles {
    pub fn day(&self, doy: u32) -> Result<&HistoricalTempProfile, WeatherError> {
        self.days
            .get(&doy)
            .ok_or_else(|| WeatherError::InsufficientCoverage(format!("no historical profile for day {doy}")))
    }

    pub fn at(&self, t: NaiveDateTime) -> Result<f64, WeatherError> {
        let slot = slot_of(t, self.dt_hours)
            .ok_or_else(|| WeatherError::InsufficientCoverage(format!("{t} is not on the profile grid")))?;
        Ok(self.day(day_of_year(t.date()))?.values[slot])
    }

    /// `n` consecutive profile values starting at `start`, rolling over
    /// midnight into the next day's profile.
    pub fn slice(&self, start: NaiveDateTime, n: usize) -> Result<Vec<f64>, WeatherError> {
        let step = super::resample::step_duration(self.dt_hours);
        (0..n).map(|i| self.at(start + step * i as i32)).collect()
    }

    /// One `day_NNN.csv` per day with columns `time_of_day,temp_c`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), WeatherError> {
        fs::create_dir_all(dir)?;
        let step = super::resample::step_duration(self.dt_hours);
        let midnight = NaiveDate::from_ymd_opt(2001, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("valid");
        for p in self.days.values() {
            let mut w = csv::Writer::from_path(dir.join(format!("day_{:03}.csv", p.day_of_year)))?;
            w.write_record(["time_of_day", "temp_c"])?;
            for (i, v) in p.values.iter().enumerate() {
                let t = midnight + step * i as i32;
                w.write_record([t.format("%H:%M").to_string(), format!("{v}")])?;
            }
            w.flush()?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path, dt_hours: f64) -> Result<Self, WeatherError> {
        let spd = steps_per_day(dt_hours)?;
        let mut days = BTreeMap::new();
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let name = e.file_name().to_string_lossy().into_owned();
            let Some(doy) = name
                .strip_prefix("day_")
                .and_then(|s| s.strip_suffix(".csv"))
                .and_then(|s| s.parse::<u32>().ok())
            else {
                continue;
            };
            let mut r = csv::Reader::from_path(e.path())?;
            let mut values = Vec::with_capacity(spd);
            for (i, rec) in r.records().enumerate() {
                let rec = rec?;
                let v: f64 =
                    rec.get(1)
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| WeatherError::MalformedRow {
                            row: i + 2,
                            reason: format!("bad temperature in {name}"),
                        })?;
                values.push(v);
            }
            if values.len() != spd {
                return Err(WeatherError::InsufficientCoverage(format!(
                    "{name} has {} rows, expected {spd}",
                    values.len()
                )));
            }
            days.insert(
                doy,
                HistoricalTempProfile {
                    day_of_year: doy,
                    values,
                },
            );
        }
        if days.is_empty() {
            return Err(WeatherError::InsufficientCoverage(format!(
                "no day_NNN.csv files in {}",
                dir.display()
            )));
        }
        Ok(Self { dt_hours, days })
    }
}
