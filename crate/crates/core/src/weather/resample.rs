use chrono::{Duration, NaiveDateTime};

use super::{ExogenousTrace, WeatherError, WeatherRecord};

pub(crate) fn step_duration(dt_hours: f64) -> Duration {
    Duration::milliseconds((dt_hours * 3_600_000.0).round() as i64)
}

fn seconds(a: NaiveDateTime, b: NaiveDateTime) -> f64 {
    (b - a).num_milliseconds() as f64 / 1000.0
}

/// Piecewise-linear value at `t`; clamped to the first/last record outside
/// the data span. Records must be sorted.
pub(crate) fn interpolate(records: &[WeatherRecord], t: NaiveDateTime) -> (f64, f64) {
    let i = records.partition_point(|r| r.timestamp <= t);
    if i == 0 {
        let r = &records[0];
        return (r.ghi, r.ambient_temp);
    }
    let lo = &records[i - 1];
    if lo.timestamp == t || i == records.len() {
        return (lo.ghi, lo.ambient_temp);
    }
    let hi = &records[i];
    let w = seconds(lo.timestamp, t) / seconds(lo.timestamp, hi.timestamp);
    (
        lo.ghi + (hi.ghi - lo.ghi) * w,
        lo.ambient_temp + (hi.ambient_temp - lo.ambient_temp) * w,
    )
}

/// Uniform grid from the first to the last record (inclusive where the span
/// is a whole number of steps).
pub fn resample(records: &[WeatherRecord], dt_hours: f64) -> Result<ExogenousTrace, WeatherError> {
    if !(dt_hours > 0.0 && dt_hours.is_finite()) {
        return Err(WeatherError::InvalidStep(dt_hours));
    }
    if records.len() < 2 {
        return Err(WeatherError::InsufficientCoverage("need at least two records".into()));
    }
    let start = records[0].timestamp;
    let span = seconds(start, records[records.len() - 1].timestamp);
    let n = (span / (dt_hours * 3600.0) + 1e-9).floor() as usize + 1;
    resample_span(records, start, n, dt_hours)
}

/// `n_steps` samples starting at `start`. Points beyond the last record hold
/// its value; the span must start within the data.
pub fn resample_span(
    records: &[WeatherRecord],
    start: NaiveDateTime,
    n_steps: usize,
    dt_hours: f64,
) -> Result<ExogenousTrace, WeatherError> {
    if !(dt_hours > 0.0 && dt_hours.is_finite()) {
        return Err(WeatherError::InvalidStep(dt_hours));
    }
    if records.len() < 2 {
        return Err(WeatherError::InsufficientCoverage("need at least two records".into()));
    }
    if start < records[0].timestamp || start > records[records.len() - 1].timestamp {
        return Err(WeatherError::InsufficientCoverage(format!(
            "start {start} lies outside the weather data"
        )));
    }
    let step = step_duration(dt_hours);
    let mut ghi = Vec::with_capacity(n_steps);
    let mut temp = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let (g, t) = interpolate(records, start + step * k as i32);
        ghi.push(g.max(0.0));
        temp.push(t);
    }
    Ok(ExogenousTrace {
        dt_hours,
        secondary_demand: vec![0.0; n_steps],
        ghi,
        ambient_temp: temp,
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn recs(minutes: i64, vals: &[f64]) -> Vec<WeatherRecord> {
        let t0 = NaiveDate::from_ymd_opt(2017, 9, 11)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        vals.iter()
            .enumerate()
            .map(|(i, &v)| WeatherRecord {
                timestamp: t0 + Duration::minutes(minutes * i as i64),
                ghi: v,
                ambient_temp: 20.0 + v / 100.0,
            })
            .collect()
    }

    #[test]
    fn thirty_to_ten_minutes() {
        let r = recs(30, &[0.0, 300.0, 600.0, 300.0]);
        let t = resample(&r, 1.0 / 6.0).unwrap();
        assert_eq!(t.len(), 10);
        let want = [0.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 500.0, 400.0, 300.0];
        for (g, w) in t.ghi.iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn single_record_fails() {
        let r = recs(30, &[5.0]);
        assert!(matches!(resample(&r, 0.5), Err(WeatherError::InsufficientCoverage(_))));
    }

    #[test]
    fn constants_stay_constant() {
        let r = recs(60, &[50.0; 6]);
        let t = resample(&r, 0.25).unwrap();
        assert!(t.ghi.iter().all(|&g| g == 50.0));
        assert!(t.ambient_temp.iter().all(|&v| v == 20.5));
    }

    #[test]
    fn clamps_past_end() {
        let r = recs(60, &[10.0, 20.0]);
        let t = resample_span(&r, r[0].timestamp, 5, 0.5).unwrap();
        assert_eq!(t.ghi, vec![10.0, 15.0, 20.0, 20.0, 20.0]);
    }
}
