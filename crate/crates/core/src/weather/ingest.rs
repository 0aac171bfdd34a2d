use std::io::Read;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{WeatherError, WeatherRecord};

/// Where the timestamp lives in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimestampColumns {
    /// One column holding ISO-8601 text or epoch seconds.
    Single(String),
    /// NSRDB-style split columns.
    Split {
        year: String,
        month: String,
        day: String,
        hour: String,
        minute: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub timestamp: TimestampColumns,
    pub ghi: String,
    pub temperature: String,
    /// Lines to drop before the header row.
    pub skip_lines: usize,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: TimestampColumns::Single("ts".into()),
            ghi: "ghi".into(),
            temperature: "temp".into(),
            skip_lines: 0,
        }
    }
}

impl CsvSchema {
    /// Layout of an NSRDB PSM download: two metadata lines, then
    /// `Year,Month,Day,Hour,Minute,...,GHI,...,Temperature,...`.
    pub fn nsrdb() -> Self {
        Self {
            timestamp: TimestampColumns::Split {
                year: "Year".into(),
                month: "Month".into(),
                day: "Day".into(),
                hour: "Hour".into(),
                minute: "Minute".into(),
            },
            ghi: "GHI".into(),
            temperature: "Temperature".into(),
            skip_lines: 2,
        }
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    for f in FORMATS {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, f) {
            return Some(t);
        }
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_local());
    }
    if let Ok(secs) = s.parse::<i64>() {
        return DateTime::from_timestamp(secs, 0).map(|t| t.naive_utc());
    }
    if let Ok(secs) = s.parse::<f64>() {
        if secs.is_finite() {
            let whole = secs.floor();
            let nanos = ((secs - whole) * 1e9).round() as u32;
            return DateTime::from_timestamp(whole as i64, nanos.min(999_999_999)).map(|t| t.naive_utc());
        }
    }
    None
}

enum TsIdx {
    Single(usize),
    Split([usize; 5]),
}

/// Reads weather records, sorted by timestamp. Duplicate timestamps are
/// reported as malformed rows.
pub fn parse_weather_csv<R: Read>(mut source: R, schema: &CsvSchema) -> Result<Vec<WeatherRecord>, WeatherError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut offset = 0usize;
    for _ in 0..schema.skip_lines {
        match text[offset..].find('\n') {
            Some(p) => offset += p + 1,
            None => return Err(WeatherError::EmptyFile),
        }
    }
    let body = &text[offset..];
    if body.trim().is_empty() {
        return Err(WeatherError::EmptyFile);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| WeatherError::MissingColumn(name.to_string()))
    };
    let ts = match &schema.timestamp {
        TimestampColumns::Single(n) => TsIdx::Single(col(n)?),
        TimestampColumns::Split {
            year,
            month,
            day,
            hour,
            minute,
        } => TsIdx::Split([col(year)?, col(month)?, col(day)?, col(hour)?, col(minute)?]),
    };
    let ghi_col = col(&schema.ghi)?;
    let temp_col = col(&schema.temperature)?;

    let mut out: Vec<(usize, WeatherRecord)> = Vec::new();
    for result in rdr.records() {
        let rec = result?;
        let row = rec.position().map_or(0, |p| p.line() as usize + schema.skip_lines);
        let malformed = |reason: &str| WeatherError::MalformedRow {
            row,
            reason: reason.to_string(),
        };
        let field = |i: usize| rec.get(i).ok_or_else(|| malformed("missing field"));
        let timestamp = match &ts {
            TsIdx::Single(i) => parse_timestamp(field(*i)?).ok_or_else(|| malformed("bad timestamp"))?,
            TsIdx::Split(idx) => {
                let mut v = [0u32; 5];
                for (k, &i) in idx.iter().enumerate() {
                    v[k] = field(i)?.parse().map_err(|_| malformed("bad timestamp part"))?;
                }
                NaiveDate::from_ymd_opt(v[0] as i32, v[1], v[2])
                    .and_then(|d| d.and_hms_opt(v[3], v[4], 0))
                    .ok_or_else(|| malformed("bad calendar date"))?
            }
        };
        let ghi: f64 = field(ghi_col)?.parse().map_err(|_| malformed("bad ghi"))?;
        if !ghi.is_finite() || ghi < 0.0 {
            return Err(malformed("ghi must be finite and >= 0"));
        }
        let ambient_temp: f64 = field(temp_col)?.parse().map_err(|_| malformed("bad temperature"))?;
        if !ambient_temp.is_finite() {
            return Err(malformed("temperature must be finite"));
        }
        out.push((
            row,
            WeatherRecord {
                timestamp,
                ghi,
                ambient_temp,
            },
        ));
    }
    if out.is_empty() {
        return Err(WeatherError::EmptyFile);
    }
    out.sort_by_key(|(_, r)| r.timestamp);
    for w in out.windows(2) {
        if w[0].1.timestamp == w[1].1.timestamp {
            return Err(WeatherError::MalformedRow {
                row: w[1].0,
                reason: "duplicate timestamp".into(),
            });
        }
    }
    Ok(out.into_iter().map(|(_, r)| r).collect())
}
