//! Pre-scored posts to binary series.
//!
//! A post with sentiment `v` becomes 1 when `v > T`, 0 when `v < -T`, and is
//! discarded when `v` lies in the closed band `[-T, T]`. The bots-only subset
//! is applied before thresholding.
//!
//! Two input layouts are read: JSON lines with fields `id`, `timestamp`,
//! `sentiment_value` and optional `is_bot`, and CSV with the same column
//! names in a header row. Timestamps are epoch seconds or ISO-8601.

use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::series::{BinarySeries, Subset};

/// Default sentiment threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.35;

#[derive(Debug, Clone, PartialEq)]
pub struct PostRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub sentiment_value: f64,
    pub is_bot: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    JsonLines,
    Csv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Ok(InputFormat::JsonLines),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::Config(format!("unknown input format `{other}`"))),
        }
    }
}

impl InputFormat {
    /// Guess from a file extension; JSON lines otherwise.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::JsonLines,
        }
    }
}

/// A skipped input line.
#[derive(Debug, Clone, PartialEq)]
pub struct Malformed {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ReadOutcome {
    pub records: Vec<PostRecord>,
    pub malformed: Vec<Malformed>,
}

pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<i64>() {
        return DateTime::from_timestamp(secs, 0);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .map(|t| t.and_utc())
}

fn parse_bool(raw: &str) -> std::result::Result<Option<bool>, String> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "" | "null" | "na" => Ok(None),
        "true" | "1" | "yes" => Ok(Some(true)),
        "false" | "0" | "no" => Ok(Some(false)),
        other => Err(format!("is_bot `{other}` is not a boolean")),
    }
}

fn finite(v: f64) -> std::result::Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err("sentiment_value must be finite".into())
    }
}

fn record_from_json(line: &str) -> std::result::Result<PostRecord, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = v.as_object().ok_or("expected a JSON object")?;
    let id = match obj.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err("missing `id`".into()),
    };
    let timestamp = match obj.get("timestamp") {
        Some(Value::Number(n)) => n.as_i64().and_then(|s| DateTime::from_timestamp(s, 0)),
        Some(Value::String(s)) => parse_timestamp(s),
        _ => None,
    }
    .ok_or("missing or unparseable `timestamp`")?;
    let sentiment_value = obj
        .get("sentiment_value")
        .and_then(Value::as_f64)
        .ok_or("missing numeric `sentiment_value`")
        .map_err(String::from)
        .and_then(finite)?;
    let is_bot = match obj.get("is_bot") {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(Value::String(s)) => parse_bool(s)?,
        Some(Value::Number(n)) => parse_bool(&n.to_string())?,
        Some(_) => return Err("`is_bot` must be a boolean".into()),
    };
    Ok(PostRecord {
        id,
        timestamp,
        sentiment_value,
        is_bot,
    })
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    id: String,
    timestamp: String,
    sentiment_value: String,
    #[serde(default)]
    is_bot: Option<String>,
}

fn record_from_csv(row: CsvRow) -> std::result::Result<PostRecord, String> {
    let timestamp = parse_timestamp(&row.timestamp).ok_or("unparseable `timestamp`")?;
    let sentiment_value = row
        .sentiment_value
        .trim()
        .parse::<f64>()
        .map_err(|_| "sentiment_value is not a number".to_string())
        .and_then(finite)?;
    let is_bot = match row.is_bot {
        Some(raw) => parse_bool(&raw)?,
        None => None,
    };
    Ok(PostRecord {
        id: row.id,
        timestamp,
        sentiment_value,
        is_bot,
    })
}

/// Read every record, skipping (and reporting) malformed lines.
pub fn read_records<R: BufRead>(input: R, format: InputFormat) -> Result<ReadOutcome> {
    let mut out = ReadOutcome::default();
    let skip = |line: usize, message: String| {
        log::warn!("skipping line {line}: {message}");
        Malformed { line, message }
    };
    match format {
        InputFormat::JsonLines => {
            for (idx, line) in input.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match record_from_json(&line) {
                    Ok(r) => out.records.push(r),
                    Err(msg) => out.malformed.push(skip(idx + 1, msg)),
                }
            }
        }
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(input);
            for row in reader.deserialize::<CsvRow>() {
                match row {
                    Ok(row) => match record_from_csv(row) {
                        Ok(r) => out.records.push(r),
                        Err(msg) => {
                            // header is line 1
                            let line = out.records.len() + out.malformed.len() + 2;
                            out.malformed.push(skip(line, msg));
                        }
                    },
                    Err(e) => {
                        let line = e
                            .position()
                            .map(|p| p.line() as usize)
                            .unwrap_or(out.records.len() + out.malformed.len() + 2);
                        if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                            return Err(Error::Format {
                                line,
                                message: e.to_string(),
                            });
                        }
                        out.malformed.push(skip(line, e.to_string()));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Threshold records into a binary series. Records are put in timestamp
/// order first; equal timestamps keep their input order.
pub fn binarize(mut records: Vec<PostRecord>, threshold: f64, subset: Subset) -> Result<BinarySeries> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::Config(format!("threshold must be positive, got {threshold}")));
    }
    if subset == Subset::BotsOnly {
        if let Some(r) = records.iter().find(|r| r.is_bot.is_none()) {
            return Err(Error::Config(format!(
                "bots_only subset needs an is_bot flag on every record; `{}` has none",
                r.id
            )));
        }
    }
    if !records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp) {
        records.sort_by_key(|r| r.timestamp);
    }

    let mut bits = Vec::with_capacity(records.len());
    let (mut discarded, mut removed) = (0, 0);
    for r in &records {
        if subset == Subset::BotsOnly && r.is_bot != Some(true) {
            removed += 1;
            continue;
        }
        let v = r.sentiment_value;
        if v > threshold {
            bits.push(1);
        } else if v < -threshold {
            bits.push(0);
        } else {
            discarded += 1;
        }
    }
    Ok(BinarySeries::with_provenance(bits, discarded, removed, subset, Some(threshold)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Descriptives {
    pub posts: usize,
    pub pct_positive: f64,
}

pub fn descriptives(series: &BinarySeries) -> Result<Descriptives> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Descriptives {
        posts: series.len(),
        pct_positive: 100.0 * series.count_ones() as f64 / series.len() as f64,
    })
}
