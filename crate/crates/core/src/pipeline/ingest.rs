use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, EdgeRecord, WeightedGraph};
use crate::io::{parse_f64, read_rows, Parsed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// `src,dst,weight`
    EdgeList,
    /// `caller,callee,timestamp_iso8601`
    CallLog,
    /// `a,b,timestamp_iso8601`, repeated scans of a pair at one instant
    /// counted once.
    Proximity,
}

impl InputFormat {
    pub fn header(self) -> [&'static str; 3] {
        match self {
            InputFormat::EdgeList => ["src", "dst", "weight"],
            InputFormat::CallLog => ["caller", "callee", "timestamp"],
            InputFormat::Proximity => ["a", "b", "timestamp"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputFormat::EdgeList => "edge-list",
            InputFormat::CallLog => "call-log",
            InputFormat::Proximity => "proximity",
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [InputFormat::EdgeList, InputFormat::CallLog, InputFormat::Proximity]
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown input format `{s}`")))
    }
}

/// One interaction. Edge-list rows carry their weight and no timestamp;
/// timestamped rows weigh 1.
#[derive(Debug, Clone, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: Option<DateTime<Utc>>,
    pub a: String,
    pub b: String,
    pub weight: f64,
}

/// Accepts RFC 3339 (`2011-03-04T10:00:00+02:00`), a naive date-time
/// (`2011-03-04T10:00:00` or with a space) read as UTC, or a bare date
/// meaning UTC midnight.
pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc());
    }
    Err(format!("timestamp `{s}` is not ISO 8601"))
}

fn endpoints(row: &csv::StringRecord) -> std::result::Result<(String, String), String> {
    let (a, b) = (&row[0], &row[1]);
    if a.is_empty() || b.is_empty() {
        return Err("empty node identifier".into());
    }
    if a == b {
        return Err(format!("self-interaction of `{a}`"));
    }
    Ok((a.to_string(), b.to_string()))
}

/// Reads one input file into events sorted by `(timestamp, a, b)`.
///
/// Malformed rows are skipped with a warning unless `strict`. Proximity
/// rows are deduplicated per unordered pair and timestamp. A file with no
/// usable rows is an error.
pub fn ingest_events(path: &Path, format: InputFormat, strict: bool) -> Result<Parsed<Event>> {
    let header = format.header();
    let mut parsed = read_rows(path, &header, strict, |row| {
        let (a, b) = endpoints(row)?;
        match format {
            InputFormat::EdgeList => {
                let weight = parse_f64(&row[2], "weight")?;
                if !(weight > 0.0 && weight.is_finite()) {
                    return Err(format!("weight must be positive, got {weight}"));
                }
                Ok(Event {
                    timestamp: None,
                    a,
                    b,
                    weight,
                })
            }
            InputFormat::CallLog | InputFormat::Proximity => Ok(Event {
                timestamp: Some(parse_timestamp(&row[2])?),
                a,
                b,
                weight: 1.0,
            }),
        }
    })?;
    if format == InputFormat::Proximity {
        let mut seen = BTreeSet::new();
        parsed.records.retain(|e| {
            let pair = if e.a <= e.b { (&e.a, &e.b) } else { (&e.b, &e.a) };
            seen.insert((e.timestamp, pair.0.clone(), pair.1.clone()))
        });
    }
    sort_events(&mut parsed.records);
    if parsed.records.is_empty() {
        return Err(Error::EmptyInput(path.display().to_string()));
    }
    Ok(parsed)
}

pub fn sort_events(events: &mut [Event]) {
    events.sort_by(|x, y| {
        x.timestamp
            .cmp(&y.timestamp)
            .then_with(|| x.a.cmp(&y.a))
            .then_with(|| x.b.cmp(&y.b))
            .then_with(|| x.weight.total_cmp(&y.weight))
    });
}

/// Graph whose edge weights are summed event weights.
pub fn events_to_graph(events: &[Event]) -> Result<WeightedGraph> {
    let records: Vec<EdgeRecord> = events
        .iter()
        .map(|e| EdgeRecord::new(e.a.as_str(), e.b.as_str(), e.weight))
        .collect();
    build_graph(&records)
}

/// Event CSV: `a,b,timestamp,weight`, empty timestamp for untimed events.
pub fn write_events(path: &Path, events: &[Event]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["a", "b", "timestamp", "weight"])?;
    for e in events {
        let ts = e
            .timestamp
            .map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true))
            .unwrap_or_default();
        w.write_record([e.a.as_str(), e.b.as_str(), &ts, &e.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn call_log_maps_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "c.csv",
            "caller,callee,timestamp\na,b,2011-01-01T10:00:00Z\na,b,2011-01-01T11:00:00Z\nb,a,2011-01-02T09:00:00Z\n",
        );
        let ev = ingest_events(&p, InputFormat::CallLog, false).unwrap().records;
        assert_eq!(ev.len(), 3);
        let g = events_to_graph(&ev).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_weight(), 3.0);
    }

    #[test]
    fn proximity_dedup_and_sort() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "p.csv",
            "a,b,timestamp\nx,y,2011-01-02T00:00:00Z\nx,y,2011-01-01T00:00:00Z\ny,x,2011-01-01T00:00:00Z\nx,z,2011-01-01T00:00:00Z\n",
        );
        let ev = ingest_events(&p, InputFormat::Proximity, false).unwrap().records;
        assert_eq!(ev.len(), 3);
        assert!(ev.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        assert_eq!(ev[2].timestamp, Some(parse_timestamp("2011-01-02").unwrap()));
    }

    #[test]
    fn malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "c.csv",
            "caller,callee,timestamp\na,b,yesterday\na,a,2011-01-01\na,b,2011-01-01\n",
        );
        let parsed = ingest_events(&p, InputFormat::CallLog, false).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), [2, 3]);
        assert!(matches!(
            ingest_events(&p, InputFormat::CallLog, true),
            Err(Error::Parse { line: 2, .. })
        ));
        let empty = write(&dir, "e.csv", "caller,callee,timestamp\n");
        assert!(matches!(
            ingest_events(&empty, InputFormat::CallLog, false),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn timestamp_forms() {
        let z = parse_timestamp("2011-03-04T10:00:00Z").unwrap();
        assert_eq!(parse_timestamp("2011-03-04T12:00:00+02:00").unwrap(), z);
        assert_eq!(parse_timestamp("2011-03-04 10:00:00").unwrap(), z);
        assert_eq!(parse_timestamp("2011-03-04T10:00").unwrap(), z);
        assert!(parse_timestamp("04/03/2011").is_err());
    }

    #[test]
    fn edge_list_events_are_untimed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "src,dst,weight\nb,c,2\na,b,1.5\na,b,0\n");
        let parsed = ingest_events(&p, InputFormat::EdgeList, false).unwrap();
        assert_eq!(parsed.skipped.len(), 1);
        assert_eq!(parsed.records[0].a, "a");
        assert!(parsed.records.iter().all(|e| e.timestamp.is_none()));
    }
}
