use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, TimeZone, Utc, Weekday};
use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::{events_to_graph, Event};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    Week,
    Month,
}

impl std::str::FromStr for Granularity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "day" => Ok(Granularity::Day),
            "week" => Ok(Granularity::Week),
            "month" => Ok(Granularity::Month),
            _ => Err(Error::InvalidParameter(format!("unknown window granularity `{s}`"))),
        }
    }
}

/// Calendar windows covering `[start, end)`. Boundaries fall on local
/// midnights (days), Monday midnights (weeks) or the first of the month,
/// in the fixed offset `tz_offset_minutes` east of UTC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub granularity: Granularity,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    #[serde(default)]
    pub tz_offset_minutes: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub index: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    /// Day windows starting on a local Saturday or Sunday.
    pub weekend: bool,
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::InvalidParameter(format!(
                "window start {} must precede end {}",
                self.start, self.end
            )));
        }
        self.offset()?;
        Ok(())
    }

    fn offset(&self) -> Result<FixedOffset> {
        FixedOffset::east_opt(self.tz_offset_minutes * 60).ok_or_else(|| {
            Error::InvalidParameter(format!("timezone offset {} min out of range", self.tz_offset_minutes))
        })
    }

    /// First calendar boundary strictly after `t`.
    fn next_boundary(&self, t: DateTime<Utc>, tz: FixedOffset) -> DateTime<Utc> {
        let local = t.with_timezone(&tz).date_naive();
        let next: NaiveDate = match self.granularity {
            Granularity::Day => local + Duration::days(1),
            Granularity::Week => local + Duration::days(7 - local.weekday().num_days_from_monday() as i64),
            Granularity::Month => {
                let (y, m) = if local.month() == 12 {
                    (local.year() + 1, 1)
                } else {
                    (local.year(), local.month() + 1)
                };
                NaiveDate::from_ymd_opt(y, m, 1).unwrap()
            }
        };
        tz.from_local_datetime(&next.and_hms_opt(0, 0, 0).unwrap())
            .unwrap()
            .with_timezone(&Utc)
    }

    pub fn windows(&self) -> Result<Vec<Window>> {
        self.validate()?;
        let tz = self.offset()?;
        let mut out = Vec::new();
        let mut s = self.start;
        while s < self.end {
            let e = self.next_boundary(s, tz).min(self.end);
            let wd = s.with_timezone(&tz).weekday();
            out.push(Window {
                index: out.len(),
                start: s,
                end: e,
                weekend: self.granularity == Granularity::Day && matches!(wd, Weekday::Sat | Weekday::Sun),
            });
            s = e;
        }
        Ok(out)
    }
}

/// Index of the window containing `t`, using the half-open convention.
pub fn locate(windows: &[Window], t: DateTime<Utc>) -> Option<usize> {
    let i = windows.partition_point(|w| w.end <= t);
    (i < windows.len() && windows[i].start <= t).then_some(i)
}

/// Partitions timestamped events into windows.
pub fn partition_events<'a>(events: &'a [Event], windows: &[Window]) -> Result<Vec<Vec<&'a Event>>> {
    let mut parts = vec![Vec::new(); windows.len()];
    let mut outside = 0usize;
    for e in events {
        let t = e
            .timestamp
            .ok_or_else(|| Error::InvalidParameter("temporal windows need timestamped events".into()))?;
        match locate(windows, t) {
            Some(i) => parts[i].push(e),
            None => outside += 1,
        }
    }
    if outside > 0 {
        debug!("{outside} events fall outside the window range");
    }
    Ok(parts)
}

/// One graph per window; weights count the window's events. Windows
/// without events give empty graphs.
pub fn window_graphs(events: &[Event], spec: &WindowSpec) -> Result<(Vec<Window>, Vec<WeightedGraph>)> {
    let windows = spec.windows()?;
    let parts = partition_events(events, &windows)?;
    let graphs = parts
        .par_iter()
        .map(|part| {
            let owned: Vec<Event> = part.iter().map(|e| (*e).clone()).collect();
            events_to_graph(&owned)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((windows, graphs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ingest::parse_timestamp;

    fn ev(a: &str, b: &str, t: &str) -> Event {
        Event {
            timestamp: Some(parse_timestamp(t).unwrap()),
            a: a.into(),
            b: b.into(),
            weight: 1.0,
        }
    }

    fn spec(g: Granularity, s: &str, e: &str) -> WindowSpec {
        WindowSpec {
            granularity: g,
            start: parse_timestamp(s).unwrap(),
            end: parse_timestamp(e).unwrap(),
            tz_offset_minutes: 0,
        }
    }

    #[test]
    fn one_busy_day_of_three() {
        let events: Vec<Event> = (0..10).map(|h| ev("a", "b", &format!("2011-05-02T{h:02}:00:00Z"))).collect();
        let (w, g) = window_graphs(&events, &spec(Granularity::Day, "2011-05-01", "2011-05-04")).unwrap();
        assert_eq!(w.len(), 3);
        let counts: Vec<f64> = g.iter().map(|g| g.total_weight()).collect();
        assert_eq!(counts, [0.0, 10.0, 0.0]);
        assert!(g[0].is_empty() && g[2].is_empty());
    }

    #[test]
    fn boundary_belongs_to_later_window() {
        let events = [ev("a", "b", "2011-05-02T00:00:00Z")];
        let (w, g) = window_graphs(&events, &spec(Granularity::Day, "2011-05-01", "2011-05-03")).unwrap();
        assert_eq!(locate(&w, events[0].timestamp.unwrap()), Some(1));
        assert_eq!(g[1].edge_count(), 1);
        assert_eq!(locate(&w, parse_timestamp("2011-05-03").unwrap()), None);
    }

    #[test]
    fn weights_conserved() {
        let events: Vec<Event> = (0..40)
            .map(|i| ev("a", if i % 3 == 0 { "b" } else { "c" }, &format!("2011-05-{:02}T12:00:00Z", 1 + i % 28)))
            .collect();
        let (_, g) = window_graphs(&events, &spec(Granularity::Week, "2011-05-01", "2011-06-01")).unwrap();
        assert_eq!(g.iter().map(|g| g.total_weight()).sum::<f64>(), 40.0);
    }

    #[test]
    fn calendar_boundaries_and_weekends() {
        // 2011-05-01 was a Sunday
        let w = spec(Granularity::Week, "2011-05-01T12:00:00Z", "2011-05-20").windows().unwrap();
        assert_eq!(w[0].end, parse_timestamp("2011-05-02").unwrap());
        assert_eq!(w[1].end, parse_timestamp("2011-05-09").unwrap());
        assert_eq!(w.last().unwrap().end, parse_timestamp("2011-05-20").unwrap());
        let m = spec(Granularity::Month, "2011-11-15", "2012-02-01").windows().unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[1].start, parse_timestamp("2011-12-01").unwrap());
        let d = spec(Granularity::Day, "2011-04-29", "2011-05-03").windows().unwrap();
        assert_eq!(d.iter().map(|w| w.weekend).collect::<Vec<_>>(), [false, true, true, false]);
    }

    #[test]
    fn offset_shifts_day_edges() {
        let mut s = spec(Granularity::Day, "2011-05-01T00:00:00Z", "2011-05-02T00:00:00Z");
        s.tz_offset_minutes = 120;
        let w = s.windows().unwrap();
        // local midnight of 2 May is 22:00 UTC on 1 May
        assert_eq!(w[0].end, parse_timestamp("2011-05-01T22:00:00Z").unwrap());
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn rejects_empty_range_and_untimed() {
        assert!(spec(Granularity::Day, "2011-05-02", "2011-05-01").windows().is_err());
        let untimed = Event {
            timestamp: None,
            a: "a".into(),
            b: "b".into(),
            weight: 1.0,
        };
        assert!(window_graphs(&[untimed], &spec(Granularity::Day, "2011-05-01", "2011-05-02")).is_err());
    }
}
