//! CSV/JSON helpers shared by the pipeline stages.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::EdgeRecord;

/// Rows parsed from a delimited file together with the rows that were
/// skipped as malformed (line number, reason).
#[derive(Debug, Clone, Default)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub skipped: Vec<(usize, String)>,
}

/// Reads CSV rows, handing each to `parse`. Malformed rows are skipped with
/// a warning, or abort the read when `strict` is set. `expected_header`
/// is checked case-insensitively.
pub fn read_rows<T>(
    path: &Path,
    expected_header: &[&str],
    strict: bool,
    mut parse: impl FnMut(&csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<Parsed<T>> {
    let display = path.display().to_string();
    if !path.is_file() {
        return Err(Error::InvalidParameter(format!("input file {display} does not exist")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let matches = header.len() >= expected_header.len()
        && expected_header
            .iter()
            .zip(header.iter())
            .all(|(e, h)| e.eq_ignore_ascii_case(h));
    if !matches {
        return Err(Error::Parse {
            path: display,
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected_header.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Parsed {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let parsed = if row.len() < expected_header.len() {
            Err(format!(
                "expected {} fields, found {}",
                expected_header.len(),
                row.len()
            ))
        } else {
            parse(&row)
        };
        match parsed {
            Ok(rec) => out.records.push(rec),
            Err(message) if strict => {
                return Err(Error::Parse {
                    path: display,
                    line,
                    message,
                })
            }
            Err(message) => {
                warn!("{display}:{line}: skipping malformed row: {message}");
                out.skipped.push((line, message));
            }
        }
    }
    Ok(out)
}

pub(crate) fn parse_f64(field: &str, name: &str) -> std::result::Result<f64, String> {
    field
        .parse::<f64>()
        .map_err(|_| format!("{name} `{field}` is not a decimal number"))
}

/// Reads an edge-list CSV with header `src,dst,weight`.
pub fn read_edge_list(path: &Path, strict: bool) -> Result<Parsed<EdgeRecord>> {
    read_rows(path, &["src", "dst", "weight"], strict, |row| {
        let weight = parse_f64(&row[2], "weight")?;
        if row[0].is_empty() || row[1].is_empty() {
            return Err("empty node identifier".into());
        }
        Ok(EdgeRecord::new(&row[0], &row[1], weight))
    })
}

pub fn write_edge_list(path: &Path, records: &[EdgeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst", "weight"])?;
    for r in records {
        w.write_record([r.src.as_str(), r.dst.as_str(), &r.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Formats `x` with `digits` significant digits, `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(0.5, 12), "0.5");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_sig(123456.789, 12), "123456.789");
        assert_eq!(format_sig(-7.25e-9, 12), "-7.25e-09");
        assert_eq!(format_sig(1.5e15, 12), "1.5e+15");
        assert_eq!(format_sig(9.9999999999999, 12), "10");
        assert_eq!(format_sig(0.0001, 12), "0.0001");
    }

    #[test]
    fn edge_list_skips_or_fails_on_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(&p, "src,dst,weight\na,b,1\nc,d,zz\ne,f\ng,h,2.5\n").unwrap();
        let parsed = read_edge_list(&p, false).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), [3, 4]);
        match read_edge_list(&p, true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&p, "from,to,w\na,b,1\n").unwrap();
        assert!(matches!(read_edge_list(&p, false), Err(Error::Parse { line: 1, .. })));
    }
}
