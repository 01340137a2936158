//! NORAD two-line element set parsing.

use std::f64::consts::TAU;

use chrono::NaiveDate;
use thiserror::Error;

use crate::dynamics::KeplerElements;

pub const LINE_LENGTH: usize = 69;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TleError {
    #[error("line {line}: expected {LINE_LENGTH} characters, got {len}")]
    Length { line: u8, len: usize },
    #[error("line {line}: expected line number '{line}' in column 1, got {found:?}")]
    LineNumber { line: u8, found: char },
    #[error("line {line}: checksum mismatch, expected {expected} but column 69 holds {found:?}")]
    Checksum { line: u8, expected: u8, found: char },
    #[error("line {line}, columns {start}-{end}: cannot parse {text:?}")]
    Field {
        line: u8,
        start: usize,
        end: usize,
        text: String,
    },
    #[error("catalog number differs between lines ({0} vs {1})")]
    CatalogMismatch(u32, u32),
    #[error("line {line}: non-ASCII character")]
    NonAscii { line: u8 },
    #[error("record starting at line {0} is missing its second line")]
    Truncated(usize),
}

/// One parsed element set. `epoch` is in seconds since J2000 (2000-01-01
/// 12:00:00, UTC scale, no leap seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct TleRecord {
    pub catalog_id: u32,
    pub epoch: f64,
    pub elements: KeplerElements,
    pub line1: String,
    pub line2: String,
}

/// Mod-10 sum of the digits of the first 68 columns, `-` counting as 1.
pub fn checksum(line: &str) -> u8 {
    let sum: u32 = line
        .bytes()
        .take(LINE_LENGTH - 1)
        .map(|b| match b {
            b'0'..=b'9' => (b - b'0') as u32,
            b'-' => 1,
            _ => 0,
        })
        .sum();
    (sum % 10) as u8
}

fn check_line(line: &str, number: u8) -> Result<(), TleError> {
    if !line.is_ascii() {
        return Err(TleError::NonAscii { line: number });
    }
    if line.len() != LINE_LENGTH {
        return Err(TleError::Length {
            line: number,
            len: line.len(),
        });
    }
    let first = line.as_bytes()[0] as char;
    if first != (b'0' + number) as char {
        return Err(TleError::LineNumber {
            line: number,
            found: first,
        });
    }
    let expected = checksum(line);
    let found = line.as_bytes()[LINE_LENGTH - 1] as char;
    if found.to_digit(10) != Some(expected as u32) {
        return Err(TleError::Checksum {
            line: number,
            expected,
            found,
        });
    }
    Ok(())
}

/// Field at 1-based inclusive columns `start..=end`.
fn field<T: std::str::FromStr>(line: &str, number: u8, start: usize, end: usize) -> Result<T, TleError> {
    let text = &line[start - 1..end];
    text.trim().parse().map_err(|_| TleError::Field {
        line: number,
        start,
        end,
        text: text.to_string(),
    })
}

fn epoch_seconds(year2: u32, day_of_year: f64, line: &str) -> Result<f64, TleError> {
    let year = if year2 < 57 { 2000 + year2 } else { 1900 + year2 } as i32;
    let bad = || TleError::Field {
        line: 1,
        start: 19,
        end: 32,
        text: line[18..32].to_string(),
    };
    if !(1.0..367.0).contains(&day_of_year) {
        return Err(bad());
    }
    let jan1 = NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(bad)?;
    let j2000 = NaiveDate::from_ymd_opt(2000, 1, 1).ok_or_else(bad)?;
    let days = (jan1 - j2000).num_days() as f64;
    Ok((days - 0.5 + day_of_year - 1.0) * 86_400.0)
}

pub fn parse_tle(line1: &str, line2: &str) -> Result<TleRecord, TleError> {
    check_line(line1, 1)?;
    check_line(line2, 2)?;
    let cat1: u32 = field(line1, 1, 3, 7)?;
    let cat2: u32 = field(line2, 2, 3, 7)?;
    if cat1 != cat2 {
        return Err(TleError::CatalogMismatch(cat1, cat2));
    }
    let year2: u32 = field(line1, 1, 19, 20)?;
    let day: f64 = field(line1, 1, 21, 32)?;
    let epoch = epoch_seconds(year2, day, line1)?;

    let inclination_deg: f64 = field(line2, 2, 9, 16)?;
    let raan_deg: f64 = field(line2, 2, 18, 25)?;
    let ecc_digits: u32 = field(line2, 2, 27, 33)?;
    let arg_perigee_deg: f64 = field(line2, 2, 35, 42)?;
    let mean_anomaly_deg: f64 = field(line2, 2, 44, 51)?;
    let revs_per_day: f64 = field(line2, 2, 53, 63)?;
    if line2[26..33].trim().len() != 7 {
        return Err(TleError::Field {
            line: 2,
            start: 27,
            end: 33,
            text: line2[26..33].to_string(),
        });
    }

    Ok(TleRecord {
        catalog_id: cat1,
        epoch,
        elements: KeplerElements {
            raan_deg,
            inclination_deg,
            arg_perigee_deg,
            mean_motion: revs_per_day * TAU / 86_400.0,
            eccentricity: ecc_digits as f64 * 1e-7,
            mean_anomaly_deg,
        },
        line1: line1.to_string(),
        line2: line2.to_string(),
    })
}

/// Scans a TLE file: consecutive line pairs, with blank lines and name lines
/// skipped. A name line either starts with `0 ` or is any other line directly
/// followed by a line 1. Each entry carries the 1-based line number where the
/// record starts.
pub fn scan_tles(text: &str) -> Vec<(usize, Result<TleRecord, TleError>)> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("0 ") && *l != "0")
        .collect();
    let is_data = |l: &str| l.starts_with("1 ") || l.starts_with("2 ");
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (no, l1) = lines[i];
        if !is_data(l1) && lines.get(i + 1).is_some_and(|(_, next)| next.starts_with("1 ")) {
            i += 1;
            continue;
        }
        match lines.get(i + 1) {
            Some((_, l2)) => {
                out.push((no, parse_tle(l1, l2)));
                i += 2;
            }
            None => {
                out.push((no, Err(TleError::Truncated(no))));
                i += 1;
            }
        }
    }
    out
}

/// All records of a TLE file, failing on the first invalid one.
pub fn read_tles(text: &str) -> Result<Vec<TleRecord>, TleError> {
    scan_tles(text).into_iter().map(|(_, r)| r).collect()
}
