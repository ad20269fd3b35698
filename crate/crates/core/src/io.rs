//! Reading and writing series, spectra and reports.
//!
//! Coefficients are written with Rust's shortest round-trip float formatting,
//! so a written file reads back bit-for-bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trig::TrigPolynomial;
use crate::walsh::{WalshSeries, MAX_DENSE_DEPTH};

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a whole file, naming it in any error.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(file_error(path))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_error(path))?;
    tmp.write_all(bytes).map_err(file_error(path))?;
    tmp.as_file().sync_all().map_err(file_error(path))?;
    tmp.persist(path).map_err(|e| file_error(path)(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Renders rows as CSV bytes.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes rows of displayable cells as CSV.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Sparse spectrum as CSV `n,coeff`, ascending in `n`.
pub fn spectrum_csv(terms: &[(u64, f64)]) -> Result<Vec<u8>> {
    csv_bytes(
        &["n", "coeff"],
        terms
            .iter()
            .map(|(n, c)| vec![n.to_string(), c.to_string()]),
    )
}

pub fn write_spectrum_csv(path: &Path, terms: &[(u64, f64)]) -> Result<()> {
    write_atomic(path, &spectrum_csv(terms)?)
}

/// Parses `index,coeff` rows with an optional header. Rows may come in any
/// order; repeated indices are rejected.
fn parse_pairs(text: &str, header_name: &str) -> Result<Vec<(u64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut terms = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if terms.is_empty() && record.get(0) == Some(header_name) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let n: u64 = record[0].parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad index {:?}: {e}", &record[0]),
        })?;
        let c: f64 = record[1].parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad coefficient {:?}: {e}", &record[1]),
        })?;
        if !c.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("coefficient {c} is not finite"),
            });
        }
        terms.push((n, c, line));
    }
    if terms.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no coefficient rows".into(),
        });
    }
    terms.sort_by_key(|t| t.0);
    if let Some(w) = terms.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse {
            line: w[1].2,
            message: format!("index {} appears twice", w[1].0),
        });
    }
    Ok(terms.into_iter().map(|(n, c, _)| (n, c)).collect())
}

pub fn parse_spectrum_csv(text: &str) -> Result<Vec<(u64, f64)>> {
    parse_pairs(text, "n")
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<(u64, f64)>> {
    parse_spectrum_csv(&read_text(path)?)
}

/// Smallest depth whose index range covers every term.
pub fn depth_for(terms: &[(u64, f64)]) -> u32 {
    terms
        .iter()
        .map(|&(n, _)| 64 - n.leading_zeros())
        .max()
        .unwrap_or(0)
}

#[derive(Deserialize)]
struct SeriesJson {
    depth: u32,
    coeffs: Vec<f64>,
}

pub fn parse_series_json(text: &str) -> Result<WalshSeries> {
    let raw: SeriesJson = serde_json::from_str(text)?;
    let series = WalshSeries::new(raw.coeffs)?;
    if series.depth() != raw.depth {
        return Err(Error::DepthMismatch {
            left: raw.depth,
            right: series.depth(),
        });
    }
    Ok(series)
}

/// Loads a dense series from `.json` (`{"depth", "coeffs"}`) or CSV
/// (`n,coeff`, depth taken from the largest index).
pub fn read_series(path: &Path) -> Result<WalshSeries> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        return parse_series_json(&text);
    }
    let terms = parse_spectrum_csv(&text)?;
    let depth = depth_for(&terms);
    if depth > MAX_DENSE_DEPTH {
        return Err(Error::OutOfRange {
            what: "series depth",
            value: depth as u64,
            limit: MAX_DENSE_DEPTH as u64,
        });
    }
    WalshSeries::from_terms(depth, &terms)
}

pub fn write_series(path: &Path, series: &WalshSeries) -> Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        write_json(path, series)
    } else {
        let terms: Vec<(u64, f64)> = series
            .coeffs()
            .iter()
            .copied()
            .enumerate()
            .map(|(n, c)| (n as u64, c))
            .collect();
        write_spectrum_csv(path, &terms)
    }
}

/// Cosine coefficients as CSV `frequency,coeff`, frequency 0 first.
pub fn trig_csv(poly: &TrigPolynomial) -> Result<Vec<u8>> {
    csv_bytes(
        &["frequency", "coeff"],
        poly.terms()
            .iter()
            .map(|(f, c)| vec![f.to_string(), c.to_string()]),
    )
}

pub fn read_trig_csv(path: &Path) -> Result<TrigPolynomial> {
    let terms = parse_pairs(&read_text(path)?, "frequency")?;
    let constant = terms.iter().find(|t| t.0 == 0).map_or(0.0, |t| t.1);
    TrigPolynomial::new(constant, terms.into_iter().filter(|t| t.0 > 0).collect())
}

/// Reads `x,psi` samples for a tabulated gauge; a non-numeric first row is
/// taken as a header.
pub fn read_psi_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let parsed: Option<Vec<f64>> = record.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => points.push((v[0], v[1])),
            None if points.is_empty() && line <= 1 => continue,
            _ => {
                return Err(Error::Parse {
                    line,
                    message: "expected two numbers `x,psi`".into(),
                })
            }
        }
    }
    Ok(points)
}
