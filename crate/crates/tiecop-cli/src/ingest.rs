//! Input plumbing: CSV ingestion with line/column diagnostics and parsers
//! for the small string grammars used by the flags (families, likelihood
//! kinds, atom declarations, parameter boxes).

use std::collections::HashMap;
use std::path::Path;

use tiecop::copulas::Family;
use tiecop::hydro::{parse_iso_date, DroughtEvent, PrecipSeries};
use tiecop::likelihood::LikelihoodKind;
use tiecop::{Error, Result};

pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn headers_of(rdr: &mut csv::Reader<std::fs::File>, path: &Path) -> Result<Vec<String>> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    if headers.is_empty() {
        return Err(Error::Data(format!("{}: missing header row", path.display())));
    }
    Ok(headers.iter().map(str::to_string).collect())
}

fn parse_cell(path: &Path, line: u64, column: &str, field: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| {
        Error::Data(format!(
            "{}: line {line}, column {column}: cannot parse {field:?} as a number",
            path.display()
        ))
    })
}

/// Read a CSV of numeric columns. The header row is required; every field
/// must parse as a number, and errors carry the line and column.
pub fn read_numeric_csv(path: &Path) -> Result<Table> {
    let mut rdr = open_reader(path)?;
    let headers = headers_of(&mut rdr, path)?;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, field) in record.iter().enumerate() {
            columns[j].push(parse_cell(path, line, &headers[j], field)?);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Table { headers, columns })
}

fn find_column(headers: &[String], name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::Data(format!(
            "{}: missing required column {name:?} (found: {})",
            path.display(),
            headers.join(", ")
        ))
    })
}

/// Read a daily precipitation CSV with `date` (ISO-8601) and `precip_mm`
/// columns. Returns the raw date strings alongside the validated series so
/// outputs can echo the input dates.
pub fn read_precip_csv(path: &Path) -> Result<(Vec<String>, PrecipSeries)> {
    let mut rdr = open_reader(path)?;
    let headers = headers_of(&mut rdr, path)?;
    let date_idx = find_column(&headers, "date", path)?;
    let precip_idx = find_column(&headers, "precip_mm", path)?;
    let mut raw_dates = Vec::new();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let date_str = record.get(date_idx).unwrap_or("");
        let days = parse_iso_date(date_str)
            .map_err(|e| Error::Data(format!("{}: line {line}: {e}", path.display())))?;
        raw_dates.push(date_str.to_string());
        dates.push(days);
        values.push(parse_cell(path, line, "precip_mm", record.get(precip_idx).unwrap_or(""))?);
    }
    Ok((raw_dates, PrecipSeries::new(dates, values)?))
}

/// Read drought events from a CSV carrying `duration_months` and
/// `severity_months` columns (the `drought` command's output chains in).
/// Other columns, such as the `start_date` column that `drought` writes,
/// are ignored, so they need not be numeric.
pub fn read_events_csv(path: &Path) -> Result<Vec<DroughtEvent>> {
    let mut rdr = open_reader(path)?;
    let headers = headers_of(&mut rdr, path)?;
    let d_idx = find_column(&headers, "duration_months", path)?;
    let s_idx = find_column(&headers, "severity_months", path)?;
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let dm = parse_cell(path, line, "duration_months", record.get(d_idx).unwrap_or(""))?;
        let sm = parse_cell(path, line, "severity_months", record.get(s_idx).unwrap_or(""))?;
        let duration_days = (dm * 30.0).round();
        if duration_days < 1.0 {
            return Err(Error::Data(format!(
                "{}: line {line}: duration {dm} months is under one day",
                path.display()
            )));
        }
        if sm <= 0.0 {
            return Err(Error::Data(format!(
                "{}: line {line}: severity must be positive, got {sm}",
                path.display()
            )));
        }
        events.push(DroughtEvent {
            duration_days: duration_days as usize,
            severity: sm * 30.0,
            start_index: events.len(),
        });
    }
    if events.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(events)
}

pub fn parse_family(s: &str) -> Result<Family> {
    match s.to_ascii_lowercase().as_str() {
        "clayton" => Ok(Family::Clayton),
        "frank" => Ok(Family::Frank),
        "gumbel" => Ok(Family::Gumbel),
        "plackett" => Ok(Family::Plackett),
        "gaussian" | "normal" => Ok(Family::Gaussian),
        "student" | "t" => Ok(Family::Student),
        _ => Err(Error::Config(format!(
            "unknown family {s:?} (expected clayton, frank, gumbel, plackett, gaussian or student)"
        ))),
    }
}

pub fn family_name(f: Family) -> &'static str {
    match f {
        Family::Clayton => "clayton",
        Family::Frank => "frank",
        Family::Gumbel => "gumbel",
        Family::Plackett => "plackett",
        Family::Gaussian => "gaussian",
        Family::Student => "student",
    }
}

pub fn parse_families(s: &str) -> Result<Vec<Family>> {
    let fams: Vec<Family> = s
        .split(',')
        .filter(|t| !t.is_empty())
        .map(parse_family)
        .collect::<Result<_>>()?;
    if fams.is_empty() {
        return Err(Error::Config("empty family list".into()));
    }
    Ok(fams)
}

pub fn parse_kind(s: &str) -> Result<LikelihoodKind> {
    match s.to_ascii_lowercase().as_str() {
        "informed" => Ok(LikelihoodKind::Informed),
        "non-informed" | "noninformed" => Ok(LikelihoodKind::NonInformed),
        "naive" => Ok(LikelihoodKind::Naive),
        "composite-informed" => Ok(LikelihoodKind::CompositeInformed),
        "composite-non-informed" | "composite" => Ok(LikelihoodKind::CompositeNonInformed),
        _ => Err(Error::Config(format!(
            "unknown mode {s:?} (expected informed, non-informed, naive, composite-informed or composite-non-informed)"
        ))),
    }
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse {t:?} as a number")))
        })
        .collect()
}

/// Per-dimension `lo:hi` pairs, comma separated, e.g. `-0.9:0.9,1:30`.
pub fn parse_box(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|side| {
            let (lo, hi) = side
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("box side {side:?} is not lo:hi")))?;
            let lo = lo
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad box bound {lo:?}")))?;
            let hi = hi
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad box bound {hi:?}")))?;
            Ok((lo, hi))
        })
        .collect()
}

/// Atom declarations: inline flags `col=v1,v2` (an empty right side declares
/// a continuous column) plus an optional JSON sidecar mapping column names
/// to value arrays. Inline flags win per column; undeclared columns get an
/// empty atom set.
pub fn parse_atoms(
    flags: &[String],
    sidecar: Option<&Path>,
    headers: &[String],
) -> Result<Vec<Vec<f64>>> {
    let mut by_name: HashMap<String, Vec<f64>> = HashMap::new();
    if let Some(path) = sidecar {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let parsed: HashMap<String, Vec<f64>> = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        by_name.extend(parsed);
    }
    for flag in flags {
        let (name, values) = flag
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("atom declaration {flag:?} is not col=v1,v2")))?;
        by_name.insert(name.trim().to_string(), parse_f64_list(values)?);
    }
    for name in by_name.keys() {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::Config(format!(
                "atom declaration references unknown column {name:?}"
            )));
        }
    }
    Ok(headers
        .iter()
        .map(|h| by_name.get(h).cloned().unwrap_or_default())
        .collect())
}
