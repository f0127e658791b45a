//! Output plumbing. Every number leaving the CLI goes through a
//! 6-significant-digit formatter so that output files are stable golden
//! material across platforms and runs.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tiecop::{Error, Result};

/// Format with 6 significant digits, dropping trailing zeros. Magnitudes
/// outside a comfortable decimal range keep scientific notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let plain = format!("{x:.decimals$}");
        // trailing zeros are only noise after a decimal point
        let trimmed = if plain.contains('.') {
            plain.trim_end_matches('0').trim_end_matches('.')
        } else {
            plain.as_str()
        };
        if trimmed == "-0" { "0".to_string() } else { trimmed.to_string() }
    } else {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    }
}

/// Quantize to the 6-significant-digit value the formatter prints, so JSON
/// numbers and CSV strings agree.
pub fn q6(x: f64) -> f64 {
    if x.is_finite() { sig6(x).parse().expect("sig6 round trip") } else { x }
}

pub fn q6_vec(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(q6).collect()
}

/// Write to the given path, or stdout when no path is set.
pub fn write_text(content: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Data(format!("stdout: {e}")))
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("serialization: {e}")))?;
    text.push('\n');
    write_text(&text, out)
}

/// Assemble a CSV from string fields already formatted upstream.
pub fn write_csv(header: &[&str], rows: &[Vec<String>], out: Option<&Path>) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(&text, out)
}
