//! Drought analysis pipeline: standardized precipitation index from a
//! trailing moving average and a rank-based normal transform, extraction of
//! drought runs, tie-aware copula fits of (duration, severity), and
//! conditional duration curves given severity.

use rayon::prelude::*;

use crate::copulas::{CopulaSpec, Family};
use crate::error::{Error, Result};
use crate::estimation::{fit, FitOptions, FitResult};
use crate::numeric::special::norm_ppf;

/// Days since 1970-01-01 for a proleptic Gregorian date (the standard
/// civil-calendar day count).
pub fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = (y - era * 400) as i64;
    let mp = ((m + 9) % 12) as i64;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Inverse of [`days_from_civil`]: the (year, month, day) of a day count.
pub fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = (if mp < 10 { mp + 3 } else { mp - 9 }) as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

/// Render a day count as `YYYY-MM-DD`.
pub fn format_iso_date(days: i64) -> String {
    let (y, m, d) = civil_from_days(days);
    format!("{y:04}-{m:02}-{d:02}")
}

/// Parse a strict `YYYY-MM-DD` date into days since 1970-01-01.
pub fn parse_iso_date(s: &str) -> Result<i64> {
    let bytes = s.as_bytes();
    let bad = || Error::Data(format!("invalid ISO date {s:?}, expected YYYY-MM-DD"));
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return Err(bad());
    }
    let num = |r: std::ops::Range<usize>| -> Result<i64> {
        let part = &s[r];
        if !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        part.parse::<i64>().map_err(|_| bad())
    };
    let (y, m, d) = (num(0..4)?, num(5..7)? as u32, num(8..10)? as u32);
    if !(1..=12).contains(&m) {
        return Err(bad());
    }
    let leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    let max_d = match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ => {
            if leap {
                29
            } else {
                28
            }
        }
    };
    if d == 0 || d > max_d {
        return Err(bad());
    }
    Ok(days_from_civil(y, m, d))
}

/// Daily precipitation record: strictly increasing dates, depths >= 0.
#[derive(Clone, Debug)]
pub struct PrecipSeries {
    pub dates: Vec<i64>,
    pub values: Vec<f64>,
}

impl PrecipSeries {
    pub fn new(dates: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Data(format!(
                "{} dates vs {} values",
                dates.len(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::Data("empty series".into()));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("dates must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data("precipitation must be finite and >= 0".into()));
        }
        Ok(PrecipSeries { dates, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Standardized precipitation index: trailing moving average of the given
/// window, then the normal quantile of the rescaled empirical cdf of the
/// averages. The n/(n+1) rescaling keeps every value finite, and zero
/// inflation needs no special casing because the empirical cdf carries the
/// atom. Output has `len - window + 1` entries (one per complete window).
pub fn spi(series: &PrecipSeries, window_days: usize) -> Result<Vec<f64>> {
    if window_days == 0 {
        return Err(Error::Config("window must be at least one day".into()));
    }
    if series.len() < window_days + 1 {
        return Err(Error::Data(format!(
            "series of length {} too short for window {window_days}",
            series.len()
        )));
    }
    if series.values.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("series is identically zero".into()));
    }
    let w = window_days as f64;
    let mut ma = Vec::with_capacity(series.len() - window_days + 1);
    let mut acc: f64 = series.values[..window_days].iter().sum();
    ma.push(acc / w);
    for t in window_days..series.len() {
        acc += series.values[t] - series.values[t - window_days];
        ma.push(acc / w);
    }
    let n1 = (ma.len() + 1) as f64;
    let mut sorted = ma.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(ma
        .iter()
        .map(|&x| {
            let rank = sorted.partition_point(|&s| s <= x);
            norm_ppf(rank as f64 / n1)
        })
        .collect())
}

/// One maximal run of negative SPI days.
#[derive(Clone, Debug, PartialEq)]
pub struct DroughtEvent {
    pub duration_days: usize,
    /// minus the SPI sum over the run, always positive
    pub severity: f64,
    pub start_index: usize,
}

impl DroughtEvent {
    pub fn duration_months(&self) -> f64 {
        self.duration_days as f64 / 30.0
    }

    pub fn severity_months(&self) -> f64 {
        self.severity / 30.0
    }
}

/// Maximal runs of strictly negative SPI values.
pub fn extract_droughts(spi: &[f64]) -> Vec<DroughtEvent> {
    let mut events = Vec::new();
    let mut run_start: Option<usize> = None;
    let mut acc = 0.0;
    for (i, &s) in spi.iter().enumerate() {
        if s < 0.0 {
            if run_start.is_none() {
                run_start = Some(i);
                acc = 0.0;
            }
            acc -= s;
        } else if let Some(start) = run_start.take() {
            events.push(DroughtEvent { duration_days: i - start, severity: acc, start_index: start });
        }
    }
    if let Some(start) = run_start {
        events.push(DroughtEvent {
            duration_days: spi.len() - start,
            severity: acc,
            start_index: start,
        });
    }
    events
}

/// One candidate family's fit in the model ranking.
#[derive(Clone, Debug)]
pub struct RankedFit {
    pub family: Family,
    pub fit: FitResult,
}

#[derive(Clone, Debug)]
pub struct ModelRanking {
    /// successful fits, best per-observation log-likelihood first
    pub ranked: Vec<RankedFit>,
    pub failed: Vec<Family>,
}

pub const DEFAULT_CANDIDATES: [Family; 4] =
    [Family::Clayton, Family::Frank, Family::Gumbel, Family::Gaussian];

pub const DEFAULT_MIN_EVENTS: usize = 30;

fn event_columns(events: &[DroughtEvent]) -> [Vec<f64>; 2] {
    [
        events.iter().map(|e| e.duration_months()).collect(),
        events.iter().map(|e| e.severity_months()).collect(),
    ]
}

/// Fit every candidate family to (duration, severity) with the non-informed
/// likelihood (duration ties mark the atoms) and rank by the maximized
/// per-observation log-likelihood.
pub fn fit_duration_severity(
    events: &[DroughtEvent],
    candidates: &[Family],
    min_events: usize,
    opts: &FitOptions,
) -> Result<ModelRanking> {
    if events.len() < min_events {
        return Err(Error::Data(format!(
            "{} drought events, need at least {min_events}",
            events.len()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Config("no candidate families".into()));
    }
    let cols = event_columns(events);
    let outcomes: Vec<(Family, Result<FitResult>)> = candidates
        .par_iter()
        .map(|&family| (family, fit(family, &cols, None, opts)))
        .collect();
    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for (family, r) in outcomes {
        match r {
            Ok(f) => ranked.push(RankedFit { family, fit: f }),
            Err(_) => failed.push(family),
        }
    }
    if ranked.is_empty() {
        return Err(Error::NonConvergence("every candidate family failed".into()));
    }
    ranked.sort_by(|a, b| b.fit.loglik.total_cmp(&a.fit.loglik));
    Ok(ModelRanking { ranked, failed })
}

/// Fitted (duration, severity) model plus the margin summaries needed for
/// conditional curves: severity uses a piecewise-linear interpolation of the
/// rescaled empirical cdf between order statistics, duration the plain
/// empirical cdf so the conditional mass telescopes to one at the top of the
/// observed support.
#[derive(Clone, Debug)]
pub struct DroughtModel {
    pub family: Family,
    pub theta: Vec<f64>,
    sev_knots: Vec<(f64, f64)>,
    durations: Vec<f64>,
    support: Vec<f64>,
    n: usize,
}

impl DroughtModel {
    pub fn new(events: &[DroughtEvent], family: Family, theta: &[f64]) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::Data("no drought events".into()));
        }
        CopulaSpec::new(family, 2, theta)?;
        let n = events.len();
        let mut sev: Vec<f64> = events.iter().map(|e| e.severity_months()).collect();
        sev.sort_by(|a, b| a.total_cmp(b));
        let n1 = (n + 1) as f64;
        let mut sev_knots: Vec<(f64, f64)> = Vec::with_capacity(n);
        for (k, &s) in sev.iter().enumerate() {
            let p = (k + 1) as f64 / n1;
            match sev_knots.last_mut() {
                Some(last) if last.0 == s => last.1 = p,
                _ => sev_knots.push((s, p)),
            }
        }
        let mut durations: Vec<f64> = events.iter().map(|e| e.duration_months()).collect();
        durations.sort_by(|a, b| a.total_cmp(b));
        let mut support = durations.clone();
        support.dedup();
        Ok(DroughtModel { family, theta: theta.to_vec(), sev_knots, durations, support, n })
    }

    /// Build from the top-ranked fit.
    pub fn from_ranking(events: &[DroughtEvent], ranking: &ModelRanking) -> Result<Self> {
        let best = &ranking.ranked[0];
        DroughtModel::new(events, best.family, &best.fit.theta_hat)
    }

    pub fn duration_support(&self) -> &[f64] {
        &self.support
    }

    /// Smoothed severity cdf: linear between order statistics, exact
    /// rescaled rank at each. Severities outside the observed range are an
    /// extrapolation error.
    pub fn severity_cdf(&self, s: f64) -> Result<f64> {
        let knots = &self.sev_knots;
        let (lo, hi) = (knots[0].0, knots[knots.len() - 1].0);
        if !s.is_finite() || s < lo || s > hi {
            return Err(Error::Range(format!(
                "severity {s} outside the observed range [{lo}, {hi}]"
            )));
        }
        let i = knots.partition_point(|&(x, _)| x < s);
        if knots[i].0 == s {
            return Ok(knots[i].1);
        }
        let (x0, p0) = knots[i - 1];
        let (x1, p1) = knots[i];
        Ok(p0 + (p1 - p0) * (s - x0) / (x1 - x0))
    }

    /// Plain empirical cdf of duration (k/n), so the top of the support maps
    /// to exactly one.
    pub fn duration_cdf(&self, y: f64) -> f64 {
        self.durations.partition_point(|&d| d <= y) as f64 / self.n as f64
    }

    /// P(D <= y | S = s): the copula cdf differentiated in the severity
    /// coordinate, evaluated at the two margin transforms.
    pub fn conditional_duration(&self, s: f64, y: f64) -> Result<f64> {
        let u = self.severity_cdf(s)?;
        let v = self.duration_cdf(y);
        let spec = CopulaSpec::new(self.family, 2, &self.theta)?;
        Ok(spec.partial_cdf(&[u, v], &[0]).clamp(0.0, 1.0))
    }

    /// E(D | S = s) over the observed duration support.
    pub fn conditional_mean_duration(&self, s: f64) -> Result<f64> {
        let mut prev = 0.0;
        let mut mean = 0.0;
        for &y in &self.support {
            let p = self.conditional_duration(s, y)?;
            mean += y * (p - prev);
            prev = p;
        }
        Ok(mean)
    }
}

/// Synthetic (duration, severity) corpus: durations are shifted Poisson
/// day counts, severities log-normal, tied by the given copula. Used by the
/// selection-consistency checks and the CLI demo corpus.
pub fn synthetic_events(
    family: Family,
    theta: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<DroughtEvent>> {
    let spec = CopulaSpec::new(family, 2, theta)?;
    let mut rng = crate::numeric::stats::stream_rng(seed, 0);
    let u = spec.sample(n, &mut rng);
    let dur = crate::margins::ParametricMargin::Poisson { lambda: 5.0 };
    Ok(u.iter()
        .enumerate()
        .map(|(i, row)| DroughtEvent {
            duration_days: 1 + dur.quantile(row[0]) as usize,
            severity: (1.0 + 0.8 * norm_ppf(row[1])).exp(),
            start_index: i,
        })
        .collect())
}
