//! Atom-aware pseudo log-likelihoods.
//!
//! Each observation row carries, per coordinate, the margin value u, its left
//! limit u_minus and an atom flag. The likelihood term for a row is driven by
//! its atom index set A: continuous coordinates are differentiated, atomic
//! coordinates are differenced,
//!
//! ```text
//! K_A(x) = sum over B subset of A of (-1)^|B| d_{A^c} C(point_B),
//! ```
//!
//! where point_B substitutes u_minus for the coordinates in B. A empty gives
//! the copula density, A full gives the rectangle probability of
//! prod_j (u_minus_j, u_j]. The averaged log-likelihood is (1/n) sum log K.
//!
//! Four variants share this machinery: the informed and non-informed
//! likelihoods differ only in how the rows' atom flags were produced, the
//! naive likelihood deliberately ignores the flags (kept for the cautionary
//! demonstration that it is inconsistent under ties), and the pairwise
//! composite likelihood sums bivariate likelihoods over all coordinate pairs.
//!
//! The left-limit convention is F_n(x-) itself, not F_n(x-) + 1/(n+1); it is
//! fixed here and in `margins` so golden values stay reproducible.

use std::collections::HashMap;

use crate::copulas::elliptical as ell;
use crate::copulas::{CopulaSpec, Family, EPS_U};
use crate::error::{Error, Result};
use crate::margins::{PseudoCoord, PseudoRow};
use crate::numeric::special::{norm_cdf, norm_ppf, t_cdf, t_ppf};
use crate::numeric::stats::pairwise_sum;

/// Which pseudo log-likelihood to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LikelihoodKind {
    Informed,
    NonInformed,
    /// Treat every row as continuous regardless of atom flags.
    Naive,
    CompositeInformed,
    CompositeNonInformed,
}

impl LikelihoodKind {
    pub fn is_composite(self) -> bool {
        matches!(
            self,
            LikelihoodKind::CompositeInformed | LikelihoodKind::CompositeNonInformed
        )
    }

    fn is_naive(self) -> bool {
        self == LikelihoodKind::Naive
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LikelihoodConfig {
    pub kind: LikelihoodKind,
    /// Log-likelihood contribution of a row whose K term comes out
    /// non-positive or non-finite; must sit far below anything attainable.
    pub penalty: f64,
}

impl LikelihoodConfig {
    pub fn new(kind: LikelihoodKind) -> Self {
        LikelihoodConfig { kind, penalty: -1e10 }
    }
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        LikelihoodConfig::new(LikelihoodKind::Informed)
    }
}

/// Averaged log-likelihood value plus how many rows hit the penalty.
#[derive(Clone, Copy, Debug)]
pub struct LoglikValue {
    pub value: f64,
    pub penalty_hits: usize,
}

// --------------------------------------------------------------- K terms

/// Memo for Student quantiles, keyed by the bits of the probability. One map
/// per degrees-of-freedom value; dyadic panel splitting makes quadrature
/// nodes recur, so lookups dominate after the first optimizer iterations.
#[derive(Default)]
struct TQuantileCache {
    nu_bits: u64,
    map: HashMap<u64, f64>,
}

impl TQuantileCache {
    fn get(&mut self, p: f64, nu: f64) -> f64 {
        if nu.to_bits() != self.nu_bits {
            self.nu_bits = nu.to_bits();
            self.map.clear();
        }
        *self.map.entry(p.to_bits()).or_insert_with(|| t_ppf(p, nu))
    }
}

fn npf(u: f64) -> f64 {
    norm_ppf(u.clamp(EPS_U, 1.0 - EPS_U))
}

/// Conditional band P(lo < U_atom <= hi | U_cont = u_cont) for the Gaussian
/// copula, tail-safe and exact at the unit-interval edges.
fn gauss_band(rho: f64, lo: f64, hi: f64, x_cond: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    let z = |u: f64| (npf(u) - rho * x_cond) / s;
    match (lo <= 0.0, hi >= 1.0) {
        (true, true) => 1.0,
        (true, false) => norm_cdf(z(hi)),
        (false, true) => norm_cdf(-z(lo)),
        (false, false) => ell::norm_cdf_diff(z(lo), z(hi)),
    }
}

fn student_band(rho: f64, nu: f64, lo: f64, hi: f64, x_cond: f64, tq: &mut TQuantileCache) -> f64 {
    let k = ell::student_cond_scale(x_cond, rho, nu);
    let mut z = |u: f64| (tq.get(u, nu) - rho * x_cond) * k;
    match (lo <= 0.0, hi >= 1.0) {
        (true, true) => 1.0,
        (true, false) => t_cdf(z(hi), nu + 1.0),
        (false, true) => t_cdf(-z(lo), nu + 1.0),
        (false, false) => {
            let (a, b) = (z(lo), z(hi));
            ell::t_cdf_diff(a, b, nu + 1.0)
        }
    }
}

/// K term for one row given its atom index set, dispatching to fused
/// elliptical forms in two dimensions and generic inclusion-exclusion
/// otherwise. `atoms` must be sorted.
fn k_value(
    spec: &CopulaSpec,
    u: &[f64],
    um: &[f64],
    atoms: &[usize],
    tq: &mut TQuantileCache,
) -> f64 {
    let d = u.len();
    if d == 2 && matches!(spec.family, Family::Gaussian | Family::Student) {
        let rho = spec.theta[0];
        match (spec.family, atoms) {
            (Family::Gaussian, []) => {
                return ell::gaussian_density_x(rho, npf(u[0]), npf(u[1]));
            }
            (Family::Student, []) => {
                let nu = spec.theta[1];
                let (c0, c1) = (u[0].clamp(EPS_U, 1.0 - EPS_U), u[1].clamp(EPS_U, 1.0 - EPS_U));
                return ell::student_density_x(rho, nu, tq.get(c0, nu), tq.get(c1, nu));
            }
            (Family::Gaussian, [j]) => {
                let c = 1 - j;
                return gauss_band(rho, um[*j], u[*j], npf(u[c]));
            }
            (Family::Student, [j]) => {
                let nu = spec.theta[1];
                let c = 1 - j;
                let xc = tq.get(u[c].clamp(EPS_U, 1.0 - EPS_U), nu);
                return student_band(rho, nu, um[*j], u[*j], xc, tq);
            }
            (_, [0, 1]) => {
                let full0 = um[0] <= 0.0 && u[0] >= 1.0;
                let full1 = um[1] <= 0.0 && u[1] >= 1.0;
                if full0 && full1 {
                    return 1.0;
                }
                if full0 {
                    return u[1].min(1.0) - um[1].max(0.0);
                }
                if full1 {
                    return u[0].min(1.0) - um[0].max(0.0);
                }
                if spec.family == Family::Gaussian {
                    // the normal mass outside +-8.5 is ~1e-17, so edge
                    // rectangles integrate from the same floor as the cdf
                    let q = |v: f64, at_edge: f64| {
                        if v <= 0.0 || v >= 1.0 {
                            at_edge
                        } else {
                            norm_ppf(v)
                        }
                    };
                    return ell::gaussian_rect_x(
                        rho,
                        q(um[0], -8.5),
                        q(u[0], 8.5),
                        q(um[1], -8.5),
                        q(u[1], 8.5),
                    );
                }
                let nu = spec.theta[1];
                let ya = if um[1] <= 0.0 { f64::NEG_INFINITY } else { tq.get(um[1], nu) };
                let yb = if u[1] >= 1.0 { f64::INFINITY } else { tq.get(u[1], nu) };
                return ell::student_rect_s_with(
                    rho,
                    nu,
                    um[0].max(0.0),
                    u[0].min(1.0),
                    ya,
                    yb,
                    &mut |p| tq.get(p, nu),
                );
            }
            _ => unreachable!("atom set inconsistent with dimension"),
        }
    }

    // generic inclusion-exclusion over subsets of the atom set
    let acomp: Vec<usize> = (0..d).filter(|j| !atoms.contains(j)).collect();
    let mut total = 0.0;
    let mut point = u.to_vec();
    for mask in 0u32..(1 << atoms.len()) {
        let mut sign = 1.0;
        for (bit, &j) in atoms.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                point[j] = um[j];
                sign = -sign;
            } else {
                point[j] = u[j];
            }
        }
        total += sign * spec.partial_cdf(&point, &acomp);
    }
    total
}

/// Public K-term entry point. `a` must list exactly the row's flagged atom
/// coordinates (sorted); a mismatch is a contract error. Non-positive values
/// are returned unmodified, callers decide on penalties.
pub fn k_term(spec: &CopulaSpec, row: &[PseudoCoord], a: &[usize]) -> Result<f64> {
    if row.len() != spec.dim {
        return Err(Error::Config(format!(
            "row has {} coordinates, copula has {}",
            row.len(),
            spec.dim
        )));
    }
    let flagged: Vec<usize> =
        row.iter().enumerate().filter(|(_, c)| c.is_atom).map(|(j, _)| j).collect();
    if a != flagged.as_slice() {
        return Err(Error::Config(format!(
            "atom set {a:?} does not match row flags {flagged:?}"
        )));
    }
    let u: Vec<f64> = row.iter().map(|c| c.u).collect();
    let um: Vec<f64> = row.iter().map(|c| c.u_minus).collect();
    let mut tq = TQuantileCache::default();
    Ok(k_value(spec, &u, &um, &flagged, &mut tq))
}

// -------------------------------------------------------------- evaluator

#[derive(Clone, Debug)]
struct Group {
    u: Vec<f64>,
    um: Vec<f64>,
    atoms: Vec<usize>,
    weight: f64,
}

#[derive(Clone, Debug)]
struct Block {
    dim: usize,
    groups: Vec<Group>,
}

/// Reusable likelihood evaluator: rows are deduplicated once (identical
/// margin-transformed rows collapse into one weighted term, a large saving
/// for discrete data) and Student quantiles are memoized across calls, so an
/// optimizer can probe many parameter values cheaply.
pub struct Evaluator {
    family: Family,
    config: LikelihoodConfig,
    n: usize,
    blocks: Vec<Block>,
    tq: TQuantileCache,
}

fn dedup_rows(
    rows: &[PseudoRow],
    take: &[usize],
    strip_atoms: bool,
) -> Vec<Group> {
    let mut map: HashMap<Vec<(u64, u64, bool)>, f64> = HashMap::new();
    for row in rows {
        let key: Vec<(u64, u64, bool)> = take
            .iter()
            .map(|&j| {
                let c = row[j];
                (c.u.to_bits(), c.u_minus.to_bits(), !strip_atoms && c.is_atom)
            })
            .collect();
        *map.entry(key).or_insert(0.0) += 1.0;
    }
    let mut groups: Vec<Group> = map
        .into_iter()
        .map(|(key, weight)| Group {
            u: key.iter().map(|&(u, _, _)| f64::from_bits(u)).collect(),
            um: key.iter().map(|&(_, m, _)| f64::from_bits(m)).collect(),
            atoms: key
                .iter()
                .enumerate()
                .filter(|(_, &(_, _, a))| a)
                .map(|(j, _)| j)
                .collect(),
            weight,
        })
        .collect();
    // deterministic order so the pairwise reduction is reproducible
    groups.sort_by(|a, b| {
        a.u.iter()
            .map(|x| x.to_bits())
            .cmp(b.u.iter().map(|x| x.to_bits()))
            .then_with(|| a.um.iter().map(|x| x.to_bits()).cmp(b.um.iter().map(|x| x.to_bits())))
            .then_with(|| a.atoms.cmp(&b.atoms))
    });
    groups
}

impl Evaluator {
    pub fn new(family: Family, rows: &[PseudoRow], config: LikelihoodConfig) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data("no rows".into()));
        }
        let d = rows[0].len();
        if d < 2 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Data("rows must share a dimension of at least 2".into()));
        }
        let strip = config.kind.is_naive();
        let blocks = if config.kind.is_composite() && d > 2 {
            let mut blocks = Vec::new();
            for k in 0..d {
                for l in (k + 1)..d {
                    blocks.push(Block { dim: 2, groups: dedup_rows(rows, &[k, l], strip) });
                }
            }
            blocks
        } else {
            if d > 2 && family.bivariate_only() {
                return Err(Error::Unsupported(format!(
                    "{family} has no {d}-variate form; use a composite kind"
                )));
            }
            let all: Vec<usize> = (0..d).collect();
            vec![Block { dim: d, groups: dedup_rows(rows, &all, strip) }]
        };
        Ok(Evaluator { family, config, n: rows.len(), blocks, tq: TQuantileCache::default() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Averaged log-likelihood at the given parameter vector. Parameter
    /// vectors outside the family's box are errors (optimizers map them to
    /// minus infinity); non-positive K terms contribute the penalty.
    pub fn loglik(&mut self, theta: &[f64]) -> Result<LoglikValue> {
        let mut total = 0.0;
        let mut hits = 0usize;
        let inv_n = 1.0 / self.n as f64;
        for block in &self.blocks {
            let spec = CopulaSpec::new(self.family, block.dim, theta)?;
            let mut terms = Vec::with_capacity(block.groups.len());
            for g in &block.groups {
                let k = k_value(&spec, &g.u, &g.um, &g.atoms, &mut self.tq);
                if k > 0.0 && k.is_finite() {
                    terms.push(g.weight * k.ln());
                } else {
                    hits += g.weight as usize;
                    terms.push(g.weight * self.config.penalty);
                }
            }
            total += pairwise_sum(&terms) * inv_n;
        }
        Ok(LoglikValue { value: total, penalty_hits: hits })
    }
}

// ------------------------------------------------------------ conveniences

fn eval_once(spec: &CopulaSpec, rows: &[PseudoRow], kind: LikelihoodKind) -> Result<LoglikValue> {
    Evaluator::new(spec.family, rows, LikelihoodConfig::new(kind))?.loglik(&spec.theta)
}

/// Atom-aware likelihood on rows built with declared atom sets.
pub fn informed_loglik(spec: &CopulaSpec, rows: &[PseudoRow]) -> Result<LoglikValue> {
    eval_once(spec, rows, LikelihoodKind::Informed)
}

/// Atom-aware likelihood on rows whose atoms were inferred from multiplicity.
pub fn noninformed_loglik(spec: &CopulaSpec, rows: &[PseudoRow]) -> Result<LoglikValue> {
    eval_once(spec, rows, LikelihoodKind::NonInformed)
}

/// Density-only likelihood that ignores atoms; inconsistent under ties and
/// retained only to demonstrate that failure.
pub fn naive_loglik(spec: &CopulaSpec, rows: &[PseudoRow]) -> Result<LoglikValue> {
    eval_once(spec, rows, LikelihoodKind::Naive)
}

/// Pairwise composite likelihood: the sum over coordinate pairs of bivariate
/// atom-aware likelihoods sharing one exchangeable parameter. For two
/// columns it coincides with the plain likelihood.
pub fn composite_loglik(
    spec: &CopulaSpec,
    rows: &[PseudoRow],
    kind: LikelihoodKind,
) -> Result<LoglikValue> {
    if !kind.is_composite() {
        return Err(Error::Config("composite_loglik needs a composite kind".into()));
    }
    let mut ev = Evaluator::new(spec.family, rows, LikelihoodConfig::new(kind))?;
    ev.loglik(&spec.theta)
}
