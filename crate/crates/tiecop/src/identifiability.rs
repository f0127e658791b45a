//! Identifiability audit for copula parameters under discrete or mixed
//! margins.
//!
//! With atoms in the margins, the data only pin the copula down on the grid
//! of attainable margin values, so a parameter is estimable only if the map
//! theta -> (C_theta at the grid points) is injective. This module builds
//! that grid, counts its informative points q_n, computes the Jacobian of
//! the map, and scans a parameter neighborhood for rank deficiencies. A
//! family with more parameters than informative grid points (p > q_n) can
//! never be identified, whatever the sample says.

use crate::copulas::{CopulaSpec, Family};
use crate::error::{Error, Result};
use crate::margins::{EmpiricalMargin, Margin, ParametricMargin, PseudoRow};

/// Hard cap on the number of enumerated grid points.
pub const GRID_CAP: usize = 1_000_000;

/// Margins with more distinct cdf levels than this are thinned to this many
/// quantile-spaced levels (the closure level 1 is always kept). Continuous
/// columns would otherwise blow the grid up to (n+1)^d; rank evidence does
/// not need that resolution.
pub const LEVEL_CAP: usize = 25;

/// The evaluation grid: products of per-margin cdf levels, keeping points
/// with every coordinate positive and at least two coordinates below one.
#[derive(Clone, Debug)]
pub struct IdentGrid {
    pub points: Vec<Vec<f64>>,
    pub q_n: usize,
    /// Per-coordinate level counts actually used (after thinning).
    pub m: Vec<usize>,
    /// Which coordinates were thinned to `LEVEL_CAP` levels.
    pub capped: Vec<bool>,
}

/// Closed-form count of informative grid points for level counts `m`:
/// prod(m) - sum(m) + d - 1 (never below zero, which degenerate
/// single-level margins would otherwise produce).
pub fn qn_from_counts(m: &[usize]) -> usize {
    let prod: i64 = m.iter().map(|&x| x as i64).product();
    let sum: i64 = m.iter().map(|&x| x as i64).sum();
    (prod - sum + m.len() as i64 - 1).max(0) as usize
}

/// Distinct cdf levels of a margin, in increasing order, ending in 1.0. The
/// top support value's level is closed to 1 (the attainable range of the
/// margin map includes the limit beyond the largest observation), so two
/// Bernoulli margins give exactly one informative grid point.
fn raw_levels(margin: &Margin) -> Vec<f64> {
    match margin {
        Margin::Empirical(m) => {
            let n1 = (m.n() + 1) as f64;
            let mut cum = 0usize;
            let mut out: Vec<f64> = m
                .counts()
                .iter()
                .map(|&c| {
                    cum += c;
                    cum as f64 / n1
                })
                .collect();
            *out.last_mut().unwrap() = 1.0;
            out
        }
        Margin::Parametric(p) => match *p {
            ParametricMargin::Normal { .. } => {
                let mut out: Vec<f64> =
                    (1..LEVEL_CAP).map(|k| k as f64 / LEVEL_CAP as f64).collect();
                out.push(1.0);
                out
            }
            ParametricMargin::Bernoulli { p } => vec![1.0 - p, 1.0],
            ParametricMargin::Poisson { .. } => {
                let mut out = Vec::new();
                let mut acc = 0.0;
                for j in p.jumps() {
                    acc += j;
                    if acc < 1.0 - 1e-12 {
                        out.push(acc);
                    }
                }
                out.push(1.0);
                out
            }
            ParametricMargin::ZeroInflatedNormal { p0, .. } => {
                // the atom level, then quantile-spaced levels through the
                // continuous part
                let mut out = vec![p0];
                for k in 1..LEVEL_CAP {
                    out.push(p0 + (1.0 - p0) * k as f64 / LEVEL_CAP as f64);
                }
                out.push(1.0);
                out
            }
        },
    }
}

/// Margin levels after the documented thinning: margins with more than
/// `LEVEL_CAP` distinct levels keep `LEVEL_CAP` quantile-spaced ones, always
/// including the closure level 1. Returns the levels and a capped flag.
pub fn margin_levels(margin: &Margin) -> (Vec<f64>, bool) {
    let mut levels = raw_levels(margin);
    levels.dedup();
    if levels.len() <= LEVEL_CAP {
        return (levels, false);
    }
    let k = levels.len();
    let mut thin: Vec<f64> =
        (0..LEVEL_CAP).map(|i| levels[((i + 1) * k / LEVEL_CAP).min(k) - 1]).collect();
    thin.dedup();
    (thin, true)
}

/// Build the grid from per-margin level lists.
pub fn grid_from_levels(levels: &[Vec<f64>], capped: Vec<bool>) -> Result<IdentGrid> {
    let d = levels.len();
    if d < 2 {
        return Err(Error::Config("grid needs at least two margins".into()));
    }
    let m: Vec<usize> = levels.iter().map(Vec::len).collect();
    let size: usize = m.iter().product();
    if size > GRID_CAP {
        return Err(Error::GridTooLarge { size, cap: GRID_CAP });
    }
    let mut points = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let point: Vec<f64> = idx.iter().zip(levels).map(|(&i, l)| l[i]).collect();
        let below_one = point.iter().filter(|&&u| u < 1.0).count();
        if below_one >= 2 && point.iter().all(|&u| u > 0.0) {
            points.push(point);
        }
        // odometer increment
        let mut j = d;
        loop {
            if j == 0 {
                let q_n = points.len();
                return Ok(IdentGrid { points, q_n, m, capped });
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < m[j] {
                break;
            }
            idx[j] = 0;
        }
    }
}

pub fn build_grid(margins: &[Margin]) -> Result<IdentGrid> {
    let mut levels = Vec::with_capacity(margins.len());
    let mut capped = Vec::with_capacity(margins.len());
    for m in margins {
        let (l, c) = margin_levels(m);
        levels.push(l);
        capped.push(c);
    }
    grid_from_levels(&levels, capped)
}

/// q_n computed from pseudo-observation rows: per coordinate, the number of
/// distinct margin values observed, with the largest closed to the level 1.
/// This is the cheap pre-check used before fitting; it needs no grid.
pub fn qn_for_rows(rows: &[PseudoRow]) -> usize {
    let d = rows[0].len();
    let m: Vec<usize> = (0..d)
        .map(|j| {
            let mut vals: Vec<u64> = rows.iter().map(|r| r[j].u.to_bits()).collect();
            vals.sort_unstable();
            vals.dedup();
            vals.len()
        })
        .collect();
    qn_from_counts(&m)
}

/// q_n x p Jacobian of theta -> C_theta(grid), rows in grid order.
pub fn jacobian(spec: &CopulaSpec, grid: &IdentGrid) -> Result<Vec<Vec<f64>>> {
    grid.points.iter().map(|u| spec.grad_theta(u, &[])).collect()
}

/// Singular values of a tall q x p matrix (p <= 2) via the Gram matrix.
pub fn singular_values(j: &[Vec<f64>]) -> Vec<f64> {
    let p = j.first().map_or(0, Vec::len);
    match p {
        0 => Vec::new(),
        1 => {
            let g: f64 = j.iter().map(|r| r[0] * r[0]).sum();
            vec![g.sqrt()]
        }
        2 => {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for r in j {
                a += r[0] * r[0];
                b += r[0] * r[1];
                c += r[1] * r[1];
            }
            let tr = 0.5 * (a + c);
            let disc = (tr * tr - (a * c - b * b)).max(0.0).sqrt();
            let (l1, l2) = (tr + disc, (tr - disc).max(0.0));
            vec![l1.sqrt(), l2.sqrt()]
        }
        _ => panic!("only one- and two-parameter families are supported"),
    }
}

/// Numeric rank with the documented tolerance: sigma_i counts while it
/// exceeds max(q_n, p) * sigma_1 * rank_tol. The tolerance is loose because
/// the Jacobian itself comes from finite differences.
pub fn numeric_rank(sv: &[f64], q_n: usize, rank_tol: f64) -> usize {
    match sv.first() {
        None => 0,
        Some(&s1) if s1 <= 0.0 => 0,
        Some(&s1) => {
            let thr = q_n.max(sv.len()) as f64 * s1 * rank_tol;
            sv.iter().filter(|&&s| s > thr).count()
        }
    }
}

pub const RANK_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// More parameters than informative grid points: hopeless by counting.
    NotIdentifiablePGtQ,
    /// Full rank at every scanned center.
    IdentifiableOnNeighborhood,
    /// At least one scanned center had rank below p.
    RankDeficientSomewhere,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::NotIdentifiablePGtQ => "not identifiable (p > q_n)",
            Verdict::IdentifiableOnNeighborhood => "identifiable on the scanned neighborhood",
            Verdict::RankDeficientSomewhere => "rank deficient somewhere in the neighborhood",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct CenterRank {
    pub theta: Vec<f64>,
    pub rank: usize,
    pub min_sv: f64,
}

#[derive(Clone, Debug)]
pub struct IdentReport {
    pub q_n: usize,
    pub p: usize,
    pub verdict: Verdict,
    pub centers: Vec<CenterRank>,
    pub delta: f64,
    pub bbox: Vec<(f64, f64)>,
}

/// Scan a sup-norm lattice of parameter centers (spacing `delta`, offset
/// half a step from the box edge) and rank the Jacobian at each. Counting
/// kills p > q_n before any evaluation.
pub fn rank_scan(
    family: Family,
    grid: &IdentGrid,
    bbox: &[(f64, f64)],
    delta: f64,
) -> Result<IdentReport> {
    let p = family.param_count();
    if bbox.len() != p {
        return Err(Error::Config(format!(
            "box has {} sides for a {p}-parameter family",
            bbox.len()
        )));
    }
    if delta <= 0.0 || bbox.iter().any(|&(lo, hi)| hi <= lo) {
        return Err(Error::Config("need positive delta and a positive-volume box".into()));
    }
    if p > grid.q_n {
        return Ok(IdentReport {
            q_n: grid.q_n,
            p,
            verdict: Verdict::NotIdentifiablePGtQ,
            centers: Vec::new(),
            delta,
            bbox: bbox.to_vec(),
        });
    }
    let axes: Vec<Vec<f64>> = bbox
        .iter()
        .map(|&(lo, hi)| {
            let mut axis = Vec::new();
            let mut c = lo + 0.5 * delta;
            while c < hi {
                axis.push(c);
                c += delta;
            }
            if axis.is_empty() {
                axis.push(0.5 * (lo + hi));
            }
            axis
        })
        .collect();
    let dim_of_grid = grid.points[0].len();
    let mut centers = Vec::new();
    let mut idx = vec![0usize; p];
    'outer: loop {
        let theta: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
        let spec = CopulaSpec::new(family, dim_of_grid, &theta)?;
        let j = jacobian(&spec, grid)?;
        let sv = singular_values(&j);
        let rank = numeric_rank(&sv, grid.q_n, RANK_TOL);
        centers.push(CenterRank { theta, rank, min_sv: *sv.last().unwrap_or(&0.0) });
        let mut k = p;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let verdict = if centers.iter().all(|c| c.rank == p) {
        Verdict::IdentifiableOnNeighborhood
    } else {
        Verdict::RankDeficientSomewhere
    };
    Ok(IdentReport { q_n: grid.q_n, p, verdict, centers, delta, bbox: bbox.to_vec() })
}

/// Convenience: margins -> grid -> scan.
pub fn audit(
    family: Family,
    margins: &[Margin],
    bbox: &[(f64, f64)],
    delta: f64,
) -> Result<IdentReport> {
    let grid = build_grid(margins)?;
    rank_scan(family, &grid, bbox, delta)
}

/// Empirical margins from columns, a helper for the audit entry points.
pub fn empirical_margins(columns: &[Vec<f64>]) -> Result<Vec<Margin>> {
    columns
        .iter()
        .map(|c| Ok(Margin::Empirical(EmpiricalMargin::fit(c)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern_margin(p_zero: f64, n: usize) -> Margin {
        let zeros = (p_zero * n as f64).round() as usize;
        let mut col = vec![0.0; zeros];
        col.extend(std::iter::repeat_n(1.0, n - zeros));
        Margin::Empirical(EmpiricalMargin::fit_with_atoms(&col, &[0.0, 1.0]).unwrap())
    }

    #[test]
    fn bernoulli_grid_is_a_single_point() {
        let grid = build_grid(&[bern_margin(0.4, 10), bern_margin(0.6, 10)]).unwrap();
        assert_eq!(grid.q_n, 1);
        assert_eq!(grid.m, vec![2, 2]);
        assert_eq!(grid.points, vec![vec![4.0 / 11.0, 6.0 / 11.0]]);
    }

    #[test]
    fn qn_formula_examples() {
        assert_eq!(qn_from_counts(&[3, 3]), 4);
        assert_eq!(qn_from_counts(&[2, 2, 2]), 4);
        assert_eq!(qn_from_counts(&[2, 2]), 1);
    }

    #[test]
    fn qn_formula_matches_enumeration_everywhere() {
        // all level-count vectors with m_j in 2..=5 and d in 2..=3; the grid
        // builder enumerates, the formula counts
        for d in 2..=3 {
            let mut m = vec![2usize; d];
            loop {
                let levels: Vec<Vec<f64>> = m
                    .iter()
                    .map(|&mj| (1..=mj).map(|k| k as f64 / mj as f64).collect())
                    .collect();
                let grid = grid_from_levels(&levels, vec![false; d]).unwrap();
                assert_eq!(
                    grid.points.len(),
                    qn_from_counts(&m),
                    "m = {m:?}: enumeration disagrees with the formula"
                );
                let mut j = d;
                loop {
                    if j == 0 {
                        return;
                    }
                    j -= 1;
                    m[j] += 1;
                    if m[j] <= 5 {
                        break;
                    }
                    m[j] = 2;
                }
            }
        }
    }

    #[test]
    fn grid_points_obey_membership_rules() {
        let levels = vec![vec![0.2, 0.7, 1.0], vec![0.5, 1.0], vec![0.3, 0.9, 1.0]];
        let grid = grid_from_levels(&levels, vec![false; 3]).unwrap();
        assert_eq!(grid.points.len(), grid.q_n);
        for pt in &grid.points {
            assert!(pt.iter().all(|&u| u > 0.0 && u <= 1.0));
            assert!(pt.iter().filter(|&&u| u < 1.0).count() >= 2);
        }
    }

    #[test]
    fn oversized_grid_is_rejected() {
        // three coordinates at the level cap stay under the cap, four blow up
        // only when the synthetic levels dodge the thinning
        let levels: Vec<Vec<f64>> =
            (0..4).map(|_| (1..=200).map(|k| k as f64 / 200.0).collect()).collect();
        match grid_from_levels(&levels, vec![false; 4]) {
            Err(Error::GridTooLarge { size, cap }) => {
                assert_eq!(size, 200usize.pow(4));
                assert_eq!(cap, GRID_CAP);
            }
            other => panic!("expected GridTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn continuous_margins_are_thinned() {
        let col: Vec<f64> = (0..400).map(|i| i as f64 + 0.5).collect();
        let m = Margin::Empirical(EmpiricalMargin::fit(&col).unwrap());
        let (levels, capped) = margin_levels(&m);
        assert!(capped);
        assert!(levels.len() <= LEVEL_CAP);
        assert_eq!(*levels.last().unwrap(), 1.0);
        let grid = build_grid(&[m.clone(), m]).unwrap();
        assert!(grid.capped.iter().all(|&c| c));
        assert_eq!(grid.q_n, qn_from_counts(&grid.m));
    }

    #[test]
    fn qn_for_rows_matches_grid_count() {
        use crate::margins::{pseudo_observations, AtomMode};
        let c1 = vec![0.0, 0.0, 1.0, 1.0, 2.0, 0.0];
        let c2 = vec![0.0, 1.0, 0.0, 1.0, 1.0, 1.0];
        let margins = empirical_margins(&[c1.clone(), c2.clone()]).unwrap();
        let rows = pseudo_observations(&[c1, c2], &margins, AtomMode::NonInformed).unwrap();
        let grid = build_grid(&margins).unwrap();
        assert_eq!(qn_for_rows(&rows), grid.q_n);
        assert_eq!(grid.q_n, qn_from_counts(&[3, 2]));
    }

    #[test]
    fn gaussian_median_jacobian_is_closed_form() {
        let grid = IdentGrid {
            points: vec![vec![0.5, 0.5]],
            q_n: 1,
            m: vec![2, 2],
            capped: vec![false, false],
        };
        for rho in [-0.6, 0.0, 0.3, 0.8] {
            let spec = CopulaSpec::new(Family::Gaussian, 2, &[rho]).unwrap();
            let j = jacobian(&spec, &grid).unwrap();
            let want = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - rho * rho).sqrt());
            assert!((j[0][0] - want).abs() < 1e-7 * want, "rho={rho}: {} vs {want}", j[0][0]);
            let sv = singular_values(&j);
            assert_eq!(numeric_rank(&sv, grid.q_n, RANK_TOL), 1);
        }
    }

    #[test]
    fn student_on_a_bernoulli_grid_is_counted_out() {
        let grid = build_grid(&[bern_margin(0.5, 20), bern_margin(0.5, 20)]).unwrap();
        let report =
            rank_scan(Family::Student, &grid, &[(0.1, 0.5), (2.0, 10.0)], 0.1).unwrap();
        assert_eq!(report.verdict, Verdict::NotIdentifiablePGtQ);
        assert!(report.centers.is_empty());
        assert_eq!(report.p, 2);
        assert_eq!(report.q_n, 1);
    }

    #[test]
    fn clayton_scan_is_identifiable_on_bernoulli_grid() {
        let grid = build_grid(&[bern_margin(0.5, 20), bern_margin(0.5, 20)]).unwrap();
        let report = rank_scan(Family::Clayton, &grid, &[(0.5, 10.0)], 0.5).unwrap();
        assert_eq!(report.verdict, Verdict::IdentifiableOnNeighborhood);
        assert!(report.centers.iter().all(|c| c.rank == 1 && c.min_sv > 1e-6));
    }

    #[test]
    fn student_two_point_grid_goes_rank_deficient() {
        // nu -> C_{0.3,nu}(0.75, 0.55) takes the value 0.452 twice (near
        // 0.225 and 0.799), so its nu-derivative vanishes somewhere between;
        // C at the median point carries no nu information at all, and at
        // that stationary nu the 2-column Jacobian drops to rank 1
        let grid = IdentGrid {
            points: vec![vec![0.5, 0.5], vec![0.75, 0.55]],
            q_n: 2,
            m: vec![2, 3],
            capped: vec![false, false],
        };
        let mut dnu = |nu: f64| {
            let spec = CopulaSpec::new(Family::Student, 2, &[0.3, nu]).unwrap();
            spec.grad_theta(&[0.75, 0.55], &[]).unwrap()[1]
        };
        let nustar = crate::numeric::roots::brent(&mut dnu, 0.25, 0.79, 1e-10).unwrap();
        // independent quadrature oracle puts the stationary point at 0.389018
        assert!((nustar - 0.389018).abs() < 1e-3, "{nustar}");

        // a scan straddling the stationary point sees the deficiency
        let tight = rank_scan(
            Family::Student,
            &grid,
            &[(0.3 - 3e-6, 0.3 + 3e-6), (nustar - 3e-6, nustar + 3e-6)],
            3e-6,
        )
        .unwrap();
        assert_eq!(tight.verdict, Verdict::RankDeficientSomewhere);
        assert!(tight.centers.iter().any(|c| c.rank < 2));

        // away from it the two columns are independent
        let wide =
            rank_scan(Family::Student, &grid, &[(0.29, 0.31), (0.5, 0.79)], 0.1).unwrap();
        assert_eq!(wide.verdict, Verdict::IdentifiableOnNeighborhood);
    }

    #[test]
    fn rank_ignores_column_scaling_and_row_order() {
        let spec = CopulaSpec::new(Family::Student, 2, &[0.4, 3.0]).unwrap();
        let grid = IdentGrid {
            points: vec![vec![0.3, 0.6], vec![0.7, 0.2], vec![0.55, 0.85]],
            q_n: 3,
            m: vec![4, 4],
            capped: vec![false, false],
        };
        let j = jacobian(&spec, &grid).unwrap();
        let base = numeric_rank(&singular_values(&j), grid.q_n, RANK_TOL);
        let scaled: Vec<Vec<f64>> =
            j.iter().map(|r| vec![r[0] * 4.0, r[1] * 0.25]).collect();
        assert_eq!(numeric_rank(&singular_values(&scaled), grid.q_n, RANK_TOL), base);
        let mut perm = j.clone();
        perm.swap(0, 2);
        assert_eq!(numeric_rank(&singular_values(&perm), grid.q_n, RANK_TOL), base);
    }
}
