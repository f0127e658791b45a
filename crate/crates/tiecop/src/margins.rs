//! Margin models: the rescaled empirical cdf, simple parametric families,
//! pseudo-observation construction and the V_n tie diagnostic.
//!
//! Every margin answers three questions about a value y: F(y), the left
//! limit F(y-), and whether y is an atom. Atom status has two modes:
//! informed mode trusts a declared atom set (exact value equality), while
//! non-informed mode flags any value observed at least twice. The pair
//! (F(y), F(y-)) plus the flag is everything the tie-aware likelihood needs.

use crate::error::{Error, Result};
use crate::numeric::special::{ln_gamma, norm_cdf, norm_ppf};

/// How atoms are decided when building pseudo-observations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomMode {
    /// Membership in an explicitly declared atom set.
    Informed,
    /// A value is an atom when its sample multiplicity is at least 2.
    NonInformed,
}

/// One margin-transformed coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoCoord {
    pub u: f64,
    pub u_minus: f64,
    pub is_atom: bool,
}

/// One margin-transformed observation (length d).
pub type PseudoRow = Vec<PseudoCoord>;

// ------------------------------------------------------------- empirical

/// Rescaled empirical cdf F_n(y) = #{X_i <= y} / (n+1), which never reaches
/// one, plus multiplicities and an optional declared atom set.
#[derive(Clone, Debug)]
pub struct EmpiricalMargin {
    support: Vec<f64>,
    counts: Vec<usize>,
    cum: Vec<usize>,
    n: usize,
    atom_set: Option<Vec<f64>>,
}

impl EmpiricalMargin {
    pub fn fit(column: &[f64]) -> Result<Self> {
        Self::build(column, None)
    }

    /// Informed variant: `atoms` lists the values to treat as atoms, matched
    /// by exact equality (callers must pre-round their data accordingly).
    pub fn fit_with_atoms(column: &[f64], atoms: &[f64]) -> Result<Self> {
        let mut a = atoms.to_vec();
        a.sort_by(f64::total_cmp);
        a.dedup();
        Self::build(column, Some(a))
    }

    fn build(column: &[f64], atom_set: Option<Vec<f64>>) -> Result<Self> {
        if column.is_empty() {
            return Err(Error::Data("empty column".into()));
        }
        if column.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("non-finite value in column".into()));
        }
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut support = Vec::new();
        let mut counts = Vec::new();
        for &x in &sorted {
            if support.last() == Some(&x) {
                *counts.last_mut().unwrap() += 1;
            } else {
                support.push(x);
                counts.push(1);
            }
        }
        let mut cum = Vec::with_capacity(counts.len());
        let mut acc = 0;
        for &c in &counts {
            acc += c;
            cum.push(acc);
        }
        Ok(EmpiricalMargin { support, counts, cum, n: column.len(), atom_set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn atom_set(&self) -> Option<&[f64]> {
        self.atom_set.as_deref()
    }

    fn count_le(&self, y: f64) -> usize {
        // number of observations <= y
        match self.support.partition_point(|&v| v <= y) {
            0 => 0,
            k => self.cum[k - 1],
        }
    }

    fn count_lt(&self, y: f64) -> usize {
        match self.support.partition_point(|&v| v < y) {
            0 => 0,
            k => self.cum[k - 1],
        }
    }

    /// F_n(y) with the n+1 rescaling.
    pub fn eval(&self, y: f64) -> f64 {
        self.count_le(y) as f64 / (self.n + 1) as f64
    }

    /// Left limit F_n(y-).
    pub fn eval_left(&self, y: f64) -> f64 {
        self.count_lt(y) as f64 / (self.n + 1) as f64
    }

    /// Generalized inverse inf{x : F_n(x) >= u}.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u * (self.n + 1) as f64;
        let k = self.cum.partition_point(|&c| (c as f64) < target);
        if k >= self.support.len() {
            *self.support.last().unwrap()
        } else {
            self.support[k]
        }
    }

    fn multiplicity(&self, y: f64) -> usize {
        match self.support.binary_search_by(|v| v.total_cmp(&y)) {
            Ok(i) => self.counts[i],
            Err(_) => 0,
        }
    }

    pub fn is_atom(&self, y: f64, mode: AtomMode) -> Result<bool> {
        match mode {
            AtomMode::Informed => match &self.atom_set {
                Some(set) => Ok(set.binary_search_by(|v| v.total_cmp(&y)).is_ok()),
                None => Err(Error::Config(
                    "informed atom mode needs a declared atom set".into(),
                )),
            },
            AtomMode::NonInformed => Ok(self.multiplicity(y) >= 2),
        }
    }

    pub fn pseudo(&self, y: f64, mode: AtomMode) -> Result<PseudoCoord> {
        Ok(PseudoCoord {
            u: self.eval(y),
            u_minus: self.eval_left(y),
            is_atom: self.is_atom(y, mode)?,
        })
    }

    /// Plug-in V_n using ecdf jump sizes count/n at the margin's atoms
    /// (declared set if present, multiplicity >= 2 otherwise).
    pub fn vn(&self) -> f64 {
        let jumps: Vec<f64> = self
            .support
            .iter()
            .zip(&self.counts)
            .filter(|&(v, &c)| match &self.atom_set {
                Some(set) => set.binary_search_by(|w| w.total_cmp(v)).is_ok(),
                None => c >= 2,
            })
            .map(|(_, &c)| c as f64 / self.n as f64)
            .collect();
        vn_from_jumps(&jumps, self.n)
    }
}

// ------------------------------------------------------------ parametric

/// Parametric margin families fitted by per-column maximum likelihood.
#[derive(Clone, Debug, PartialEq)]
pub enum ParametricMargin {
    Normal { mean: f64, sd: f64 },
    Poisson { lambda: f64 },
    Bernoulli { p: f64 },
    /// Mass p0 at zero, otherwise |N(mean, sd)|. With mean = 0 the cdf is
    /// p0 + (1-p0)(2 Phi(x/sd) - 1) for x >= 0.
    ZeroInflatedNormal { p0: f64, mean: f64, sd: f64 },
}

fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

impl ParametricMargin {
    pub fn fit_normal(column: &[f64]) -> Result<Self> {
        check_column(column)?;
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        if var <= 0.0 {
            return Err(Error::Degenerate("zero variance in normal fit".into()));
        }
        Ok(ParametricMargin::Normal { mean, sd: var.sqrt() })
    }

    pub fn fit_poisson(column: &[f64]) -> Result<Self> {
        check_column(column)?;
        if column.iter().any(|&x| x < 0.0 || x.fract() != 0.0) {
            return Err(Error::Data("poisson fit needs non-negative integers".into()));
        }
        let lambda = column.iter().sum::<f64>() / column.len() as f64;
        if lambda <= 0.0 {
            return Err(Error::Degenerate("all-zero column in poisson fit".into()));
        }
        Ok(ParametricMargin::Poisson { lambda })
    }

    pub fn fit_bernoulli(column: &[f64]) -> Result<Self> {
        check_column(column)?;
        if column.iter().any(|&x| x != 0.0 && x != 1.0) {
            return Err(Error::Data("bernoulli fit needs 0/1 values".into()));
        }
        let p = column.iter().sum::<f64>() / column.len() as f64;
        if p <= 0.0 || p >= 1.0 {
            return Err(Error::Degenerate("constant column in bernoulli fit".into()));
        }
        Ok(ParametricMargin::Bernoulli { p })
    }

    /// Zero-inflated half-normal: p0 is the zero fraction and the scale is
    /// the half-normal MLE on the nonzero part (location fixed at 0).
    pub fn fit_zero_inflated_normal(column: &[f64]) -> Result<Self> {
        check_column(column)?;
        if column.iter().any(|&x| x < 0.0) {
            return Err(Error::Data("zero-inflated fit needs non-negative values".into()));
        }
        let n = column.len();
        let zeros = column.iter().filter(|&&x| x == 0.0).count();
        let p0 = zeros as f64 / n as f64;
        let nz: Vec<f64> = column.iter().copied().filter(|&x| x > 0.0).collect();
        if nz.is_empty() {
            return Err(Error::Degenerate("no nonzero values in zero-inflated fit".into()));
        }
        let sd = (nz.iter().map(|x| x * x).sum::<f64>() / nz.len() as f64).sqrt();
        Ok(ParametricMargin::ZeroInflatedNormal { p0, mean: 0.0, sd })
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            ParametricMargin::Normal { mean, sd } => norm_cdf((y - mean) / sd),
            ParametricMargin::Poisson { lambda } => {
                if y < 0.0 {
                    return 0.0;
                }
                let k = y.floor() as u64;
                let mut acc = 0.0;
                for i in 0..=k {
                    acc += poisson_pmf(lambda, i);
                    if acc >= 1.0 {
                        return 1.0;
                    }
                }
                acc.min(1.0)
            }
            ParametricMargin::Bernoulli { p } => {
                if y < 0.0 {
                    0.0
                } else if y < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            ParametricMargin::ZeroInflatedNormal { p0, mean, sd } => {
                if y < 0.0 {
                    0.0
                } else {
                    p0 + (1.0 - p0)
                        * (norm_cdf((y - mean) / sd) - norm_cdf((-y - mean) / sd))
                }
            }
        }
    }

    pub fn cdf_left(&self, y: f64) -> f64 {
        if self.is_atom_value(y) {
            match *self {
                ParametricMargin::Poisson { .. } => self.cdf(y - 0.5),
                ParametricMargin::Bernoulli { .. } => {
                    if y == 0.0 {
                        0.0
                    } else {
                        self.cdf(0.0)
                    }
                }
                ParametricMargin::ZeroInflatedNormal { .. } => 0.0,
                ParametricMargin::Normal { .. } => unreachable!(),
            }
        } else {
            self.cdf(y)
        }
    }

    /// Whether y carries positive mass under this distribution.
    pub fn is_atom_value(&self, y: f64) -> bool {
        match *self {
            ParametricMargin::Normal { .. } => false,
            ParametricMargin::Poisson { .. } => y >= 0.0 && y.fract() == 0.0,
            ParametricMargin::Bernoulli { .. } => y == 0.0 || y == 1.0,
            ParametricMargin::ZeroInflatedNormal { .. } => y == 0.0,
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u < 1.0);
        match *self {
            ParametricMargin::Normal { mean, sd } => mean + sd * norm_ppf(u),
            ParametricMargin::Poisson { lambda } => {
                let mut acc = 0.0;
                let mut k = 0u64;
                loop {
                    acc += poisson_pmf(lambda, k);
                    if acc >= u || k > 100_000_000 {
                        return k as f64;
                    }
                    k += 1;
                }
            }
            ParametricMargin::Bernoulli { p } => {
                if u <= 1.0 - p {
                    0.0
                } else {
                    1.0
                }
            }
            ParametricMargin::ZeroInflatedNormal { p0, mean, sd } => {
                if u <= p0 {
                    return 0.0;
                }
                let q = (u - p0) / (1.0 - p0);
                if mean == 0.0 {
                    // 2 Phi(x/sd) - 1 = q
                    sd * norm_ppf(0.5 * (q + 1.0))
                } else {
                    let mut f =
                        |x: f64| norm_cdf((x - mean) / sd) - norm_cdf((-x - mean) / sd) - q;
                    crate::numeric::roots::brent(&mut f, 0.0, mean.abs() + 12.0 * sd, 1e-12)
                        .expect("folded normal cdf spans (0,1)")
                }
            }
        }
    }

    pub fn pseudo(&self, y: f64) -> PseudoCoord {
        PseudoCoord {
            u: self.cdf(y),
            u_minus: self.cdf_left(y),
            is_atom: self.is_atom_value(y),
        }
    }

    /// Jump sizes of the discrete part, truncated when the remaining tail
    /// mass is negligible.
    pub fn jumps(&self) -> Vec<f64> {
        match *self {
            ParametricMargin::Normal { .. } => Vec::new(),
            ParametricMargin::Poisson { lambda } => {
                let mut out = Vec::new();
                let mut acc = 0.0;
                let mut k = 0u64;
                while acc < 1.0 - 1e-14 && k < 10_000_000 {
                    let p = poisson_pmf(lambda, k);
                    out.push(p);
                    acc += p;
                    k += 1;
                }
                out
            }
            ParametricMargin::Bernoulli { p } => vec![1.0 - p, p],
            ParametricMargin::ZeroInflatedNormal { p0, .. } => vec![p0],
        }
    }

    /// V_n diagnostic at sample size n.
    pub fn vn(&self, n: usize) -> f64 {
        vn_from_jumps(&self.jumps(), n)
    }
}

fn check_column(column: &[f64]) -> Result<()> {
    if column.is_empty() {
        return Err(Error::Data("empty column".into()));
    }
    if column.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite value in column".into()));
    }
    Ok(())
}

/// V_n = n * sum_x dF(x) (1 - dF(x))^(n-1): the expected number of sample
/// points that sit on an atom yet appear exactly once. Bounded in n for
/// margins whose small jumps have controlled total mass; large values warn
/// that single occurrences of atoms will be mistaken for continuous points.
pub fn vn_from_jumps(jumps: &[f64], n: usize) -> f64 {
    n as f64
        * jumps
            .iter()
            .map(|&p| p * (1.0 - p).powi(n as i32 - 1))
            .sum::<f64>()
}

// ---------------------------------------------------------------- facade

/// Either kind of margin behind one interface.
#[derive(Clone, Debug)]
pub enum Margin {
    Empirical(EmpiricalMargin),
    Parametric(ParametricMargin),
}

impl Margin {
    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            Margin::Empirical(m) => m.eval(y),
            Margin::Parametric(m) => m.cdf(y),
        }
    }

    pub fn cdf_left(&self, y: f64) -> f64 {
        match self {
            Margin::Empirical(m) => m.eval_left(y),
            Margin::Parametric(m) => m.cdf_left(y),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Margin::Empirical(m) => m.quantile(u),
            Margin::Parametric(m) => m.quantile(u),
        }
    }

    pub fn pseudo(&self, y: f64, mode: AtomMode) -> Result<PseudoCoord> {
        match self {
            Margin::Empirical(m) => m.pseudo(y, mode),
            Margin::Parametric(m) => Ok(m.pseudo(y)),
        }
    }

    pub fn vn(&self, n: usize) -> f64 {
        match self {
            Margin::Empirical(m) => m.vn(),
            Margin::Parametric(m) => m.vn(n),
        }
    }
}

/// Margin-transform every row of a column-major data set.
pub fn pseudo_observations(
    columns: &[Vec<f64>],
    margins: &[Margin],
    mode: AtomMode,
) -> Result<Vec<PseudoRow>> {
    if columns.len() != margins.len() {
        return Err(Error::Config(format!(
            "{} columns but {} margins",
            columns.len(),
            margins.len()
        )));
    }
    let n = columns.first().map_or(0, Vec::len);
    if n == 0 || columns.iter().any(|c| c.len() != n) {
        return Err(Error::Data("columns empty or of unequal length".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(columns.len());
        for (c, m) in columns.iter().zip(margins) {
            row.push(m.pseudo(c[i], mode)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_eval_matches_definition() {
        let m = EmpiricalMargin::fit(&[1.2, 3.4, 2.2]).unwrap();
        assert_eq!(m.eval(1.2), 0.25);
        assert_eq!(m.eval(2.2), 0.5);
        assert_eq!(m.eval(3.4), 0.75);
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(99.0), 0.75);

        let t = EmpiricalMargin::fit(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.eval(1.0), 0.5);
        assert_eq!(t.eval_left(1.0), 0.0);
        assert_eq!(t.eval(2.0), 0.75);
        assert_eq!(t.eval_left(2.0), 0.5);
    }

    #[test]
    fn empirical_never_reaches_one() {
        let mut rng = crate::numeric::stats::stream_rng(3, 0);
        let col: Vec<f64> = (0..100)
            .map(|_| (rand::Rng::random::<f64>(&mut rng) * 12.0).floor())
            .collect();
        let m = EmpiricalMargin::fit(&col).unwrap();
        let top = col.iter().cloned().fold(f64::MIN, f64::max);
        assert!((m.eval(top) - 100.0 / 101.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_rejects_bad_input() {
        assert!(matches!(EmpiricalMargin::fit(&[]), Err(Error::Data(_))));
        assert!(matches!(EmpiricalMargin::fit(&[1.0, f64::NAN]), Err(Error::Data(_))));
    }

    #[test]
    fn atom_modes_follow_declaration_and_multiplicity() {
        let m = EmpiricalMargin::fit_with_atoms(&[0.0, 0.0, 0.3, 1.7], &[0.0]).unwrap();
        assert!(m.is_atom(0.0, AtomMode::Informed).unwrap());
        assert!(!m.is_atom(0.3, AtomMode::Informed).unwrap());
        assert!(m.is_atom(0.0, AtomMode::NonInformed).unwrap());
        assert!(!m.is_atom(0.3, AtomMode::NonInformed).unwrap());

        // an atom observed only once: informed still flags it, blind counting cannot
        let single = EmpiricalMargin::fit_with_atoms(&[0.0, 0.4, 1.1], &[0.0]).unwrap();
        assert!(single.is_atom(0.0, AtomMode::Informed).unwrap());
        assert!(!single.is_atom(0.0, AtomMode::NonInformed).unwrap());

        let undeclared = EmpiricalMargin::fit(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            undeclared.is_atom(1.0, AtomMode::Informed),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn pseudo_rows_for_bernoulli_column() {
        let cols = vec![vec![0.0, 0.0, 1.0]];
        let m = Margin::Empirical(
            EmpiricalMargin::fit_with_atoms(&cols[0], &[0.0, 1.0]).unwrap(),
        );
        let rows = pseudo_observations(&cols, &[m], AtomMode::Informed).unwrap();
        assert_eq!(rows[0][0], PseudoCoord { u: 0.5, u_minus: 0.0, is_atom: true });
        assert_eq!(rows[1][0], PseudoCoord { u: 0.5, u_minus: 0.0, is_atom: true });
        assert_eq!(rows[2][0], PseudoCoord { u: 0.75, u_minus: 0.5, is_atom: true });
    }

    #[test]
    fn continuous_pseudo_observations_are_scaled_ranks() {
        let col = vec![2.5, -1.0, 0.3, 9.0, 4.4];
        let m = Margin::Empirical(EmpiricalMargin::fit(&col).unwrap());
        let rows = pseudo_observations(&[col.clone()], &[m], AtomMode::NonInformed).unwrap();
        let mut us: Vec<f64> = rows.iter().map(|r| r[0].u).collect();
        us.sort_by(f64::total_cmp);
        for (k, u) in us.iter().enumerate() {
            assert!((u - (k + 1) as f64 / 6.0).abs() < 1e-15);
        }
        assert!(rows.iter().all(|r| !r[0].is_atom && r[0].u_minus < r[0].u));
    }

    #[test]
    fn quantile_examples() {
        let m = EmpiricalMargin::fit(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.quantile(0.6), 2.0);
        assert_eq!(m.quantile(0.4), 1.0);

        let p = ParametricMargin::Poisson { lambda: 5.0 };
        assert_eq!(p.quantile(0.5), 5.0);
        // brute-force check of the crossing
        assert!(p.cdf(4.0) < 0.5 && p.cdf(5.0) >= 0.5);

        let n01 = ParametricMargin::Normal { mean: 0.0, sd: 1.0 };
        assert!((n01.quantile(0.975) - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn generalized_inverse_property() {
        let col = vec![3.0, 1.0, 3.0, 7.5, 2.0, 3.0, 9.0];
        let m = EmpiricalMargin::fit(&col).unwrap();
        // the rescaled ecdf tops out at n/(n+1), so the inverse property
        // holds on (0, n/(n+1)]
        for k in 1..20 {
            let u = k as f64 / 20.0 * 7.0 / 8.0;
            assert!(m.eval(m.quantile(u)) >= u - 1e-15, "u={u}");
        }
        // right-continuity on support points
        for &y in m.support() {
            assert!((m.eval(y + 1e-12) - m.eval(y)).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_cdf_and_left_limits() {
        let p = ParametricMargin::Poisson { lambda: 10.0 };
        let c9 = p.cdf(9.0);
        assert!((p.cdf_left(10.0) - c9).abs() < 1e-14);
        assert!((p.cdf(10.0) - c9 - poisson_pmf(10.0, 10)).abs() < 1e-14);
        assert_eq!(p.cdf(9.5), c9);
        assert!(p.is_atom_value(3.0) && !p.is_atom_value(3.5));
    }

    #[test]
    fn zero_inflated_margin_matches_closed_form() {
        let z = ParametricMargin::ZeroInflatedNormal { p0: 0.05, mean: 0.0, sd: 1.0 };
        assert_eq!(z.cdf(0.0), 0.05);
        assert_eq!(z.cdf_left(0.0), 0.0);
        let x = 1.3;
        let want = 0.05 + 0.95 * (2.0 * norm_cdf(x) - 1.0);
        assert!((z.cdf(x) - want).abs() < 1e-15);
        // quantile inverts the cdf above the atom and pins it below
        assert_eq!(z.quantile(0.03), 0.0);
        for u in [0.2, 0.6, 0.97] {
            assert!((z.cdf(z.quantile(u)) - u).abs() < 1e-12);
        }
        let pc = z.pseudo(0.0);
        assert!(pc.is_atom && pc.u == 0.05 && pc.u_minus == 0.0);
    }

    #[test]
    fn mle_fits_recover_parameters() {
        let mut rng = crate::numeric::stats::stream_rng(11, 0);
        use rand_distr::{Distribution, Normal, Poisson};
        let nd = Normal::new(2.0, 3.0).unwrap();
        let col: Vec<f64> = (0..4000).map(|_| nd.sample(&mut rng)).collect();
        match ParametricMargin::fit_normal(&col).unwrap() {
            ParametricMargin::Normal { mean, sd } => {
                assert!((mean - 2.0).abs() < 0.15 && (sd - 3.0).abs() < 0.15);
            }
            _ => unreachable!(),
        }
        let pd = Poisson::new(5.0).unwrap();
        let col: Vec<f64> = (0..4000).map(|_| pd.sample(&mut rng)).collect();
        match ParametricMargin::fit_poisson(&col).unwrap() {
            ParametricMargin::Poisson { lambda } => assert!((lambda - 5.0).abs() < 0.15),
            _ => unreachable!(),
        }
        assert!(ParametricMargin::fit_poisson(&[1.5, 2.0]).is_err());
        match ParametricMargin::fit_bernoulli(&[0.0, 0.0, 1.0, 1.0, 1.0]).unwrap() {
            ParametricMargin::Bernoulli { p } => assert_eq!(p, 0.6),
            _ => unreachable!(),
        }
    }

    #[test]
    fn vn_bernoulli_closed_form() {
        let b = ParametricMargin::Bernoulli { p: 0.5 };
        assert!((b.vn(10) - 10.0 / 512.0).abs() < 1e-15);
        let c = ParametricMargin::Normal { mean: 0.0, sd: 1.0 };
        assert_eq!(c.vn(50), 0.0);
    }

    #[test]
    fn vn_geometric_is_bounded() {
        // jump sizes p(1-p)^k; the tail-mass condition holds with C = 1/p
        // (sum of jumps below a is (1-p)^{i0} < a/p), so V_n stays under
        // (1/p)/(1 - 1/e)^2 uniformly in n
        for p in [0.2, 0.5, 0.8] {
            let mut jumps = Vec::new();
            let mut q = 1.0;
            while p * q > 1e-300 {
                jumps.push(p * q);
                q *= 1.0 - p;
            }
            let cap = (1.0 / p) / (1.0 - (-1.0f64).exp()).powi(2);
            let mut prev = None;
            for n in [100usize, 1_000, 10_000] {
                let v = vn_from_jumps(&jumps, n);
                assert!(v < cap, "p={p} n={n}: V_n={v} exceeds {cap}");
                if let Some(pv) = prev {
                    // boundedness in n: consecutive decades stay within 5%
                    let rel: f64 = (v - pv) / pv;
                    assert!(rel.abs() < 0.05, "p={p}: V_n drifts {pv} -> {v}");
                }
                prev = Some(v);
            }
        }
    }

    #[test]
    fn empirical_vn_counts_only_atoms() {
        let m = EmpiricalMargin::fit(&[1.0, 1.0, 1.0, 2.0, 3.0]).unwrap();
        // only the triple counts as an atom; jump 3/5 at n=5
        let want = 5.0 * 0.6 * 0.4f64.powi(4);
        assert!((m.vn() - want).abs() < 1e-15);
    }
}
