//! Parameter estimation: maximize a pseudo log-likelihood over the family's
//! parameter box by derivative-free simplex search in an unconstrained
//! reparameterization, with moment-based multistarts. Includes the Bernoulli
//! population-limit demonstration and an approximate resampling standard
//! error.

use rayon::prelude::*;

use crate::copulas::{tau_inverse, CopulaSpec, Family};
use crate::error::{Error, Result};
use crate::identifiability::qn_for_rows;
use crate::likelihood::{Evaluator, LikelihoodConfig, LikelihoodKind};
use crate::margins::{pseudo_observations, AtomMode, EmpiricalMargin, Margin, PseudoRow};
use crate::numeric::optim::{golden_min, nelder_mead, NmOptions};
use crate::numeric::stats::{kendall_tau, stream_rng};
use rand::Rng;

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub kind: LikelihoodKind,
    pub max_iter: usize,
    /// Simplex diameter threshold in transformed space.
    pub tol: f64,
    pub n_starts: usize,
    pub seed: u64,
    /// Degrees-of-freedom values profiled for the Student family; None means
    /// the integers 1..=50. A single value pins nu as known.
    pub student_nu_grid: Option<Vec<f64>>,
    /// Skip the p <= q_n identifiability pre-check.
    pub waive_identifiability: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            kind: LikelihoodKind::Informed,
            max_iter: 2000,
            tol: 1e-7,
            n_starts: 3,
            seed: 0,
            student_nu_grid: None,
            waive_identifiability: false,
        }
    }
}

/// One optimizer start: where it began, where it ended, and how.
#[derive(Clone, Debug)]
pub struct StartRecord {
    pub theta0: Vec<f64>,
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub evals: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub family: Family,
    pub theta_hat: Vec<f64>,
    pub loglik: f64,
    pub tau_hat: f64,
    pub converged: bool,
    pub n_evals: usize,
    /// Rows whose likelihood term was non-positive at the optimum; a
    /// non-zero count taints the fit.
    pub penalty_hits: usize,
    pub starts: Vec<StartRecord>,
}

// ------------------------------------------------------------- transforms

/// Unconstrained reparameterizations per family: log for the half-open
/// boxes, a shifted log for Gumbel, identity for Frank, and a scaled logit
/// for correlations.
#[derive(Clone, Copy)]
enum Xform {
    Ln,
    LnShift1,
    Identity,
    LogisticRho,
}

impl Xform {
    fn for_family(family: Family) -> Xform {
        match family {
            Family::Clayton | Family::Plackett => Xform::Ln,
            Family::Gumbel => Xform::LnShift1,
            Family::Frank => Xform::Identity,
            Family::Gaussian | Family::Student => Xform::LogisticRho,
        }
    }

    fn to_param(self, z: f64) -> f64 {
        match self {
            Xform::Ln => z.exp(),
            Xform::LnShift1 => 1.0 + z.exp(),
            Xform::Identity => z,
            Xform::LogisticRho => (0.5 * z).tanh(),
        }
    }

    fn from_param(self, t: f64) -> f64 {
        match self {
            Xform::Ln => t.ln(),
            Xform::LnShift1 => (t - 1.0).ln(),
            Xform::Identity => t,
            Xform::LogisticRho => (t.atanh()) * 2.0,
        }
    }
}

/// Moment start: invert the sample Kendall tau, clamped into the family's
/// usable range so the transform stays finite. The Frank extension beyond
/// two dimensions only admits positive association, so the start is clamped
/// positive there.
fn moment_start(family: Family, tau: f64, nu: Option<f64>, dim: usize) -> f64 {
    let t = match family {
        Family::Clayton | Family::Gumbel => tau.clamp(0.02, 0.92),
        Family::Frank if dim > 2 => tau.clamp(0.02, 0.92),
        Family::Frank | Family::Plackett => {
            let c = tau.clamp(-0.92, 0.92);
            if c.abs() < 0.01 {
                0.01f64.copysign(if c == 0.0 { 1.0 } else { c })
            } else {
                c
            }
        }
        Family::Gaussian | Family::Student => tau.clamp(-0.95, 0.95),
    };
    tau_inverse(family, t, nu).expect("clamped tau is invertible")[0]
}

/// Average pairwise Kendall tau of the margin-transformed coordinates
/// (monotone in the data, so it equals the raw-data version, ties included).
fn mean_pairwise_tau(rows: &[PseudoRow]) -> f64 {
    let d = rows[0].len();
    let cols: Vec<Vec<f64>> =
        (0..d).map(|j| rows.iter().map(|r| r[j].u).collect()).collect();
    let mut acc = 0.0;
    let mut pairs = 0usize;
    for k in 0..d {
        for l in (k + 1)..d {
            acc += kendall_tau(&cols[k], &cols[l]);
            pairs += 1;
        }
    }
    acc / pairs as f64
}

// -------------------------------------------------------------------- fit

/// Fit from raw columns. Informed kinds require a declared atom list per
/// column (possibly empty for continuous columns).
pub fn fit(
    family: Family,
    columns: &[Vec<f64>],
    atoms: Option<&[Vec<f64>]>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let informed = matches!(
        opts.kind,
        LikelihoodKind::Informed | LikelihoodKind::CompositeInformed
    );
    let margins: Vec<Margin> = if informed {
        let atoms = atoms.ok_or_else(|| {
            Error::Config("informed fits need declared atom sets per column".into())
        })?;
        if atoms.len() != columns.len() {
            return Err(Error::Config(format!(
                "{} atom lists for {} columns",
                atoms.len(),
                columns.len()
            )));
        }
        columns
            .iter()
            .zip(atoms)
            .map(|(c, a)| Ok(Margin::Empirical(EmpiricalMargin::fit_with_atoms(c, a)?)))
            .collect::<Result<_>>()?
    } else {
        columns
            .iter()
            .map(|c| Ok(Margin::Empirical(EmpiricalMargin::fit(c)?)))
            .collect::<Result<_>>()?
    };
    let mode = if informed { AtomMode::Informed } else { AtomMode::NonInformed };
    let rows = pseudo_observations(columns, &margins, mode)?;
    fit_rows(family, &rows, opts)
}

/// Fit from pre-built pseudo-observation rows (for parametric margins or
/// externally transformed data).
pub fn fit_rows(family: Family, rows: &[PseudoRow], opts: &FitOptions) -> Result<FitResult> {
    if rows.is_empty() {
        return Err(Error::Data("no rows".into()));
    }
    let p = family.param_count();
    if !opts.waive_identifiability {
        let q_n = qn_for_rows(rows);
        if p > q_n {
            return Err(Error::NotIdentifiable { p, q_n });
        }
    }
    let mut ev = Evaluator::new(family, rows, LikelihoodConfig::new(opts.kind))?;
    let tau = mean_pairwise_tau(rows);
    // composite blocks are bivariate, so the parameter only has to be valid
    // in two dimensions there
    let block_dim = if opts.kind.is_composite() { 2 } else { rows[0].len() };

    let starts = if family == Family::Student {
        let grid: Vec<f64> = match &opts.student_nu_grid {
            Some(g) if g.is_empty() => {
                return Err(Error::Config("empty degrees-of-freedom grid".into()))
            }
            Some(g) => g.clone(),
            None => (1..=50).map(|k| k as f64).collect(),
        };
        let mut all = Vec::new();
        for &nu in &grid {
            all.extend(run_starts(&mut ev, family, tau, Some(nu), block_dim, opts));
        }
        all
    } else {
        run_starts(&mut ev, family, tau, None, block_dim, opts)
    };

    let n_evals: usize = starts.iter().map(|s| s.evals).sum();
    let best = starts
        .iter()
        .filter(|s| s.loglik.is_finite())
        .max_by(|a, b| {
            a.loglik.total_cmp(&b.loglik).then_with(|| {
                let na: f64 = a.theta.iter().map(|t| t * t).sum();
                let nb: f64 = b.theta.iter().map(|t| t * t).sum();
                nb.total_cmp(&na)
            })
        })
        .cloned()
        .ok_or_else(|| Error::NonConvergence("every start failed to evaluate".into()))?;

    if !starts.iter().any(|s| s.converged) {
        return Err(Error::NonConvergence(format!(
            "no start converged in {} iterations; best so far theta = {:?}, loglik = {:.6}",
            opts.max_iter, best.theta, best.loglik
        )));
    }

    // re-evaluate at the winner for the penalty diagnostic; the implied tau
    // is a bivariate property of the parameter
    let at_best = ev.loglik(&best.theta)?;
    let spec = CopulaSpec::new(family, 2, &best.theta)?;
    Ok(FitResult {
        family,
        theta_hat: best.theta.clone(),
        loglik: at_best.value,
        tau_hat: spec.tau(),
        converged: best.converged,
        n_evals: n_evals + 1,
        penalty_hits: at_best.penalty_hits,
        starts,
    })
}

/// Run the multistart simplex search for one scalar free parameter (the
/// correlation when `fixed_nu` is set, the family parameter otherwise).
fn run_starts(
    ev: &mut Evaluator,
    family: Family,
    tau: f64,
    fixed_nu: Option<f64>,
    block_dim: usize,
    opts: &FitOptions,
) -> Vec<StartRecord> {
    let xf = Xform::for_family(family);
    let theta0 = moment_start(family, tau, fixed_nu, block_dim);
    let z0 = xf.from_param(theta0);
    let make_theta = |z: f64| -> Vec<f64> {
        let t = xf.to_param(z);
        match fixed_nu {
            Some(nu) => vec![t, nu],
            None => vec![t],
        }
    };
    // the spread criterion must not preempt the requested parameter
    // precision, so it scales quadratically with it
    let nm_opts = NmOptions {
        max_iter: opts.max_iter,
        xtol: opts.tol,
        ftol: (opts.tol * opts.tol).min(1e-10),
        step: 0.25,
    };
    let mut out = Vec::with_capacity(opts.n_starts);
    for s in 0..opts.n_starts {
        let z_start = if s == 0 {
            z0
        } else {
            let mut rng = stream_rng(opts.seed, s as u64);
            z0 + rng.random_range(-0.25..0.25)
        };
        let mut objective = |z: &[f64]| -> f64 {
            let theta = make_theta(z[0]);
            match ev.loglik(&theta) {
                Ok(v) => -v.value,
                Err(_) => f64::INFINITY,
            }
        };
        let r = nelder_mead(&mut objective, &[z_start], &nm_opts);
        out.push(StartRecord {
            theta0: make_theta(z_start),
            theta: make_theta(r.x[0]),
            loglik: -r.f,
            converged: r.converged,
            evals: r.evals,
        });
    }
    out
}

// ---------------------------------------------------- resampling SE

/// Approximate standard errors by resampling rows with replacement and
/// refitting. This is plumbing, not an asymptotically justified interval;
/// refits that fail are skipped (their count is returned alongside).
pub fn bootstrap_se(
    family: Family,
    rows: &[PseudoRow],
    opts: &FitOptions,
    n_boot: usize,
    seed: u64,
) -> Result<(Vec<f64>, usize)> {
    if n_boot < 2 {
        return Err(Error::Config("need at least two resamples".into()));
    }
    let n = rows.len();
    let estimates: Vec<Option<Vec<f64>>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, 10_000 + b as u64);
            let resample: Vec<PseudoRow> =
                (0..n).map(|_| rows[rng.random_range(0..n)].clone()).collect();
            fit_rows(family, &resample, opts).ok().map(|f| f.theta_hat)
        })
        .collect();
    let ok: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
    let failures = n_boot - ok.len();
    if ok.len() < 2 {
        return Err(Error::NonConvergence(format!(
            "{failures} of {n_boot} resample fits failed"
        )));
    }
    let p = ok[0].len();
    let mut se = Vec::with_capacity(p);
    for i in 0..p {
        let vals: Vec<f64> = ok.iter().map(|t| t[i]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (vals.len() - 1) as f64;
        se.push(var.sqrt());
    }
    Ok((se, failures))
}

// ------------------------------------------- population-limit demonstration

/// The two large-sample objectives for bivariate Bernoulli(1/2) data tied by
/// a Clayton copula with parameter 2, evaluated on a theta grid, plus their
/// maximizers. The density-only objective peaks far from the truth (near
/// 4.94); the atom-aware objective peaks at 2 exactly. `curve` rows are
/// (theta, naive value, atom-aware value).
#[derive(Clone, Debug)]
pub struct PopulationDemo {
    pub naive_argmax: f64,
    pub informed_argmax: f64,
    pub curve: Vec<(f64, f64, f64)>,
}

fn clayton_cdf_half(theta: f64) -> f64 {
    // C(1/2, 1/2) for Clayton
    (2f64.powf(theta) * 2.0 - 1.0).powf(-1.0 / theta)
}

fn naive_limit(theta: f64) -> f64 {
    // cells (0,0) -> (1/2,1/2); (0,1),(1,0) -> (1/2,1); (1,1) -> (1,1);
    // the density at v = 1 degenerates to (1+theta) u^theta
    let h = 7f64.sqrt().recip();
    let s = 2f64.powf(theta + 1.0) - 1.0;
    let c_mm = (1.0 + theta) * 2f64.powf(2.0 * (theta + 1.0)) * s.powf(-1.0 / theta - 2.0);
    let c_m1 = (1.0 + theta) * 0.5f64.powf(theta);
    let c_11 = 1.0 + theta;
    h * c_mm.ln() + 2.0 * (0.5 - h) * c_m1.ln() + h * c_11.ln()
}

fn informed_limit(theta: f64) -> f64 {
    let h = 7f64.sqrt().recip();
    let c = clayton_cdf_half(theta);
    2.0 * h * c.ln() + 2.0 * (0.5 - h) * (0.5 - c).ln()
}

pub fn population_limit_demo() -> PopulationDemo {
    let (naive_argmax, _) = golden_min(&mut |t: f64| -naive_limit(t), 0.01, 20.0, 1e-10);
    let (informed_argmax, _) = golden_min(&mut |t: f64| -informed_limit(t), 0.01, 20.0, 1e-10);
    let curve: Vec<(f64, f64, f64)> = (1..=1000)
        .map(|k| {
            let t = 0.02 * k as f64;
            (t, naive_limit(t), informed_limit(t))
        })
        .collect();
    PopulationDemo { naive_argmax, informed_argmax, curve }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::sampling;
    use crate::numeric::roots::brent;

    fn continuous_rows(family: Family, theta: &[f64], n: usize, seed: u64) -> Vec<PseudoRow> {
        let spec = CopulaSpec::new(family, 2, theta).unwrap();
        let mut rng = stream_rng(seed, 0);
        let sample = sampling::sample(&spec, n, &mut rng);
        let cols: Vec<Vec<f64>> =
            (0..2).map(|j| sample.iter().map(|r| r[j]).collect()).collect();
        let margins: Vec<Margin> = cols
            .iter()
            .map(|c| Margin::Empirical(EmpiricalMargin::fit(c).unwrap()))
            .collect();
        pseudo_observations(&cols, &margins, AtomMode::NonInformed).unwrap()
    }

    #[test]
    fn population_limits_peak_where_expected() {
        let demo = population_limit_demo();
        assert!((demo.naive_argmax - 4.9439).abs() < 0.01, "{}", demo.naive_argmax);
        assert!((demo.informed_argmax - 2.0).abs() < 1e-3, "{}", demo.informed_argmax);
        assert!(naive_limit(2.0) < naive_limit(demo.naive_argmax));
        assert_eq!(demo.curve.len(), 1000);
        // curve columns actually are the two objectives
        let (t, lnv, li) = demo.curve[99];
        assert!((t - 2.0).abs() < 1e-12);
        assert!((lnv - naive_limit(2.0)).abs() < 1e-12);
        assert!((li - informed_limit(2.0)).abs() < 1e-12);
    }

    #[test]
    fn transforms_round_trip() {
        for (xf, vals) in [
            (Xform::Ln, vec![0.3, 2.0, 25.0]),
            (Xform::LnShift1, vec![1.01, 2.5, 40.0]),
            (Xform::Identity, vec![-5.0, 0.1, 7.0]),
            (Xform::LogisticRho, vec![-0.9, 0.0, 0.7]),
        ] {
            for t in vals {
                let z = xf.from_param(t);
                assert!((xf.to_param(z) - t).abs() < 1e-12, "{t}");
            }
        }
    }

    #[test]
    fn clayton_fit_recovers_tau_on_continuous_data() {
        let rows = continuous_rows(Family::Clayton, &[2.0], 400, 42);
        let fit = fit_rows(Family::Clayton, &rows, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.penalty_hits, 0);
        assert!((fit.tau_hat - 0.5).abs() < 0.08, "tau_hat = {}", fit.tau_hat);
        // the reported loglik is the likelihood at theta_hat
        let spec = CopulaSpec::new(Family::Clayton, 2, &fit.theta_hat).unwrap();
        let direct = crate::likelihood::noninformed_loglik(&spec, &rows).unwrap();
        assert!((fit.loglik - direct.value).abs() < 1e-12);
        assert!((fit.tau_hat - spec.tau()).abs() < 1e-15);
    }

    #[test]
    fn informed_and_naive_agree_on_continuous_data() {
        let rows = continuous_rows(Family::Frank, &[5.0], 300, 7);
        let a = fit_rows(
            Family::Frank,
            &rows,
            &FitOptions { kind: LikelihoodKind::Informed, ..Default::default() },
        )
        .unwrap();
        let b = fit_rows(
            Family::Frank,
            &rows,
            &FitOptions { kind: LikelihoodKind::Naive, ..Default::default() },
        )
        .unwrap();
        assert!((a.theta_hat[0] - b.theta_hat[0]).abs() < 1e-8);
    }

    #[test]
    fn fits_are_deterministic() {
        let rows = continuous_rows(Family::Gaussian, &[0.6], 200, 3);
        let opts = FitOptions { seed: 11, ..Default::default() };
        let a = fit_rows(Family::Gaussian, &rows, &opts).unwrap();
        let b = fit_rows(Family::Gaussian, &rows, &opts).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.loglik, b.loglik);
        assert_eq!(a.n_evals, b.n_evals);
    }

    #[test]
    fn multistart_agrees_on_unimodal_objectives() {
        let rows = continuous_rows(Family::Gumbel, &[2.0], 250, 9);
        let fit = fit_rows(Family::Gumbel, &rows, &FitOptions::default()).unwrap();
        let thetas: Vec<f64> = fit
            .starts
            .iter()
            .filter(|s| s.converged)
            .map(|s| s.theta[0])
            .collect();
        assert!(thetas.len() >= 2);
        for t in &thetas {
            assert!((t - fit.theta_hat[0]).abs() < 1e-4, "{t} vs {}", fit.theta_hat[0]);
        }
    }

    #[test]
    fn student_profile_picks_known_nu_when_pinned() {
        let rows = continuous_rows(Family::Student, &[0.5, 5.0], 150, 13);
        let opts = FitOptions {
            student_nu_grid: Some(vec![5.0]),
            ..Default::default()
        };
        let fit = fit_rows(Family::Student, &rows, &opts).unwrap();
        assert_eq!(fit.theta_hat[1], 5.0);
        assert!((fit.theta_hat[0] - 0.5).abs() < 0.12, "rho = {}", fit.theta_hat[0]);
        // a small profile grid picks the best nu by likelihood
        let opts =
            FitOptions { student_nu_grid: Some(vec![2.0, 5.0, 30.0]), ..Default::default() };
        let prof = fit_rows(Family::Student, &rows, &opts).unwrap();
        assert!(prof.loglik >= fit.loglik - 1e-9);
    }

    #[test]
    fn student_on_bernoulli_data_is_rejected_up_front() {
        let c1: Vec<f64> = (0..40).map(|i| f64::from(i % 2 == 0)).collect();
        let c2: Vec<f64> = (0..40).map(|i| f64::from(i % 3 == 0)).collect();
        let err = fit(
            Family::Student,
            &[c1, c2],
            None,
            &FitOptions { kind: LikelihoodKind::NonInformed, ..Default::default() },
        )
        .unwrap_err();
        match err {
            Error::NotIdentifiable { p, q_n } => {
                assert_eq!((p, q_n), (2, 1));
            }
            other => panic!("expected NotIdentifiable, got {other:?}"),
        }
    }

    #[test]
    fn bernoulli_informed_fit_matches_cdf_root() {
        // with parametric Bernoulli margins the likelihood peaks exactly
        // where the copula cdf at the zero-cell proportions equals the
        // observed (0,0) frequency
        let mut rng = stream_rng(31, 2);
        let spec = CopulaSpec::new(Family::Clayton, 2, &[2.0]).unwrap();
        let u = sampling::sample(&spec, 400, &mut rng);
        let c1: Vec<f64> = u.iter().map(|r| f64::from(r[0] > 0.45)).collect();
        let c2: Vec<f64> = u.iter().map(|r| f64::from(r[1] > 0.55)).collect();
        let margins = vec![
            Margin::Parametric(crate::margins::ParametricMargin::fit_bernoulli(&c1).unwrap()),
            Margin::Parametric(crate::margins::ParametricMargin::fit_bernoulli(&c2).unwrap()),
        ];
        let rows =
            pseudo_observations(&[c1.clone(), c2.clone()], &margins, AtomMode::Informed)
                .unwrap();
        let fit = fit_rows(Family::Clayton, &rows, &FitOptions::default()).unwrap();

        let n = c1.len() as f64;
        let p1 = c1.iter().filter(|&&x| x == 0.0).count() as f64 / n;
        let p2 = c2.iter().filter(|&&x| x == 0.0).count() as f64 / n;
        let h00 = c1
            .iter()
            .zip(&c2)
            .filter(|(&a, &b)| a == 0.0 && b == 0.0)
            .count() as f64
            / n;
        let root = brent(
            &mut |t: f64| {
                CopulaSpec::new(Family::Clayton, 2, &[t]).unwrap().cdf(&[p1, p2]) - h00
            },
            0.05,
            25.0,
            1e-12,
        )
        .unwrap();
        assert!(
            (fit.theta_hat[0] - root).abs() < 1e-6,
            "{} vs {root}",
            fit.theta_hat[0]
        );
    }

    #[test]
    fn bootstrap_se_is_positive_and_modest() {
        let rows = continuous_rows(Family::Gaussian, &[0.5], 120, 17);
        let (se, failures) =
            bootstrap_se(Family::Gaussian, &rows, &FitOptions::default(), 12, 99).unwrap();
        assert_eq!(failures, 0);
        assert!(se[0] > 0.005 && se[0] < 0.3, "se = {}", se[0]);
    }
}
