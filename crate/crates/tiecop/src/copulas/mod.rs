//! Copula families and the shared evaluation interface.
//!
//! All families expose cdf, mixed partials with respect to any coordinate
//! subset, density, Kendall tau (and its inverse), parameter gradients and
//! sampling through [`CopulaSpec`]. Evaluation follows three rules:
//!
//! 1. a coordinate equal to 0 forces C (and any partial not taken in that
//!    coordinate) to 0;
//! 2. coordinates equal to 1 are dropped, reducing the effective dimension;
//! 3. remaining interior coordinates are clamped to [1e-10, 1 - 1e-10]
//!    before any formula or quadrature runs.

pub mod archimedean;
pub mod elliptical;
pub mod plackett;
pub mod sampling;

use crate::error::{Error, Result};
use crate::numeric::quad::{adaptive_gk, gl_unit_square};
use crate::numeric::special::{norm_ppf, t_ppf};
use serde::{Deserialize, Serialize};

use archimedean as arch;
use elliptical as ell;

pub(crate) const EPS_U: f64 = 1e-10;
const FRANK_INDEP_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Clayton,
    Frank,
    Gumbel,
    Plackett,
    Gaussian,
    Student,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Clayton,
        Family::Frank,
        Family::Gumbel,
        Family::Plackett,
        Family::Gaussian,
        Family::Student,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Clayton => "clayton",
            Family::Frank => "frank",
            Family::Gumbel => "gumbel",
            Family::Plackett => "plackett",
            Family::Gaussian => "gaussian",
            Family::Student => "student",
        }
    }

    pub fn param_count(self) -> usize {
        if self == Family::Student { 2 } else { 1 }
    }

    /// Parameter boxes as (lo, hi) pairs. Only the Gumbel lower endpoint is
    /// attainable; everything else is open.
    pub fn param_bounds(self) -> Vec<(f64, f64)> {
        match self {
            Family::Clayton => vec![(0.0, 28.0)],
            Family::Frank => vec![(-345.0, 345.0)],
            Family::Gumbel => vec![(1.0, 50.0)],
            Family::Plackett => vec![(0.0, 1e7)],
            Family::Gaussian => vec![(-1.0, 1.0)],
            Family::Student => vec![(-1.0, 1.0), (0.0, 1e3)],
        }
    }

    pub fn is_archimedean(self) -> bool {
        matches!(self, Family::Clayton | Family::Frank | Family::Gumbel)
    }

    /// Families limited to the bivariate case.
    pub fn bivariate_only(self) -> bool {
        matches!(self, Family::Plackett | Family::Gaussian | Family::Student)
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s.to_ascii_lowercase().as_str() {
            "clayton" => Ok(Family::Clayton),
            "frank" => Ok(Family::Frank),
            "gumbel" => Ok(Family::Gumbel),
            "plackett" => Ok(Family::Plackett),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "student" | "t" => Ok(Family::Student),
            other => Err(Error::Config(format!("unknown copula family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully specified copula: family, dimension and parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: Family,
    pub dim: usize,
    pub theta: Vec<f64>,
}

pub fn validate_theta(family: Family, theta: &[f64]) -> Result<()> {
    if theta.len() != family.param_count() {
        return Err(Error::InvalidParameter(format!(
            "{} expects {} parameter(s), got {}",
            family,
            family.param_count(),
            theta.len()
        )));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(format!("{family} parameter not finite")));
    }
    let bounds = family.param_bounds();
    for (i, (&t, &(lo, hi))) in theta.iter().zip(&bounds).enumerate() {
        let ok = match (family, i) {
            (Family::Gumbel, 0) => t >= lo && t < hi,
            _ => t > lo && t < hi,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "{family} parameter {i} = {t} outside ({lo}, {hi})"
            )));
        }
    }
    Ok(())
}

impl CopulaSpec {
    pub fn new(family: Family, dim: usize, theta: &[f64]) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("dimension {dim} < 2")));
        }
        if dim > 2 && family.bivariate_only() {
            return Err(Error::Unsupported(format!(
                "{family} is only implemented for dimension 2"
            )));
        }
        validate_theta(family, theta)?;
        if family == Family::Frank && dim > 2 && theta[0] <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "frank with dimension {dim} requires a positive parameter"
            )));
        }
        Ok(CopulaSpec { family, dim, theta: theta.to_vec() })
    }

    fn th(&self) -> f64 {
        self.theta[0]
    }

    fn frank_indep(&self) -> bool {
        self.family == Family::Frank && self.th().abs() < FRANK_INDEP_TOL
    }

    /// Joint cdf.
    pub fn cdf(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let active: Vec<f64> = u
            .iter()
            .filter(|&&x| x < 1.0)
            .map(|&x| x.clamp(EPS_U, 1.0 - EPS_U))
            .collect();
        match active.len() {
            0 => 1.0,
            1 => active[0],
            _ => self.cdf_interior(&active),
        }
    }

    fn cdf_interior(&self, u: &[f64]) -> f64 {
        let t = self.th();
        match self.family {
            Family::Clayton => arch::clayton_cdf(t, u),
            Family::Frank => {
                if self.frank_indep() {
                    u.iter().product()
                } else {
                    arch::frank_cdf_d(t, u)
                }
            }
            Family::Gumbel => arch::gumbel_cdf(t, u),
            Family::Plackett => plackett::plackett_cdf(t, u[0], u[1]),
            Family::Gaussian => ell::gaussian_cdf2(t, u[0], u[1]),
            Family::Student => ell::student_cdf2(t, self.theta[1], u[0], u[1]),
        }
    }

    /// Mixed partial derivative of the cdf in the coordinates listed in `b`
    /// (sorted, distinct), evaluated at `u`. `b` empty returns the cdf and
    /// `b` covering every coordinate returns the density.
    pub fn partial_cdf(&self, u: &[f64], b: &[usize]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        debug_assert!(b.windows(2).all(|w| w[0] < w[1]));
        if b.is_empty() {
            return self.cdf(u);
        }
        // a zero coordinate outside b pins the cdf at 0 near u
        if u.iter().enumerate().any(|(j, &x)| x <= 0.0 && !b.contains(&j)) {
            return 0.0;
        }
        // differentiated coordinates are clamped into the interior; others
        // keep an exact 1.0 so the reduction rule stays exact
        let uc: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                if x >= 1.0 && !b.contains(&j) {
                    1.0
                } else {
                    x.clamp(EPS_U, 1.0 - EPS_U)
                }
            })
            .collect();
        if self.family.is_archimedean() {
            return self.arch_partial(&uc, b);
        }
        let t = self.th();
        let (u1, u2) = (uc[0], uc[1]);
        match self.family {
            Family::Plackett => match b {
                [0] => plackett::plackett_pd(t, u1, u2),
                [1] => plackett::plackett_pd(t, u2, u1),
                [0, 1] => plackett::plackett_density(t, u1, u2),
                _ => unreachable!(),
            },
            Family::Gaussian => match b {
                [0] if u2 >= 1.0 => 1.0,
                [0] => ell::gaussian_pd_x(t, norm_ppf(u2), norm_ppf(u1)),
                [1] if u1 >= 1.0 => 1.0,
                [1] => ell::gaussian_pd_x(t, norm_ppf(u1), norm_ppf(u2)),
                [0, 1] => ell::gaussian_density_x(t, norm_ppf(u1), norm_ppf(u2)),
                _ => unreachable!(),
            },
            Family::Student => {
                let nu = self.theta[1];
                match b {
                    [0] if u2 >= 1.0 => 1.0,
                    [0] => ell::student_pd_x(t, nu, t_ppf(u2, nu), t_ppf(u1, nu)),
                    [1] if u1 >= 1.0 => 1.0,
                    [1] => ell::student_pd_x(t, nu, t_ppf(u1, nu), t_ppf(u2, nu)),
                    [0, 1] => ell::student_density_x(t, nu, t_ppf(u1, nu), t_ppf(u2, nu)),
                    _ => unreachable!(),
                }
            }
            _ => unreachable!(),
        }
    }

    fn arch_partial(&self, u: &[f64], b: &[usize]) -> f64 {
        let t = self.th();
        if self.frank_indep() {
            return u
                .iter()
                .enumerate()
                .filter(|(j, _)| !b.contains(j))
                .map(|(_, &x)| x)
                .product();
        }
        let k = b.len();
        if k > 3 {
            // central finite difference on the last coordinate, recursing on
            // the analytic machinery once the order drops to 3
            let j = b[k - 1];
            let h = 1e-4_f64.min(0.25 * u[j].min(1.0 - u[j]));
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[j] = u[j] + h;
            dn[j] = u[j] - h;
            let rest = &b[..k - 1];
            return (self.arch_partial(&up, rest) - self.arch_partial(&dn, rest)) / (2.0 * h);
        }
        let (phi, phi_prime, psi_k): (
            fn(f64, f64) -> f64,
            fn(f64, f64) -> f64,
            fn(f64, f64, usize) -> f64,
        ) = match self.family {
            Family::Clayton => (arch::clayton_phi, arch::clayton_phi_prime, arch::clayton_psi_k),
            Family::Frank => (arch::frank_phi, arch::frank_phi_prime, arch::frank_psi_k),
            Family::Gumbel => (arch::gumbel_phi, arch::gumbel_phi_prime, arch::gumbel_psi_k),
            _ => unreachable!(),
        };
        let tsum: f64 = u.iter().map(|&x| phi(t, x)).sum();
        let mut out = psi_k(t, tsum, k);
        for &j in b {
            out *= phi_prime(t, u[j]);
        }
        out
    }

    /// Copula density (the order-d mixed partial).
    pub fn density(&self, u: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.dim).collect();
        self.partial_cdf(u, &all)
    }

    /// Gradient of the `b`-partial with respect to the parameter vector, by
    /// central differences. For the quadrature-backed elliptical cdf the two
    /// perturbed values are combined into a single adaptive integral of the
    /// integrand difference, which keeps the quotient accurate even where
    /// the centered integrand is flat.
    pub fn grad_theta(&self, u: &[f64], b: &[usize]) -> Result<Vec<f64>> {
        let bounds = self.family.param_bounds();
        let mut grad = Vec::with_capacity(self.theta.len());
        for i in 0..self.theta.len() {
            let ti = self.theta[i];
            let (lo, hi) = bounds[i];
            let mut h = 1e-6 * ti.abs().max(1.0);
            if ti - h <= lo || ti + h >= hi {
                h = 0.45 * (ti - lo).min(hi - ti);
                if !(h > 0.0) {
                    return Err(Error::StepSize(format!(
                        "parameter {i} = {ti} too close to a bound for a difference step"
                    )));
                }
            }
            let mut up = self.theta.clone();
            let mut dn = self.theta.clone();
            up[i] = ti + h;
            dn[i] = ti - h;
            let diff = if b.is_empty()
                && !self.family.is_archimedean()
                && self.family != Family::Plackett
            {
                self.elliptical_cdf_diff(u, &up, &dn)
            } else {
                let sp = CopulaSpec { family: self.family, dim: self.dim, theta: up };
                let sm = CopulaSpec { family: self.family, dim: self.dim, theta: dn };
                sp.partial_cdf(u, b) - sm.partial_cdf(u, b)
            };
            grad.push(diff / (2.0 * h));
        }
        Ok(grad)
    }

    /// cdf(up) - cdf(dn) for the elliptical families as one fused integral.
    /// Shortcut coordinates (0 or 1) bypass quadrature entirely.
    fn elliptical_cdf_diff(&self, u: &[f64], up: &[f64], dn: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) || u.iter().filter(|&&x| x < 1.0).count() < 2 {
            let sp = CopulaSpec { family: self.family, dim: self.dim, theta: up.to_vec() };
            let sm = CopulaSpec { family: self.family, dim: self.dim, theta: dn.to_vec() };
            return sp.cdf(u) - sm.cdf(u);
        }
        let u1 = u[0].clamp(EPS_U, 1.0 - EPS_U);
        let u2 = u[1].clamp(EPS_U, 1.0 - EPS_U);
        match self.family {
            Family::Gaussian => ell::gaussian_cdf_diff_rho(up[0], dn[0], u1, u2),
            Family::Student => ell::student_cdf_diff(up[0], up[1], dn[0], dn[1], u1, u2),
            _ => unreachable!(),
        }
    }

    /// Population Kendall tau implied by the parameters.
    pub fn tau(&self) -> f64 {
        match self.family {
            Family::Clayton => self.th() / (self.th() + 2.0),
            Family::Frank => frank_tau(self.th()),
            Family::Gumbel => 1.0 - 1.0 / self.th(),
            Family::Plackett => plackett_tau(self.th()),
            Family::Gaussian | Family::Student => 2.0 * self.th().asin() / std::f64::consts::PI,
        }
    }

    /// Draw n vectors from the copula.
    pub fn sample<R: rand::Rng>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        sampling::sample(self, n, rng)
    }
}

/// Debye function of order one, D1(x) = (1/x) int_0^x t/(e^t - 1) dt, x > 0.
fn debye1(x: f64) -> f64 {
    let mut f = |t: f64| {
        if t.abs() < 1e-8 {
            1.0 - 0.5 * t
        } else {
            t / t.exp_m1()
        }
    };
    adaptive_gk(&mut f, 0.0, x, 1e-13).value / x
}

fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < FRANK_INDEP_TOL {
        return 0.0;
    }
    let a = theta.abs();
    let tau = 1.0 - 4.0 / a * (1.0 - debye1(a));
    tau.copysign(theta)
}

fn plackett_tau(theta: f64) -> f64 {
    if (theta - 1.0).abs() <= 1e-7 {
        return 0.0;
    }
    let mut f = |u: f64, v: f64| {
        plackett::plackett_pd(theta, u, v) * plackett::plackett_pd(theta, v, u)
    };
    1.0 - 4.0 * gl_unit_square(&mut f, 96)
}

/// Parameters matching a target Kendall tau. Student requires the degrees of
/// freedom to be supplied since tau does not constrain them.
pub fn tau_inverse(family: Family, tau: f64, student_nu: Option<f64>) -> Result<Vec<f64>> {
    if !(-1.0..1.0).contains(&tau) {
        return Err(Error::Range(format!("tau = {tau} outside (-1, 1)")));
    }
    match family {
        Family::Clayton => {
            if tau <= 0.0 {
                return Err(Error::Range(format!("clayton needs tau > 0, got {tau}")));
            }
            let theta = 2.0 * tau / (1.0 - tau);
            validate_theta(family, &[theta])?;
            Ok(vec![theta])
        }
        Family::Gumbel => {
            if tau < 0.0 {
                return Err(Error::Range(format!("gumbel needs tau >= 0, got {tau}")));
            }
            let theta = 1.0 / (1.0 - tau);
            validate_theta(family, &[theta])?;
            Ok(vec![theta])
        }
        Family::Frank => {
            if tau.abs() < 1e-9 {
                return Ok(vec![0.0]);
            }
            let target = tau.abs();
            let mut f = |th: f64| frank_tau(th) - target;
            let theta = crate::numeric::roots::brent(&mut f, 2e-5, 344.0, 1e-10)?;
            Ok(vec![theta.copysign(tau)])
        }
        Family::Plackett => {
            if tau.abs() < 1e-9 {
                return Ok(vec![1.0]);
            }
            let mut f = |ln_th: f64| plackett_tau(ln_th.exp()) - tau;
            let ln_th = crate::numeric::roots::brent(&mut f, (1e-5f64).ln(), (9e6f64).ln(), 1e-11)?;
            Ok(vec![ln_th.exp()])
        }
        Family::Gaussian => Ok(vec![(std::f64::consts::PI * tau / 2.0).sin()]),
        Family::Student => {
            let nu = student_nu.ok_or_else(|| {
                Error::Config("student tau inversion needs degrees of freedom".into())
            })?;
            let rho = (std::f64::consts::PI * tau / 2.0).sin();
            validate_theta(family, &[rho, nu])?;
            Ok(vec![rho, nu])
        }
    }
}
