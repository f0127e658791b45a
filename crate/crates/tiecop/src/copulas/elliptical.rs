//! Gaussian and Student copulas (bivariate). Conditional distributions and
//! densities are closed forms; the joint cdf needs one-dimensional adaptive
//! quadrature.
//!
//! Two integral representations are used:
//! - Gaussian cdf integrates in quantile (x) space over (-8.5, ppf(u)); the
//!   normal tail below -8.5 is ~1e-17 so truncation is harmless.
//! - Student cdf integrates in probability (s) space over (0, u). For small
//!   nu the quantile range is astronomically wide, so a fixed x-space cutoff
//!   cannot work; in s-space the integrand tends smoothly to a constant as
//!   s -> 0 and the domain never depends on the parameters, which also lets
//!   gradient code re-evaluate a perturbed parameter on frozen panels.
//!
//! Rectangle probabilities (atom-by-atom likelihood terms) are computed as a
//! single fused integral of a tail-safe cdf difference rather than by
//! four-corner inclusion-exclusion, preserving relative precision when the
//! rectangle is small.

use crate::numeric::quad::{adaptive_gk, gk15, gk_on_panels};
use crate::numeric::special::{beta_reg, ln_gamma, norm_cdf, norm_pdf, norm_ppf, t_cdf, t_ppf};

const GAUSS_XLO: f64 = -8.5;
const CDF_TOL: f64 = 1e-10;
const RECT_REL: f64 = 1e-9;

/// P(a < Z <= b) for a <= b without cancellation in either tail.
pub fn norm_cdf_diff(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        0.5 * (erfc_half(a) - erfc_half(b))
    } else {
        0.5 * (erfc_half(-b) - erfc_half(-a))
    }
}

fn erfc_half(x: f64) -> f64 {
    crate::numeric::special::erfc(x / std::f64::consts::SQRT_2)
}

fn t_tail(x: f64, nu: f64) -> f64 {
    // P(T > x) for x >= 0
    0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x * x))
}

/// P(a < T_nu <= b) for a <= b without cancellation in either tail.
pub fn t_cdf_diff(a: f64, b: f64, nu: f64) -> f64 {
    if a >= 0.0 {
        t_tail(a, nu) - t_tail(b, nu)
    } else if b <= 0.0 {
        t_tail(-b, nu) - t_tail(-a, nu)
    } else {
        t_cdf(b, nu) - t_cdf(a, nu)
    }
}

// --------------------------------------------------------------- Gaussian

/// C(u,v) with x = ppf(u), y = ppf(v) already mapped by the caller.
pub fn gaussian_cdf_x(rho: f64, x: f64, y: f64) -> f64 {
    if rho.abs() < 1e-14 {
        return norm_cdf(x) * norm_cdf(y);
    }
    let s = (1.0 - rho * rho).sqrt();
    let mut f = |t: f64| norm_pdf(t) * norm_cdf((y - rho * t) / s);
    adaptive_gk(&mut f, GAUSS_XLO, x, CDF_TOL).value
}

pub fn gaussian_cdf2(rho: f64, u: f64, v: f64) -> f64 {
    gaussian_cdf_x(rho, norm_ppf(u), norm_ppf(v))
}

/// P(U1 <= u_t | U2 = u_c) in quantile space.
pub fn gaussian_pd_x(rho: f64, x_target: f64, x_cond: f64) -> f64 {
    norm_cdf((x_target - rho * x_cond) / (1.0 - rho * rho).sqrt())
}

pub fn gaussian_density_x(rho: f64, x: f64, y: f64) -> f64 {
    let s2 = 1.0 - rho * rho;
    let q = rho * rho * (x * x + y * y) - 2.0 * rho * x * y;
    (-0.5 * q / s2).exp() / s2.sqrt()
}

/// P(xa < X <= xb, ya < Y <= yb) under the bivariate normal, fused form.
/// A first coarse pass sets a relative target for the adaptive pass so small
/// rectangles keep ~9 significant digits.
pub fn gaussian_rect_x(rho: f64, xa: f64, xb: f64, ya: f64, yb: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    let mut f = |t: f64| {
        norm_pdf(t) * norm_cdf_diff((ya - rho * t) / s, (yb - rho * t) / s)
    };
    let (coarse, _) = gk15(&mut f, xa, xb);
    let tol = (RECT_REL * coarse.abs()).max(1e-15);
    adaptive_gk(&mut f, xa, xb, tol).value
}

/// Gaussian cdf as an integral over s in (0,u): the domain is parameter-free,
/// so a frozen panel set can be re-evaluated at perturbed rho.
pub fn gaussian_cdf_s_panels(rho: f64, u: f64, v: f64) -> (f64, Vec<(f64, f64)>) {
    let y = norm_ppf(v);
    let s = (1.0 - rho * rho).sqrt();
    let mut f = |p: f64| norm_cdf((y - rho * norm_ppf(p)) / s);
    let r = adaptive_gk(&mut f, 0.0, u, CDF_TOL);
    (r.value, r.panels)
}

pub fn gaussian_cdf_s_frozen(rho: f64, u_panels: &[(f64, f64)], v: f64) -> f64 {
    let y = norm_ppf(v);
    let s = (1.0 - rho * rho).sqrt();
    let mut f = |p: f64| norm_cdf((y - rho * norm_ppf(p)) / s);
    gk_on_panels(&mut f, u_panels)
}

// ---------------------------------------------------------------- Student

pub(crate) fn student_cond_scale(x_cond: f64, rho: f64, nu: f64) -> f64 {
    ((nu + 1.0) / ((nu + x_cond * x_cond) * (1.0 - rho * rho))).sqrt()
}

/// P(U1 <= u_t | U2 = u_c) in quantile space: T_{nu+1} of a rescaled gap.
pub fn student_pd_x(rho: f64, nu: f64, x_target: f64, x_cond: f64) -> f64 {
    t_cdf((x_target - rho * x_cond) * student_cond_scale(x_cond, rho, nu), nu + 1.0)
}

pub fn student_cdf2(rho: f64, nu: f64, u: f64, v: f64) -> f64 {
    let (val, _) = student_cdf_s_panels(rho, nu, u, v);
    val
}

/// cdf in s-space with the adaptive panel set returned for frozen re-use.
pub fn student_cdf_s_panels(rho: f64, nu: f64, u: f64, v: f64) -> (f64, Vec<(f64, f64)>) {
    let y = t_ppf(v, nu);
    let mut f = |p: f64| {
        let x = t_ppf(p, nu);
        t_cdf((y - rho * x) * student_cond_scale(x, rho, nu), nu + 1.0)
    };
    let r = adaptive_gk(&mut f, 0.0, u, CDF_TOL);
    (r.value, r.panels)
}

pub fn student_cdf_s_frozen(rho: f64, nu: f64, u_panels: &[(f64, f64)], v: f64) -> f64 {
    let y = t_ppf(v, nu);
    let mut f = |p: f64| {
        let x = t_ppf(p, nu);
        t_cdf((y - rho * x) * student_cond_scale(x, rho, nu), nu + 1.0)
    };
    gk_on_panels(&mut f, u_panels)
}

/// C(rho_up; u, v) - C(rho_dn; u, v) as one adaptive integral of the
/// integrand difference in s-space. Integrating the difference directly
/// keeps relative accuracy when the two parameters are a finite-difference
/// step apart: the panels refine where the difference itself lives (a frozen
/// center panel set fails when the centered integrand is flat, e.g. rho = 0,
/// but the perturbed one is not).
pub fn gaussian_cdf_diff_rho(rho_up: f64, rho_dn: f64, u: f64, v: f64) -> f64 {
    let y = norm_ppf(v);
    let su = (1.0 - rho_up * rho_up).sqrt();
    let sd = (1.0 - rho_dn * rho_dn).sqrt();
    let mut f = |p: f64| {
        let x = norm_ppf(p);
        norm_cdf((y - rho_up * x) / su) - norm_cdf((y - rho_dn * x) / sd)
    };
    let (coarse, _) = gk15(&mut f, 0.0, u);
    let tol = (1e-7 * coarse.abs()).max(1e-16);
    adaptive_gk(&mut f, 0.0, u, tol).value
}

/// Student analogue of `gaussian_cdf_diff_rho` with both parameters allowed
/// to move (one of them holds still in a finite-difference step).
pub fn student_cdf_diff(
    rho_up: f64,
    nu_up: f64,
    rho_dn: f64,
    nu_dn: f64,
    u: f64,
    v: f64,
) -> f64 {
    let y_up = t_ppf(v, nu_up);
    let y_dn = t_ppf(v, nu_dn);
    let mut f = |p: f64| {
        let xu = t_ppf(p, nu_up);
        let xd = t_ppf(p, nu_dn);
        t_cdf((y_up - rho_up * xu) * student_cond_scale(xu, rho_up, nu_up), nu_up + 1.0)
            - t_cdf((y_dn - rho_dn * xd) * student_cond_scale(xd, rho_dn, nu_dn), nu_dn + 1.0)
    };
    let (coarse, _) = gk15(&mut f, 0.0, u);
    let tol = (1e-7 * coarse.abs()).max(1e-16);
    adaptive_gk(&mut f, 0.0, u, tol).value
}

pub fn student_density_x(rho: f64, nu: f64, x: f64, y: f64) -> f64 {
    let s2 = 1.0 - rho * rho;
    let q = (x * x - 2.0 * rho * x * y + y * y) / s2;
    let ln_k = ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu) - 2.0 * ln_gamma(0.5 * (nu + 1.0));
    (ln_k - 0.5 * s2.ln() - 0.5 * (nu + 2.0) * (q / nu).ln_1p()
        + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p()))
    .exp()
}

/// Rectangle probability in s-space: integrate the conditional difference
/// over s in (sa, sb). Same two-pass relative-tolerance scheme as Gaussian.
/// `ya`/`yb` may be infinite for rectangles touching the unit-square edge.
pub fn student_rect_s(rho: f64, nu: f64, sa: f64, sb: f64, ya: f64, yb: f64) -> f64 {
    student_rect_s_with(rho, nu, sa, sb, ya, yb, &mut |p| t_ppf(p, nu))
}

/// As `student_rect_s` with a caller-supplied quantile map, so repeated
/// evaluations during optimization can memoize t_ppf at the quadrature
/// nodes (the dominant cost; nodes recur because panels split dyadically).
pub fn student_rect_s_with<Q: FnMut(f64) -> f64>(
    rho: f64,
    nu: f64,
    sa: f64,
    sb: f64,
    ya: f64,
    yb: f64,
    ppf: &mut Q,
) -> f64 {
    let mut f = |p: f64| {
        let x = ppf(p);
        let k = student_cond_scale(x, rho, nu);
        t_cdf_diff((ya - rho * x) * k, (yb - rho * x) * k, nu + 1.0)
    };
    let (coarse, _) = gk15(&mut f, sa, sb);
    let tol = (RECT_REL * coarse.abs()).max(1e-15);
    adaptive_gk(&mut f, sa, sb, tol).value
}
