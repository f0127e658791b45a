//! Clayton, Frank and Gumbel: bivariate closed forms plus the generator
//! machinery (phi, phi', psi and its first three derivatives) that powers
//! exchangeable d >= 2 cdfs and mixed partials.
//!
//! Conventions: psi is the generator inverse (completely monotone for valid
//! parameters), phi its inverse, C(u) = psi(sum_j phi(u_j)), and
//! d^k C / du_{j1}..du_{jk} = psi^(k)(t) * prod phi'(u_ji).

// ---------------------------------------------------------------- Clayton

pub fn clayton_cdf(theta: f64, u: &[f64]) -> f64 {
    let d = u.len() as f64;
    let s: f64 = u.iter().map(|&x| x.powf(-theta)).sum::<f64>() - (d - 1.0);
    s.powf(-1.0 / theta)
}

/// dC/du_j for any dimension.
pub fn clayton_pd(theta: f64, u: &[f64], j: usize) -> f64 {
    let d = u.len() as f64;
    let s: f64 = u.iter().map(|&x| x.powf(-theta)).sum::<f64>() - (d - 1.0);
    u[j].powf(-theta - 1.0) * s.powf(-1.0 / theta - 1.0)
}

pub fn clayton_density2(theta: f64, u: f64, v: f64) -> f64 {
    let s = u.powf(-theta) + v.powf(-theta) - 1.0;
    (1.0 + theta) * (u * v).powf(-theta - 1.0) * s.powf(-1.0 / theta - 2.0)
}

pub fn clayton_phi(theta: f64, u: f64) -> f64 {
    u.powf(-theta) - 1.0
}

pub fn clayton_phi_prime(theta: f64, u: f64) -> f64 {
    -theta * u.powf(-theta - 1.0)
}

/// psi^(k)(t) for k = 0..=3.
pub fn clayton_psi_k(theta: f64, t: f64, k: usize) -> f64 {
    let a = 1.0 / theta;
    let base = 1.0 + t;
    match k {
        0 => base.powf(-a),
        1 => -a * base.powf(-a - 1.0),
        2 => a * (a + 1.0) * base.powf(-a - 2.0),
        3 => -a * (a + 1.0) * (a + 2.0) * base.powf(-a - 3.0),
        _ => unreachable!("generator derivatives implemented through order 3"),
    }
}

// ------------------------------------------------------------------ Frank

// g(x) = exp(-theta x) - 1, evaluated stably
fn g(theta: f64, x: f64) -> f64 {
    (-theta * x).exp_m1()
}

pub fn frank_cdf2(theta: f64, u: f64, v: f64) -> f64 {
    let gt = g(theta, 1.0);
    -(1.0 + g(theta, u) * g(theta, v) / gt).ln() / theta
}

pub fn frank_cdf_d(theta: f64, u: &[f64]) -> f64 {
    let gt = g(theta, 1.0);
    let mut prod = 1.0;
    for &x in u {
        prod *= g(theta, x) / gt;
    }
    -(1.0 + gt * prod).ln() / theta
}

/// dC/du for the bivariate case (swap arguments for dC/dv).
pub fn frank_pd2(theta: f64, u: f64, v: f64) -> f64 {
    let gt = g(theta, 1.0);
    (-theta * u).exp() * g(theta, v) / (gt + g(theta, u) * g(theta, v))
}

pub fn frank_density2(theta: f64, u: f64, v: f64) -> f64 {
    let gt = g(theta, 1.0);
    let den = gt + g(theta, u) * g(theta, v);
    -theta * gt * (-theta * (u + v)).exp() / (den * den)
}

pub fn frank_phi(theta: f64, u: f64) -> f64 {
    (g(theta, 1.0) / g(theta, u)).ln()
}

pub fn frank_phi_prime(theta: f64, u: f64) -> f64 {
    theta * (-theta * u).exp() / g(theta, u)
}

pub fn frank_psi_k(theta: f64, t: f64, k: usize) -> f64 {
    // w = exp(-t) * (exp(-theta) - 1); C = -ln(1+w)/theta
    let w = (-t).exp() * g(theta, 1.0);
    let opw = 1.0 + w;
    match k {
        0 => -w.ln_1p() / theta,
        1 => w / (theta * opw),
        2 => -w / (theta * opw * opw),
        3 => w * (1.0 - w) / (theta * opw * opw * opw),
        _ => unreachable!("generator derivatives implemented through order 3"),
    }
}

// ----------------------------------------------------------------- Gumbel

pub fn gumbel_cdf(theta: f64, u: &[f64]) -> f64 {
    let a: f64 = u.iter().map(|&x| (-x.ln()).powf(theta)).sum();
    (-a.powf(1.0 / theta)).exp()
}

pub fn gumbel_pd(theta: f64, u: &[f64], j: usize) -> f64 {
    let a: f64 = u.iter().map(|&x| (-x.ln()).powf(theta)).sum();
    let c = (-a.powf(1.0 / theta)).exp();
    let xj = -u[j].ln();
    c * xj.powf(theta - 1.0) * a.powf(1.0 / theta - 1.0) / u[j]
}

pub fn gumbel_density2(theta: f64, u: f64, v: f64) -> f64 {
    let x = -u.ln();
    let y = -v.ln();
    let a = x.powf(theta) + y.powf(theta);
    let c = (-a.powf(1.0 / theta)).exp();
    c * (x * y).powf(theta - 1.0) / (u * v) * a.powf(1.0 / theta - 2.0)
        * (a.powf(1.0 / theta) + theta - 1.0)
}

pub fn gumbel_phi(theta: f64, u: f64) -> f64 {
    (-u.ln()).powf(theta)
}

pub fn gumbel_phi_prime(theta: f64, u: f64) -> f64 {
    -theta * (-u.ln()).powf(theta - 1.0) / u
}

pub fn gumbel_psi_k(theta: f64, t: f64, k: usize) -> f64 {
    let a = 1.0 / theta;
    let psi = (-t.powf(a)).exp();
    match k {
        0 => psi,
        1 => -a * t.powf(a - 1.0) * psi,
        2 => psi * (a * a * t.powf(2.0 * a - 2.0) - a * (a - 1.0) * t.powf(a - 2.0)),
        3 => psi
            * (-a.powi(3) * t.powf(3.0 * a - 3.0)
                + 3.0 * a * a * (a - 1.0) * t.powf(2.0 * a - 3.0)
                - a * (a - 1.0) * (a - 2.0) * t.powf(a - 3.0)),
        _ => unreachable!("generator derivatives implemented through order 3"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 1e-5;

    fn fd2<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        (f(x + H) - f(x - H)) / (2.0 * H)
    }

    #[test]
    fn clayton_half_half_closed_form() {
        // theta=2 at (1/2,1/2): (4+4-1)^{-1/2} = 1/sqrt(7)
        let c = clayton_cdf(2.0, &[0.5, 0.5]);
        assert!((c - 1.0 / 7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clayton_density_is_cross_derivative() {
        // frozen oracle: c(0.5,0.5; theta=2) = 3 * 64 * 7^{-2.5}
        let want = 3.0 * 64.0 * 7f64.powf(-2.5);
        let got = clayton_density2(2.0, 0.5, 0.5);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        // cross-check against finite differences of the cdf
        let fd = fd2(|u| fd2(|v| clayton_cdf(2.0, &[u, v]), 0.5), 0.5);
        assert!((got - fd).abs() / want < 1e-6, "fd oracle {fd} vs {got}");
    }

    #[test]
    fn partials_match_fd_for_all_three_families() {
        let pts = [(0.3, 0.8), (0.55, 0.2), (0.9, 0.6)];
        for (u, v) in pts {
            for th in [0.7, 2.0, 5.0] {
                let fd = fd2(|x| clayton_cdf(th, &[x, v]), u);
                assert!((clayton_pd(th, &[u, v], 0) - fd).abs() < 1e-8);
            }
            for th in [-4.0, 2.0, 8.0] {
                let fd = fd2(|x| frank_cdf2(th, x, v), u);
                assert!((frank_pd2(th, u, v) - fd).abs() < 1e-8, "frank theta={th}");
                let fdc = fd2(|x| frank_pd2(th, u, x), v);
                assert!((frank_density2(th, u, v) - fdc).abs() < 1e-7);
            }
            for th in [1.0, 1.7, 4.0] {
                let fd = fd2(|x| gumbel_cdf(th, &[x, v]), u);
                assert!((gumbel_pd(th, &[u, v], 0) - fd).abs() < 1e-8, "gumbel theta={th}");
                let fdc = fd2(|x| gumbel_pd(th, &[u, x], 0), v);
                assert!((gumbel_density2(th, u, v) - fdc).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn generator_form_agrees_with_direct_forms() {
        let (u, v) = (0.35, 0.7);
        for th in [0.8, 3.0] {
            let t = clayton_phi(th, u) + clayton_phi(th, v);
            assert!((clayton_psi_k(th, t, 0) - clayton_cdf(th, &[u, v])).abs() < 1e-14);
            let pd = clayton_psi_k(th, t, 1) * clayton_phi_prime(th, u);
            assert!((pd - clayton_pd(th, &[u, v], 0)).abs() < 1e-13);
            let dens = clayton_psi_k(th, t, 2) * clayton_phi_prime(th, u) * clayton_phi_prime(th, v);
            assert!((dens - clayton_density2(th, u, v)).abs() < 1e-12);
        }
        for th in [2.0, 6.0] {
            let t = frank_phi(th, u) + frank_phi(th, v);
            assert!((frank_psi_k(th, t, 0) - frank_cdf2(th, u, v)).abs() < 1e-13);
            let pd = frank_psi_k(th, t, 1) * frank_phi_prime(th, u);
            assert!((pd - frank_pd2(th, u, v)).abs() < 1e-12);
            let dens = frank_psi_k(th, t, 2) * frank_phi_prime(th, u) * frank_phi_prime(th, v);
            assert!((dens - frank_density2(th, u, v)).abs() < 1e-11);
        }
        for th in [1.4, 3.5] {
            let t = gumbel_phi(th, u) + gumbel_phi(th, v);
            assert!((gumbel_psi_k(th, t, 0) - gumbel_cdf(th, &[u, v])).abs() < 1e-13);
            let pd = gumbel_psi_k(th, t, 1) * gumbel_phi_prime(th, u);
            assert!((pd - gumbel_pd(th, &[u, v], 0)).abs() < 1e-12);
            let dens = gumbel_psi_k(th, t, 2) * gumbel_phi_prime(th, u) * gumbel_phi_prime(th, v);
            assert!((dens - gumbel_density2(th, u, v)).abs() < 1e-11);
        }
    }

    #[test]
    fn psi_third_derivative_matches_fd() {
        for (psi, th) in [
            (clayton_psi_k as fn(f64, f64, usize) -> f64, 2.0),
            (frank_psi_k, 4.0),
            (gumbel_psi_k, 2.5),
        ] {
            for t in [0.4, 1.3, 3.0] {
                let fd = (psi(th, t + H, 2) - psi(th, t - H, 2)) / (2.0 * H);
                let got = psi(th, t, 3);
                assert!(
                    (got - fd).abs() < 1e-6 * (1.0 + got.abs()),
                    "psi3 mismatch at t={t}: {got} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn trivariate_cdf_reduces_when_margin_is_one() {
        for th in [1.5, 3.0] {
            let c3 = clayton_cdf(th, &[0.4, 0.7, 1.0]);
            let c2 = clayton_cdf(th, &[0.4, 0.7]);
            assert!((c3 - c2).abs() < 1e-14);
            let f3 = frank_cdf_d(th, &[0.4, 0.7, 1.0]);
            let f2 = frank_cdf2(th, 0.4, 0.7);
            assert!((f3 - f2).abs() < 1e-13);
            let g3 = gumbel_cdf(th, &[0.4, 0.7, 1.0]);
            let g2 = gumbel_cdf(th, &[0.4, 0.7]);
            assert!((g3 - g2).abs() < 1e-14);
        }
    }

    #[test]
    fn gumbel_at_theta_one_is_independence() {
        assert!((gumbel_cdf(1.0, &[0.3, 0.8]) - 0.24).abs() < 1e-15);
        assert!((gumbel_pd(1.0, &[0.3, 0.8], 0) - 0.8).abs() < 1e-13);
        assert!((gumbel_density2(1.0, 0.3, 0.8) - 1.0).abs() < 1e-12);
    }
}
