//! Plackett copula (bivariate only). theta > 0, theta = 1 is independence.

const INDEP_TOL: f64 = 1e-7;

pub fn plackett_cdf(theta: f64, u: f64, v: f64) -> f64 {
    if (theta - 1.0).abs() <= INDEP_TOL {
        return u * v;
    }
    let tm1 = theta - 1.0;
    let b = 1.0 + tm1 * (u + v);
    let disc = b * b - 4.0 * theta * tm1 * u * v;
    (b - disc.sqrt()) / (2.0 * tm1)
}

/// dC/du (swap arguments for dC/dv; the copula is exchangeable).
pub fn plackett_pd(theta: f64, u: f64, v: f64) -> f64 {
    if (theta - 1.0).abs() <= INDEP_TOL {
        return v;
    }
    let tm1 = theta - 1.0;
    let b = 1.0 + tm1 * (u + v);
    let disc = b * b - 4.0 * theta * tm1 * u * v;
    0.5 * (1.0 - (b - 2.0 * theta * v) / disc.sqrt())
}

pub fn plackett_density(theta: f64, u: f64, v: f64) -> f64 {
    if (theta - 1.0).abs() <= INDEP_TOL {
        return 1.0;
    }
    let tm1 = theta - 1.0;
    let b = 1.0 + tm1 * (u + v);
    let disc = b * b - 4.0 * theta * tm1 * u * v;
    theta * (1.0 + tm1 * (u + v - 2.0 * u * v)) / disc.powf(1.5)
}
