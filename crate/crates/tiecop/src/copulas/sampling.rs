//! Exact samplers for every family.
//!
//! Archimedean families use Marshall-Olkin frailty representations
//! (gamma for Clayton, logarithmic for Frank in dimension >= 3, positive
//! stable for Gumbel); bivariate Frank and Plackett invert the conditional
//! distribution; elliptical families transform correlated normals.

use super::{plackett, CopulaSpec, Family};
use crate::numeric::special::{norm_cdf, t_cdf};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};

/// Uniform draw in the open interval (0,1).
fn unit_open<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

pub fn sample<R: Rng>(spec: &CopulaSpec, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = spec.dim;
    let theta = spec.theta[0];
    match spec.family {
        Family::Clayton => {
            let gamma = Gamma::new(1.0 / theta, 1.0).expect("valid clayton shape");
            (0..n)
                .map(|_| {
                    let v: f64 = gamma.sample(rng);
                    (0..d)
                        .map(|_| {
                            let e: f64 = Exp1.sample(rng);
                            (1.0 + e / v).powf(-1.0 / theta)
                        })
                        .collect()
                })
                .collect()
        }
        Family::Frank => {
            if theta.abs() < super::FRANK_INDEP_TOL {
                return independent(n, d, rng);
            }
            if d == 2 {
                (0..n)
                    .map(|_| {
                        let u = unit_open(rng);
                        let p = unit_open(rng);
                        vec![u, frank_conditional_inverse(theta, u, p)]
                    })
                    .collect()
            } else {
                (0..n)
                    .map(|_| {
                        let v = logarithmic_draw(theta, rng) as f64;
                        (0..d)
                            .map(|_| {
                                let e: f64 = Exp1.sample(rng);
                                // psi(t) = -ln(1 - (1 - e^-theta) e^-t)/theta
                                let w = -(-theta).exp_m1() * (-e / v).exp();
                                -(-w).ln_1p() / theta
                            })
                            .collect()
                    })
                    .collect()
            }
        }
        Family::Gumbel => {
            if theta == 1.0 {
                return independent(n, d, rng);
            }
            let alpha = 1.0 / theta;
            (0..n)
                .map(|_| {
                    let s = positive_stable(alpha, rng);
                    (0..d)
                        .map(|_| {
                            let e: f64 = Exp1.sample(rng);
                            (-(e / s).powf(alpha)).exp()
                        })
                        .collect()
                })
                .collect()
        }
        Family::Plackett => (0..n)
            .map(|_| {
                let u = unit_open(rng);
                let p = unit_open(rng);
                vec![u, plackett_conditional_inverse(theta, u, p)]
            })
            .collect(),
        Family::Gaussian => {
            let s = (1.0 - theta * theta).sqrt();
            (0..n)
                .map(|_| {
                    let z1: f64 = StandardNormal.sample(rng);
                    let z2: f64 = StandardNormal.sample(rng);
                    vec![norm_cdf(z1), norm_cdf(theta * z1 + s * z2)]
                })
                .collect()
        }
        Family::Student => {
            let nu = spec.theta[1];
            let s = (1.0 - theta * theta).sqrt();
            let chi = ChiSquared::new(nu).expect("valid student dof");
            (0..n)
                .map(|_| {
                    let z1: f64 = StandardNormal.sample(rng);
                    let z2: f64 = StandardNormal.sample(rng);
                    let w: f64 = chi.sample(rng);
                    let scale = (nu / w).sqrt();
                    vec![
                        t_cdf(z1 * scale, nu),
                        t_cdf((theta * z1 + s * z2) * scale, nu),
                    ]
                })
                .collect()
        }
    }
}

fn independent<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| unit_open(rng)).collect()).collect()
}

/// Solve dC/du (u, v) = p for v in closed form.
fn frank_conditional_inverse(theta: f64, u: f64, p: f64) -> f64 {
    let gt = (-theta).exp_m1();
    let gu = (-theta * u).exp_m1();
    let gv = p * gt / ((-theta * u).exp() - p * gu);
    (-gv.ln_1p() / theta).clamp(f64::MIN_POSITIVE, 1.0)
}

fn plackett_conditional_inverse(theta: f64, u: f64, p: f64) -> f64 {
    if (theta - 1.0).abs() <= 1e-7 {
        return p;
    }
    let pc = p.clamp(1e-12, 1.0 - 1e-12);
    let mut f = |v: f64| plackett::plackett_pd(theta, u, v) - pc;
    crate::numeric::roots::brent(&mut f, 1e-14, 1.0 - 1e-14, 1e-13)
        .expect("conditional cdf spans (0,1)")
}

/// Logarithmic-series variate with success parameter p = 1 - e^-theta,
/// theta > 0 (Kemp's second accelerated generator). ln(1-p) = -theta exactly.
fn logarithmic_draw<R: Rng>(theta: f64, rng: &mut R) -> u64 {
    let p = -(-theta).exp_m1();
    let v = unit_open(rng);
    if v >= p {
        return 1;
    }
    let u = unit_open(rng);
    let q = -(u * -theta).exp_m1(); // 1 - (1-p)^u
    if v > q {
        1
    } else if v > q * q {
        2
    } else {
        (1.0 + v.ln() / q.ln()).floor() as u64
    }
}

/// Chambers-Mallows-Stuck draw of a positive alpha-stable variate with
/// Laplace transform exp(-s^alpha), 0 < alpha < 1.
fn positive_stable<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let t = std::f64::consts::PI * unit_open(rng);
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * t).sin() / t.sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * t).sin() / e;
    a * b.powf((1.0 - alpha) / alpha)
}
