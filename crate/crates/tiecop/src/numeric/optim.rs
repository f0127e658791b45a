//! Derivative-free minimization: Nelder-Mead simplex with the stopping rule
//! used throughout the estimation layer (simplex diameter and objective
//! spread), plus golden-section search for smooth one-dimensional profiles.

pub struct NmOptions {
    pub max_iter: usize,
    /// sup-norm simplex diameter threshold in the optimizer's own space
    pub xtol: f64,
    /// spread |f_worst - f_best| threshold
    pub ftol: f64,
    /// initial simplex edge length per coordinate
    pub step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { max_iter: 2000, xtol: 1e-7, ftol: 1e-10, step: 0.25 }
    }
}

pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iters: usize,
    pub converged: bool,
}

/// Minimize f from x0. Standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, 0.5, 0.5).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], opt: &NmOptions) -> NmResult {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opt.step;
        simplex.push(p);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let mut iters = 0;
    let mut converged = false;
    while iters < opt.max_iter {
        iters += 1;
        // order ascending by objective
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| fv[i].total_cmp(&fv[j]));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let refv: Vec<f64> = order.iter().map(|&i| fv[i]).collect();
        simplex = reordered;
        fv = refv;

        let diam = simplex[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let spread = (fv[n] - fv[0]).abs();
        if diam < opt.xtol && spread < opt.ftol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let xr: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n])
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = eval(&xr, &mut evals);

        if fr < fv[0] {
            let xe: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            let (xc, fc) = if fr < fv[n] {
                let xc: Vec<f64> = centroid
                    .iter()
                    .zip(&xr)
                    .map(|(c, r)| c + 0.5 * (r - c))
                    .collect();
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect();
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fr.min(fv[n]) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    simplex[i] = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(p, b)| b + 0.5 * (p - b))
                        .collect();
                    fv[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }

    let best = (0..=n).min_by(|&i, &j| fv[i].total_cmp(&fv[j])).unwrap();
    NmResult {
        x: simplex[best].clone(),
        f: fv[best],
        evals,
        iters,
        converged,
    }
}

/// Golden-section minimization on [a,b] for unimodal scalar objectives.
pub fn golden_min<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
