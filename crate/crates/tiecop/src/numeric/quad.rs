//! Adaptive Gauss-Kronrod quadrature (7/15 pair) plus Gauss-Legendre tensor
//! rules. The adaptive driver can export its final panel set so a caller can
//! re-evaluate a perturbed integrand on the identical subdivision; that keeps
//! finite-difference quotients of quadrature-backed functions smooth.

/// Kronrod abscissae for the 15-point rule (positive half, descending).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7/K15 panel: returns (kronrod value, |kronrod - gauss| error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let hl = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    for j in 0..7 {
        let x = hl * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            // odd-index Kronrod nodes are the embedded Gauss-7 nodes
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    (res_k * hl, ((res_k - res_g) * hl).abs())
}

#[derive(Clone, Debug)]
struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

/// Adaptive result with the final subdivision retained.
pub struct QuadResult {
    pub value: f64,
    pub err_est: f64,
    pub panels: Vec<(f64, f64)>,
}

/// Integrate f over [a,b] to the requested absolute tolerance by bisecting
/// the panel with the largest error estimate. Deterministic.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, abs_tol: f64) -> QuadResult {
    adaptive_gk_capped(f, a, b, abs_tol, 256)
}

pub fn adaptive_gk_capped<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, err_est: 0.0, panels: vec![(a, b)] };
    }
    let (v, e) = gk15(f, a, b);
    let mut panels = vec![Panel { a, b, val: v, err: e }];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= abs_tol || panels.len() >= max_panels {
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval exhausted at f64 resolution; keep it and stop splitting
            panels.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        panels.push(Panel { a: p.a, b: mid, val: v1, err: e1 });
        panels.push(Panel { a: mid, b: p.b, val: v2, err: e2 });
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let vals: Vec<f64> = panels.iter().map(|p| p.val).collect();
    QuadResult {
        value: super::stats::pairwise_sum(&vals),
        err_est: panels.iter().map(|p| p.err).sum(),
        panels: panels.iter().map(|p| (p.a, p.b)).collect(),
    }
}

/// Evaluate f on a frozen panel set (no adaptivity).
pub fn gk_on_panels<F: FnMut(f64) -> f64>(f: &mut F, panels: &[(f64, f64)]) -> f64 {
    let vals: Vec<f64> = panels.iter().map(|&(a, b)| gk15(f, a, b).0).collect();
    super::stats::pairwise_sum(&vals)
}

/// Iterated 2-D adaptive quadrature over a rectangle, used as an oracle for
/// rectangle probabilities and density normalization checks.
pub fn adaptive_gk_2d<F: FnMut(f64, f64) -> f64>(
    f: &mut F,
    xr: (f64, f64),
    yr: (f64, f64),
    abs_tol: f64,
) -> f64 {
    let width = (xr.1 - xr.0).abs().max(1e-300);
    let inner_tol = 0.25 * abs_tol / width;
    let mut outer = |x: f64| {
        let mut g = |y: f64| f(x, y);
        adaptive_gk_capped(&mut g, yr.0, yr.1, inner_tol, 128).value
    };
    adaptive_gk_capped(&mut outer, xr.0, xr.1, 0.5 * abs_tol, 128).value
}

/// Gauss-Legendre nodes and weights on [-1,1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Tensor-product Gauss-Legendre integral of f over (0,1)^2.
pub fn gl_unit_square<F: FnMut(f64, f64) -> f64>(f: &mut F, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            terms.push(0.25 * w[i] * w[j] * f(u, v));
        }
    }
    super::stats::pairwise_sum(&terms)
}
