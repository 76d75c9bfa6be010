//! Gauss--Legendre rules and simplex quadrature via the Duffy transform.

use std::sync::Mutex;

use std::collections::HashMap;
use std::sync::OnceLock;

/// Gauss--Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence and cached per order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = compute_gauss_legendre(n);
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss--Legendre rule on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|t| 0.5 * t).collect(),
    )
}

/// Quadrature points for averaging over the convex hull of `nodes`, i.e. for
/// integrals over the standard simplex
/// `{t_1..t_d >= 0, sum t <= 1}` (d = nodes.len() - 1) of
/// `f(x_0 + sum t_i (x_i - x_0))` with the Lebesgue measure.
///
/// Returns `(point, weight)` pairs; the weights sum to 1/d! (the simplex
/// volume). The Duffy transform maps the unit cube onto the simplex, so a
/// tensor Gauss--Legendre grid applies.
pub fn simplex_points(nodes: &[f64], order: usize) -> Vec<(f64, f64)> {
    let d = nodes.len() - 1;
    if d == 0 {
        return vec![(nodes[0], 1.0)];
    }
    let (u, w) = gauss_legendre_unit(order);
    let mut out = Vec::with_capacity(order.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        // Duffy: t_i = u_i * remaining, remaining *= (1 - u_i).
        let mut remaining = 1.0;
        let mut point = nodes[0];
        let mut weight = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            let t = u[i] * remaining;
            point += t * (nodes[axis + 1] - nodes[0]);
            weight *= w[i] * remaining;
            remaining *= 1.0 - u[i];
        }
        out.push((point, weight));
        // advance multi-index
        let mut axis = 0;
        loop {
            if axis == d {
                return out;
            }
            idx[axis] += 1;
            if idx[axis] < order {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Default Gauss--Legendre order per simplex dimension. Small dimensions get
/// dense rules; high-dimensional simplices only occur for tight clusters
/// where the integrand is nearly constant.
pub fn default_order(dim: usize) -> usize {
    match dim {
        0 => 1,
        1 => 16,
        2 => 10,
        3 => 6,
        4 => 5,
        5 => 4,
        _ => 3,
    }
}

/// Adaptive Simpson quadrature on [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let v = simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 24, &mut err);
    (v, err)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, err)
        + simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, err)
}
