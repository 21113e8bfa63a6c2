//! One-dimensional quadrature: Gauss–Legendre rules and a globally adaptive
//! Gauss–Kronrod (7/15) integrator with user breakpoints.

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for k in 0..7 {
        let x = h * XGK[k];
        let s = f(c - x) + f(c + x);
        rk += WGK[k] * s;
        if k % 2 == 1 {
            rg += WG[k / 2] * s;
        }
    }
    let value = rk * h;
    let err = ((rk - rg) * h).abs();
    (value, err)
}

/// Adaptive integration of `f` over `[a, b]`, splitting first at `breaks`.
///
/// Subintervals are bisected in order of decreasing error estimate until the
/// total estimate drops below `max(abs_tol, rel_tol·|I|)` or the subinterval
/// budget is exhausted.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Quad {
    if !(b > a) {
        return Quad { value: 0.0, error: 0.0, evals: 0 };
    }
    let mut pts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breaks.iter().cloned().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (b - a));
    pts.extend(inner);
    pts.push(b);

    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(max_intervals + pts.len());
    for w in pts.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        segs.push((w[0], w[1], v, e));
    }
    let mut evals = 15 * segs.len();
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || segs.len() >= max_intervals {
            return Quad { value: total, error: err, evals };
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = segs[idx];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Quad { value: total, error: err, evals };
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        evals += 30;
        segs[idx] = (lo, mid, v1, e1);
        segs.push((mid, hi, v2, e2));
    }
}

/// Result of an adaptive integration of a vector-valued function.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadVec {
    pub values: Vec<f64>,
    /// Sum over subintervals of the largest componentwise error estimate.
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

fn gk15_vec<F: Fn(f64) -> Vec<f64> + Sync>(f: &F, a: f64, b: f64) -> (Vec<f64>, f64) {
    use rayon::prelude::*;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let xs: Vec<f64> = (0..15)
        .map(|q| match q {
            7 => c,
            q if q < 7 => c - h * XGK[q],
            q => c + h * XGK[14 - q],
        })
        .collect();
    let fx: Vec<Vec<f64>> = xs.par_iter().map(|&x| f(x)).collect();
    let n = fx[7].len();
    let mut rk = vec![0.0; n];
    let mut rg = vec![0.0; n];
    for q in 0..15 {
        let k = if q <= 7 { q } else { 14 - q };
        for (c, v) in fx[q].iter().enumerate() {
            rk[c] += WGK[k] * v;
            if k % 2 == 1 {
                rg[c] += WG[k / 2] * v;
            } else if k == 7 {
                rg[c] += WG[3] * v;
            }
        }
    }
    let err = rk.iter().zip(&rg).map(|(k, g)| ((k - g) * h).abs()).fold(0.0, f64::max);
    (rk.into_iter().map(|v| v * h).collect(), err)
}

/// Adaptive Gauss–Kronrod for a vector of integrands sharing one
/// subdivision; the interval with the largest componentwise error is
/// bisected until the summed error is below `abs_tol`.
pub fn integrate_vec_with_breaks<F: Fn(f64) -> Vec<f64> + Sync>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    max_intervals: usize,
) -> QuadVec {
    let mut pts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breaks.iter().cloned().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (b - a));
    pts.extend(inner);
    pts.push(b);
    let mut segs: Vec<(f64, f64, Vec<f64>, f64)> = pts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15_vec(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    let mut evals = 15 * segs.len();
    loop {
        let err: f64 = segs.iter().map(|s| s.3).sum();
        let done = err <= abs_tol;
        if done || segs.len() >= max_intervals {
            let n = segs[0].2.len();
            let mut values = vec![0.0; n];
            for s in &segs {
                for (o, v) in values.iter_mut().zip(&s.2) {
                    *o += v;
                }
            }
            return QuadVec { values, error: err, evals, converged: done };
        }
        let (idx, _) = segs.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("nonempty");
        let (lo, hi) = (segs[idx].0, segs[idx].1);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15_vec(&f, lo, mid);
        let (v2, e2) = gk15_vec(&f, mid, hi);
        evals += 30;
        segs[idx] = (lo, mid, v1, e1);
        segs.push((mid, hi, v2, e2));
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    integrate_with_breaks(f, a, b, &[], abs_tol, rel_tol, 2000)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Legendre polynomial P_n and its derivative at `z`.
pub fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

pub fn legendre(n: usize, z: f64) -> f64 {
    legendre_with_derivative(n, z).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 14 monomial: ∫ x^14 = 2/15
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_order_has_zero_node() {
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-15);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_square_root_endpoint() {
        // ∫_0^1 sqrt(1 - x^2) = π/4
        let q = integrate(|x: f64| (1.0 - x * x).max(0.0).sqrt(), 0.0, 1.0, 1e-12, 1e-12);
        assert!((q.value - PI / 4.0).abs() < 1e-10, "{q:?}");
    }

    #[test]
    fn breakpoints_resolve_kinks() {
        let q = integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-13, 1e-13, 100);
        assert!((q.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn legendre_values() {
        assert!((legendre(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!((legendre(3, 1.0) - 1.0).abs() < 1e-15);
    }
}
