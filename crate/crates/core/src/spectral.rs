//! Spherical-harmonic analysis of the second-order form.
//!
//! For `i ≠ j` the operator `T_{i,j}` has kernel `M_{i,j}(r_i x, r_j y)` on the
//! sphere. The kernel depends only on `x·y`, so `T_{i,j}` acts on `H_ν` by a
//! scalar `λ_{i,j}(ν)`: on the circle `λ_ν = ∫ k(φ) cos νφ dφ`, on `S²`
//! `λ_ν = 2π ∫ k(t) P_ν(t) dt`.
//!
//! `Q(G) = Σ_{i<j} λ_{i,j}(ν)⟨G_i, G_j⟩`, one term per unordered pair.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::family::{LinearFamily, MeasureSpec};
use crate::harmonics::{HarmonicTuple, Poly1, Poly2};
use crate::kernels::{self, PairKernel};
use crate::linalg;
use crate::quadrature::{integrate_vec_with_breaks, integrate_with_breaks, legendre};
use crate::rng;

/// Angular grid size for sampled functions on the circle.
pub const DEFAULT_ANGLES: usize = 2048;
/// Absolute tolerance on `λ`, relative to `|S^{d−1}| · c_{i,j}`. Fiber
/// kernels are themselves computed to about 1e-10 relative accuracy.
const LAMBDA_TOL: f64 = 1e-9;
const MAX_INTERVALS: usize = 1000;

/// Coefficients of the projection onto `H_ν` of a function sampled at the
/// `n` equispaced angles `2πk/n`, in the basis `cos νθ/√π, sin νθ/√π`
/// (`1/√(2π)` for `ν = 0`).
pub fn project_pi_nu(values: &[f64], nu: usize) -> Result<[f64; 2]> {
    let n = values.len();
    if n == 0 || 2 * nu >= n {
        return Err(LabError::argument(format!("degree {nu} is beyond the Nyquist limit of {n} samples")));
    }
    let w = 2.0 * PI / n as f64;
    if nu == 0 {
        return Ok([values.iter().sum::<f64>() * w / (2.0 * PI).sqrt(), 0.0]);
    }
    let s = PI.sqrt().recip();
    let mut out = [0.0; 2];
    for (k, v) in values.iter().enumerate() {
        let a = nu as f64 * 2.0 * PI * k as f64 / n as f64;
        out[0] += v * a.cos();
        out[1] += v * a.sin();
    }
    Ok([out[0] * w * s, out[1] * w * s])
}

/// `π_ν F` sampled back on the same grid.
pub fn project_values(values: &[f64], nu: usize) -> Result<Vec<f64>> {
    let c = project_pi_nu(values, nu)?;
    let n = values.len();
    Ok((0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            if nu == 0 {
                c[0] / (2.0 * PI).sqrt()
            } else {
                let b = crate::harmonics::basis(nu, t);
                c[0] * b[0] + c[1] * b[1]
            }
        })
        .collect())
}

/// `M_{i,j}` restricted to `r_i S^{d−1} × r_j S^{d−1}` as a function of the
/// angle (d = 2) or of `x·y` (d = 3).
pub struct SphereKernel {
    pub i: usize,
    pub j: usize,
    pub d: usize,
    ri: f64,
    rj: f64,
    pair: PairKernel,
    /// Points where the kernel may fail to be smooth, in `[0, π]` (angle) or
    /// `[−1, 1]` (cosine).
    breaks: Vec<f64>,
}

impl SphereKernel {
    pub fn new(fam: &LinearFamily, spec: &MeasureSpec, i: usize, j: usize) -> Result<Self> {
        let d = spec.d;
        if !(2..=3).contains(&d) {
            return Err(LabError::argument("sphere kernels need d ∈ {2, 3}"));
        }
        let pair = PairKernel::new(fam, spec, i, j)?;
        let radii = spec.radii();
        let (ri, rj) = (radii[i], radii[j]);
        let mut sk = SphereKernel { i, j, d, ri, rj, pair, breaks: Vec::new() };
        // Span constraints |α r_i x + β r_j y| ≤ r_k are thresholds in x·y.
        let g = vec![fam.row(i).to_vec(), fam.row(j).to_vec()];
        let gt = linalg::transpose(&g);
        let mut cuts = Vec::new();
        for &k in &sk.pair.span {
            let ab = linalg::least_squares(&gt, fam.row(k)).ok_or_else(|| LabError::computation("span fit failed"))?;
            let (a, b) = (ab[0], ab[1]);
            if a * b != 0.0 {
                let c = (radii[k].powi(2) - (a * ri).powi(2) - (b * rj).powi(2)) / (2.0 * a * b * ri * rj);
                if c.abs() < 1.0 {
                    cuts.push(c);
                }
            }
        }
        // Support edges of the fiber factor, located by bisection.
        if !sk.pair.rest.is_empty() {
            let n = 256;
            let t: Vec<f64> = (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
            let vals = t.par_iter().map(|&c| sk.at_cos(c)).collect::<Result<Vec<f64>>>()?;
            for k in 0..n {
                if (vals[k] > 0.0) != (vals[k + 1] > 0.0) {
                    let (mut lo, mut hi) = (t[k], t[k + 1]);
                    let pos_lo = vals[k] > 0.0;
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if (sk.at_cos(mid)? > 0.0) == pos_lo {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    cuts.push(0.5 * (lo + hi));
                }
            }
        }
        sk.breaks = if d == 2 { cuts.iter().map(|c| c.acos()).collect() } else { cuts };
        sk.breaks.sort_by(f64::total_cmp);
        Ok(sk)
    }

    /// Kernel value at `x·y = c`.
    pub fn at_cos(&self, c: f64) -> Result<f64> {
        let c = c.clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let mut x = vec![0.0; self.d];
        let mut y = vec![0.0; self.d];
        x[0] = self.ri;
        y[0] = self.rj * c;
        y[1] = self.rj * s;
        self.pair.eval(&x, &y)
    }

    /// `M_{i,j}(r_i e_α, r_j e_β)` on the circle.
    pub fn at_angles(&self, alpha: f64, beta: f64) -> Result<f64> {
        self.pair.eval(&[self.ri * alpha.cos(), self.ri * alpha.sin()], &[self.rj * beta.cos(), self.rj * beta.sin()])
    }

    /// Kernel breakpoints: angles in `[0, π]` for d = 2, cosines for d = 3.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// `λ_{i,j}(ν)` for `0 ≤ ν ≤ nu_max`, all degrees sharing one adaptive
    /// subdivision.
    pub fn lambdas(&self, nu_max: usize) -> Result<Vec<f64>> {
        let (a, b) = if self.d == 2 { (0.0, PI) } else { (-1.0, 1.0) };
        let d2 = self.d == 2;
        let f = |x: f64| -> Vec<f64> {
            let k = if d2 { self.at_cos(x.cos()) } else { self.at_cos(x) }.unwrap_or(f64::NAN);
            (0..=nu_max)
                .map(|nu| if d2 { 2.0 * k * (nu as f64 * x).cos() } else { 2.0 * PI * k * legendre(nu, x) })
                .collect()
        };
        let scale = if d2 { 2.0 * PI } else { 4.0 * PI } * self.pair.c_ij;
        let q = integrate_vec_with_breaks(f, a, b, &self.breaks, LAMBDA_TOL * scale, MAX_INTERVALS);
        if q.values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::computation("kernel evaluation failed"));
        }
        if !q.converged {
            return Err(LabError::computation(format!(
                "kernel eigenvalues for pair ({}, {}) did not converge (error {:.2e})",
                self.i + 1,
                self.j + 1,
                q.error
            )));
        }
        Ok(q.values)
    }

    /// `(T_{i,j} F)(β) = ∫ M_{i,j}(r_i e_α, r_j e_β) F(α) dα` on the circle,
    /// evaluated with the kernel at the actual pair of points.
    pub fn apply<F: Fn(f64) -> f64 + Sync>(&self, f: F, beta: f64) -> Result<f64> {
        if self.d != 2 {
            return Err(LabError::argument("operator application is implemented on the circle"));
        }
        let mut breaks = Vec::new();
        for &b in &self.breaks {
            breaks.push(beta - b);
            breaks.push(beta + b);
        }
        let f = |alpha: f64| self.at_angles(alpha, beta).unwrap_or(f64::NAN) * f(alpha);
        let q = integrate_with_breaks(f, beta - PI, beta + PI, &breaks, LAMBDA_TOL * 2.0 * PI * self.pair.c_ij, 0.0, MAX_INTERVALS);
        if !q.value.is_finite() {
            return Err(LabError::computation("kernel evaluation failed"));
        }
        Ok(q.value)
    }
}

/// Matrix entries `⟨T_{i,j} Y_a, Y_b⟩` for the degree `ν` and `μ` bases, by
/// applying the operator on an equispaced grid and projecting.
pub fn coupling_matrix(k: &SphereKernel, nu: usize, mu: usize, samples: usize) -> Result<[[f64; 2]; 2]> {
    let mut out = [[0.0; 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        let f = |t: f64| crate::harmonics::basis(nu, t)[a];
        let vals = (0..samples)
            .into_par_iter()
            .map(|q| k.apply(f, 2.0 * PI * q as f64 / samples as f64))
            .collect::<Result<Vec<f64>>>()?;
        *row = project_pi_nu(&vals, mu)?;
    }
    Ok(out)
}

/// Per-pair kernels with cached eigenvalues.
pub struct SpectralContext {
    pub d: usize,
    pub len: usize,
    kernels: BTreeMap<(usize, usize), SphereKernel>,
    cache: Mutex<BTreeMap<(usize, usize), Vec<f64>>>,
}

impl SpectralContext {
    pub fn new(fam: &LinearFamily, spec: &MeasureSpec) -> Result<Self> {
        spec.check_family(fam)?;
        let n = fam.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let kernels = pairs
            .into_iter()
            .map(|(i, j)| Ok(((i, j), SphereKernel::new(fam, spec, i, j)?)))
            .collect::<Result<_>>()?;
        Ok(SpectralContext { d: spec.d, len: n, kernels, cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn kernel(&self, i: usize, j: usize) -> &SphereKernel {
        &self.kernels[&(i.min(j), i.max(j))]
    }

    /// `λ_{i,j}(ν)`, symmetric in `(i, j)`.
    pub fn lambda(&self, i: usize, j: usize, nu: usize) -> Result<f64> {
        if i == j || i >= self.len || j >= self.len {
            return Err(LabError::argument("λ_{i,j} needs distinct valid indices"));
        }
        let key = (i.min(j), i.max(j));
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key).filter(|v| v.len() > nu) {
            return Ok(v[nu]);
        }
        let want = nu.max(32);
        let v = self.kernels[&key].lambdas(want)?;
        let out = v[nu];
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(out)
    }

    /// Off-diagonal matrix of `λ_{i,j}(ν)`, zero diagonal.
    pub fn matrix(&self, nu: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.len;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let l = self.lambda(i, j, nu)?;
                m[i][j] = l;
                m[j][i] = l;
            }
        }
        Ok(m)
    }

    /// `Q(G) = Σ_{i<j} λ_{i,j}(ν)⟨G_i, G_j⟩`.
    pub fn eval_q(&self, g: &HarmonicTuple) -> Result<f64> {
        if g.len() != self.len {
            return Err(LabError::argument("harmonic tuple length differs from the family"));
        }
        let mut q = 0.0;
        for i in 0..self.len {
            for j in i + 1..self.len {
                let ip = g.inner(i, j);
                if ip != 0.0 {
                    q += self.lambda(i, j, g.nu)? * ip;
                }
            }
        }
        Ok(q)
    }

    /// `Q(G)` from the double integral of the kernel against the sampled
    /// components (d = 2).
    pub fn eval_q_direct(&self, g: &HarmonicTuple, samples: usize) -> Result<f64> {
        if self.d != 2 {
            return Err(LabError::argument("direct evaluation of Q is implemented for d = 2"));
        }
        if 2 * g.nu >= samples {
            return Err(LabError::argument("too few samples for the harmonic degree"));
        }
        let mut q = 0.0;
        for i in 0..self.len {
            for j in i + 1..self.len {
                if g.component_norm_sq(i) == 0.0 || g.component_norm_sq(j) == 0.0 {
                    continue;
                }
                let k = self.kernel(i, j);
                let w = 2.0 * PI / samples as f64;
                let terms = (0..samples)
                    .into_par_iter()
                    .map(|s| {
                        let beta = 2.0 * PI * s as f64 / samples as f64;
                        Ok(g.eval(j, beta) * k.apply(|a| g.eval(i, a), beta)?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                q += w * terms.iter().sum::<f64>();
            }
        }
        Ok(q)
    }
}

/// Degree-wise spectral data for the balanced problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub nu: usize,
    /// `λ_{i,j}(ν)` for `i < j`, row by row.
    pub lambdas: Vec<f64>,
    /// Largest `Q(G)/Σ w_j‖G_j‖²` over balanced `G` of degree `ν`.
    pub a_nu: f64,
    /// The same ratio without the balancing constraint.
    pub unbalanced: f64,
    /// Optimal `Λ` in `|Q(G)| ≤ Λ Σ‖G_j‖²`.
    pub norm: f64,
    /// Maximizing balanced direction, one entry per index.
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub d: usize,
    pub jp: Vec<usize>,
    pub n: usize,
    pub gammas: Vec<f64>,
    pub radii: Vec<f64>,
    /// `w_j = γ_j r_j^{1−d}`.
    pub weights: Vec<f64>,
    pub degrees: Vec<DegreeReport>,
    /// `max_ν A_ν` over the computed degrees.
    pub a: f64,
    /// Fitted `Λ_ν ≈ C ν^{−p}` over the upper half of the degrees.
    pub decay: Option<(f64, f64)>,
    /// Bound on `A_ν` for all `ν > ν_max` from the fitted decay.
    pub tail_bound: Option<f64>,
}

impl SpectralReport {
    pub fn norm(&self, nu: usize) -> Option<f64> {
        self.degrees.iter().find(|r| r.nu == nu).map(|r| r.norm)
    }

    pub fn to_csv(&self) -> String {
        let n = self.radii.len();
        let mut s = String::from("nu");
        for i in 0..n {
            for j in i + 1..n {
                s.push_str(&format!(",lambda_{}_{}", i + 1, j + 1));
            }
        }
        s.push_str(",A_nu,unbalanced,Lambda_nu\n");
        for r in &self.degrees {
            s.push_str(&r.nu.to_string());
            for l in &r.lambdas {
                s.push_str(&format!(",{l:.12e}"));
            }
            s.push_str(&format!(",{:.12e},{:.12e},{:.12e}\n", r.a_nu, r.unbalanced, r.norm));
        }
        s
    }
}

/// Index set allowed to be nonzero in a balanced tuple of degree `ν`.
pub fn balanced_support(len: usize, jp: &[usize], n: usize, nu: usize) -> Vec<usize> {
    (0..len)
        .filter(|j| match nu {
            1 => !jp.contains(j),
            2 => *j != n,
            _ => true,
        })
        .collect()
}

/// `½ λ_max(W^{−½} M W^{−½})` on the coordinates `keep`, with its maximizer.
fn weighted_max(m: &[Vec<f64>], w: &[f64], keep: &[usize]) -> (f64, Vec<f64>) {
    let n = m.len();
    if keep.is_empty() {
        return (0.0, vec![0.0; n]);
    }
    let sub = nalgebra::DMatrix::from_fn(keep.len(), keep.len(), |a, b| {
        m[keep[a]][keep[b]] / (w[keep[a]] * w[keep[b]]).sqrt()
    });
    let eig = nalgebra::SymmetricEigen::new(sub);
    let (k, &top) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut dir = vec![0.0; n];
    for (a, &j) in keep.iter().enumerate() {
        dir[j] = eig.eigenvectors[(a, k)] / w[j].sqrt();
    }
    (0.5 * top, dir)
}

fn fit_decay(degrees: &[DegreeReport]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = degrees
        .iter()
        .skip(degrees.len() / 2)
        .filter(|r| r.norm > 1e-14)
        .map(|r| ((r.nu as f64).ln(), r.norm.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    // Envelope constant so every fitted point lies below C ν^{slope}.
    let c = pts.iter().map(|p| (p.1 - slope * p.0).exp()).fold(0.0, f64::max);
    Some((c, -slope))
}

/// Balanced spectral gap for degrees `1..=nu_max`.
pub fn balanced_gap(
    fam: &LinearFamily,
    spec: &MeasureSpec,
    jp: &[usize],
    n: usize,
    nu_max: usize,
) -> Result<SpectralReport> {
    let ctx = SpectralContext::new(fam, spec)?;
    balanced_gap_with(&ctx, fam, spec, jp, n, nu_max)
}

pub fn balanced_gap_with(
    ctx: &SpectralContext,
    fam: &LinearFamily,
    spec: &MeasureSpec,
    jp: &[usize],
    n: usize,
    nu_max: usize,
) -> Result<SpectralReport> {
    if nu_max == 0 {
        return Err(LabError::argument("ν_max must be at least 1"));
    }
    if jp.len() != fam.m() || !jp.contains(&n) || jp.iter().any(|&j| j >= fam.len()) {
        return Err(LabError::argument("J′ must hold m valid indices and contain n"));
    }
    let rows: Vec<Vec<f64>> = jp.iter().map(|&j| fam.row(j).to_vec()).collect();
    if linalg::rank(&rows) < fam.m() {
        return Err(LabError::argument("the maps indexed by J′ are not independent"));
    }
    let d = spec.d;
    let gammas = kernels::gammas(fam, spec)?;
    let radii = spec.radii();
    let weights: Vec<f64> = gammas.iter().zip(&radii).map(|(g, r)| g * r.powi(1 - d as i32)).collect();
    for (i, j) in ctx.kernels.keys() {
        ctx.lambda(*i, *j, nu_max)?;
    }
    let len = fam.len();
    let degrees = (1..=nu_max)
        .map(|nu| {
            let m = ctx.matrix(nu)?;
            let keep = balanced_support(len, jp, n, nu);
            let (a_nu, direction) = weighted_max(&m, &weights, &keep);
            let all: Vec<usize> = (0..len).collect();
            let (unbalanced, _) = weighted_max(&m, &weights, &all);
            let norm = 0.5 * linalg::symmetric_eigenvalues(&m).iter().map(|x| x.abs()).fold(0.0, f64::max);
            let lambdas = (0..len).flat_map(|i| (i + 1..len).map(move |j| (i, j))).map(|(i, j)| m[i][j]).collect();
            Ok(DegreeReport { nu, lambdas, a_nu, unbalanced, norm, direction })
        })
        .collect::<Result<Vec<_>>>()?;
    let a = degrees.iter().map(|r| r.a_nu).fold(f64::NEG_INFINITY, f64::max);
    let decay = fit_decay(&degrees);
    let wmin = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    let tail_bound = decay.map(|(c, p)| c * ((nu_max + 1) as f64).powf(-p) / wmin);
    Ok(SpectralReport { d, jp: jp.to_vec(), n, gammas, radii, weights, degrees, a, decay, tail_bound })
}

/// `P` from a homogeneous `G(x₁, x₂)`: the part odd in `x₂`, divided by `x₂`,
/// with `x₂² = r² − x₁²`, scaled by `r^{−ν}`.
pub fn extract_p(g: &Poly2, r: f64) -> Poly1 {
    let nu = g.deg;
    let mut out = vec![0.0; nu + 1];
    for (k, &ck) in g.c.iter().enumerate() {
        if k % 2 == 0 || ck == 0.0 {
            continue;
        }
        // c_k x₁^{ν−k} (r² − x₁²)^{(k−1)/2}
        let half = (k - 1) / 2;
        let mut binom = 1.0;
        for q in 0..=half {
            let coef = binom * r.powi(2 * (half - q) as i32) * if q % 2 == 0 { 1.0 } else { -1.0 };
            out[nu - k + 2 * q] += ck * coef;
            binom = binom * (half - q) as f64 / (q + 1) as f64;
        }
    }
    let scale = r.powi(-(nu as i32));
    Poly1 { c: out.into_iter().map(|v| v * scale).collect() }
}

/// `P_j` for every component of a harmonic tuple.
pub fn extract_all(g: &HarmonicTuple, spec: &MeasureSpec) -> Result<Vec<Poly1>> {
    if spec.d != 2 || g.len() != spec.len() {
        return Err(LabError::argument("polynomial shadows need d = 2 and matching lengths"));
    }
    let radii = spec.radii();
    Ok((0..g.len()).map(|j| extract_p(&g.polynomial(j), radii[j])).collect())
}

/// Distance from `(P_j(y_j))_j` to the image `Λ₁` of the coefficient matrix,
/// at `y = A x`.
pub fn p_sharp(polys: &[Poly1], fam: &LinearFamily, x: &[f64]) -> Result<f64> {
    if polys.len() != fam.len() || x.len() != fam.m() {
        return Err(LabError::argument("p_sharp needs one polynomial per map and x ∈ R^m"));
    }
    let y = linalg::mat_vec(fam.coeffs(), x);
    let v: Vec<f64> = polys.iter().zip(&y).map(|(p, &yj)| p.eval(yj)).collect();
    let proj = linalg::project_onto_columns(fam.coeffs(), &v);
    Ok(v.iter().zip(&proj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Mean of `P_♯²` over the unit sphere of `R^m`: exact trapezoid on the
/// circle for `m = 2`, seeded sampling otherwise.
pub fn p_sharp_energy(polys: &[Poly1], fam: &LinearFamily) -> Result<f64> {
    let m = fam.m();
    let pts: Vec<Vec<f64>> = if m == 2 {
        (0..256).map(|k| {
            let t = 2.0 * PI * k as f64 / 256.0;
            vec![t.cos(), t.sin()]
        }).collect()
    } else {
        let mut r = rng::stream(rng::derive_seed(0, "p_sharp"), 0);
        (0..4096)
            .map(|_| {
                let v: Vec<f64> = (0..m).map(|_| rng::normal(&mut r)).collect();
                let n = linalg::norm(&v);
                v.into_iter().map(|x| x / n).collect()
            })
            .collect()
    };
    let mut s = 0.0;
    for x in &pts {
        s += p_sharp(polys, fam, x)?.powi(2);
    }
    Ok(s / pts.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationCertificate {
    pub alpha: f64,
    pub trials: usize,
    pub energy: f64,
    pub threshold: f64,
}

/// Searches rotations `α` with `P_♯(R_α G) ≢ 0`; the identity is tried first.
pub fn find_rotation_nonvanishing(
    g: &HarmonicTuple,
    fam: &LinearFamily,
    spec: &MeasureSpec,
    seed: u64,
    max_trials: usize,
) -> Result<RotationCertificate> {
    if g.is_zero() {
        return Err(LabError::argument("the harmonic tuple must be nonzero"));
    }
    let threshold = 1e-12 * g.norm_sq();
    let mut r = rng::stream(rng::derive_seed(seed, "rotation"), 0);
    for trial in 1..=max_trials {
        let alpha = if trial == 1 { 0.0 } else { rng::uniform(&mut r, 0.0, 2.0 * PI) };
        let polys = extract_all(&g.rotated(alpha), spec)?;
        let energy = p_sharp_energy(&polys, fam)?;
        if energy > threshold {
            return Ok(RotationCertificate { alpha, trials: trial, energy, threshold });
        }
    }
    Err(LabError::violation(format!("P_♯ vanished for {max_trials} rotations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs2() -> (LinearFamily, MeasureSpec) {
        (LinearFamily::riesz_sobolev(2), MeasureSpec::new(vec![PI; 3], 2).unwrap())
    }

    /// Translation tuple for `v`: `G_j(θ) = r_j (L_j v)·θ`.
    fn translation(fam: &LinearFamily, spec: &MeasureSpec, v: &[f64]) -> HarmonicTuple {
        let r = spec.radii();
        let coeffs = (0..fam.len())
            .map(|j| {
                let w = fam.eval(j, v).unwrap();
                [r[j] * PI.sqrt() * w[0], r[j] * PI.sqrt() * w[1]]
            })
            .collect();
        HarmonicTuple::new(1, coeffs).unwrap()
    }

    #[test]
    fn projections() {
        let n = 256;
        let th: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let f: Vec<f64> = th.iter().map(|t| (3.0 * t).cos()).collect();
        let c = project_pi_nu(&f, 3).unwrap();
        assert!((c[0] - PI.sqrt()).abs() < 1e-12 && c[1].abs() < 1e-12);
        for nu in [0, 1, 2, 4, 7] {
            let c = project_pi_nu(&f, nu).unwrap();
            assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        }
        let one = vec![2.5; n];
        assert!((1..10).all(|nu| project_pi_nu(&one, nu).unwrap().iter().all(|v| v.abs() < 1e-12)));
        assert!(project_pi_nu(&one, 128).is_err());
        let back = project_values(&f, 3).unwrap();
        assert!(back.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn parseval_on_smooth_functions() {
        let n = 512;
        let f: Vec<f64> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                (t.cos()).exp() * (1.0 + 0.3 * (2.0 * t).sin())
            })
            .collect();
        let total: f64 = f.iter().map(|v| v * v).sum::<f64>() * 2.0 * PI / n as f64;
        let parts: f64 =
            (0..n / 2).map(|nu| project_pi_nu(&f, nu).unwrap().iter().map(|c| c * c).sum::<f64>()).sum();
        assert!((total - parts).abs() < 1e-8, "{total} vs {parts}");
    }

    #[test]
    fn riesz_sobolev_eigenvalues_are_arc_coefficients() {
        let (fam, spec) = rs2();
        let k = SphereKernel::new(&fam, &spec, 0, 1).unwrap();
        let l = k.lambdas(32).unwrap();
        for nu in 1..=32 {
            let exact = -(2.0 / nu as f64) * (2.0 * PI * nu as f64 / 3.0).sin();
            assert!((l[nu] - exact).abs() < 1e-10, "ν={nu}: {} vs {exact}", l[nu]);
        }
        assert!((l[1] + 3f64.sqrt()).abs() < 1e-10);
        let k13 = SphereKernel::new(&fam, &spec, 0, 2).unwrap().lambdas(8).unwrap();
        for nu in 1..=8 {
            let exact = (2.0 / nu as f64) * (PI * nu as f64 / 3.0).sin();
            assert!((k13[nu] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn three_dimensional_eigenvalues_follow_funk_hecke() {
        let fam = LinearFamily::riesz_sobolev(3);
        let spec = MeasureSpec::from_radii(&[1.0, 1.0, 1.0], 3).unwrap();
        let k = SphereKernel::new(&fam, &spec, 0, 1).unwrap();
        let l = k.lambdas(6).unwrap();
        // 2π ∫_{−1}^{−1/2} P_ν = 2π (P_{ν+1} − P_{ν−1})(−½)/(2ν+1).
        for nu in 1..=6 {
            let exact = 2.0 * PI * (legendre(nu + 1, -0.5) - legendre(nu - 1, -0.5)) / (2 * nu + 1) as f64;
            assert!((l[nu] - exact).abs() < 1e-10, "ν={nu}");
        }
    }

    #[test]
    fn scalar_action_and_cross_degree_couplings() {
        let (fam, spec) = rs2();
        let k = SphereKernel::new(&fam, &spec, 0, 1).unwrap();
        let l = k.lambdas(8).unwrap();
        for nu in 1..=4 {
            for mu in 1..=4 {
                let c = coupling_matrix(&k, nu, mu, 64).unwrap();
                if nu == mu {
                    assert!((c[0][0] - l[nu]).abs() < 1e-8 && (c[1][1] - l[nu]).abs() < 1e-8);
                    assert!(c[0][1].abs() < 1e-8 && c[1][0].abs() < 1e-8);
                } else {
                    assert!(c.iter().flatten().all(|v| v.abs() < 1e-8), "{nu},{mu}: {c:?}");
                }
            }
        }
    }

    #[test]
    fn q_properties() {
        let (fam, spec) = rs2();
        let ctx = SpectralContext::new(&fam, &spec).unwrap();
        let single = HarmonicTuple::new(3, vec![[1.0, 0.5], [0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(ctx.eval_q(&single).unwrap(), 0.0);
        let g = HarmonicTuple::new(2, vec![[1.0, 0.2], [-0.4, 0.7], [0.0, 0.0]]).unwrap();
        let swapped = HarmonicTuple::new(2, vec![g.coeffs[1], g.coeffs[0], [0.0, 0.0]]).unwrap();
        assert!((ctx.eval_q(&g).unwrap() - ctx.eval_q(&swapped).unwrap()).abs() < 1e-12);
        let full = HarmonicTuple::new(2, vec![[1.0, 0.2], [-0.4, 0.7], [0.3, -0.5]]).unwrap();
        let direct = ctx.eval_q_direct(&full, 32).unwrap();
        assert!((direct - ctx.eval_q(&full).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn translation_saturates_the_form() {
        let (fam, spec) = rs2();
        let ctx = SpectralContext::new(&fam, &spec).unwrap();
        let gam = kernels::gammas(&fam, &spec).unwrap();
        for v in [[1.0, 0.0, 0.0, 1.0], [0.3, -0.2, 0.5, 0.9]] {
            let g = translation(&fam, &spec, &v);
            let w: f64 = (0..3).map(|j| gam[j] * g.component_norm_sq(j)).sum();
            assert!((ctx.eval_q(&g).unwrap() / w - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn riesz_sobolev_gap() {
        let (fam, spec) = rs2();
        let (jp, n) = fam.select_independent_subset().unwrap();
        let rep = balanced_gap(&fam, &spec, &jp, n, 32).unwrap();
        assert!(rep.a <= 0.49, "{}", rep.a);
        assert!((rep.degrees[0].unbalanced - 0.5).abs() < 1e-3);
        assert!(rep.norm(32).unwrap() < rep.norm(1).unwrap() / 10.0);
        assert!(rep.tail_bound.unwrap() < 0.5);
        // The gap bounds every explicit balanced ratio.
        let ctx = SpectralContext::new(&fam, &spec).unwrap();
        let mut r = rng::stream(3, 0);
        for nu in 1..=6 {
            for _ in 0..5 {
                let mut c: Vec<[f64; 2]> =
                    (0..3).map(|_| [rng::normal(&mut r), rng::normal(&mut r)]).collect();
                for j in 0..3 {
                    if !balanced_support(3, &jp, n, nu).contains(&j) {
                        c[j] = [0.0; 2];
                    }
                }
                let g = HarmonicTuple::new(nu, c).unwrap();
                let w: f64 = (0..3).map(|j| rep.weights[j] * g.component_norm_sq(j)).sum();
                if w > 0.0 {
                    assert!(ctx.eval_q(&g).unwrap() / w <= rep.a + 1e-12);
                }
            }
        }
    }

    #[test]
    fn polynomial_shadows() {
        let p = extract_p(&Poly2 { deg: 2, c: vec![0.0, 1.0, 0.0] }, 1.0);
        assert_eq!(p.c, vec![0.0, 1.0, 0.0]);
        assert!(extract_p(&Poly2 { deg: 2, c: vec![1.0, 0.0, -1.0] }, 1.0).is_zero(0.0));
        let p = extract_p(&Poly2 { deg: 1, c: vec![0.0, 1.0] }, 1.0);
        assert_eq!(p.eval(0.3), 1.0);
        // x₂³ on radius 2: (4 − x₁²)/8.
        let p = extract_p(&Poly2 { deg: 3, c: vec![0.0, 0.0, 0.0, 1.0] }, 2.0);
        assert!((p.eval(1.0) - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn p_sharp_of_translations_vanishes() {
        let (fam, spec) = rs2();
        let g = translation(&fam, &spec, &[0.3, -0.2, 0.5, 0.9]);
        let polys = extract_all(&g, &spec).unwrap();
        assert!(p_sharp_energy(&polys, &fam).unwrap() < 1e-24);
        assert_eq!(p_sharp_energy(&extract_all(&HarmonicTuple::zero(2, 3), &spec).unwrap(), &fam).unwrap(), 0.0);
    }

    #[test]
    fn rotation_search() {
        let (fam, spec) = rs2();
        let single = HarmonicTuple::new(3, vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
        let cert = find_rotation_nonvanishing(&single, &fam, &spec, 1, 8).unwrap();
        assert!(cert.energy > cert.threshold);
        let b2 = HarmonicTuple::new(2, vec![[0.0, 0.0], [0.4, 1.0], [-0.3, 0.2]]).unwrap();
        let cert = find_rotation_nonvanishing(&b2, &fam, &spec, 1, 8).unwrap();
        assert!(cert.trials <= 8);
        assert!(find_rotation_nonvanishing(&HarmonicTuple::zero(2, 3), &fam, &spec, 1, 8).is_err());
    }

    #[test]
    fn fiber_kernels_have_scalar_action() {
        // m = 3: the pair kernel carries a genuine fiber factor.
        let fam = LinearFamily::new(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]],
            2,
        )
        .unwrap();
        let spec = MeasureSpec::new(vec![PI; 4], 2).unwrap();
        let k = SphereKernel::new(&fam, &spec, 0, 1).unwrap();
        assert!(!k.pair.rest.is_empty());
        let l = k.lambdas(4).unwrap();
        let c = coupling_matrix(&k, 2, 2, 16).unwrap();
        assert!((c[0][0] - l[2]).abs() < 1e-6 * l[0].abs(), "{c:?} vs {}", l[2]);
        let x = coupling_matrix(&k, 2, 3, 16).unwrap();
        assert!(x.iter().flatten().all(|v| v.abs() < 1e-6 * l[0].abs()));
    }
}
