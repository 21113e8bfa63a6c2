//! Slice-volume kernels.
//!
//! `K_j` is the density at `L_j x = (t, 0, …, 0)` of the push-forward under
//! `L_j` of `Π_{i≠j} 1_{B_i}(L_i x)`, where `B_i` is the centered ball of
//! measure `e_i`. `M_{i,j}(x, y)` is the analogous density with both `L_i x = x`
//! and `L_j x = y` fixed.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::family::{LinearFamily, MeasureSpec};
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome};
use crate::slice::{Slice, SliceOptions, SliceVolume};

/// Finite-difference steps, refined by Richardson extrapolation.
pub const FD_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
/// A one-sided derivative counts as strictly negative below `-DERIVATIVE_THRESHOLD`.
pub const DERIVATIVE_THRESHOLD: f64 = 1e-6;
/// Relative tolerance for agreement of the two one-sided derivatives.
pub const TWO_SIDED_TOL: f64 = 1e-3;

fn check(fam: &LinearFamily, spec: &MeasureSpec, j: usize) -> Result<()> {
    spec.check_family(fam)?;
    if j >= fam.len() {
        return Err(LabError::argument(format!("index {j} out of range")));
    }
    Ok(())
}

/// The slice whose volume, times `|a_j|^{-d}`, is `K_j(t)`.
fn k_slice(fam: &LinearFamily, spec: &MeasureSpec, j: usize, t: f64) -> Result<(Slice, f64)> {
    let m = fam.m();
    let d = spec.d;
    let aj = fam.row(j).to_vec();
    let nj2 = linalg::dot(&aj, &aj);
    let basis = linalg::null_space(std::slice::from_ref(&aj), m);
    if basis.len() != m - 1 {
        return Err(LabError::structural("zero row: L_j is not surjective"));
    }
    let radii = spec.radii();
    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut r = Vec::new();
    for i in (0..fam.len()).filter(|&i| i != j) {
        let ai = fam.row(i);
        g.push(basis.iter().map(|b| linalg::dot(b, ai)).collect::<Vec<f64>>());
        let mut hi = vec![0.0; d];
        hi[0] = t * linalg::dot(ai, &aj) / nj2;
        h.push(hi);
        r.push(radii[i]);
    }
    let rows: Vec<Vec<f64>> = g.clone();
    if m > 1 && linalg::rank(&rows) < m - 1 {
        return Err(LabError::structural(
            "degenerate fiber: the maps other than L_j do not control the fiber",
        ));
    }
    Ok((Slice { n: m - 1, d, g, h, r }, nj2.sqrt().powi(d as i32).recip()))
}

/// `K_j(t)` with an error estimate.
pub fn eval_k_with(
    fam: &LinearFamily,
    spec: &MeasureSpec,
    j: usize,
    t: f64,
    opts: &SliceOptions,
) -> Result<SliceVolume> {
    check(fam, spec, j)?;
    let (slice, pref) = k_slice(fam, spec, j, t.abs())?;
    let v = slice.volume(opts)?;
    Ok(SliceVolume { value: pref * v.value, error: pref * v.error, monte_carlo: v.monte_carlo })
}

pub fn eval_k(fam: &LinearFamily, spec: &MeasureSpec, j: usize, t: f64) -> Result<f64> {
    Ok(eval_k_with(fam, spec, j, t, &SliceOptions::default())?.value)
}

/// Largest `|L_j x|` over `{|L_i x| ≤ r_i, i ≠ j}`.
pub fn support_radius(fam: &LinearFamily, spec: &MeasureSpec, j: usize) -> Result<f64> {
    check(fam, spec, j)?;
    let radii = spec.radii();
    let mut lp = LinearProgram::new(fam.row(j).to_vec());
    for i in (0..fam.len()).filter(|&i| i != j) {
        lp = lp
            .le(fam.row(i).to_vec(), radii[i])
            .le(fam.row(i).iter().map(|v| -v).collect(), radii[i]);
    }
    match lp.maximize()? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Unbounded => Err(LabError::structural("kernel support is unbounded")),
        LpOutcome::Infeasible => Err(LabError::computation("support LP infeasible")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub at: f64,
    pub value: f64,
    pub error: f64,
    /// Raw difference quotients for each step in [`FD_STEPS`].
    pub quotients: Vec<f64>,
}

impl DerivativeEstimate {
    pub fn strictly_negative(&self) -> bool {
        self.value < -DERIVATIVE_THRESHOLD && self.value + 3.0 * self.error < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LeftDerivative {
    Estimate(DerivativeEstimate),
    /// The kernel vanishes at the evaluation point.
    NotApplicable { at: f64 },
}

impl LeftDerivative {
    pub fn estimate(&self) -> Option<&DerivativeEstimate> {
        match self {
            LeftDerivative::Estimate(e) => Some(e),
            LeftDerivative::NotApplicable { .. } => None,
        }
    }
}

/// Richardson-refined one-sided derivative of `f` at `t0`; `side = -1` looks left.
pub fn one_sided_derivative<F: Fn(f64) -> Result<f64>>(f: F, t0: f64, side: f64) -> Result<DerivativeEstimate> {
    let f0 = f(t0)?;
    let mut q = Vec::with_capacity(FD_STEPS.len());
    for &h in &FD_STEPS {
        q.push(side * (f(t0 + side * h)? - f0) / h);
    }
    // Steps halve, so first-order errors cancel with weights (2, −1),
    // second-order ones with (4, −1)/3.
    let r1a = 2.0 * q[1] - q[0];
    let r1b = 2.0 * q[2] - q[1];
    let r2 = (4.0 * r1b - r1a) / 3.0;
    let error = (r2 - r1b).abs().max(1e-12);
    Ok(DerivativeEstimate { at: t0, value: r2, error, quotients: q })
}

/// `D⁻K_j` at the boundary value `t = r_j` (`= e_j/2` when `d = 1`).
pub fn left_derivative(fam: &LinearFamily, spec: &MeasureSpec, j: usize) -> Result<LeftDerivative> {
    check(fam, spec, j)?;
    let t0 = spec.radii()[j];
    left_derivative_at(fam, spec, j, t0)
}

pub fn left_derivative_at(fam: &LinearFamily, spec: &MeasureSpec, j: usize, t0: f64) -> Result<LeftDerivative> {
    let k0 = eval_k(fam, spec, j, t0)?;
    if k0 <= 1e-13 {
        return Ok(LeftDerivative::NotApplicable { at: t0 });
    }
    if t0 == 0.0 {
        // Radial symmetry makes the origin a critical point.
        return Ok(LeftDerivative::Estimate(DerivativeEstimate {
            at: 0.0,
            value: 0.0,
            error: 0.0,
            quotients: Vec::new(),
        }));
    }
    let est = one_sided_derivative(|t| eval_k(fam, spec, j, t), t0, -1.0)?;
    Ok(LeftDerivative::Estimate(est))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub j: usize,
    pub gamma: f64,
    pub left: DerivativeEstimate,
    pub right: DerivativeEstimate,
    /// Whether the one-sided derivatives agree within [`TWO_SIDED_TOL`].
    pub differentiable: bool,
}

/// `γ_j = |∇K_j|` on the sphere of radius `r_j`, for `d ≥ 2`.
pub fn gamma(fam: &LinearFamily, spec: &MeasureSpec, j: usize) -> Result<Gamma> {
    check(fam, spec, j)?;
    if spec.d < 2 {
        return Err(LabError::argument("γ_j is defined for d ≥ 2"));
    }
    let t0 = spec.radii()[j];
    let left = match left_derivative_at(fam, spec, j, t0)? {
        LeftDerivative::Estimate(e) => e,
        LeftDerivative::NotApplicable { .. } => {
            return Err(LabError::structural(format!("K_{} vanishes at r_{}", j + 1, j + 1)))
        }
    };
    let right = one_sided_derivative(|t| eval_k(fam, spec, j, t), t0, 1.0)?;
    let differentiable =
        (left.value - right.value).abs() <= TWO_SIDED_TOL * left.value.abs().max(1.0);
    let gamma = -0.5 * (left.value + right.value);
    Ok(Gamma { j, gamma, left, right, differentiable })
}

/// All `γ_j`, failing unless each is positive and two-sided.
pub fn gammas(fam: &LinearFamily, spec: &MeasureSpec) -> Result<Vec<f64>> {
    (0..fam.len())
        .map(|j| {
            let g = gamma(fam, spec, j)?;
            if !g.differentiable {
                return Err(LabError::structural(format!(
                    "one-sided derivatives of K_{} disagree ({} vs {}); pair may not be strictly admissible",
                    j + 1,
                    g.left.value,
                    g.right.value
                )));
            }
            if g.gamma <= DERIVATIVE_THRESHOLD {
                return Err(LabError::structural(format!("γ_{} is not positive", j + 1)));
            }
            Ok(g.gamma)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub j: usize,
    pub d: usize,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub support_radius: f64,
    pub left_derivative: Option<f64>,
}

/// `K_j` on `points` equispaced radii covering `[0, support]`.
pub fn profile(fam: &LinearFamily, spec: &MeasureSpec, j: usize, points: usize) -> Result<KernelProfile> {
    use rayon::prelude::*;
    if points < 2 {
        return Err(LabError::argument("profile needs at least two points"));
    }
    let support = support_radius(fam, spec, j)?;
    let t: Vec<f64> = (0..points).map(|i| support * i as f64 / (points - 1) as f64).collect();
    let values = t
        .par_iter()
        .map(|&ti| eval_k(fam, spec, j, ti))
        .collect::<Result<Vec<f64>>>()?;
    let left_derivative = left_derivative(fam, spec, j)?.estimate().map(|e| e.value);
    Ok(KernelProfile { j, d: spec.d, t, values, support_radius: support, left_derivative })
}

impl KernelProfile {
    /// Largest second difference of `log K` over consecutive positive triples.
    pub fn log_concavity_defect(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for w in self.values.windows(3) {
            if w.iter().all(|&v| v > 1e-12) {
                worst = worst.max(w[0].ln() - 2.0 * w[1].ln() + w[2].ln());
            }
        }
        worst
    }

    /// Largest increase between consecutive values.
    pub fn monotonicity_defect(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_columns(&self) -> String {
        let mut s = String::from("t,K\n");
        for (t, v) in self.t.iter().zip(&self.values) {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }
}

/// The two-point kernel `M_{i,j}`.
#[derive(Debug, Clone)]
pub struct PairKernel {
    pub i: usize,
    pub j: usize,
    pub d: usize,
    /// Jacobian constant `det(G Gᵀ)^{-d/2}` with `G` the rows `a_i, a_j`.
    pub c_ij: f64,
    /// Maps in the span of `L_i, L_j` (indicator factor).
    pub span: Vec<usize>,
    /// Remaining maps (fiber-integral factor).
    pub rest: Vec<usize>,
    rows: Vec<Vec<f64>>,
    pinv: Vec<Vec<f64>>,
    null: Vec<Vec<f64>>,
    radii: Vec<f64>,
    opts: SliceOptions,
}

impl PairKernel {
    pub fn new(fam: &LinearFamily, spec: &MeasureSpec, i: usize, j: usize) -> Result<Self> {
        check(fam, spec, i)?;
        check(fam, spec, j)?;
        if i == j {
            return Err(LabError::argument("pair kernel needs i ≠ j"));
        }
        let m = fam.m();
        let d = spec.d;
        let g = vec![fam.row(i).to_vec(), fam.row(j).to_vec()];
        let ggt = linalg::mat_mul(&g, &linalg::transpose(&g));
        let det = linalg::det(&ggt);
        if det <= 0.0 {
            return Err(LabError::structural("L_i and L_j are proportional"));
        }
        let inv = linalg::inverse(&ggt).ok_or_else(|| LabError::structural("singular pair"))?;
        let pinv = linalg::mat_mul(&linalg::transpose(&g), &inv);
        let null = linalg::null_space(&g, m);
        let mut span = Vec::new();
        let mut rest = Vec::new();
        for k in (0..fam.len()).filter(|&k| k != i && k != j) {
            let rows = vec![g[0].clone(), g[1].clone(), fam.row(k).to_vec()];
            if linalg::rank(&rows) == 2 {
                span.push(k);
            } else {
                rest.push(k);
            }
        }
        Ok(PairKernel {
            i,
            j,
            d,
            c_ij: det.powf(-(d as f64) / 2.0),
            span,
            rest,
            rows: fam.coeffs().to_vec(),
            pinv,
            null,
            radii: spec.radii(),
            opts: SliceOptions { rel_tol: 1e-10, mc_samples: 1 << 18, seed: 0x5eed },
        })
    }

    /// `M_{i,j}(x, y)` for `x, y ∈ R^d`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.d;
        if x.len() != d || y.len() != d {
            return Err(LabError::argument("pair kernel arguments must lie in R^d"));
        }
        // Minimum-norm particular solution, one block per coordinate.
        let u0: Vec<Vec<f64>> =
            (0..d).map(|c| linalg::mat_vec(&self.pinv, &[x[c], y[c]])).collect();
        let mut g = Vec::new();
        let mut h = Vec::new();
        let mut r = Vec::new();
        for k in self.span.iter().chain(&self.rest) {
            let ak = &self.rows[*k];
            let gk: Vec<f64> = if self.span.contains(k) {
                vec![0.0; self.null.len()]
            } else {
                self.null.iter().map(|b| linalg::dot(b, ak)).collect()
            };
            g.push(gk);
            h.push(u0.iter().map(|u| linalg::dot(ak, u)).collect());
            r.push(self.radii[*k]);
        }
        let slice = Slice { n: self.null.len(), d, g, h, r };
        Ok(self.c_ij * slice.volume(&self.opts)?.value)
    }
}

/// Area of the intersection of disks of radii `r1`, `r2` at distance `t`.
pub fn lens_area(r1: f64, r2: f64, t: f64) -> f64 {
    use std::f64::consts::PI;
    let t = t.abs();
    if t >= r1 + r2 {
        return 0.0;
    }
    if t <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return PI * r * r;
    }
    let a1 = ((t * t + r1 * r1 - r2 * r2) / (2.0 * t * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((t * t + r2 * r2 - r1 * r1) / (2.0 * t * r2)).clamp(-1.0, 1.0).acos();
    let tri = 0.5 * ((-t + r1 + r2) * (t + r1 - r2) * (t - r1 + r2) * (t + r1 + r2)).max(0.0).sqrt();
    r1 * r1 * a1 + r2 * r2 * a2 - tri
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(d: usize, e: Vec<f64>) -> (LinearFamily, MeasureSpec) {
        (LinearFamily::riesz_sobolev(d), MeasureSpec::new(e, d).unwrap())
    }

    #[test]
    fn interval_convolution() {
        let (f, s) = rs(1, vec![1.0, 1.0, 1.0]);
        for &t in &[0.0, 0.25, 0.5, 0.9, 1.2] {
            let k = eval_k(&f, &s, 2, t).unwrap();
            assert!((k - (1.0 - t).max(0.0)).abs() < 1e-13, "t={t}: {k}");
        }
    }

    #[test]
    fn lens_kernel_in_the_plane() {
        let (f, s) = rs(2, vec![std::f64::consts::PI; 3]);
        for &t in &[0.0, 0.5, 1.0, 1.5] {
            let k = eval_k(&f, &s, 2, t).unwrap();
            let exact = 2.0 * (t / 2.0f64).acos() - (t / 2.0) * (4.0 - t * t).sqrt();
            assert!((k - exact).abs() < 1e-9, "t={t}: {k} vs {exact}");
            assert!((lens_area(1.0, 1.0, t) - exact).abs() < 1e-13);
        }
        assert_eq!(eval_k(&f, &s, 2, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn derivative_of_interval_kernel() {
        let (f, s) = rs(1, vec![1.0, 1.0, 1.0]);
        let e = left_derivative(&f, &s, 2).unwrap();
        let e = e.estimate().unwrap();
        assert!((e.value + 1.0).abs() < 1e-9);
        assert!(e.strictly_negative());
    }

    #[test]
    fn gamma_of_lens() {
        let (f, s) = rs(2, vec![std::f64::consts::PI; 3]);
        let g = gamma(&f, &s, 2).unwrap();
        assert!((g.gamma - 3f64.sqrt()).abs() < 1e-6, "{}", g.gamma);
        assert!(g.differentiable);
        let all = gammas(&f, &s).unwrap();
        for v in all {
            assert!((v - 3f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn origin_derivative_is_zero() {
        let (f, s) = rs(1, vec![1.0, 1.0, 1.0]);
        let e = left_derivative_at(&f, &s, 2, 0.0).unwrap();
        assert_eq!(e.estimate().unwrap().value, 0.0);
    }

    #[test]
    fn vanishing_kernel_is_not_applicable() {
        let (f, s) = rs(1, vec![1.0, 1.0, 2.0]);
        assert!(matches!(
            left_derivative(&f, &s, 2).unwrap(),
            LeftDerivative::NotApplicable { .. }
        ));
    }

    #[test]
    fn support_radius_is_lp_value() {
        let (f, s) = rs(1, vec![1.0, 1.0, 3.0]);
        assert!((support_radius(&f, &s, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((support_radius(&f, &s, 0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn riesz_sobolev_pair_kernel_is_indicator() {
        let (f, s) = rs(2, vec![std::f64::consts::PI; 3]);
        let pk = PairKernel::new(&f, &s, 0, 1).unwrap();
        assert_eq!(pk.c_ij, 1.0);
        assert_eq!(pk.span, vec![2]);
        assert_eq!(pk.eval(&[0.3, 0.0], &[0.5, 0.2]).unwrap(), 1.0);
        assert_eq!(pk.eval(&[0.9, 0.0], &[0.5, 0.2]).unwrap(), 0.0);
        assert_eq!(pk.eval(&[50.0, 0.0], &[-60.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn three_variable_pair_kernel_is_ball_convolution() {
        let f = LinearFamily::new(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 1.0, 1.0],
            ],
            2,
        )
        .unwrap();
        let s = MeasureSpec::from_radii(&[1.0, 1.0, 1.0, 1.2], 2).unwrap();
        let pk = PairKernel::new(&f, &s, 0, 1).unwrap();
        assert!(pk.span.is_empty());
        assert_eq!(pk.rest, vec![2, 3]);
        for (x, y) in [([0.1, 0.2], [0.3, -0.4]), ([0.9, 0.0], [0.4, 0.3])] {
            let z = ((x[0] + y[0]) as f64).hypot(x[1] + y[1]);
            let v = pk.eval(&x, &y).unwrap();
            assert!((v - lens_area(1.0, 1.2, z)).abs() < 1e-8, "{v}");
        }
    }
}
