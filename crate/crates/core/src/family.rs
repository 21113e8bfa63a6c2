//! Linear families `L = (L_j)` and target measures.
//!
//! Row `j` of the coefficient matrix holds `a_{1,j}, …, a_{m,j}`, so that
//! `L_j(x) = Σ_i a_{i,j} x_i` for `x = (x_1, …, x_m) ∈ (R^d)^m`. The same
//! coefficients are used in every dimension.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg;

/// Two rows count as proportional when every normalized 2×2 minor is below this.
pub const PROPORTIONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFamily {
    coeffs: Vec<Vec<f64>>,
    d: usize,
    labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    /// (i) every row nonzero.
    pub surjective: bool,
    pub zero_rows: Vec<usize>,
    /// (ii) no row a multiple of another.
    pub pairwise_independent: bool,
    pub proportional_pairs: Vec<(usize, usize)>,
    /// (iii) rows other than `j` span R^m for every `j`.
    pub complements_full_rank: bool,
    pub rank_deficient_complements: Vec<usize>,
    pub rank_tolerance: f64,
    pub pass: bool,
}

impl LinearFamily {
    pub fn new(coeffs: Vec<Vec<f64>>, d: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(LabError::argument("coefficient matrix has no rows"));
        }
        let m = coeffs[0].len();
        if m == 0 || coeffs.iter().any(|r| r.len() != m) {
            return Err(LabError::argument("coefficient rows must share a positive length"));
        }
        if coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LabError::argument("coefficients must be finite"));
        }
        if d == 0 {
            return Err(LabError::argument("dimension d must be at least 1"));
        }
        let labels = (1..=coeffs.len()).map(|j| j.to_string()).collect();
        Ok(LinearFamily { coeffs, d, labels })
    }

    /// The Riesz–Sobolev family `x₁, x₂, x₁ + x₂`.
    pub fn riesz_sobolev(d: usize) -> Self {
        Self::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], d).expect("valid")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.coeffs.len() {
            return Err(LabError::argument("one label per map is required"));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_dim(&self, d: usize) -> Result<Self> {
        Self::new(self.coeffs.clone(), d)?.with_labels(self.labels.clone())
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of source variables `m`.
    pub fn m(&self) -> usize {
        self.coeffs[0].len()
    }

    /// Number of maps `|J|`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn validate_nondegenerate(&self) -> Result<NondegeneracyReport> {
        let m = self.m();
        let n = self.len();
        if m < 2 {
            return Err(LabError::argument("nondegeneracy needs m ≥ 2"));
        }
        if n < m + 1 {
            return Err(LabError::structural(format!(
                "{n} maps cannot satisfy the complement-rank condition for m = {m}; it forces |J| ≥ m+1"
            )));
        }
        let zero_rows: Vec<usize> =
            (0..n).filter(|&j| self.coeffs[j].iter().all(|&v| v == 0.0)).collect();
        let mut proportional_pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if proportional(&self.coeffs[i], &self.coeffs[j]) {
                    proportional_pairs.push((i, j));
                }
            }
        }
        let rank_deficient: Vec<usize> = (0..n)
            .filter(|&j| {
                let rest: Vec<Vec<f64>> = (0..n)
                    .filter(|&i| i != j)
                    .map(|i| self.coeffs[i].clone())
                    .collect();
                linalg::rank(&rest) < m
            })
            .collect();
        let surjective = zero_rows.is_empty();
        let pairwise_independent = proportional_pairs.is_empty();
        let complements_full_rank = rank_deficient.is_empty();
        Ok(NondegeneracyReport {
            surjective,
            zero_rows,
            pairwise_independent,
            proportional_pairs,
            complements_full_rank,
            rank_deficient_complements: rank_deficient,
            rank_tolerance: linalg::RANK_RTOL,
            pass: surjective && pairwise_independent && complements_full_rank,
        })
    }

    /// Fails with a structural error unless all three conditions hold.
    pub fn require_nondegenerate(&self) -> Result<()> {
        let r = self.validate_nondegenerate()?;
        if r.pass {
            Ok(())
        } else {
            Err(LabError::structural(format!("family is degenerate: {r:?}")))
        }
    }

    /// `L_j(x)` for `x` given as `m` consecutive blocks of length `d`.
    pub fn eval(&self, j: usize, x: &[f64]) -> Result<Vec<f64>> {
        let (m, d) = (self.m(), self.d);
        if j >= self.len() {
            return Err(LabError::argument(format!("map index {j} out of range")));
        }
        if x.len() != m * d {
            return Err(LabError::argument(format!(
                "point has length {}, expected m·d = {}",
                x.len(),
                m * d
            )));
        }
        Ok(self.eval_unchecked(j, x))
    }

    pub(crate) fn eval_unchecked(&self, j: usize, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut out = vec![0.0; d];
        for (i, &a) in self.coeffs[j].iter().enumerate() {
            if a != 0.0 {
                for c in 0..d {
                    out[c] += a * x[i * d + c];
                }
            }
        }
        out
    }

    /// Row `j` scaled by `r_j`.
    pub fn apply_dilation(&self, r: &[f64]) -> Result<Self> {
        if r.len() != self.len() {
            return Err(LabError::argument("dilation vector must have one entry per map"));
        }
        if r.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(LabError::argument("dilation factors must be positive"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(r)
            .map(|(row, &s)| row.iter().map(|v| v * s).collect())
            .collect();
        Self::new(coeffs, self.d)?.with_labels(self.labels.clone())
    }

    /// `coeffs ← coeffs·A` for invertible `A ∈ GL(m)`.
    pub fn apply_glm(&self, a: &[Vec<f64>]) -> Result<Self> {
        let m = self.m();
        if a.len() != m || a.iter().any(|r| r.len() != m) {
            return Err(LabError::argument(format!("GL(m) matrix must be {m}×{m}")));
        }
        let det = linalg::det(a);
        let scale = a.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs())).max(1.0);
        if det.abs() <= 1e-12 * scale.powi(m as i32) {
            return Err(LabError::argument("GL(m) matrix is singular"));
        }
        Self::new(linalg::mat_mul(&self.coeffs, a), self.d)?.with_labels(self.labels.clone())
    }

    /// Lexicographically first `m` independent rows, and the designated `n`
    /// (the smallest of them).
    pub fn select_independent_subset(&self) -> Result<(Vec<usize>, usize)> {
        let m = self.m();
        let n = self.len();
        let mut found = None;
        for_each_combination(n, m, &mut |idx| {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| self.coeffs[i].clone()).collect();
            if linalg::rank(&rows) == m {
                found = Some(idx.to_vec());
                true
            } else {
                false
            }
        });
        let set = found.ok_or_else(|| LabError::structural("no independent subset of size m"))?;
        let first = set[0];
        Ok((set, first))
    }
}

/// Normalized 2×2-minor test for proportionality of two rows.
pub fn proportional(a: &[f64], b: &[f64]) -> bool {
    let na = linalg::norm(a);
    let nb = linalg::norm(b);
    if na == 0.0 || nb == 0.0 {
        return true;
    }
    for p in 0..a.len() {
        for q in p + 1..a.len() {
            let minor = (a[p] * b[q] - a[q] * b[p]) / (na * nb);
            if minor.abs() > PROPORTIONAL_TOL {
                return false;
            }
        }
    }
    true
}

/// Visits `k`-subsets of `0..n` in lexicographic order until `f` returns true.
pub fn for_each_combination(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { return };
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// Volume of the unit ball in R^d.
pub fn omega(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        _ => omega(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Target measures `e_j` in dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub e: Vec<f64>,
    pub d: usize,
}

impl MeasureSpec {
    pub fn new(e: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(LabError::argument("dimension d must be at least 1"));
        }
        if e.is_empty() || e.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(LabError::argument("measures e_j must be positive"));
        }
        Ok(MeasureSpec { e, d })
    }

    pub fn from_radii(r: &[f64], d: usize) -> Result<Self> {
        if r.iter().any(|&v| !(v > 0.0)) {
            return Err(LabError::argument("radii must be positive"));
        }
        Self::new(r.iter().map(|&v| omega(d) * v.powi(d as i32)).collect(), d)
    }

    /// Radii with `ω_d r_j^d = e_j`.
    pub fn radii(&self) -> Vec<f64> {
        let w = omega(self.d);
        self.e.iter().map(|&e| (e / w).powf(1.0 / self.d as f64)).collect()
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn check_family(&self, fam: &LinearFamily) -> Result<()> {
        if self.e.len() != fam.len() {
            return Err(LabError::argument(format!(
                "{} measures for {} maps",
                self.e.len(),
                fam.len()
            )));
        }
        if self.d != fam.d() {
            return Err(LabError::argument("measure dimension differs from family dimension"));
        }
        Ok(())
    }
}
