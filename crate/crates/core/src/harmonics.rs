//! Circular harmonics on `S¹` and harmonic tuples.
//!
//! The orthonormal basis of `H_ν` (ν ≥ 1) with respect to arc length is
//! `cos(νθ)/√π, sin(νθ)/√π`. A harmonic of degree `ν` is also the restriction
//! of the homogeneous polynomial `a·Re(x₁+ix₂)^ν + b·Im(x₁+ix₂)^ν`, scaled by
//! `1/√π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// The two basis functions of `H_ν` at angle `θ`.
pub fn basis(nu: usize, theta: f64) -> [f64; 2] {
    let s = PI.sqrt().recip();
    let a = nu as f64 * theta;
    [a.cos() * s, a.sin() * s]
}

/// A `J`-tuple of degree-`ν` harmonics on the circle, stored as coefficients
/// in the orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTuple {
    pub nu: usize,
    pub coeffs: Vec<[f64; 2]>,
}

impl HarmonicTuple {
    pub fn new(nu: usize, coeffs: Vec<[f64; 2]>) -> Result<Self> {
        if nu == 0 {
            return Err(LabError::argument("harmonic degree must be at least 1"));
        }
        if coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LabError::argument("harmonic coefficients must be finite"));
        }
        Ok(HarmonicTuple { nu, coeffs })
    }

    pub fn zero(nu: usize, len: usize) -> Self {
        HarmonicTuple { nu: nu.max(1), coeffs: vec![[0.0; 2]; len] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, j: usize, theta: f64) -> f64 {
        let b = basis(self.nu, theta);
        self.coeffs[j][0] * b[0] + self.coeffs[j][1] * b[1]
    }

    /// `G_j` at a unit vector.
    pub fn eval_point(&self, j: usize, x: &[f64]) -> f64 {
        self.eval(j, x[1].atan2(x[0]))
    }

    pub fn component_norm_sq(&self, j: usize) -> f64 {
        self.coeffs[j][0].powi(2) + self.coeffs[j][1].powi(2)
    }

    pub fn norm_sq(&self) -> f64 {
        (0..self.len()).map(|j| self.component_norm_sq(j)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|&v| v == 0.0)
    }

    /// `⟨G_i, G_j⟩` in `L²(S¹)`.
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i][0] * self.coeffs[j][0] + self.coeffs[i][1] * self.coeffs[j][1]
    }

    /// Balanced relative to the independent set `jp` with distinguished `n`:
    /// every degree ≥ 3 tuple, degree 2 with `G_n = 0`, degree 1 with
    /// `G_j = 0` on `jp`.
    pub fn is_balanced(&self, jp: &[usize], n: usize) -> bool {
        match self.nu {
            1 => jp.iter().all(|&j| self.component_norm_sq(j) == 0.0),
            2 => self.component_norm_sq(n) == 0.0,
            _ => true,
        }
    }

    /// Applies the rotation by `alpha`: `(R G)(θ) = G(θ − α)`.
    pub fn rotated(&self, alpha: f64) -> Self {
        let a = self.nu as f64 * alpha;
        let (c, s) = (a.cos(), a.sin());
        // cos(ν(θ−α)) = cos νθ cos να + sin νθ sin να, sin(ν(θ−α)) = sin νθ cos να − cos νθ sin να
        let coeffs = self
            .coeffs
            .iter()
            .map(|&[p, q]| [p * c - q * s, p * s + q * c])
            .collect();
        HarmonicTuple { nu: self.nu, coeffs }
    }

    /// Applies the reflection `x₂ ↦ −x₂`.
    pub fn reflected(&self) -> Self {
        HarmonicTuple { nu: self.nu, coeffs: self.coeffs.iter().map(|&[p, q]| [p, -q]).collect() }
    }

    /// `G_j` as a homogeneous polynomial in `(x₁, x₂)`.
    pub fn polynomial(&self, j: usize) -> Poly2 {
        let nu = self.nu;
        let s = PI.sqrt().recip();
        let [a, b] = self.coeffs[j];
        // (x₁ + i x₂)^ν = Σ_k C(ν,k) x₁^{ν−k} (i x₂)^k.
        let mut c = vec![0.0; nu + 1];
        let mut binom = 1.0;
        for (k, ck) in c.iter_mut().enumerate() {
            let (re, im) = match k % 4 {
                0 => (1.0, 0.0),
                1 => (0.0, 1.0),
                2 => (-1.0, 0.0),
                _ => (0.0, -1.0),
            };
            *ck = s * binom * (a * re + b * im);
            binom = binom * (nu - k) as f64 / (k + 1) as f64;
        }
        Poly2 { deg: nu, c }
    }
}

/// Homogeneous polynomial `Σ_k c_k x₁^{deg−k} x₂^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly2 {
    pub deg: usize,
    pub c: Vec<f64>,
}

impl Poly2 {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(k, &ck)| ck * x1.powi((self.deg - k) as i32) * x2.powi(k as i32))
            .sum()
    }
}

/// Polynomial in one variable, `Σ_k c_k x^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly1 {
    pub c: Vec<f64>,
}

impl Poly1 {
    pub fn zero() -> Self {
        Poly1 { c: Vec::new() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.c.iter().all(|v| v.abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_matches_trigonometric_form() {
        let g = HarmonicTuple::new(3, vec![[0.7, -0.2]]).unwrap();
        let p = g.polynomial(0);
        for &t in &[0.0f64, 0.4, 2.0, 4.5] {
            assert!((p.eval(t.cos(), t.sin()) - g.eval(0, t)).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_shifts_argument() {
        let g = HarmonicTuple::new(2, vec![[0.3, 1.1]]).unwrap();
        let r = g.rotated(0.6);
        for &t in &[0.1, 1.3, 3.0] {
            assert!((r.eval(0, t) - g.eval(0, t - 0.6)).abs() < 1e-14);
        }
    }

    #[test]
    fn balanced_rules() {
        let g = HarmonicTuple::new(1, vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(g.is_balanced(&[0, 1], 0));
        assert!(!g.is_balanced(&[0, 2], 0));
        let g = HarmonicTuple::new(2, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(g.is_balanced(&[0, 1], 0));
        assert!(!g.is_balanced(&[1, 2], 1));
        assert!(HarmonicTuple::new(3, vec![[1.0, 0.0]; 3]).unwrap().is_balanced(&[0, 1], 0));
    }

    #[test]
    fn basis_is_orthonormal() {
        let n = 64;
        for nu in 1..5 {
            let (mut cc, mut ss, mut cs) = (0.0, 0.0, 0.0);
            for k in 0..n {
                let b = basis(nu, 2.0 * PI * k as f64 / n as f64);
                cc += b[0] * b[0];
                ss += b[1] * b[1];
                cs += b[0] * b[1];
            }
            let w = 2.0 * PI / n as f64;
            assert!((cc * w - 1.0).abs() < 1e-13);
            assert!((ss * w - 1.0).abs() < 1e-13);
            assert!((cs * w).abs() < 1e-13);
        }
    }
}
