//! Quadrature grids on `S^{d−1}` with `σ` normalized so that Lebesgue
//! measure is `r^{d−1} dr dσ` (total mass 2, 2π, 4π for d = 1, 2, 3).

use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::quadrature::gauss_legendre;

pub const DEFAULT_CIRCLE_POINTS: usize = 2048;
pub const DEFAULT_SPHERE_Z: usize = 48;
pub const DEFAULT_SPHERE_PHI: usize = 96;

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Line,
    Circle { n: usize },
    Product { z: Vec<f64>, nphi: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub d: usize,
    pub dirs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    layout: Layout,
}

impl SphereGrid {
    pub fn default_for(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Self::line()),
            2 => Ok(Self::circle(DEFAULT_CIRCLE_POINTS)),
            3 => Ok(Self::sphere(DEFAULT_SPHERE_Z, DEFAULT_SPHERE_PHI)),
            _ => Err(LabError::argument("only d ∈ {1, 2, 3} is supported")),
        }
    }

    /// `S⁰ = {+1, −1}` with unit weights.
    pub fn line() -> Self {
        SphereGrid {
            d: 1,
            dirs: vec![vec![1.0], vec![-1.0]],
            weights: vec![1.0, 1.0],
            layout: Layout::Line,
        }
    }

    /// `n` equispaced angles `θ_k = 2πk/n`; the trapezoidal rule.
    pub fn circle(n: usize) -> Self {
        let dirs = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        SphereGrid { d: 2, dirs, weights: vec![2.0 * PI / n as f64; n], layout: Layout::Circle { n } }
    }

    /// Gauss–Legendre in `z = cos ϑ` times the trapezoidal rule in `φ`.
    pub fn sphere(nz: usize, nphi: usize) -> Self {
        let (z, wz) = gauss_legendre(nz);
        let mut dirs = Vec::with_capacity(nz * nphi);
        let mut weights = Vec::with_capacity(nz * nphi);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for k in 0..nphi {
                let p = 2.0 * PI * k as f64 / nphi as f64;
                dirs.push(vec![s * p.cos(), s * p.sin(), *zi]);
                weights.push(wi * 2.0 * PI / nphi as f64);
            }
        }
        SphereGrid { d: 3, dirs, weights, layout: Layout::Product { z, nphi } }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Angle of the `k`-th node (d = 2 only).
    pub fn angle(&self, k: usize) -> f64 {
        match self.layout {
            Layout::Circle { n } => 2.0 * PI * k as f64 / n as f64,
            _ => self.dirs[k][1].atan2(self.dirs[k][0]),
        }
    }

    pub fn circle_points(&self) -> Option<usize> {
        match self.layout {
            Layout::Circle { n } => Some(n),
            _ => None,
        }
    }

    /// Interpolates grid samples at an arbitrary unit direction: exact on
    /// `S⁰`, periodic Catmull–Rom on the circle, bilinear on the sphere.
    pub fn interpolate(&self, values: &[f64], dir: &[f64]) -> f64 {
        match &self.layout {
            Layout::Line => {
                if dir[0] >= 0.0 {
                    values[0]
                } else {
                    values[1]
                }
            }
            Layout::Circle { n } => {
                let theta = dir[1].atan2(dir[0]);
                catmull_rom_periodic(values, *n, theta)
            }
            Layout::Product { z, nphi } => {
                let nz = z.len();
                let zz = dir[2].clamp(-1.0, 1.0);
                let phi = dir[1].atan2(dir[0]).rem_euclid(2.0 * PI);
                let u = phi / (2.0 * PI) * *nphi as f64;
                let i0 = (u.floor() as usize) % nphi;
                let i1 = (i0 + 1) % nphi;
                let fu = u - u.floor();
                let ring = |iz: usize| {
                    values[iz * nphi + i0] * (1.0 - fu) + values[iz * nphi + i1] * fu
                };
                if zz <= z[0] {
                    return ring(0);
                }
                if zz >= z[nz - 1] {
                    return ring(nz - 1);
                }
                let iz = z.partition_point(|&v| v <= zz) - 1;
                let fz = (zz - z[iz]) / (z[iz + 1] - z[iz]);
                ring(iz) * (1.0 - fz) + ring(iz + 1) * fz
            }
        }
    }

    /// Upper bound of the interpolant given the samples.
    pub fn interpolation_bound(&self, values: &[f64]) -> f64 {
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match self.layout {
            Layout::Circle { n } => {
                let jump = (0..n)
                    .map(|k| (values[(k + 1) % n] - values[k]).abs())
                    .fold(0.0, f64::max);
                max + jump
            }
            _ => max,
        }
    }
}

/// Periodic Catmull–Rom interpolation of samples at `θ_k = 2πk/n`.
pub fn catmull_rom_periodic(values: &[f64], n: usize, theta: f64) -> f64 {
    let u = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
    let i = u.floor() as usize % n;
    let t = u - u.floor();
    let p0 = values[(i + n - 1) % n];
    let p1 = values[i];
    let p2 = values[(i + 1) % n];
    let p3 = values[(i + 2) % n];
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1 + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_masses() {
        assert_eq!(SphereGrid::line().integrate(&[1.0, 1.0]), 2.0);
        let c = SphereGrid::circle(64);
        assert!((c.integrate(&vec![1.0; 64]) - 2.0 * PI).abs() < 1e-13);
        let s = SphereGrid::sphere(16, 32);
        assert!((s.integrate(&vec![1.0; s.len()]) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_integrates_z_squared() {
        let s = SphereGrid::sphere(16, 32);
        let v: Vec<f64> = s.dirs.iter().map(|x| x[2] * x[2]).collect();
        assert!((s.integrate(&v) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn catmull_rom_reproduces_nodes_and_smooth_data() {
        let n = 256;
        let vals: Vec<f64> = (0..n).map(|k| (3.0 * 2.0 * PI * k as f64 / n as f64).cos()).collect();
        assert!((catmull_rom_periodic(&vals, n, 2.0 * PI * 5.0 / n as f64) - vals[5]).abs() < 1e-15);
        let t = 0.123;
        assert!((catmull_rom_periodic(&vals, n, t) - (3.0 * t).cos()).abs() < 1e-5);
    }
}
