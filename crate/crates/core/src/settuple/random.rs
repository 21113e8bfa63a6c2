//! Random set generators for property tests, acceptance runs and benches.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{Ellipsoid, GridSet, GridSpec, RadialGraph, SetRepr, SetTuple, SphereGrid};
use crate::error::{LabError, Result};
use crate::family::omega;
use crate::linalg;
use crate::rng::{normal, uniform, StreamRng};

/// Random `ψ ∈ SL(d)` as `exp(M)` with `M` trace-free of scale `spread`.
pub fn random_sl(d: usize, spread: f64, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| spread * normal(rng)).collect()).collect();
    let tr: f64 = (0..d).map(|i| m[i][i]).sum::<f64>() / d as f64;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= tr;
    }
    linalg::expm(&m)
}

fn random_center(d: usize, reach: f64, rng: &mut StreamRng) -> Vec<f64> {
    (0..d).map(|_| uniform(rng, -reach, reach)).collect()
}

/// Ellipsoid of measure `e` with a random center and shape.
pub fn random_ellipsoid(e: f64, d: usize, rng: &mut StreamRng) -> Result<SetRepr> {
    let r = (e / omega(d)).powf(1.0 / d as f64);
    let center = random_center(d, 0.3 * r, rng);
    Ok(SetRepr::Ellipsoid(Ellipsoid::new(center, random_sl(d, 0.25, rng), r)?))
}

/// Smooth star-shaped set of measure `e`.
pub fn random_radial(e: f64, d: usize, rng: &mut StreamRng) -> Result<SetRepr> {
    let grid = Arc::new(match d {
        2 => SphereGrid::circle(512),
        _ => SphereGrid::default_for(d)?,
    });
    let r = (e / omega(d)).powf(1.0 / d as f64);
    let center = random_center(d, 0.3 * r, rng);
    let rho: Vec<f64> = match d {
        1 => vec![uniform(rng, 0.4, 1.6), uniform(rng, 0.4, 1.6)],
        2 => {
            let coef: Vec<(f64, f64)> =
                (1..=5).map(|nu| (0.15 * normal(rng) / nu as f64, 0.15 * normal(rng) / nu as f64)).collect();
            (0..grid.len())
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / grid.len() as f64;
                    let s: f64 = coef
                        .iter()
                        .enumerate()
                        .map(|(i, (a, b))| a * ((i + 1) as f64 * t).cos() + b * ((i + 1) as f64 * t).sin())
                        .sum();
                    s.exp()
                })
                .collect()
        }
        _ => {
            let a: Vec<f64> = (0..3).map(|_| 0.15 * normal(rng)).collect();
            let b: Vec<f64> = (0..3).map(|_| 0.1 * normal(rng)).collect();
            grid.dirs
                .iter()
                .map(|u| (linalg::dot(&a, u) + b[0] * u[0] * u[1] + b[1] * u[1] * u[2] + b[2] * (u[2] * u[2] - 1.0 / 3.0)).exp())
                .collect()
        }
    };
    let raw = RadialGraph::new(vec![0.0; d], grid.clone(), rho)?;
    let scale = (e / raw.measure()).powf(1.0 / d as f64);
    let rho = raw.rho.iter().map(|v| v * scale).collect();
    Ok(SetRepr::Radial(RadialGraph::new(center, grid, rho)?))
}

/// Union of a few random balls, rasterized; its measure is near `e`.
pub fn random_blob(e: f64, d: usize, cells_per_radius: usize, rng: &mut StreamRng) -> Result<SetRepr> {
    let r = (e / omega(d)).powf(1.0 / d as f64);
    let k = 2 + (uniform(rng, 0.0, 3.0) as usize);
    let balls: Vec<(Vec<f64>, f64)> = (0..k)
        .map(|_| (random_center(d, 0.6 * r, rng), r * uniform(rng, 0.35, 0.8)))
        .collect();
    let spec = GridSpec::covering(d, r, cells_per_radius, 1.5)?;
    let g = GridSet::from_fn(spec, |x| {
        balls.iter().any(|(c, rad)| (0..d).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>() <= rad * rad)
    });
    if g.count() == 0 {
        return Err(LabError::computation("random blob is empty"));
    }
    Ok(SetRepr::Grid(g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Ellipsoid,
    Radial,
    Grid,
}

/// One set per measure, kinds drawn uniformly when `kind` is `None`.
pub fn random_tuple(e: &[f64], d: usize, kind: Option<Kind>, rng: &mut StreamRng) -> Result<SetTuple> {
    let mut sets = Vec::with_capacity(e.len());
    for &ej in e {
        let k = kind.unwrap_or_else(|| match uniform(rng, 0.0, 3.0) as usize {
            0 => Kind::Ellipsoid,
            1 => Kind::Radial,
            _ => Kind::Grid,
        });
        sets.push(match k {
            Kind::Ellipsoid => random_ellipsoid(ej, d, rng)?,
            Kind::Radial => random_radial(ej, d, rng)?,
            Kind::Grid => random_blob(ej, d, 64, rng)?,
        });
    }
    SetTuple::new(d, sets)
}
