//! Deficit experiments along `E(s)` and along exact orbit paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{LabError, Result};
use crate::family::{LinearFamily, MeasureSpec};
use crate::functional::{deficit, Deficit, Engine, EngineKind};
use crate::harmonics::HarmonicTuple;
use crate::kernels;
use crate::linalg;
use crate::orbit::orbit_member;
use crate::settuple::{ball_tuple, boundary_profiles, radial_from_harmonic, SetTuple};
use crate::spectral::{project_pi_nu, SpectralContext};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitPoint {
    pub s: f64,
    pub phi_star: f64,
    pub phi: f64,
    pub deficit: f64,
    pub stderr: f64,
}

impl DeficitPoint {
    fn from(s: f64, d: &Deficit) -> Self {
        DeficitPoint { s, phi_star: d.phi_star, phi: d.phi, deficit: d.deficit, stderr: d.stderr }
    }

    /// Nonnegative within three standard errors.
    pub fn consistent(&self) -> bool {
        self.deficit >= -3.0 * self.stderr - 1e-12 * self.phi_star.abs()
    }

    pub fn is_zero_within(&self, k: f64) -> bool {
        self.deficit.abs() <= k * self.stderr + 1e-12 * self.phi_star.abs()
    }
}

/// `y ≈ c·s^p` fitted on log–log axes with 95% intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub constant: f64,
    pub exponent_ci: Option<(f64, f64)>,
    pub constant_ci: Option<(f64, f64)>,
    /// Indices of the points used.
    pub window: Vec<usize>,
}

/// Least squares on `(ln s, ln y)`; intervals need at least three points.
pub fn fit_power(s: &[f64], y: &[f64]) -> Option<(f64, f64, Option<(f64, f64)>, Option<(f64, f64)>)> {
    let n = s.len();
    if n < 2 {
        return None;
    }
    let x: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let z: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let mz = z.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = x.iter().zip(&z).map(|(a, b)| (a - mx) * (b - mz)).sum::<f64>() / sxx;
    let icpt = mz - slope * mx;
    if n < 3 {
        return Some((slope, icpt.exp(), None, None));
    }
    let rss: f64 = x.iter().zip(&z).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let sigma2 = rss / (nf - 2.0);
    let se_slope = (sigma2 / sxx).sqrt();
    let se_icpt = (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
    Some((
        slope,
        icpt.exp(),
        Some((slope - t * se_slope, slope + t * se_slope)),
        Some(((icpt - t * se_icpt).exp(), (icpt + t * se_icpt).exp())),
    ))
}

/// Longest run of consecutive points (in `s` order) with `y > 5σ` and
/// `σ/y < 0.2`.
fn reliable_window(points: &[(f64, f64, f64)]) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for (k, &(_, y, e)) in points.iter().enumerate() {
        if y > 5.0 * e && y > 0.0 && e / y < 0.2 {
            cur.push(k);
            if cur.len() > best.len() {
                best = cur.clone();
            }
        } else {
            cur.clear();
        }
    }
    best
}

fn fit_window(points: &[(f64, f64, f64)]) -> Option<PowerFit> {
    let window = reliable_window(points);
    let s: Vec<f64> = window.iter().map(|&k| points[k].0).collect();
    let y: Vec<f64> = window.iter().map(|&k| points[k].1).collect();
    let (exponent, constant, exponent_ci, constant_ci) = fit_power(&s, &y)?;
    Some(PowerFit { exponent, constant, exponent_ci, constant_ci, window })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitCurve {
    pub label: String,
    pub harmonic: HarmonicTuple,
    pub engine: EngineKind,
    pub points: Vec<DeficitPoint>,
    /// `None` when fewer than two points clear the noise floor.
    pub fit: Option<PowerFit>,
}

impl DeficitCurve {
    pub fn indeterminate(&self) -> bool {
        self.fit.is_none()
    }

    pub fn all_consistent(&self) -> bool {
        self.points.iter().all(DeficitPoint::consistent)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,phi_star,phi,deficit,stderr\n");
        for p in &self.points {
            out.push_str(&format!("{},{:.15e},{:.15e},{:.15e},{:.6e}\n", p.s, p.phi_star, p.phi, p.deficit, p.stderr));
        }
        out
    }
}

fn sorted_s(s_list: &[f64]) -> Result<Vec<f64>> {
    if s_list.is_empty() || s_list.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(LabError::argument("s values must be positive and finite"));
    }
    let mut s = s_list.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// `Φ(E*) − Φ(E(s))` for each `s`, with a power-law fit.
pub fn deficit_curve(
    fam: &LinearFamily,
    spec: &MeasureSpec,
    g: &HarmonicTuple,
    s_list: &[f64],
    engine: Engine,
    label: &str,
) -> Result<DeficitCurve> {
    let s = sorted_s(s_list)?;
    let points = s
        .par_iter()
        .map(|&si| {
            let e = if g.is_zero() { ball_tuple(spec) } else { radial_from_harmonic(g, si, spec)? };
            Ok(DeficitPoint::from(si, &deficit(fam, &e, spec, engine)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_window(&points.iter().map(|p| (p.s, p.deficit, p.stderr)).collect::<Vec<_>>());
    Ok(DeficitCurve { label: label.to_string(), harmonic: g.clone(), engine: engine.kind, points, fit })
}

/// A one-parameter subgroup of the symmetry group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SymmetryKind {
    /// `t ↦ (B_j + t·L_j(v))`, `v ∈ (R^d)^m` stored block by block.
    Translation(Vec<f64>),
    /// `t ↦ (exp(tA)B_j)` for a trace-free `A`.
    Shear(Vec<Vec<f64>>),
}

impl SymmetryKind {
    fn degree(&self) -> usize {
        match self {
            SymmetryKind::Translation(_) => 1,
            SymmetryKind::Shear(_) => 2,
        }
    }

    fn check(&self, fam: &LinearFamily) -> Result<()> {
        let d = fam.d();
        match self {
            SymmetryKind::Translation(v) if v.len() != fam.m() * d => {
                Err(LabError::argument("translation parameter must lie in (R^d)^m"))
            }
            SymmetryKind::Shear(a) => {
                if a.len() != d || a.iter().any(|r| r.len() != d) {
                    return Err(LabError::argument("shear generator must be d × d"));
                }
                let tr: f64 = (0..d).map(|k| a[k][k]).sum();
                let scale = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
                if tr.abs() > 1e-12 * scale.max(1.0) {
                    return Err(LabError::argument("shear generator must be trace-free"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The orbit member at parameter `t`.
    pub fn member(&self, fam: &LinearFamily, spec: &MeasureSpec, t: f64) -> Result<SetTuple> {
        self.check(fam)?;
        let d = fam.d();
        match self {
            SymmetryKind::Translation(v) => {
                let tv: Vec<f64> = v.iter().map(|x| t * x).collect();
                orbit_member(fam, spec, &tv, &linalg::identity(d))
            }
            SymmetryKind::Shear(a) => {
                let ta: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| t * x).collect()).collect();
                orbit_member(fam, spec, &vec![0.0; fam.m() * d], &linalg::expm(&ta))
            }
        }
    }
}

/// First-order boundary perturbation of the orbit path, as a harmonic tuple
/// of degree 1 (translation) or 2 (shear), by central differences of the
/// exact profiles.
pub fn symmetry_direction_tuple(kind: &SymmetryKind, fam: &LinearFamily, spec: &MeasureSpec) -> Result<HarmonicTuple> {
    if spec.d != 2 {
        return Err(LabError::argument("symmetry directions are implemented for d = 2"));
    }
    kind.check(fam)?;
    let nu = kind.degree();
    let t = 1e-4;
    let plus = boundary_profiles(&kind.member(fam, spec, t)?, spec)?;
    let minus = boundary_profiles(&kind.member(fam, spec, -t)?, spec)?;
    let coeffs = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| {
            let diff: Vec<f64> = p.f().iter().zip(m.f()).map(|(a, b)| (a - b) / (2.0 * t)).collect();
            let c = project_pi_nu(&diff, nu)?;
            // Round-off in the difference quotient is of order ε r²/t.
            Ok(c.map(|v| if v.abs() < 1e-9 { 0.0 } else { v }))
        })
        .collect::<Result<Vec<[f64; 2]>>>()?;
    HarmonicTuple::new(nu, coeffs)
}

/// Deficits of exact orbit members `kind.member(t)`.
pub fn orbit_path_deficits(
    fam: &LinearFamily,
    spec: &MeasureSpec,
    kind: &SymmetryKind,
    ts: &[f64],
    engine: Engine,
) -> Result<Vec<DeficitPoint>> {
    ts.par_iter()
        .map(|&t| Ok(DeficitPoint::from(t, &deficit(fam, &kind.member(fam, spec, t)?, spec, engine)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPoint {
    pub s: f64,
    pub measured: f64,
    pub predicted: f64,
    /// `measured deficit − s²(½Σ w_j‖G_j‖² − Q(G))`.
    pub residual: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub harmonic: HarmonicTuple,
    /// `½Σ w_j‖G_j‖² − Q(G)`, the predicted coefficient of `s²`.
    pub coefficient: f64,
    pub weighted_norm: f64,
    pub q: f64,
    pub points: Vec<ExpansionPoint>,
    /// Power law of `|residual|` on its reliable window.
    pub residual_fit: Option<PowerFit>,
}

impl ExpansionReport {
    /// Largest `|residual|/s²`.
    pub fn max_relative_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual.abs() / (p.s * p.s)).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,measured_phi,predicted_phi,residual,stderr\n");
        for p in &self.points {
            out.push_str(&format!("{},{:.15e},{:.15e},{:.6e},{:.6e}\n", p.s, p.measured, p.predicted, p.residual, p.stderr));
        }
        out
    }
}

/// Compares `Φ(E(s))` with the second-order prediction
/// `Φ(E*) − ½s²Σ w_j‖G_j‖² + s²Q(G)`.
pub fn expansion_check(
    fam: &LinearFamily,
    spec: &MeasureSpec,
    g: &HarmonicTuple,
    s_list: &[f64],
    engine: Engine,
) -> Result<ExpansionReport> {
    let d = spec.d;
    let gam = kernels::gammas(fam, spec)?;
    let radii = spec.radii();
    let weighted_norm: f64 =
        (0..g.len()).map(|j| gam[j] * radii[j].powi(1 - d as i32) * g.component_norm_sq(j)).sum();
    let q = if g.is_zero() { 0.0 } else { SpectralContext::new(fam, spec)?.eval_q(g)? };
    let coefficient = 0.5 * weighted_norm - q;
    let curve = deficit_curve(fam, spec, g, s_list, engine, "expansion")?;
    let points: Vec<ExpansionPoint> = curve
        .points
        .iter()
        .map(|p| {
            let predicted_deficit = coefficient * p.s * p.s;
            ExpansionPoint {
                s: p.s,
                measured: p.phi,
                predicted: p.phi_star - predicted_deficit,
                residual: p.deficit - predicted_deficit,
                stderr: p.stderr,
            }
        })
        .collect();
    let residual_fit = fit_window(&points.iter().map(|p| (p.s, p.residual.abs(), p.stderr)).collect::<Vec<_>>());
    Ok(ExpansionReport { harmonic: g.clone(), coefficient, weighted_norm, q, points, residual_fit })
}

/// Analytic translation tuple `G_j = r_j^{d−1}⟨L_j v, θ⟩` (d = 2).
pub fn translation_tuple(fam: &LinearFamily, spec: &MeasureSpec, v: &[f64]) -> Result<HarmonicTuple> {
    if spec.d != 2 {
        return Err(LabError::argument("translation tuples are implemented for d = 2"));
    }
    let radii = spec.radii();
    let sp = std::f64::consts::PI.sqrt();
    let coeffs = (0..fam.len())
        .map(|j| {
            let w = fam.eval(j, v)?;
            Ok([radii[j] * sp * w[0], radii[j] * sp * w[1]])
        })
        .collect::<Result<Vec<_>>>()?;
    HarmonicTuple::new(1, coeffs)
}

/// Named harmonic tuples: `nu1` (translation along the first coordinate of
/// the first variable), `nu2` (the `diag(1, −1)` shear), `nuK` for `K ≥ 3`
/// (equal `cos Kθ` components).
pub fn preset_harmonic(name: &str, fam: &LinearFamily, spec: &MeasureSpec) -> Result<HarmonicTuple> {
    let nu: usize = name
        .strip_prefix("nu")
        .and_then(|k| k.parse().ok())
        .ok_or_else(|| LabError::argument(format!("unknown harmonic preset '{name}'")))?;
    match nu {
        0 => Err(LabError::argument("harmonic degree must be at least 1")),
        1 => {
            let mut v = vec![0.0; fam.m() * fam.d()];
            v[0] = 1.0;
            translation_tuple(fam, spec, &v)
        }
        2 => symmetry_direction_tuple(&SymmetryKind::Shear(vec![vec![1.0, 0.0], vec![0.0, -1.0]]), fam, spec),
        _ => HarmonicTuple::new(nu, vec![[1.0, 0.0]; fam.len()]),
    }
}
