use std::sync::Arc;

use rayon::prelude::*;

use super::{Ellipsoid, GridSet, GridSpec, RadialGraph, SetRepr, SetTuple, SphereGrid};
use crate::error::{LabError, Result};
use crate::family::MeasureSpec;
use crate::harmonics::HarmonicTuple;

/// `E*`: centered balls of the prescribed measures.
pub fn ball_tuple(spec: &MeasureSpec) -> SetTuple {
    let d = spec.d;
    let sets = spec
        .radii()
        .into_iter()
        .map(|r| SetRepr::Ellipsoid(Ellipsoid::ball(vec![0.0; d], r)))
        .collect();
    SetTuple { d, sets }
}

/// `E*` as radial graphs on a shared grid.
pub fn radial_ball_tuple(spec: &MeasureSpec, grid: Arc<SphereGrid>) -> Result<SetTuple> {
    let d = spec.d;
    let sets = spec
        .radii()
        .into_iter()
        .map(|r| Ok(SetRepr::Radial(RadialGraph::new(vec![0.0; d], grid.clone(), vec![r; grid.len()])?)))
        .collect::<Result<_>>()?;
    SetTuple::new(d, sets)
}

/// `E(s)`: boundary `ρ_j = (r_j^d + d·s·G_j)^{1/d}`, so that
/// `∫_{r_j}^{ρ_j} t^{d−1} dt = s·G_j` in every direction.
pub fn radial_from_harmonic(g: &HarmonicTuple, s: f64, spec: &MeasureSpec) -> Result<SetTuple> {
    radial_from_harmonic_on(g, s, spec, Arc::new(SphereGrid::default_for(spec.d)?))
}

pub fn radial_from_harmonic_on(
    g: &HarmonicTuple,
    s: f64,
    spec: &MeasureSpec,
    grid: Arc<SphereGrid>,
) -> Result<SetTuple> {
    if spec.d != 2 || grid.d != 2 {
        return Err(LabError::argument("harmonic perturbations are implemented for d = 2"));
    }
    if g.len() != spec.len() {
        return Err(LabError::argument("one harmonic per set is required"));
    }
    let d = spec.d as f64;
    let radii = spec.radii();
    let mut sets = Vec::with_capacity(g.len());
    for (j, &r) in radii.iter().enumerate() {
        let rho = (0..grid.len())
            .map(|k| {
                let rad = r.powf(d) + d * s * g.eval(j, grid.angle(k));
                if rad <= 0.0 {
                    Err(LabError::argument(format!("s = {s} too large: boundary of set {} collapses", j + 1)))
                } else {
                    Ok(rad.powf(1.0 / d))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        sets.push(SetRepr::Radial(RadialGraph::new(vec![0.0; 2], grid.clone(), rho)?));
    }
    SetTuple::new(2, sets)
}

/// `F^±_j` sampled on a sphere grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProfile {
    pub j: usize,
    pub grid: Arc<SphereGrid>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl BoundaryProfile {
    pub fn f(&self) -> Vec<f64> {
        self.plus.iter().zip(&self.minus).map(|(p, m)| p - m).collect()
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.f())
    }

    pub fn l2_sq(values: &[f64], grid: &SphereGrid) -> f64 {
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        grid.integrate(&sq)
    }

    /// `‖F⁺‖² + ‖F⁻‖²`.
    pub fn energy(&self) -> f64 {
        Self::l2_sq(&self.plus, &self.grid) + Self::l2_sq(&self.minus, &self.grid)
    }

    /// `∫ (F⁺ + F⁻) dσ = |E_j Δ B_j|`.
    pub fn symmetric_difference(&self) -> f64 {
        let s: Vec<f64> = self.plus.iter().zip(&self.minus).map(|(p, m)| p + m).collect();
        self.grid.integrate(&s)
    }
}

/// `∫_a^b t^{d−1} dt` for `0 ≤ a ≤ b`.
fn radial_mass(a: f64, b: f64, d: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let di = d as i32;
    (b.powi(di) - a.max(0.0).powi(di)) / d as f64
}

fn intervals_mass(iv: &[(f64, f64)], d: usize) -> f64 {
    iv.iter().map(|&(a, b)| radial_mass(a, b, d)).sum()
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Profiles of every `E_j` relative to the ball `B_j` of measure `e_j`.
pub fn boundary_profiles(e: &SetTuple, spec: &MeasureSpec) -> Result<Vec<BoundaryProfile>> {
    if e.len() != spec.len() || e.d != spec.d {
        return Err(LabError::argument("tuple and measure spec disagree"));
    }
    let d = e.d;
    let default = Arc::new(SphereGrid::default_for(d)?);
    let radii = spec.radii();
    let origin = vec![0.0; d];
    e.sets
        .iter()
        .enumerate()
        .map(|(j, set)| {
            let grid = match set {
                SetRepr::Radial(r) => r.grid.clone(),
                _ => default.clone(),
            };
            let r = radii[j];
            let ball = radial_mass(0.0, r, d);
            let (plus, minus): (Vec<f64>, Vec<f64>) = grid
                .dirs
                .par_iter()
                .map(|u| {
                    let iv = set.ray_intervals(&origin, u);
                    let outside = intersect(&iv, &[(r, f64::INFINITY)]);
                    let inside = intersect(&iv, &[(0.0, r)]);
                    (intervals_mass(&outside, d), ball - intervals_mass(&inside, d))
                })
                .unzip();
            Ok(BoundaryProfile { j, grid, plus, minus })
        })
        .collect()
}

/// Cell-center rasterization onto `spec`.
pub fn rasterize(set: &SetRepr, spec: GridSpec) -> GridSet {
    GridSet::from_fn(spec, |x| set.contains(x))
}

/// Result of [`truncate_to_annulus`].
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub tuple: SetTuple,
    /// Annulus half-width finally used per index.
    pub widths: Vec<f64>,
    /// Whether the requested width had to be enlarged.
    pub widened: Vec<bool>,
    /// Number of annulus cells reverted to rebalance the measure.
    pub reverted: Vec<usize>,
}

/// `E†`: keeps `E` inside the annulus `{| |x| − r_j | ≤ width}`, replaces it by
/// `B_j` outside, then restores the cell count by reverting cells of
/// `(E Δ B) ∩ annulus` to their `B` value, farthest from the sphere first.
/// The result agrees pointwise with `E` or with `B`.
pub fn truncate_to_annulus(e: &SetTuple, spec: &MeasureSpec, width: f64) -> Result<Truncation> {
    if e.len() != spec.len() || e.d != spec.d {
        return Err(LabError::argument("tuple and measure spec disagree"));
    }
    if !(width > 0.0) {
        return Err(LabError::argument("annulus width must be positive"));
    }
    let d = e.d;
    let radii = spec.radii();
    let mut sets = Vec::with_capacity(e.len());
    let mut widths = Vec::new();
    let mut widened = Vec::new();
    let mut reverted = Vec::new();
    for (j, set) in e.sets.iter().enumerate() {
        let r = radii[j];
        let g = match set {
            SetRepr::Grid(g) => g.clone(),
            other => {
                let (lo, hi) = other.bounding_box();
                let reach = lo.iter().chain(&hi).fold(r, |m, v| m.max(v.abs()));
                rasterize(other, GridSpec::default_for(d, reach)?)
            }
        };
        let gs = g.spec;
        let n = gs.total();
        let mut dist = vec![0.0; n];
        let mut ball = vec![false; n];
        let mut x = [0.0; 3];
        for idx in 0..n {
            gs.center(idx, &mut x);
            let rad = x[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
            dist[idx] = (rad - r).abs();
            ball[idx] = rad <= r;
        }
        let max_dist = dist.iter().cloned().fold(0.0, f64::max);
        let mut w = width;
        let mut was_widened = false;
        loop {
            let mut cells: Vec<bool> = (0..n).map(|k| if dist[k] <= w { g.cells[k] } else { ball[k] }).collect();
            let count = cells.iter().filter(|&&c| c).count() as i64;
            let excess = count - g.count() as i64;
            let want_value = excess < 0;
            let mut cand: Vec<usize> = (0..n)
                .filter(|&k| dist[k] <= w && g.cells[k] != ball[k] && cells[k] != want_value)
                .collect();
            if cand.len() as i64 >= excess.abs() {
                cand.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
                for &k in cand.iter().take(excess.unsigned_abs() as usize) {
                    cells[k] = want_value;
                }
                sets.push(SetRepr::Grid(GridSet::new(gs, cells)?));
                widths.push(w);
                widened.push(was_widened);
                reverted.push(excess.unsigned_abs() as usize);
                break;
            }
            if w > max_dist {
                return Err(LabError::computation("annulus rebalancing failed at full width"));
            }
            w *= 1.5;
            was_widened = true;
        }
    }
    Ok(Truncation { tuple: SetTuple::new(d, sets)?, widths, widened, reverted })
}

/// Runs of a raster along axis 0, one list per row, for repeated comparisons.
#[derive(Debug, Clone)]
pub struct GridRows {
    pub spec: GridSpec,
    pub rows: Vec<Vec<(f64, f64)>>,
}

impl GridRows {
    pub fn new(g: &GridSet) -> Self {
        let s = g.spec.side();
        let nrows = s.pow(g.d() as u32 - 1);
        let rows = (0..nrows)
            .map(|row| {
                let mut base = [0usize; 3];
                let mut r = row;
                for b in base.iter_mut().take(g.d()).skip(1) {
                    *b = r % s;
                    r /= s;
                }
                g.runs(0, &base[..g.d()])
            })
            .collect();
        GridRows { spec: g.spec, rows }
    }

    /// `|raster Δ ellipsoid|`, with exact chords of the ellipsoid along each row.
    pub fn symdiff_ellipsoid(&self, e: &Ellipsoid) -> f64 {
        let d = self.spec.d;
        let s = self.spec.side();
        let (lo, hi) = e.bounding_box();
        let mut total = 0.0;
        let mut origin = [0.0; 3];
        let dir = [1.0, 0.0, 0.0];
        for (row, runs) in self.rows.iter().enumerate() {
            let mut r = row;
            let mut inside_box = true;
            for (a, o) in origin.iter_mut().enumerate().take(d).skip(1) {
                *o = self.spec.coord(r % s);
                r /= s;
                if *o < lo[a] || *o > hi[a] {
                    inside_box = false;
                }
            }
            let runs_len: f64 = runs.iter().map(|(a, b)| b - a).sum();
            let chord = if inside_box { e.line_interval(&origin[..d], &dir[..d]) } else { None };
            match chord {
                None => total += runs_len,
                Some((a, b)) => {
                    let overlap: f64 = runs.iter().map(|&(p, q)| (q.min(b) - p.max(a)).max(0.0)).sum();
                    total += runs_len + (b - a) - 2.0 * overlap;
                }
            }
        }
        total * self.spec.h.powi(d as i32 - 1)
    }
}

fn ray_symdiff(a: &SetRepr, b: &SetRepr, origin: &[f64], grid: &SphereGrid) -> f64 {
    let d = grid.d;
    let vals: Vec<f64> = grid
        .dirs
        .par_iter()
        .map(|u| {
            let ia = a.ray_intervals(origin, u);
            let ib = b.ray_intervals(origin, u);
            intervals_mass(&ia, d) + intervals_mass(&ib, d) - 2.0 * intervals_mass(&intersect(&ia, &ib), d)
        })
        .collect();
    grid.integrate(&vals)
}

/// `|A ∩ B|` for planar ellipses by adaptive quadrature of chord overlaps.
fn planar_intersection(x: &Ellipsoid, y: &Ellipsoid, alo: &[f64], ahi: &[f64], blo: &[f64], bhi: &[f64]) -> f64 {
    let lo = alo[0].max(blo[0]);
    let hi = ahi[0].min(bhi[0]);
    let overlap = |t: f64| -> f64 {
        match (x.line_interval(&[t, 0.0], &[0.0, 1.0]), y.line_interval(&[t, 0.0], &[0.0, 1.0])) {
            (Some(p), Some(q)) => (p.1.min(q.1) - p.0.max(q.0)).max(0.0),
            _ => 0.0,
        }
    };
    let scale = (hi - lo) * (ahi[1] - alo[1]).max(bhi[1] - blo[1]);
    crate::quadrature::integrate_with_breaks(overlap, lo, hi, &[], 1e-13 * scale, 1e-12, 20_000).value
}

/// `|A Δ B|` using the most accurate method the pair of representations allows.
pub fn symmetric_difference(a: &SetRepr, b: &SetRepr) -> Result<f64> {
    if a.d() != b.d() {
        return Err(LabError::argument("sets live in different dimensions"));
    }
    let (alo, ahi) = a.bounding_box();
    let (blo, bhi) = b.bounding_box();
    if (0..a.d()).any(|k| ahi[k] <= blo[k] || bhi[k] <= alo[k]) {
        return Ok(a.measure() + b.measure());
    }
    Ok(match (a, b) {
        (SetRepr::Grid(x), SetRepr::Grid(y)) => {
            let y = if x.spec == y.spec { y.clone() } else { rasterize(b, x.spec) };
            let diff = x.cells.iter().zip(&y.cells).filter(|(p, q)| p != q).count();
            diff as f64 * x.spec.cell_volume()
        }
        (SetRepr::Grid(g), SetRepr::Ellipsoid(e)) | (SetRepr::Ellipsoid(e), SetRepr::Grid(g)) => {
            GridRows::new(g).symdiff_ellipsoid(e)
        }
        (SetRepr::Grid(g), other @ SetRepr::Radial(_)) | (other @ SetRepr::Radial(_), SetRepr::Grid(g)) => {
            let y = rasterize(other, g.spec);
            let diff = g.cells.iter().zip(&y.cells).filter(|(p, q)| p != q).count();
            diff as f64 * g.spec.cell_volume()
        }
        (ra @ SetRepr::Radial(r), other) | (other, ra @ SetRepr::Radial(r)) => {
            ray_symdiff(ra, other, &r.center, &r.grid)
        }
        (SetRepr::Ellipsoid(x), SetRepr::Ellipsoid(y)) if a.d() == 2 => {
            x.measure() + y.measure() - 2.0 * planar_intersection(x, y, &alo, &ahi, &blo, &bhi)
        }
        (SetRepr::Ellipsoid(e), SetRepr::Ellipsoid(_)) => {
            ray_symdiff(a, b, &e.center, &SphereGrid::default_for(a.d())?)
        }
    })
}

/// Measure, centroid and covariance `(1/|E|)∫(x−μ)(x−μ)ᵀ` of a set.
pub fn moments(set: &SetRepr) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let d = set.d();
    match set {
        SetRepr::Ellipsoid(e) => {
            let s = &e.shape;
            let f = e.radius * e.radius / (d as f64 + 2.0);
            let cov = (0..d)
                .map(|a| (0..d).map(|b| f * (0..d).map(|k| s[a][k] * s[b][k]).sum::<f64>()).collect())
                .collect();
            (e.measure(), e.center.clone(), cov)
        }
        SetRepr::Radial(r) => {
            let g = &r.grid;
            let di = d as i32;
            let mass = r.measure();
            let mut w = vec![0.0; d];
            let mut second = vec![vec![0.0; d]; d];
            for (k, u) in g.dirs.iter().enumerate() {
                let rho = r.rho[k];
                let wk = g.weights[k];
                for a in 0..d {
                    w[a] += wk * rho.powi(di + 1) / (d as f64 + 1.0) * u[a];
                    for b in 0..d {
                        second[a][b] += wk * rho.powi(di + 2) / (d as f64 + 2.0) * u[a] * u[b];
                    }
                }
            }
            let mu: Vec<f64> = (0..d).map(|a| r.center[a] + w[a] / mass).collect();
            let delta: Vec<f64> = (0..d).map(|a| r.center[a] - mu[a]).collect();
            let cov = (0..d)
                .map(|a| {
                    (0..d)
                        .map(|b| (delta[a] * delta[b] * mass + delta[a] * w[b] + w[a] * delta[b] + second[a][b]) / mass)
                        .collect()
                })
                .collect();
            (mass, mu, cov)
        }
        SetRepr::Grid(gr) => {
            let spec = gr.spec;
            let mut x = [0.0; 3];
            let mut sum = vec![0.0; d];
            let mut sq = vec![vec![0.0; d]; d];
            let n = gr.count() as f64;
            for (idx, &c) in gr.cells.iter().enumerate() {
                if c {
                    spec.center(idx, &mut x);
                    for a in 0..d {
                        sum[a] += x[a];
                        for b in 0..d {
                            sq[a][b] += x[a] * x[b];
                        }
                    }
                }
            }
            if n == 0.0 {
                return (0.0, vec![0.0; d], vec![vec![0.0; d]; d]);
            }
            let mu: Vec<f64> = sum.iter().map(|s| s / n).collect();
            let cell = spec.h * spec.h / 12.0;
            let cov = (0..d)
                .map(|a| {
                    (0..d)
                        .map(|b| sq[a][b] / n - mu[a] * mu[b] + if a == b { cell } else { 0.0 })
                        .collect()
                })
                .collect();
            (gr.measure(), mu, cov)
        }
    }
}
