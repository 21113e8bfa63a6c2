//! Evaluation of `Φ_L(E)`: Monte Carlo, fiber quadrature (d = 2, m = 2) and
//! exact polygon areas for tuples of intervals (d = 1, m = 2).

use std::cell::Cell;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::family::{omega, LinearFamily, MeasureSpec};
use crate::linalg;
use crate::polygon;
use crate::quadrature::integrate_with_breaks;
use crate::rng;
use crate::settuple::{Ellipsoid, SetRepr, SetTuple};

pub const DEFAULT_SAMPLES: usize = 1 << 20;
const BATCH: usize = 4096;

/// Monte Carlo estimate of `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// Volume of the sampling box times the Jacobian constant.
    pub box_volume: f64,
}

/// `Λ_d = {(L_j x)_j : x ∈ (R^d)^m}`, parametrized by the coordinates
/// `y_k = L_{j_k}(x)` for an independent index set `J′ = (j_k)`.
///
/// The induced measure is Lebesgue measure in `x`, i.e. `|det A′|^{-d} dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSubspace {
    pub m: usize,
    pub d: usize,
    pub independent: Vec<usize>,
    /// Row `i` expresses `L_i` in the `y` coordinates.
    pub coords: Vec<Vec<f64>>,
    pub det: f64,
}

impl LambdaSubspace {
    pub fn new(fam: &LinearFamily) -> Result<Self> {
        let (jp, _) = fam.select_independent_subset()?;
        let a: Vec<Vec<f64>> = jp.iter().map(|&j| fam.row(j).to_vec()).collect();
        let inv = linalg::inverse(&a).ok_or_else(|| LabError::structural("independent rows are singular"))?;
        let coords = (0..fam.len())
            .map(|i| {
                let row = fam.row(i);
                (0..fam.m()).map(|k| (0..fam.m()).map(|l| row[l] * inv[l][k]).sum()).collect()
            })
            .collect();
        Ok(LambdaSubspace { m: fam.m(), d: fam.d(), independent: jp, coords, det: linalg::det(&a).abs() })
    }

    pub fn dim(&self) -> usize {
        self.m * self.d
    }

    /// `dx = jacobian · dy`.
    pub fn jacobian(&self) -> f64 {
        self.det.powi(-(self.d as i32))
    }

    /// `(L_i x)_i` given `y`, one `d`-vector per independent index.
    pub fn point(&self, y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.coords
            .iter()
            .map(|c| (0..self.d).map(|a| c.iter().zip(y).map(|(ck, yk)| ck * yk[a]).sum()).collect())
            .collect()
    }
}

fn check_tuple(fam: &LinearFamily, e: &SetTuple) -> Result<()> {
    if e.len() != fam.len() {
        return Err(LabError::argument(format!("{} sets for {} maps", e.len(), fam.len())));
    }
    if e.d != fam.d() {
        return Err(LabError::argument("tuple dimension differs from family dimension"));
    }
    Ok(())
}

/// Monte Carlo over the `J′` coordinates of `Λ_d`.
pub fn eval_phi_mc(fam: &LinearFamily, e: &SetTuple, samples: usize, seed: u64) -> Result<MCEstimate> {
    check_tuple(fam, e)?;
    if samples < 2 {
        return Err(LabError::argument("at least two samples are required"));
    }
    if fam.d() > 3 {
        return Err(LabError::argument("Monte Carlo supports d ≤ 3"));
    }
    let lam = LambdaSubspace::new(fam)?;
    let d = fam.d();
    let mut lo = Vec::new();
    let mut width = Vec::new();
    let mut volume = 1.0;
    for &j in &lam.independent {
        let (a, b) = e.sets[j].bounding_box();
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(LabError::argument(format!("set {} is unbounded", j + 1)));
        }
        let w: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
        volume *= w.iter().product::<f64>();
        lo.push(a);
        width.push(w);
    }
    let scale = volume * lam.jacobian();
    let empty = MCEstimate { value: 0.0, stderr: 0.0, samples, seed, box_volume: scale };
    if scale == 0.0 || e.sets.iter().any(SetRepr::is_empty) {
        return Ok(empty);
    }
    let others: Vec<usize> = (0..fam.len()).filter(|i| !lam.independent.contains(i)).collect();
    let m = fam.m();
    let batches = samples.div_ceil(BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            let n = BATCH.min(samples - b * BATCH);
            let mut y = vec![[0.0f64; 3]; m];
            let mut z = [0.0f64; 3];
            let mut count = 0u64;
            'sample: for _ in 0..n {
                for k in 0..m {
                    for a in 0..d {
                        y[k][a] = lo[k][a] + width[k][a] * r.random::<f64>();
                    }
                }
                for (k, &j) in lam.independent.iter().enumerate() {
                    if !e.sets[j].contains(&y[k][..d]) {
                        continue 'sample;
                    }
                }
                for &i in &others {
                    let c = &lam.coords[i];
                    for a in 0..d {
                        z[a] = (0..m).map(|k| c[k] * y[k][a]).sum();
                    }
                    if !e.sets[i].contains(&z[..d]) {
                        continue 'sample;
                    }
                }
                count += 1;
            }
            count
        })
        .sum();
    let n = samples as f64;
    let p = hits as f64 / n;
    let sd = (p * (1.0 - p) * n / (n - 1.0)).sqrt();
    Ok(MCEstimate { value: scale * p, stderr: scale * sd / n.sqrt(), samples, seed, box_volume: scale })
}

/// Union-of-intervals slice of a set in `R¹`.
pub fn intervals_1d(set: &SetRepr) -> Vec<(f64, f64)> {
    match set {
        SetRepr::Ellipsoid(e) => e.line_interval(&[0.0], &[1.0]).into_iter().filter(|(a, b)| b > a).collect(),
        SetRepr::Radial(r) => {
            let lo = r.center[0] - r.boundary(&[-1.0]);
            let hi = r.center[0] + r.boundary(&[1.0]);
            vec![(lo, hi)]
        }
        SetRepr::Grid(g) => g.runs(0, &[0]),
    }
}

/// `∫_{R²} Π_j 1_{I_j}(c_j · u) du` where the independent coordinates carry
/// the rectangle and the rest clip it. Each `I_j` is a union of intervals.
fn interval_area(lam: &LambdaSubspace, ivs: &[&[(f64, f64)]]) -> f64 {
    let (p, q) = (lam.independent[0], lam.independent[1]);
    if ivs.iter().any(|v| v.is_empty()) {
        return 0.0;
    }
    let mut total = 0.0;
    for &(x0, x1) in ivs[p] {
        for &(y0, y1) in ivs[q] {
            let rect = polygon::rectangle(x0, x1, y0, y1);
            total += clip_rest(lam, ivs, &rect, 0);
        }
    }
    total
}

fn clip_rest(lam: &LambdaSubspace, ivs: &[&[(f64, f64)]], poly: &[polygon::Point], from: usize) -> f64 {
    let next = (from..ivs.len()).find(|i| !lam.independent.contains(i));
    let Some(i) = next else {
        return polygon::area(poly);
    };
    let c = [lam.coords[i][0], lam.coords[i][1]];
    let mut total = 0.0;
    for &(lo, hi) in ivs[i] {
        let clipped = polygon::clip_slab(poly, c, lo, hi);
        if !clipped.is_empty() {
            total += clip_rest(lam, ivs, &clipped, i + 1);
        }
    }
    total
}

fn require_m2(fam: &LinearFamily) -> Result<()> {
    if fam.m() != 2 {
        return Err(LabError::argument("this engine needs m = 2"));
    }
    Ok(())
}

/// Exact `Φ` for `d = 1`, `m = 2` with centered-interval data `(center, length)`.
pub fn eval_phi_intervals_exact(fam: &LinearFamily, intervals: &[(f64, f64)]) -> Result<f64> {
    require_m2(fam)?;
    if intervals.len() != fam.len() {
        return Err(LabError::argument("one interval per map is required"));
    }
    if intervals.iter().any(|&(_, l)| !(l >= 0.0)) {
        return Err(LabError::argument("interval lengths must be nonnegative"));
    }
    let ivs: Vec<Vec<(f64, f64)>> =
        intervals.iter().map(|&(c, l)| if l > 0.0 { vec![(c - l / 2.0, c + l / 2.0)] } else { Vec::new() }).collect();
    eval_phi_union_exact(fam, &ivs)
}

/// Exact `Φ` for `d = 1`, `m = 2` with each set a finite union of intervals.
pub fn eval_phi_union_exact(fam: &LinearFamily, ivs: &[Vec<(f64, f64)>]) -> Result<f64> {
    require_m2(fam)?;
    let lam = LambdaSubspace { d: 1, ..LambdaSubspace::new(fam)? };
    let refs: Vec<&[(f64, f64)]> = ivs.iter().map(|v| v.as_slice()).collect();
    Ok(interval_area(&lam, &refs) / lam.det)
}

/// Exact `Φ` for a one-dimensional tuple, `m = 2`.
pub fn eval_phi_exact(fam: &LinearFamily, e: &SetTuple) -> Result<f64> {
    check_tuple(fam, e)?;
    if e.d != 1 {
        return Err(LabError::argument("the exact engine needs d = 1"));
    }
    let ivs: Vec<Vec<(f64, f64)>> = e.sets.iter().map(intervals_1d).collect();
    eval_phi_union_exact(fam, &ivs)
}

/// Tolerances of the nested adaptive fiber quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

/// Fiber tolerance for deficits. Chord round-off on radial graphs keeps the
/// nested rule from resolving the difference integrand much below this.
pub const DEFICIT_TOL: f64 = 1e-9;

impl Default for FiberOptions {
    fn default() -> Self {
        FiberOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    /// Integrand evaluations where some fiber had more than one interval.
    pub multi_interval_fibers: usize,
}

fn fiber_ready(fam: &LinearFamily, e: &SetTuple) -> Result<()> {
    check_tuple(fam, e)?;
    require_m2(fam)?;
    if e.d != 2 {
        return Err(LabError::argument("the fiber engine needs d = 2"));
    }
    if e.sets.iter().any(|s| matches!(s, SetRepr::Grid(_))) {
        return Err(LabError::argument("the fiber engine needs ellipsoid or radial sets"));
    }
    Ok(())
}

/// `Σ_t w_t Φ(E_t)` by integrating, over the first coordinates `y′ ∈ Λ₁`,
/// the exact one-dimensional functional of the vertical fibers.
pub fn fiber_combination(fam: &LinearFamily, tuples: &[(&SetTuple, f64)], opts: FiberOptions) -> Result<FiberResult> {
    for (e, _) in tuples {
        fiber_ready(fam, e)?;
    }
    let lam = LambdaSubspace::new(fam)?;
    let (p, q) = (lam.independent[0], lam.independent[1]);
    let n = fam.len();
    // Per tuple: x-extents of every set, or None if some set is empty.
    let extents: Vec<Option<Vec<(f64, f64)>>> =
        tuples.iter().map(|(e, _)| e.sets.iter().map(SetRepr::x_extent).collect()).collect();
    // Support polygon in (y1, y2) of each tuple; its vertices give outer breaks.
    let mut lo1 = f64::INFINITY;
    let mut hi1 = f64::NEG_INFINITY;
    let mut outer_breaks = Vec::new();
    for ext in extents.iter().flatten() {
        let mut poly = polygon::rectangle(ext[p].0, ext[p].1, ext[q].0, ext[q].1);
        for i in (0..n).filter(|i| !lam.independent.contains(i)) {
            poly = polygon::clip_slab(&poly, [lam.coords[i][0], lam.coords[i][1]], ext[i].0, ext[i].1);
        }
        for v in &poly {
            lo1 = lo1.min(v[0]);
            hi1 = hi1.max(v[0]);
            outer_breaks.push(v[0]);
        }
    }
    if !(hi1 > lo1) {
        return Ok(FiberResult { value: 0.0, error: 0.0, evals: 0, multi_interval_fibers: 0 });
    }
    // Range of y2 where every fiber of tuple `t` can be nonempty.
    let inner_support = |ext: &[(f64, f64)], y1: f64| -> Option<(f64, f64)> {
        let (mut a, mut b) = ext[q];
        for i in (0..n).filter(|i| !lam.independent.contains(i)) {
            let c = &lam.coords[i];
            let (lo, hi) = ext[i];
            if c[1] == 0.0 {
                let v = c[0] * y1;
                if v < lo || v > hi {
                    return None;
                }
                continue;
            }
            let (u, w) = ((lo - c[0] * y1) / c[1], (hi - c[0] * y1) / c[1]);
            a = a.max(u.min(w));
            b = b.min(u.max(w));
        }
        (b > a).then_some((a, b))
    };
    let multi = Cell::new(0usize);
    let evals = Cell::new(0usize);
    let inner_err = Cell::new(0.0f64);
    let inner_tol = opts.abs_tol / (hi1 - lo1);
    let outer = |y1: f64| -> f64 {
        let first: Vec<Vec<(f64, f64)>> = tuples.iter().map(|(e, _)| e.sets[p].vertical_chord(y1)).collect();
        if first.iter().all(|c| c.is_empty()) {
            return 0.0;
        }
        let g = |y2: f64| -> f64 {
            let mut total = 0.0;
            for (t, (e, w)) in tuples.iter().enumerate() {
                if first[t].is_empty() {
                    continue;
                }
                let mut chords: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
                let mut ok = true;
                for i in 0..n {
                    chords[i] = if i == p {
                        first[t].clone()
                    } else {
                        let c = &lam.coords[i];
                        e.sets[i].vertical_chord(c[0] * y1 + c[1] * y2)
                    };
                    if chords[i].is_empty() {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                if chords.iter().any(|c| c.len() > 1) {
                    multi.set(multi.get() + 1);
                }
                let refs: Vec<&[(f64, f64)]> = chords.iter().map(|v| v.as_slice()).collect();
                total += w * interval_area(&lam, &refs);
            }
            total
        };
        let mut lo2 = f64::INFINITY;
        let mut hi2 = f64::NEG_INFINITY;
        let mut breaks = Vec::new();
        for ext in extents.iter().flatten() {
            if let Some((a, b)) = inner_support(ext, y1) {
                lo2 = lo2.min(a);
                hi2 = hi2.max(b);
                breaks.extend([a, b]);
            }
        }
        if !(hi2 > lo2) {
            return 0.0;
        }
        let r = integrate_with_breaks(g, lo2, hi2, &breaks, inner_tol, opts.rel_tol, opts.max_intervals);
        evals.set(evals.get() + r.evals);
        inner_err.set(inner_err.get().max(r.error));
        r.value
    };
    let r = integrate_with_breaks(outer, lo1, hi1, &outer_breaks, opts.abs_tol, opts.rel_tol, opts.max_intervals);
    let jac = lam.jacobian();
    Ok(FiberResult {
        value: r.value * jac,
        error: (r.error + (hi1 - lo1) * inner_err.get()) * jac,
        evals: evals.get(),
        multi_interval_fibers: multi.get(),
    })
}

pub fn eval_phi_fiber(fam: &LinearFamily, e: &SetTuple) -> Result<FiberResult> {
    fiber_combination(fam, &[(e, 1.0)], FiberOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Mc,
    Fiber,
    Exact,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::Mc => "mc",
            EngineKind::Fiber => "fiber",
            EngineKind::Exact => "exact",
        })
    }
}

impl std::str::FromStr for EngineKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(EngineKind::Mc),
            "fiber" => Ok(EngineKind::Fiber),
            "exact" => Ok(EngineKind::Exact),
            _ => Err(LabError::argument(format!("unknown engine {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Engine {
    pub kind: EngineKind,
    pub samples: usize,
    pub seed: u64,
}

impl Engine {
    pub fn mc(samples: usize, seed: u64) -> Self {
        Engine { kind: EngineKind::Mc, samples, seed }
    }

    pub fn fiber() -> Self {
        Engine { kind: EngineKind::Fiber, samples: 0, seed: 0 }
    }

    pub fn exact() -> Self {
        Engine { kind: EngineKind::Exact, samples: 0, seed: 0 }
    }

    /// The deterministic engine for this configuration, if one applies.
    pub fn deterministic_for(fam: &LinearFamily, e: &SetTuple) -> Option<Engine> {
        if fam.m() != 2 {
            return None;
        }
        match e.d {
            1 => Some(Engine::exact()),
            2 if fiber_ready(fam, e).is_ok() => Some(Engine::fiber()),
            _ => None,
        }
    }
}

/// `Φ` with an error bar: a standard error for MC, a quadrature error
/// estimate for the fiber engine, zero for exact evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub value: f64,
    pub stderr: f64,
    pub engine: EngineKind,
    pub samples: usize,
    pub seed: u64,
}

pub fn eval_phi(fam: &LinearFamily, e: &SetTuple, engine: Engine) -> Result<PhiEstimate> {
    let (value, stderr) = match engine.kind {
        EngineKind::Mc => {
            let r = eval_phi_mc(fam, e, engine.samples, engine.seed)?;
            (r.value, r.stderr)
        }
        EngineKind::Fiber => {
            let r = eval_phi_fiber(fam, e)?;
            (r.value, r.error)
        }
        EngineKind::Exact => (eval_phi_exact(fam, e)?, 0.0),
    };
    Ok(PhiEstimate { value, stderr, engine: engine.kind, samples: engine.samples, seed: engine.seed })
}

/// Centered balls with the actual measures of `e`.
pub fn star_of(e: &SetTuple) -> SetTuple {
    let d = e.d;
    let sets = e
        .sets
        .iter()
        .map(|s| {
            let r = (s.measure() / omega(d)).powf(1.0 / d as f64);
            SetRepr::Ellipsoid(Ellipsoid::ball(vec![0.0; d], r))
        })
        .collect();
    SetTuple { d, sets }
}

/// Relative measure tolerance of a representation.
fn measure_tolerance(set: &SetRepr, target: f64, d: usize) -> f64 {
    match set {
        SetRepr::Grid(g) => {
            let r = (target / omega(d)).powf(1.0 / d as f64);
            (4.0 * d as f64 * g.spec.h / r).max(1e-6)
        }
        _ => 1e-6,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deficit {
    pub phi_star: f64,
    pub phi: f64,
    pub deficit: f64,
    pub stderr: f64,
    pub engine: EngineKind,
}

impl Deficit {
    /// Nonnegative up to three standard errors.
    pub fn consistent(&self) -> bool {
        self.deficit >= -3.0 * self.stderr - 1e-12 * self.phi_star.abs()
    }
}

/// `Φ(E*) − Φ(E)` where `E*` has the measures of `E`.
///
/// The fiber engine integrates the difference directly, so its error
/// control is relative to the deficit itself. With MC, `Φ(E*)` uses a
/// deterministic engine when one applies.
pub fn deficit(fam: &LinearFamily, e: &SetTuple, spec: &MeasureSpec, engine: Engine) -> Result<Deficit> {
    check_tuple(fam, e)?;
    spec.check_family(fam)?;
    for (j, (s, &target)) in e.sets.iter().zip(&spec.e).enumerate() {
        let m = s.measure();
        let tol = measure_tolerance(s, target, e.d);
        if ((m - target) / target).abs() > tol {
            return Err(LabError::argument(format!(
                "|E_{}| = {m} differs from e = {target} beyond tolerance {tol:e}",
                j + 1
            )));
        }
    }
    let star = star_of(e);
    let (phi_star, phi, deficit, stderr) = match engine.kind {
        EngineKind::Fiber => {
            let opts = FiberOptions { abs_tol: DEFICIT_TOL, rel_tol: DEFICIT_TOL, ..FiberOptions::default() };
            let a = fiber_combination(fam, &[(&star, 1.0)], opts)?;
            let diff = fiber_combination(fam, &[(&star, 1.0), (e, -1.0)], opts)?;
            (a.value, a.value - diff.value, diff.value, diff.error)
        }
        EngineKind::Exact => {
            let a = eval_phi_exact(fam, &star)?;
            let b = eval_phi_exact(fam, e)?;
            (a, b, a - b, 1e-14 * a.abs())
        }
        EngineKind::Mc => {
            let b = eval_phi_mc(fam, e, engine.samples, engine.seed)?;
            let a = match Engine::deterministic_for(fam, &star) {
                Some(det) => eval_phi(fam, &star, det)?,
                None => {
                    let seed = rng::derive_seed(engine.seed, "star");
                    eval_phi(fam, &star, Engine::mc(engine.samples, seed))?
                }
            };
            (a.value, b.value, a.value - b.value, a.stderr.hypot(b.stderr))
        }
    };
    Ok(Deficit { phi_star, phi, deficit, stderr, engine: engine.kind })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::kernels::lens_area;
    use crate::quadrature::integrate;
    use crate::settuple::ball_tuple;

    fn rs_balls(d: usize, e: f64) -> (LinearFamily, MeasureSpec, SetTuple) {
        let spec = MeasureSpec::new(vec![e; 3], d).unwrap();
        (LinearFamily::riesz_sobolev(d), spec.clone(), ball_tuple(&spec))
    }

    fn rs2_star() -> f64 {
        integrate(|t| lens_area(1.0, 1.0, t) * 2.0 * PI * t, 0.0, 1.0, 1e-14, 1e-14).value
    }

    #[test]
    fn hexagon_exact() {
        let fam = LinearFamily::riesz_sobolev(1);
        let v = eval_phi_intervals_exact(&fam, &[(0.0, 1.0); 3]).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
        let v = eval_phi_intervals_exact(&fam, &[(0.0, 1.0), (0.0, 1.0), (0.0, 3.0)]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let mut prev = 0.75;
        for k in 1..8 {
            let c = 0.1 * k as f64;
            let v = eval_phi_intervals_exact(&fam, &[(0.0, 1.0), (0.0, 1.0), (c, 1.0)]).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn exact_engine_on_sets() {
        let (fam, _, b) = rs_balls(1, 1.0);
        assert!((eval_phi_exact(&fam, &b).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mc_matches_hexagon() {
        let (fam, _, b) = rs_balls(1, 1.0);
        let r = eval_phi_mc(&fam, &b, DEFAULT_SAMPLES, 7).unwrap();
        assert!((r.value - 0.75).abs() < 3.0 * r.stderr, "{r:?}");
        assert_eq!(r, eval_phi_mc(&fam, &b, DEFAULT_SAMPLES, 7).unwrap());
    }

    #[test]
    fn mc_matches_lens_integral() {
        let (fam, _, b) = rs_balls(2, PI);
        let exact = rs2_star();
        let r = eval_phi_mc(&fam, &b, DEFAULT_SAMPLES, 3).unwrap();
        assert!((r.value - exact).abs() < 3.0 * r.stderr, "{} vs {exact} ± {}", r.value, r.stderr);
    }

    #[test]
    fn fiber_matches_lens_integral() {
        let (fam, _, b) = rs_balls(2, PI);
        let r = eval_phi_fiber(&fam, &b).unwrap();
        assert!((r.value - rs2_star()).abs() < 1e-8, "{r:?} vs {}", rs2_star());
        assert_eq!(r.multi_interval_fibers, 0);
    }

    #[test]
    fn fiber_on_perturbed_radial_matches_mc() {
        use crate::harmonics::HarmonicTuple;
        use crate::settuple::radial_from_harmonic;
        let spec = MeasureSpec::new(vec![PI; 3], 2).unwrap();
        let fam = LinearFamily::riesz_sobolev(2);
        let g = HarmonicTuple::new(3, vec![[1.0, 0.0], [0.0, 1.0], [0.5, -0.5]]).unwrap();
        let e = radial_from_harmonic(&g, 0.1, &spec).unwrap();
        let f = eval_phi_fiber(&fam, &e).unwrap();
        let m = eval_phi_mc(&fam, &e, DEFAULT_SAMPLES, 9).unwrap();
        assert!((f.value - m.value).abs() < 3.0 * m.stderr, "{f:?} {m:?}");
        assert!(f.error < 1e-6 && f.value < rs2_star());
    }

    #[test]
    fn empty_set_gives_zero() {
        let (fam, _, mut b) = rs_balls(2, PI);
        b.sets[1] = SetRepr::Ellipsoid(Ellipsoid::ball(vec![0.0, 0.0], 0.0));
        assert_eq!(eval_phi_mc(&fam, &b, 1000, 1).unwrap().value, 0.0);
        assert_eq!(eval_phi_fiber(&fam, &b).unwrap().value, 0.0);
    }

    #[test]
    fn lambda_subspace_reproduces_maps() {
        let fam = LinearFamily::new(vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, -1.0]], 2).unwrap();
        let lam = LambdaSubspace::new(&fam).unwrap();
        assert_eq!(lam.dim(), 4);
        let x = [0.3, -0.2, 1.1, 0.5];
        let y: Vec<Vec<f64>> = lam.independent.iter().map(|&j| fam.eval(j, &x).unwrap()).collect();
        let pts = lam.point(&y);
        for (i, p) in pts.iter().enumerate() {
            let direct = fam.eval(i, &x).unwrap();
            assert!(p.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn translated_balls_have_zero_deficit() {
        let (fam, spec, b) = rs_balls(2, PI);
        let v = [0.3, -0.2, 0.1, 0.4];
        let shifts: Vec<Vec<f64>> = (0..3).map(|j| fam.eval(j, &v).unwrap()).collect();
        let e = b.translated(&shifts).unwrap();
        let d = deficit(&fam, &e, &spec, Engine::fiber()).unwrap();
        assert!(d.deficit.abs() < 1e-8, "{d:?}");
        let d = deficit(&fam, &e, &spec, Engine::mc(1 << 18, 5)).unwrap();
        assert!(d.deficit.abs() < 3.0 * d.stderr, "{d:?}");
    }

    #[test]
    fn sheared_balls_have_zero_deficit() {
        let (fam, spec, b) = rs_balls(2, PI);
        let e = b.linear_image(&[vec![1.0, 0.7], vec![0.0, 1.0]]).unwrap();
        let d = deficit(&fam, &e, &spec, Engine::fiber()).unwrap();
        assert!(d.deficit.abs() < 1e-8, "{d:?}");
    }

    #[test]
    fn measure_mismatch_is_rejected() {
        let (fam, _, b) = rs_balls(2, PI);
        let spec = MeasureSpec::new(vec![PI, PI, 2.0], 2).unwrap();
        assert!(deficit(&fam, &b, &spec, Engine::fiber()).is_err());
    }
}
