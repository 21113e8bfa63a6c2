//! Distance from a tuple to the symmetry orbit of the centered balls:
//! `inf_{v, ψ} max_j |E_j Δ (ψ(B_j) + L_j(v))|` over `v ∈ (R^d)^m`, `ψ ∈ SL(d)`.
//!
//! Balls are rotation invariant, so `ψ(B)` depends only on the positive part
//! of `ψ`; the search runs over `ψ = exp(S)` with `S` symmetric trace-free.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::family::{LinearFamily, MeasureSpec};
use crate::functional::intervals_1d;
use crate::linalg;
use crate::rng;
use crate::settuple::{moments, symmetric_difference, Ellipsoid, GridRows, SetRepr, SetTuple};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    pub restarts: usize,
    pub contraction: f64,
    /// Stop once the step drops below `stop · r_max`.
    pub stop: f64,
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions { restarts: 16, contraction: 0.5, stop: 1e-4, max_evals: 20_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restart {
    pub index: usize,
    pub distance: f64,
    pub sum: f64,
    pub evals: usize,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFit {
    pub distance: f64,
    /// `Σ_j |E_j Δ (ψ(B_j) + L_j(v))|` at the optimum, the secondary key.
    pub sum: f64,
    /// `v = (x_1, …, x_m)`, block `i` holding `x_i ∈ R^d`.
    pub v: Vec<f64>,
    /// Trace-free symmetric generator in packed form.
    pub s: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub restarts: Vec<Restart>,
    /// Restarts within 1% of the best distance, up to the search resolution.
    pub near_optimal: Vec<usize>,
    /// Set when fewer than two restarts agree on the optimum.
    pub upper_bound_only: bool,
}

/// Number of packed parameters of a symmetric trace-free `d × d` matrix.
pub fn generator_len(d: usize) -> usize {
    d * (d + 1) / 2 - 1
}

/// Unpacks `S`: upper triangle row by row, the last diagonal entry implied.
pub fn generator(d: usize, s: &[f64]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; d]; d];
    let mut k = 0;
    let mut trace = 0.0;
    for a in 0..d {
        for b in a..d {
            if a == d - 1 && b == d - 1 {
                continue;
            }
            m[a][b] = s[k];
            m[b][a] = s[k];
            if a == b {
                trace += s[k];
            }
            k += 1;
        }
    }
    m[d - 1][d - 1] = -trace;
    m
}

pub fn pack_generator(m: &[Vec<f64>]) -> Vec<f64> {
    let d = m.len();
    let mut out = Vec::new();
    for a in 0..d {
        for b in a..d {
            if !(a == d - 1 && b == d - 1) {
                out.push(0.5 * (m[a][b] + m[b][a]));
            }
        }
    }
    out
}

pub fn psi_of(d: usize, s: &[f64]) -> Vec<Vec<f64>> {
    linalg::expm(&generator(d, s))
}

/// `(ψ(B_j) + L_j(v))_j`.
pub fn orbit_member(fam: &LinearFamily, spec: &MeasureSpec, v: &[f64], psi: &[Vec<f64>]) -> Result<SetTuple> {
    spec.check_family(fam)?;
    let d = fam.d();
    let sets = spec
        .radii()
        .iter()
        .enumerate()
        .map(|(j, &r)| Ok(SetRepr::Ellipsoid(Ellipsoid::new(fam.eval(j, v)?, psi.to_vec(), r)?)))
        .collect::<Result<_>>()?;
    SetTuple::new(d, sets)
}

/// Symmetric log of a symmetric positive definite matrix.
fn spd_log(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    let eig = nalgebra::SymmetricEigen::new(linalg::matrix_from_rows(m));
    let mut out = vec![vec![0.0; d]; d];
    for k in 0..d {
        let l = eig.eigenvalues[k].max(1e-300).ln();
        let v = eig.eigenvectors.column(k);
        for a in 0..d {
            for b in 0..d {
                out[a][b] += l * v[a] * v[b];
            }
        }
    }
    out
}

enum Target {
    Rows(GridRows),
    Intervals(Vec<(f64, f64)>),
    General(SetRepr),
}

impl Target {
    fn new(s: &SetRepr) -> Self {
        match s {
            SetRepr::Grid(g) => Target::Rows(GridRows::new(g)),
            _ if s.d() == 1 => Target::Intervals(intervals_1d(s)),
            _ => Target::General(s.clone()),
        }
    }

    fn symdiff(&self, e: &Ellipsoid) -> f64 {
        match self {
            Target::Rows(rows) => rows.symdiff_ellipsoid(e),
            Target::Intervals(iv) => {
                let (a, b) = e.line_interval(&[0.0], &[1.0]).unwrap_or((0.0, 0.0));
                let len: f64 = iv.iter().map(|(p, q)| q - p).sum();
                let overlap: f64 = iv.iter().map(|&(p, q)| (q.min(b) - p.max(a)).max(0.0)).sum();
                len + (b - a) - 2.0 * overlap
            }
            Target::General(s) => symmetric_difference(s, &SetRepr::Ellipsoid(e.clone())).unwrap_or(f64::INFINITY),
        }
    }
}

struct Objective<'a> {
    fam: &'a LinearFamily,
    radii: Vec<f64>,
    targets: Vec<Target>,
    nv: usize,
}

impl Objective<'_> {
    fn eval(&self, x: &[f64]) -> (f64, f64) {
        let d = self.fam.d();
        let (v, s) = x.split_at(self.nv);
        let psi = psi_of(d, s);
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        for (j, t) in self.targets.iter().enumerate() {
            let c = self.fam.eval_unchecked(j, v);
            let e = Ellipsoid::new(c, psi.clone(), self.radii[j]).expect("exp(S) is invertible");
            let v = t.symdiff(&e);
            max = max.max(v);
            sum += v;
        }
        (max, sum)
    }
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Compass search with step contraction.
fn pattern_search(obj: &Objective, x0: Vec<f64>, step0: f64, r_max: f64, opts: &OrbitOptions) -> (Vec<f64>, (f64, f64), usize) {
    let n = x0.len();
    let scale = |k: usize| if k < obj.nv { 1.0 } else { 1.0 / r_max };
    let mut x = x0;
    let mut fx = obj.eval(&x);
    let mut evals = 1;
    let mut step = step0;
    while step >= opts.stop * r_max && evals < opts.max_evals {
        let mut improved = false;
        for k in 0..n {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += sign * step * scale(k);
                let fy = obj.eval(&y);
                evals += 1;
                if better(fy, fx) {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= opts.contraction;
        }
    }
    (x, fx, evals)
}

/// Moment-based starting point: centroids fix `v` by least squares, the
/// averaged normalized covariance fixes `ψψᵀ`.
fn moment_start(fam: &LinearFamily, e: &SetTuple) -> Result<Vec<f64>> {
    let d = fam.d();
    let m = fam.m();
    let mom: Vec<_> = e.sets.iter().map(moments).collect();
    let mut v = vec![0.0; m * d];
    for a in 0..d {
        let rhs: Vec<f64> = mom.iter().map(|(_, c, _)| c[a]).collect();
        let sol = linalg::least_squares(fam.coeffs(), &rhs)
            .ok_or_else(|| LabError::computation("centroid fit failed"))?;
        for i in 0..m {
            v[i * d + a] = sol[i];
        }
    }
    let mut avg = vec![vec![0.0; d]; d];
    let mut count = 0.0;
    for (mass, _, cov) in &mom {
        let det = linalg::det(cov);
        if *mass > 0.0 && det > 0.0 {
            let f = det.powf(-1.0 / d as f64);
            for a in 0..d {
                for b in 0..d {
                    avg[a][b] += f * cov[a][b];
                }
            }
            count += 1.0;
        }
    }
    let s = if count > 0.0 && d > 1 {
        // cov ∝ ψψᵀ = exp(2S).
        let lg = spd_log(&avg.iter().map(|r| r.iter().map(|x| x / count).collect()).collect::<Vec<_>>());
        let mut half: Vec<Vec<f64>> = lg.iter().map(|r| r.iter().map(|x| 0.5 * x).collect()).collect();
        let tr = (0..d).map(|a| half[a][a]).sum::<f64>() / d as f64;
        for (a, row) in half.iter_mut().enumerate() {
            row[a] -= tr;
        }
        pack_generator(&half)
    } else {
        vec![0.0; generator_len(d)]
    };
    v.extend(s);
    Ok(v)
}

pub fn dist_to_orbit(fam: &LinearFamily, e: &SetTuple, spec: &MeasureSpec, opts: OrbitOptions) -> Result<OrbitFit> {
    spec.check_family(fam)?;
    let d = fam.d();
    if !(1..=2).contains(&d) {
        return Err(LabError::argument("orbit distance supports d ∈ {1, 2}"));
    }
    if e.len() != fam.len() || e.d != d {
        return Err(LabError::argument("tuple does not match the family"));
    }
    if opts.restarts == 0 {
        return Err(LabError::argument("at least one restart is required"));
    }
    let radii = spec.radii();
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let nv = fam.m() * d;
    let obj = Objective { fam, radii, targets: e.sets.iter().map(Target::new).collect(), nv };
    let x0 = moment_start(fam, e)?;
    let restarts: Vec<Restart> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut x = x0.clone();
            let mut step = 0.1 * r_max;
            if k > 0 {
                let mut r = rng::stream(opts.seed, k as u64);
                for (i, xi) in x.iter_mut().enumerate() {
                    let sd = if i < nv { 0.15 * r_max } else { 0.15 };
                    *xi += sd * rng::normal(&mut r);
                }
                step = 0.25 * r_max;
            }
            let (x, f, evals) = pattern_search(&obj, x, step, r_max, &opts);
            let (v, s) = x.split_at(nv);
            Restart { index: k, distance: f.0, sum: f.1, evals, v: v.to_vec(), s: s.to_vec() }
        })
        .collect();
    let best = restarts
        .iter()
        .min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.sum.total_cmp(&b.sum)))
        .expect("at least one restart")
        .clone();
    // Compass search on a nonsmooth objective stalls within a few final
    // steps of boundary motion; restarts that close are counted as agreeing.
    let resolution = 4.0 * d as f64 * opts.stop * r_max.powi(d as i32);
    let near_optimal: Vec<usize> = restarts
        .iter()
        .filter(|r| r.distance <= best.distance * 1.01 + resolution)
        .map(|r| r.index)
        .collect();
    Ok(OrbitFit {
        distance: best.distance,
        sum: best.sum,
        psi: psi_of(d, &best.s),
        v: best.v,
        s: best.s,
        upper_bound_only: near_optimal.len() < 2,
        near_optimal,
        restarts,
    })
}
