//! Steiner symmetrization of raster tuples and flows toward centered balls.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::family::{omega, LinearFamily};
use crate::functional::{eval_phi, Engine};
use crate::linalg;
use crate::settuple::{rasterize, symmetric_difference, Ellipsoid, GridSet, GridSpec, SetRepr, SetTuple};

/// Cells grouped into lines parallel to `u`, each line ordered from the
/// most centered cell outward.
struct SteinerPlan {
    order: Vec<usize>,
    starts: Vec<usize>,
}

fn perpendicular_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let perp = linalg::null_space(&[u.to_vec()], d);
    assert_eq!(perp.len(), d - 1, "unit vector has a (d−1)-dimensional complement");
    perp
}

impl SteinerPlan {
    fn new(spec: GridSpec, u: &[f64]) -> Self {
        let d = spec.d;
        let perp = perpendicular_basis(u);
        let mut x = [0.0; 3];
        let mut keys: Vec<([i64; 2], f64, usize)> = (0..spec.total())
            .map(|idx| {
                spec.center(idx, &mut x);
                let mut key = [0i64; 2];
                for (k, w) in perp.iter().enumerate() {
                    key[k] = (linalg::dot(w, &x[..d]) / spec.h).floor() as i64;
                }
                (key, linalg::dot(u, &x[..d]), idx)
            })
            .collect();
        // Ties at ±s alternate sides between lines so rounding stays balanced.
        keys.sort_by(|a, b| {
            let flip = |k: &[i64; 2], s: f64| if (k[0] + k[1]).rem_euclid(2) == 0 { s } else { -s };
            a.0.cmp(&b.0)
                .then(a.1.abs().total_cmp(&b.1.abs()))
                .then(flip(&a.0, a.1).total_cmp(&flip(&b.0, b.1)))
                .then(a.2.cmp(&b.2))
        });
        let mut starts = vec![0];
        for i in 1..keys.len() {
            if keys[i].0 != keys[i - 1].0 {
                starts.push(i);
            }
        }
        starts.push(keys.len());
        SteinerPlan { order: keys.into_iter().map(|k| k.2).collect(), starts }
    }

    fn apply(&self, g: &GridSet) -> GridSet {
        let mut cells = vec![false; g.cells.len()];
        for w in self.starts.windows(2) {
            let line = &self.order[w[0]..w[1]];
            let count = line.iter().filter(|&&i| g.cells[i]).count();
            for &i in &line[..count] {
                cells[i] = true;
            }
        }
        GridSet::new(g.spec, cells).expect("same grid")
    }
}

fn unit(u: &[f64]) -> Result<Vec<f64>> {
    let n = linalg::norm(u);
    if !(n > 0.0) || !n.is_finite() {
        return Err(LabError::argument("direction must be a nonzero vector"));
    }
    Ok(u.iter().map(|c| c / n).collect())
}

fn grids(e: &SetTuple) -> Result<Vec<&GridSet>> {
    e.sets
        .iter()
        .map(|s| match s {
            SetRepr::Grid(g) => Ok(g),
            _ => Err(LabError::argument("Steiner steps need raster sets")),
        })
        .collect()
}

/// Replaces every line fiber parallel to `u` by the most centered run of
/// cells with the same count.
pub fn steiner_step(e: &SetTuple, u: &[f64]) -> Result<SetTuple> {
    if u.len() != e.d {
        return Err(LabError::argument("direction has the wrong dimension"));
    }
    let u = unit(u)?;
    let gs = grids(e)?;
    let mut plans: Vec<(GridSpec, SteinerPlan)> = Vec::new();
    let mut sets = Vec::with_capacity(gs.len());
    for g in gs {
        let k = match plans.iter().position(|(s, _)| *s == g.spec) {
            Some(k) => k,
            None => {
                plans.push((g.spec, SteinerPlan::new(g.spec, &u)));
                plans.len() - 1
            }
        };
        sets.push(SetRepr::Grid(plans[k].1.apply(g)));
    }
    SetTuple::new(e.d, sets)
}

/// Equidistributed directions: angles `π·k·(√5−1)/2 mod π` in the plane,
/// a golden-angle spiral on the sphere, `±1` on the line.
pub fn golden_directions(d: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    Ok(match d {
        1 => vec![vec![1.0]; count],
        2 => (0..count)
            .map(|k| {
                let a = (PI * k as f64 * g).rem_euclid(PI);
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => (0..count)
            .map(|k| {
                let z = 1.0 - (2.0 * ((k as f64 * g).fract()));
                let phi = 2.0 * PI * k as f64 * g * g;
                let r = (1.0 - z * z).max(0.0).sqrt();
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect(),
        _ => return Err(LabError::argument("directions are available for d ≤ 3")),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub step: usize,
    pub direction: Vec<f64>,
    pub phi: f64,
    pub stderr: f64,
    /// `max_j |E_j Δ B_j|` with `|B_j| = |E_j|`.
    pub distance: f64,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<FlowStep>,
    /// `max_j |raster(B_j) Δ B_j|`, the best distance a raster can reach.
    pub floor: f64,
    pub stalled: bool,
    /// Every step satisfied `Φ_{k+1} ≥ Φ_k − 3·σ`.
    pub monotone: bool,
    pub measures_preserved: bool,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,phi,stderr,distance\n");
        for st in &self.steps {
            s.push_str(&format!("{},{:.12e},{:.6e},{:.12e}\n", st.step, st.phi, st.stderr, st.distance));
        }
        s
    }

    pub fn last(&self) -> &FlowStep {
        self.steps.last().expect("trajectory has the initial state")
    }
}

fn distance_to_balls(e: &SetTuple) -> Result<(f64, f64)> {
    let d = e.d;
    let mut dist: f64 = 0.0;
    let mut floor: f64 = 0.0;
    for s in &e.sets {
        let r = (s.measure() / omega(d)).powf(1.0 / d as f64);
        let ball = SetRepr::Ellipsoid(Ellipsoid::ball(vec![0.0; d], r));
        dist = dist.max(symmetric_difference(s, &ball)?);
        if let SetRepr::Grid(g) = s {
            floor = floor.max(symmetric_difference(&SetRepr::Grid(rasterize(&ball, g.spec)), &ball)?);
        }
    }
    Ok((dist, floor))
}

/// Applies one Steiner step per direction. `Φ` is evaluated after every
/// step with the same engine (and the same MC seed, so successive estimates
/// share their random numbers).
pub fn flow_to_balls(fam: &LinearFamily, e: &SetTuple, schedule: &[Vec<f64>], engine: Engine) -> Result<Trajectory> {
    let gs = grids(e)?;
    let counts0: Vec<usize> = gs.iter().map(|g| g.count()).collect();
    let record = |step: usize, dir: Vec<f64>, t: &SetTuple| -> Result<FlowStep> {
        let phi = eval_phi(fam, t, engine)?;
        let (distance, _) = distance_to_balls(t)?;
        let cells = grids(t)?.iter().map(|g| g.count()).collect();
        Ok(FlowStep { step, direction: dir, phi: phi.value, stderr: phi.stderr, distance, cells })
    };
    let (_, floor) = distance_to_balls(e)?;
    let mut steps = vec![record(0, vec![0.0; e.d], e)?];
    let mut cur = e.clone();
    for (k, u) in schedule.iter().enumerate() {
        cur = steiner_step(&cur, u)?;
        steps.push(record(k + 1, unit(u)?, &cur)?);
    }
    let monotone = steps.windows(2).all(|w| w[1].phi >= w[0].phi - 3.0 * w[0].stderr.hypot(w[1].stderr));
    let measures_preserved = steps.iter().all(|s| s.cells == counts0);
    // Stalled: the last ten steps gained under 1% while still well above the floor.
    let n = steps.len();
    let stalled = n > 10 && {
        let last = steps[n - 1].distance;
        let before = steps[n - 11].distance;
        last > 4.0 * floor && before - last < 0.01 * before
    };
    Ok(Trajectory { steps, floor, stalled, monotone, measures_preserved })
}

/// Default schedule of `count` golden-angle directions.
pub fn default_schedule(d: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    golden_directions(d, count)
}

/// Occupied cells per line parallel to `u`, lines in perpendicular order.
pub fn fiber_counts(g: &GridSet, u: &[f64]) -> Result<Vec<usize>> {
    let u = unit(u)?;
    let plan = SteinerPlan::new(g.spec, &u);
    Ok(plan
        .starts
        .windows(2)
        .map(|w| plan.order[w[0]..w[1]].iter().filter(|&&i| g.cells[i]).count())
        .collect())
}
