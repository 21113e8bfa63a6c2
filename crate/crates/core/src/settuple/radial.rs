use std::f64::consts::PI;
use std::sync::Arc;

use super::sphere::SphereGrid;
use crate::error::{LabError, Result};
use crate::linalg;

/// Star-shaped set `{c + t·θ : 0 ≤ t ≤ ρ(θ)}` with `ρ` sampled on a sphere grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGraph {
    pub center: Vec<f64>,
    pub grid: Arc<SphereGrid>,
    pub rho: Vec<f64>,
    rho_min: f64,
    rho_bound: f64,
    /// `ρ(θ_k) cos θ_k`, cached for chord searches (d = 2).
    xproj: Vec<f64>,
    /// Maximal cyclic runs `(start, segments)` on which `xproj` is monotone.
    mono: Vec<(usize, usize)>,
}

fn monotone_runs(v: &[f64]) -> Vec<(usize, usize)> {
    let n = v.len();
    if n < 2 {
        return Vec::new();
    }
    let sign = |k: usize| (v[(k + 1) % n] - v[k]).total_cmp(&0.0) as i8;
    // Start at a segment whose direction differs from its predecessor.
    let start = (0..n).find(|&k| sign(k) != sign((k + n - 1) % n)).unwrap_or(0);
    let mut runs = Vec::new();
    let mut k0 = start;
    let mut len = 0;
    for step in 0..n {
        let k = (start + step) % n;
        if len > 0 && sign(k) != sign((k + n - 1) % n) {
            runs.push((k0, len));
            k0 = k;
            len = 0;
        }
        len += 1;
    }
    runs.push((k0, len));
    runs
}

impl RadialGraph {
    pub fn new(center: Vec<f64>, grid: Arc<SphereGrid>, rho: Vec<f64>) -> Result<Self> {
        if center.len() != grid.d {
            return Err(LabError::argument("radial graph center has wrong dimension"));
        }
        if rho.len() != grid.len() {
            return Err(LabError::argument("one boundary sample per grid direction is required"));
        }
        if rho.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(LabError::argument("radial boundary must stay positive"));
        }
        let rho_min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        let rho_bound = grid.interpolation_bound(&rho);
        let xproj = if grid.d == 2 {
            rho.iter().zip(&grid.dirs).map(|(r, u)| r * u[0]).collect()
        } else {
            Vec::new()
        };
        // Catmull–Rom can undershoot between nodes; keep the fast path conservative.
        let rho_min = if grid.d == 2 { rho_min - (rho_bound - rho.iter().cloned().fold(0.0, f64::max)) } else { rho_min };
        let mono = monotone_runs(&xproj);
        Ok(RadialGraph { center, grid, rho, rho_min, rho_bound, xproj, mono })
    }

    pub fn d(&self) -> usize {
        self.grid.d
    }

    pub fn boundary(&self, dir: &[f64]) -> f64 {
        self.grid.interpolate(&self.rho, dir)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d = self.d();
        let v: Vec<f64> = (0..d).map(|k| x[k] - self.center[k]).collect();
        let r = linalg::norm(&v);
        if r <= self.rho_min {
            return true;
        }
        if r > self.rho_bound {
            return false;
        }
        let u: Vec<f64> = v.iter().map(|c| c / r).collect();
        r <= self.boundary(&u)
    }

    /// `∫ ρ^d/d dσ`.
    pub fn measure(&self) -> f64 {
        let d = self.d() as i32;
        let vals: Vec<f64> = self.rho.iter().map(|r| r.powi(d) / d as f64).collect();
        self.grid.integrate(&vals)
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let b = self.rho_bound;
        (self.center.iter().map(|c| c - b).collect(), self.center.iter().map(|c| c + b).collect())
    }

    pub fn max_radius(&self) -> f64 {
        self.rho_bound
    }

    /// Chord `{t : (x, t) ∈ E}` for d = 2, as sorted disjoint intervals.
    pub fn vertical_chord(&self, x: f64) -> Vec<(f64, f64)> {
        debug_assert_eq!(self.d(), 2);
        let n = self.rho.len();
        let y = x - self.center[0];
        if y.abs() >= self.rho_bound {
            return Vec::new();
        }
        let h = 2.0 * PI / n as f64;
        let mut ts: Vec<f64> = Vec::new();
        let mut crossing = |k: usize| {
            let f0 = self.xproj[k] - y;
            let f1 = self.xproj[(k + 1) % n] - y;
            if f0 == 0.0 {
                let th = self.grid.angle(k);
                ts.push(self.rho[k] * th.sin());
                return;
            }
            if (f0 < 0.0) == (f1 < 0.0) || f1 == 0.0 {
                return;
            }
            // Catmull–Rom cubic of the segment in the local parameter u ∈ [0, 1].
            let p0 = self.rho[(k + n - 1) % n];
            let p1 = self.rho[k];
            let p2 = self.rho[(k + 1) % n];
            let p3 = self.rho[(k + 2) % n];
            let c1 = 0.5 * (p2 - p0);
            let c2 = 0.5 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3);
            let c3 = 0.5 * (-p0 + 3.0 * p1 - 3.0 * p2 + p3);
            let th0 = k as f64 * h;
            let eval = |u: f64| -> (f64, f64, f64) {
                let r = p1 + u * (c1 + u * (c2 + u * c3));
                let dr = c1 + u * (2.0 * c2 + 3.0 * u * c3);
                let (sn, cs) = (th0 + u * h).sin_cos();
                (r * cs - y, dr * cs - r * sn * h, r * sn)
            };
            // Newton inside the bracket, bisecting whenever a step leaves it.
            let (mut a, mut b) = (0.0f64, 1.0f64);
            let neg_at_a = f0 < 0.0;
            let mut u = f0 / (f0 - f1);
            let mut out = 0.0;
            for _ in 0..60 {
                let (f, df, t) = eval(u);
                out = t;
                if f == 0.0 {
                    break;
                }
                if (f < 0.0) == neg_at_a {
                    a = u;
                } else {
                    b = u;
                }
                let step = f / df;
                let next = u - step;
                let next = if df != 0.0 && next > a && next < b { next } else { 0.5 * (a + b) };
                if (next - u).abs() < 1e-15 || b - a < 1e-15 {
                    out = eval(next).2;
                    break;
                }
                u = next;
            }
            ts.push(out);
        };
        for &(k0, len) in &self.mono {
            let at = |i: usize| self.xproj[(k0 + i) % n];
            let (first, last) = (at(0), at(len));
            if y < first.min(last) || y > first.max(last) {
                continue;
            }
            // Last segment start whose value is on the near side of y.
            let up = last >= first;
            let (mut lo, mut hi) = (0usize, len);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if (at(mid) <= y) == up {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            for i in lo.saturating_sub(1)..=(lo + 1).min(len) {
                if i < len {
                    crossing((k0 + i) % n);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        let c = self.center[1];
        if ts.len() % 2 == 0 {
            // Every crossing is transversal: the line alternates out, in.
            return ts.chunks(2).map(|w| (w[0] + c, w[1] + c)).collect();
        }
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in ts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if self.contains(&[x, mid + c]) {
                let seg = (w[0] + c, w[1] + c);
                match out.last_mut() {
                    Some(last) if (last.1 - seg.0).abs() < 1e-13 => last.1 = seg.1,
                    _ => out.push(seg),
                }
            }
        }
        out
    }

    /// Tight range of the first coordinate over the set (d = 2).
    pub fn x_extent(&self) -> (f64, f64) {
        debug_assert_eq!(self.d(), 2);
        let n = self.rho.len();
        let n_circle = self.grid.circle_points().unwrap_or(n);
        let q = |theta: f64| super::sphere::catmull_rom_periodic(&self.rho, n_circle, theta) * theta.cos();
        let h = 2.0 * PI / n as f64;
        let refine = |sign: f64| -> f64 {
            let k = (0..n).max_by(|&a, &b| (sign * self.xproj[a]).total_cmp(&(sign * self.xproj[b]))).unwrap_or(0);
            // Golden-section search on the two adjacent cells.
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut a, mut b) = (self.grid.angle(k) - h, self.grid.angle(k) + h);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            for _ in 0..80 {
                if sign * q(c) > sign * q(d) {
                    b = d;
                } else {
                    a = c;
                }
                c = b - g * (b - a);
                d = a + g * (b - a);
            }
            let best = sign * q(0.5 * (a + b));
            sign * best.max(sign * self.xproj[k])
        };
        (self.center[0] + refine(-1.0), self.center[0] + refine(1.0))
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        let c: Vec<f64> = self.center.iter().zip(v).map(|(a, b)| a + b).collect();
        RadialGraph { center: c, ..self.clone() }
    }

    /// Image under `x ↦ A x`; star-shapedness is preserved.
    pub fn linear_image(&self, a: &[Vec<f64>]) -> Result<Self> {
        let inv = linalg::inverse(a).ok_or_else(|| LabError::argument("singular linear map"))?;
        let rho: Vec<f64> = self
            .grid
            .dirs
            .iter()
            .map(|u| {
                let w = linalg::mat_vec(&inv, u);
                let nw = linalg::norm(&w);
                let wn: Vec<f64> = w.iter().map(|c| c / nw).collect();
                self.boundary(&wn) / nw
            })
            .collect();
        RadialGraph::new(linalg::mat_vec(a, &self.center), self.grid.clone(), rho)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        RadialGraph::new(
            self.center.iter().map(|c| c * factor).collect(),
            self.grid.clone(),
            self.rho.iter().map(|r| r * factor).collect(),
        )
    }
}
