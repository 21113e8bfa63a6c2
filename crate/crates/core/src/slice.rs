//! Volumes of slices `{P ∈ (R^n)^d : |G_k P + h_k| ≤ r_k for all k}`.
//!
//! `P = (p_1, …, p_n)` with `p_l ∈ R^d`, and `G_k P = Σ_l g_{k,l} p_l ∈ R^d`.
//! Writing `P_c ∈ R^n` for the `c`-th coordinates, constraint `k` reads
//! `Σ_c (g_k·P_c + h_{k,c})² ≤ r_k²`. The first coordinate block `P_0` is
//! integrated exactly (an interval for `n = 1`, a clipped polygon for
//! `n = 2`); the remaining `n(d−1)` variables are handled by nested adaptive
//! quadrature when there are at most two of them, and by Monte Carlo
//! otherwise.

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::polygon;
use crate::quadrature::integrate_with_breaks;
use crate::rng;

#[derive(Debug, Clone)]
pub struct Slice {
    pub n: usize,
    pub d: usize,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SliceOptions {
    pub rel_tol: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for SliceOptions {
    fn default() -> Self {
        SliceOptions { rel_tol: 1e-11, mc_samples: 1 << 20, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceVolume {
    pub value: f64,
    pub error: f64,
    pub monte_carlo: bool,
}

const MAX_INTERVALS: usize = 400;

impl Slice {
    fn check(&self) -> Result<()> {
        let k = self.r.len();
        if self.g.len() != k || self.h.len() != k {
            return Err(LabError::argument("slice constraint arrays differ in length"));
        }
        if self.g.iter().any(|g| g.len() != self.n) || self.h.iter().any(|h| h.len() != self.d) {
            return Err(LabError::argument("slice constraint has wrong shape"));
        }
        Ok(())
    }

    /// Bounding interval of every coordinate of a block `P_c`, using the
    /// relaxation `|g_k·P_c + h_{k,c}| ≤ r_k`.
    fn block_box(&self, c: usize) -> Result<Vec<(f64, f64)>> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        for l in 0..n {
            let mut ends = [0.0; 2];
            for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                let mut obj = vec![0.0; n];
                obj[l] = sign;
                let mut lp = LinearProgram::new(obj);
                for k in 0..self.r.len() {
                    lp = lp
                        .le(self.g[k].clone(), self.r[k] - self.h[k][c])
                        .le(self.g[k].iter().map(|v| -v).collect(), self.r[k] + self.h[k][c]);
                }
                match lp.maximize()? {
                    LpOutcome::Optimal { value, .. } => ends[s] = sign * value,
                    LpOutcome::Infeasible => return Ok(Vec::new()),
                    LpOutcome::Unbounded => {
                        return Err(LabError::structural(
                            "slice is unbounded: constraint directions do not span the fiber",
                        ))
                    }
                }
            }
            out.push((ends[1], ends[0]));
        }
        Ok(out)
    }

    /// Remaining half-widths `ρ_k` after fixing the outer blocks.
    fn rho(&self, outer: &[&[f64]], rho: &mut [f64]) -> bool {
        for k in 0..self.r.len() {
            let mut s = self.r[k] * self.r[k];
            for (ci, p) in outer.iter().enumerate() {
                let c = ci + 1;
                let v: f64 = self.g[k].iter().zip(p.iter()).map(|(a, b)| a * b).sum::<f64>()
                    + self.h[k][c];
                s -= v * v;
            }
            if s < 0.0 {
                return false;
            }
            rho[k] = s.sqrt();
        }
        true
    }

    /// Exact measure of the `P_0` section given the half-widths.
    fn inner(&self, rho: &[f64], box0: &[(f64, f64)]) -> f64 {
        match self.n {
            0 => {
                let ok = (0..rho.len()).all(|k| self.h[k][0].abs() <= rho[k]);
                if ok {
                    1.0
                } else {
                    0.0
                }
            }
            1 => {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..rho.len() {
                    let g = self.g[k][0];
                    let h = self.h[k][0];
                    if g == 0.0 {
                        if h.abs() > rho[k] {
                            return 0.0;
                        }
                        continue;
                    }
                    let a = (-rho[k] - h) / g;
                    let b = (rho[k] - h) / g;
                    lo = lo.max(a.min(b));
                    hi = hi.min(a.max(b));
                }
                (hi - lo).max(0.0)
            }
            2 => {
                let (x, y) = (box0[0], box0[1]);
                let pad = 1e-9 * (1.0 + x.1 - x.0 + y.1 - y.0);
                let mut poly = polygon::rectangle(x.0 - pad, x.1 + pad, y.0 - pad, y.1 + pad);
                for k in 0..rho.len() {
                    let a = [self.g[k][0], self.g[k][1]];
                    let h = self.h[k][0];
                    if a[0] == 0.0 && a[1] == 0.0 {
                        if h.abs() > rho[k] {
                            return 0.0;
                        }
                        continue;
                    }
                    poly = polygon::clip_slab(&poly, a, -rho[k] - h, rho[k] - h);
                    if poly.is_empty() {
                        return 0.0;
                    }
                }
                polygon::area(&poly)
            }
            _ => unreachable!("inner block is exact only for n ≤ 2"),
        }
    }

    /// Volume of the slice.
    pub fn volume(&self, opts: &SliceOptions) -> Result<SliceVolume> {
        self.check()?;
        let k = self.r.len();
        if self.r.iter().any(|&r| r < 0.0) {
            return Ok(SliceVolume { value: 0.0, error: 0.0, monte_carlo: false });
        }
        if self.n == 0 {
            let inside = self.h.iter().zip(&self.r).all(|(h, r)| h.iter().map(|v| v * v).sum::<f64>() <= r * r);
            return Ok(SliceVolume { value: if inside { 1.0 } else { 0.0 }, error: 0.0, monte_carlo: false });
        }
        let outer_dims = self.n * (self.d - 1);
        if self.n > 2 || outer_dims > 2 {
            return self.monte_carlo(opts);
        }
        let box0 = if self.n > 0 { self.block_box(0)? } else { Vec::new() };
        if self.n > 0 && box0.is_empty() {
            return Ok(SliceVolume { value: 0.0, error: 0.0, monte_carlo: false });
        }
        let exact = |outer: &[&[f64]]| -> f64 {
            let mut rho = vec![0.0; k];
            if !self.rho(outer, &mut rho) {
                return 0.0;
            }
            self.inner(&rho, &box0)
        };
        match outer_dims {
            0 => Ok(SliceVolume { value: exact(&[]), error: 0.0, monte_carlo: false }),
            1 => {
                let b1 = self.block_box(1)?;
                if b1.is_empty() {
                    return Ok(SliceVolume { value: 0.0, error: 0.0, monte_carlo: false });
                }
                let mut breaks = Vec::new();
                for kk in 0..k {
                    let g = self.g[kk][0];
                    if g != 0.0 {
                        breaks.push((self.r[kk] - self.h[kk][1]) / g);
                        breaks.push((-self.r[kk] - self.h[kk][1]) / g);
                    }
                }
                let q = integrate_with_breaks(
                    |u| exact(&[&[u]]),
                    b1[0].0,
                    b1[0].1,
                    &breaks,
                    1e-300,
                    opts.rel_tol,
                    MAX_INTERVALS,
                );
                Ok(SliceVolume { value: q.value, error: q.error, monte_carlo: false })
            }
            _ => self.nested_2d(opts, &exact),
        }
    }

    /// Outer two-dimensional integral, either `P_1 ∈ R²` (n = 2, d = 2) or
    /// `(P_1, P_2) ∈ R×R` (n = 1, d = 3).
    fn nested_2d(&self, opts: &SliceOptions, exact: &(dyn Fn(&[&[f64]]) -> f64 + Sync)) -> Result<SliceVolume> {
        let k = self.r.len();
        // Outer quadratic of constraint k: Σ_t (α u + β v + η)² with terms t.
        let mut terms: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(k);
        let (ubox, vbox);
        if self.n == 2 {
            let b = self.block_box(1)?;
            if b.is_empty() {
                return Ok(SliceVolume { value: 0.0, error: 0.0, monte_carlo: false });
            }
            ubox = b[0];
            vbox = b[1];
            for kk in 0..k {
                terms.push(vec![(self.g[kk][0], self.g[kk][1], self.h[kk][1])]);
            }
        } else {
            let b1 = self.block_box(1)?;
            let b2 = self.block_box(2)?;
            if b1.is_empty() || b2.is_empty() {
                return Ok(SliceVolume { value: 0.0, error: 0.0, monte_carlo: false });
            }
            ubox = b1[0];
            vbox = b2[0];
            for kk in 0..k {
                let g = self.g[kk][0];
                terms.push(vec![(g, 0.0, self.h[kk][1]), (0.0, g, self.h[kk][2])]);
            }
        }
        let n2 = self.n == 2;
        let point = |u: f64, v: f64| -> f64 {
            if n2 {
                exact(&[&[u, v]])
            } else {
                exact(&[&[u], &[v]])
            }
        };
        let u_breaks = |v: f64| -> Vec<f64> {
            let mut out = Vec::new();
            for (kk, t) in terms.iter().enumerate() {
                let a: f64 = t.iter().map(|x| x.0 * x.0).sum();
                let b: f64 = t.iter().map(|x| 2.0 * x.0 * (x.1 * v + x.2)).sum();
                let c: f64 = t.iter().map(|x| (x.1 * v + x.2).powi(2)).sum::<f64>()
                    - self.r[kk] * self.r[kk];
                out.extend(quadratic_roots(a, b, c));
            }
            out
        };
        let mut v_breaks = Vec::new();
        for (kk, t) in terms.iter().enumerate() {
            let a: f64 = t.iter().map(|x| x.0 * x.0).sum();
            let b1: f64 = t.iter().map(|x| 2.0 * x.0 * x.1).sum();
            let b0: f64 = t.iter().map(|x| 2.0 * x.0 * x.2).sum();
            let c2: f64 = t.iter().map(|x| x.1 * x.1).sum();
            let c1: f64 = t.iter().map(|x| 2.0 * x.1 * x.2).sum();
            let c0: f64 = t.iter().map(|x| x.2 * x.2).sum::<f64>() - self.r[kk] * self.r[kk];
            if a == 0.0 {
                v_breaks.extend(quadratic_roots(c2, c1, c0));
            } else {
                v_breaks.extend(quadratic_roots(
                    b1 * b1 - 4.0 * a * c2,
                    2.0 * b1 * b0 - 4.0 * a * c1,
                    b0 * b0 - 4.0 * a * c0,
                ));
            }
        }
        let inner_tol = opts.rel_tol * 0.1;
        let outer = |v: f64| -> f64 {
            integrate_with_breaks(
                |u| point(u, v),
                ubox.0,
                ubox.1,
                &u_breaks(v),
                1e-300,
                inner_tol,
                MAX_INTERVALS,
            )
            .value
        };
        let q = integrate_with_breaks(outer, vbox.0, vbox.1, &v_breaks, 1e-300, opts.rel_tol, MAX_INTERVALS);
        Ok(SliceVolume { value: q.value, error: q.error, monte_carlo: false })
    }

    fn monte_carlo(&self, opts: &SliceOptions) -> Result<SliceVolume> {
        let mut boxes = Vec::with_capacity(self.d);
        for c in 0..self.d {
            let b = self.block_box(c)?;
            if b.is_empty() {
                return Ok(SliceVolume { value: 0.0, error: 0.0, monte_carlo: true });
            }
            boxes.push(b);
        }
        let vol: f64 = boxes.iter().flatten().map(|(a, b)| b - a).product();
        let batch = 4096usize;
        let nb = opts.mc_samples.div_ceil(batch).max(1);
        let counts: Vec<u64> = (0..nb)
            .into_par_iter()
            .map(|bi| {
                let mut rng = rng::stream(opts.seed, bi as u64);
                let mut p = vec![vec![0.0; self.n]; self.d];
                let mut hits = 0u64;
                for _ in 0..batch {
                    for (c, bx) in boxes.iter().enumerate() {
                        for (l, &(a, b)) in bx.iter().enumerate() {
                            p[c][l] = rng::uniform(&mut rng, a, b);
                        }
                    }
                    let inside = (0..self.r.len()).all(|k| {
                        let s: f64 = (0..self.d)
                            .map(|c| {
                                let v: f64 = self.g[k].iter().zip(&p[c]).map(|(a, b)| a * b).sum::<f64>()
                                    + self.h[k][c];
                                v * v
                            })
                            .sum();
                        s <= self.r[k] * self.r[k]
                    });
                    hits += inside as u64;
                }
                hits
            })
            .collect();
        let total = (nb * batch) as f64;
        let hits: u64 = counts.iter().sum();
        let p = hits as f64 / total;
        let value = vol * p;
        let error = vol * (p * (1.0 - p) / total).sqrt();
        Ok(SliceVolume { value, error, monte_carlo: true })
    }
}

/// Real roots of `a x² + b x + c` (degenerate cases included).
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    let q = -0.5 * (b + b.signum() * s);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lens(t: f64) -> f64 {
        if t >= 2.0 {
            0.0
        } else {
            2.0 * (t / 2.0).acos() - (t / 2.0) * (4.0 - t * t).sqrt()
        }
    }

    #[test]
    fn empty_fiber_checks_every_coordinate() {
        let s = |h: Vec<f64>| Slice { n: 0, d: 2, g: vec![vec![]], h: vec![h], r: vec![1.0] };
        let opts = SliceOptions::default();
        assert_eq!(s(vec![0.1, 0.9]).volume(&opts).unwrap().value, 1.0);
        assert_eq!(s(vec![0.1, 1.1]).volume(&opts).unwrap().value, 0.0);
        assert_eq!(s(vec![0.8, 0.8]).volume(&opts).unwrap().value, 0.0);
    }

    #[test]
    fn interval_overlap() {
        let s = Slice {
            n: 1,
            d: 1,
            g: vec![vec![1.0], vec![1.0]],
            h: vec![vec![0.0], vec![0.5]],
            r: vec![0.5, 0.5],
        };
        let v = s.volume(&SliceOptions::default()).unwrap();
        assert!((v.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn disk_lens_in_two_dimensions() {
        for &t in &[0.0, 0.4, 1.0, 1.7] {
            let s = Slice {
                n: 1,
                d: 2,
                g: vec![vec![1.0], vec![1.0]],
                h: vec![vec![0.0, 0.0], vec![t, 0.0]],
                r: vec![1.0, 1.0],
            };
            let v = s.volume(&SliceOptions::default()).unwrap();
            assert!((v.value - lens(t)).abs() < 1e-10, "t={t}: {} vs {}", v.value, lens(t));
        }
    }

    #[test]
    fn ball_volume_in_three_dimensions() {
        let s = Slice { n: 1, d: 3, g: vec![vec![1.0]], h: vec![vec![0.0; 3]], r: vec![1.0] };
        let v = s.volume(&SliceOptions::default()).unwrap();
        assert!((v.value - 4.0 * PI / 3.0).abs() < 1e-9, "{}", v.value);
    }

    #[test]
    fn bidisk_in_two_dimensions() {
        // Two independent disks: |p_1| ≤ 1, |p_2| ≤ 1 gives π².
        let s = Slice {
            n: 2,
            d: 2,
            g: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            h: vec![vec![0.0; 2]; 2],
            r: vec![1.0, 1.0],
        };
        let v = s.volume(&SliceOptions::default()).unwrap();
        assert!((v.value - PI * PI).abs() < 1e-8, "{}", v.value);
    }

    #[test]
    fn monte_carlo_for_high_outer_dimension() {
        let s = Slice {
            n: 2,
            d: 3,
            g: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            h: vec![vec![0.0; 3]; 2],
            r: vec![1.0, 1.0],
        };
        let v = s
            .volume(&SliceOptions { mc_samples: 1 << 18, ..Default::default() })
            .unwrap();
        let exact = (4.0 * PI / 3.0).powi(2);
        assert!(v.monte_carlo);
        assert!((v.value - exact).abs() < 4.0 * v.error, "{} ± {}", v.value, v.error);
    }

    #[test]
    fn quadratic_roots_cases() {
        let mut r = quadratic_roots(1.0, -3.0, 2.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![1.0, 2.0]);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
        assert_eq!(quadratic_roots(0.0, 2.0, -1.0), vec![0.5]);
    }
}
