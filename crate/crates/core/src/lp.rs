//! Dense two-phase simplex for tiny linear programs with free variables.
//!
//! Bland's rule is used throughout, so the solver terminates on degenerate
//! problems and is fully deterministic.

use crate::error::{LabError, Result};

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 20_000;

/// `maximize c·x` subject to `a_ub x ≤ b_ub`, `a_eq x = b_eq`, `x` free.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(c: Vec<f64>) -> Self {
        LinearProgram { c, ..Default::default() }
    }

    pub fn le(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn maximize(&self) -> Result<LpOutcome> {
        solve(self)
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations for `obj` over columns `< allowed`.
    /// Returns `false` when unbounded.
    fn run(&mut self, obj: &[f64], allowed: usize) -> Result<bool> {
        let rhs = self.ncols;
        for _ in 0..MAX_PIVOTS {
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let z: f64 = self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| obj[b] * self.t[i][j])
                    .sum();
                if obj[j] - z > EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > EPS {
                    let ratio = self.t[i][rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS
                                || ((ratio - lr).abs() <= EPS && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Ok(false) };
            self.pivot(r, c);
        }
        Err(LabError::computation("simplex pivot limit reached"))
    }
}

fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.c.len();
    let n_ub = lp.a_ub.len();
    let n_eq = lp.a_eq.len();
    let rows = n_ub + n_eq;
    if lp.b_ub.len() != n_ub || lp.b_eq.len() != n_eq {
        return Err(LabError::argument("LP right-hand side length mismatch"));
    }
    if lp.a_ub.iter().chain(&lp.a_eq).any(|r| r.len() != n) {
        return Err(LabError::argument("LP row length mismatch"));
    }
    // Columns: x⁺ (n), x⁻ (n), slacks (n_ub), artificials (rows), rhs.
    let art0 = 2 * n + n_ub;
    let ncols = art0 + rows;
    let mut t = vec![vec![0.0; ncols + 1]; rows];
    for (i, row) in t.iter_mut().enumerate() {
        let (a, b, slack) = if i < n_ub {
            (&lp.a_ub[i], lp.b_ub[i], Some(2 * n + i))
        } else {
            (&lp.a_eq[i - n_ub], lp.b_eq[i - n_ub], None)
        };
        let sgn = if b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sgn * a[j];
            row[n + j] = -sgn * a[j];
        }
        if let Some(s) = slack {
            row[s] = sgn;
        }
        row[art0 + i] = 1.0;
        row[ncols] = sgn * b;
    }
    let mut tab = Tableau { t, basis: (art0..art0 + rows).collect(), ncols };

    let mut obj1 = vec![0.0; ncols];
    for o in obj1.iter_mut().skip(art0) {
        *o = -1.0;
    }
    tab.run(&obj1, ncols)?;
    let infeas: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= art0)
        .map(|(i, _)| tab.t[i][ncols])
        .sum();
    let scale = 1.0 + lp.b_ub.iter().chain(&lp.b_eq).fold(0.0_f64, |m, v| m.max(v.abs()));
    if infeas > 1e-9 * scale {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= art0 {
            let col = (0..art0).find(|&j| tab.t[i][j].abs() > 1e-9);
            match col {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut obj2 = vec![0.0; ncols];
    for j in 0..n {
        obj2[j] = lp.c[j];
        obj2[n + j] = -lp.c[j];
    }
    if !tab.run(&obj2, art0)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut z = vec![0.0; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        z[b] = tab.t[i][ncols];
    }
    let x: Vec<f64> = (0..n).map(|j| z[j] - z[n + j]).collect();
    let value = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, value })
}
