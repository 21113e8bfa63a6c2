//! The polytope `K_e = {x ∈ R^m : |L_j(x)| ≤ e_j/2}` and admissibility
//! certificates.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::family::{for_each_combination, LinearFamily, MeasureSpec};
use crate::kernels::{self, LeftDerivative};
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome};

/// Slack threshold separating strict from non-strict inequalities.
pub const SLACK_TOL: f64 = 1e-9;

/// `|a_j·x| ≤ b_j` for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeH {
    pub normals: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
}

impl PolytopeH {
    pub fn m(&self) -> usize {
        self.normals[0].len()
    }

    /// `b_j − |a_j·x|` per row.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.bounds)
            .map(|(a, b)| b - linalg::dot(a, x).abs())
            .collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.slacks(x).iter().all(|&s| s >= -tol)
    }

    /// Largest value of `c·x` over the polytope.
    pub fn support(&self, c: &[f64]) -> Result<f64> {
        let mut lp = LinearProgram::new(c.to_vec());
        for (a, &b) in self.normals.iter().zip(&self.bounds) {
            lp = lp.le(a.clone(), b).le(a.iter().map(|v| -v).collect(), b);
        }
        match lp.maximize()? {
            LpOutcome::Optimal { value, .. } => Ok(value),
            LpOutcome::Unbounded => Err(LabError::structural("K_e is unbounded")),
            LpOutcome::Infeasible => Err(LabError::computation("K_e reported empty")),
        }
    }
}

/// `K_e` with `b_j = e_j / 2`.
pub fn build_k_e(fam: &LinearFamily, e: &[f64]) -> Result<PolytopeH> {
    if e.len() != fam.len() {
        return Err(LabError::argument("one measure per map is required"));
    }
    if e.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(LabError::argument("measures must be positive"));
    }
    Ok(PolytopeH { normals: fam.coeffs().to_vec(), bounds: e.iter().map(|v| v / 2.0).collect() })
}

/// `e^{1/d}` componentwise.
pub fn dimension_reduce(e: &[f64], d: usize) -> Vec<f64> {
    e.iter().map(|v| v.powf(1.0 / d as f64)).collect()
}

/// Radii with `ω_d r_j^d = e_j`.
pub fn radii(e: &[f64], d: usize) -> Result<Vec<f64>> {
    Ok(MeasureSpec::new(e.to_vec(), d)?.radii())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Inadmissible,
    WeaklyAdmissible,
    StrictlyAdmissible,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Inadmissible => "inadmissible",
            Verdict::WeaklyAdmissible => "weakly-admissible",
            Verdict::StrictlyAdmissible => "strictly-admissible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceWitness {
    /// `+1` or `−1`: the face `L_k(x) = sign · b_k`.
    pub sign: f64,
    pub point: Vec<f64>,
    pub slacks: Vec<f64>,
    /// Optimal minimum slack of the other constraints.
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexCertificate {
    pub k: usize,
    pub face_reached: bool,
    pub witness: Option<FaceWitness>,
    pub strict_slack: bool,
    pub derivative: Option<LeftDerivative>,
    pub strict_derivative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub generic: bool,
    pub vertices: Vec<Vec<f64>>,
    pub active_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCertificate {
    pub verdict: Verdict,
    pub d: usize,
    /// The one-dimensional measures `e^{1/d}` actually certified.
    pub e_reduced: Vec<f64>,
    pub indices: Vec<IndexCertificate>,
    pub genericity: Option<GenericityReport>,
}

/// Best witness on the face `|L_k| = b_k`: maximizes the smallest slack of
/// the other constraints over both signs.
fn face_lp(poly: &PolytopeH, k: usize) -> Result<Option<FaceWitness>> {
    let m = poly.m();
    let cap: f64 = poly.bounds.iter().sum();
    let mut best: Option<FaceWitness> = None;
    for sign in [1.0, -1.0] {
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        let mut eq = poly.normals[k].clone();
        eq.push(0.0);
        let mut lp = LinearProgram::new(c).eq(eq, sign * poly.bounds[k]);
        for (i, a) in poly.normals.iter().enumerate() {
            if i == k {
                continue;
            }
            let mut up = a.clone();
            up.push(1.0);
            let mut dn: Vec<f64> = a.iter().map(|v| -v).collect();
            dn.push(1.0);
            lp = lp.le(up, poly.bounds[i]).le(dn, poly.bounds[i]);
        }
        let mut capped = vec![0.0; m];
        capped.push(1.0);
        lp = lp.le(capped, cap);
        match lp.maximize()? {
            LpOutcome::Optimal { x, value } => {
                let point = x[..m].to_vec();
                let slacks = poly.slacks(&point);
                if best.as_ref().is_none_or(|b| value > b.min_slack + 1e-15) {
                    best = Some(FaceWitness { sign, point, slacks, min_slack: value });
                }
            }
            LpOutcome::Infeasible => {}
            LpOutcome::Unbounded => {
                return Err(LabError::computation("face LP unbounded despite slack cap"))
            }
        }
    }
    Ok(best)
}

/// Certifies admissibility of `(L, e)` in dimension `d` through `(L¹, e^{1/d})`.
pub fn certify(fam: &LinearFamily, e: &[f64], d: usize) -> Result<AdmissibilityCertificate> {
    fam.require_nondegenerate()?;
    let e1 = dimension_reduce(e, d);
    let poly = build_k_e(fam, &e1)?;
    let fam1 = fam.with_dim(1)?;
    let spec1 = MeasureSpec::new(e1.clone(), 1)?;
    let scale = poly.bounds.iter().cloned().fold(1.0_f64, f64::max);
    let mut indices = Vec::with_capacity(fam.len());
    for k in 0..fam.len() {
        let witness = face_lp(&poly, k)?;
        let face_reached = witness.as_ref().is_some_and(|w| w.min_slack >= -SLACK_TOL * scale);
        let strict_slack = witness.as_ref().is_some_and(|w| w.min_slack > SLACK_TOL * scale);
        let (derivative, strict_derivative) = if face_reached {
            let dv = kernels::left_derivative(&fam1, &spec1, k)?;
            let strict = dv.estimate().is_some_and(|e| e.strictly_negative());
            (Some(dv), strict)
        } else {
            (None, false)
        };
        indices.push(IndexCertificate {
            k,
            face_reached,
            witness,
            strict_slack,
            derivative,
            strict_derivative,
        });
    }
    let verdict = if indices.iter().any(|c| !c.face_reached) {
        Verdict::Inadmissible
    } else if indices.iter().all(|c| c.strict_slack && c.strict_derivative) {
        Verdict::StrictlyAdmissible
    } else {
        Verdict::WeaklyAdmissible
    };
    let genericity = if fam.m() <= 3 { Some(check_generic(fam, &e1)?) } else { None };
    Ok(AdmissibilityCertificate { verdict, d, e_reduced: e1, indices, genericity })
}

/// Vertex enumeration of `K_e` (m ≤ 3) and the active-constraint test.
pub fn check_generic(fam: &LinearFamily, e: &[f64]) -> Result<GenericityReport> {
    let m = fam.m();
    if !(2..=3).contains(&m) {
        return Err(LabError::argument("vertex enumeration supports m = 2 or 3"));
    }
    if linalg::rank(fam.coeffs()) < m {
        return Err(LabError::structural("K_e is unbounded"));
    }
    let poly = build_k_e(fam, e)?;
    let scale = poly.bounds.iter().cloned().fold(1.0_f64, f64::max);
    let tol = 1e-9 * scale;
    // Hyperplanes a_j·x = ±b_j.
    let planes: Vec<(Vec<f64>, f64)> = poly
        .normals
        .iter()
        .zip(&poly.bounds)
        .flat_map(|(a, &b)| [(a.clone(), b), (a.iter().map(|v| -v).collect(), b)])
        .collect();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for_each_combination(planes.len(), m, &mut |idx| {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        if linalg::rank(&rows) < m {
            return false;
        }
        let rhs: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = linalg::solve(&rows, &rhs) {
            if poly.contains(&x, tol)
                && !vertices
                    .iter()
                    .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-9 * scale))
            {
                vertices.push(x);
            }
        }
        false
    });
    let active_counts: Vec<usize> = vertices
        .iter()
        .map(|v| poly.slacks(v).iter().filter(|s| s.abs() <= tol).count())
        .collect();
    let generic = active_counts.iter().all(|&c| c == m);
    Ok(GenericityReport { generic, vertices, active_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon;

    #[test]
    fn hexagon_area_is_three_quarters() {
        let f = LinearFamily::riesz_sobolev(1);
        let k = build_k_e(&f, &[1.0, 1.0, 1.0]).unwrap();
        let c: Vec<([f64; 2], f64, f64)> = k
            .normals
            .iter()
            .zip(&k.bounds)
            .map(|(a, &b)| ([a[0], a[1]], -b, b))
            .collect();
        assert!((polygon::slab_intersection_area(&c, 10.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn redundant_constraint() {
        let f = LinearFamily::riesz_sobolev(1);
        let k = build_k_e(&f, &[1.0, 1.0, 3.0]).unwrap();
        let sq = build_k_e(
            &LinearFamily::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap(),
            &[1.0, 1.0],
        )
        .unwrap();
        assert!((sq.support(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(k.bounds[2] > 1.0);
    }

    #[test]
    fn homogeneity() {
        let f = LinearFamily::riesz_sobolev(1);
        let a = build_k_e(&f, &[1.0, 2.0, 2.5]).unwrap();
        let b = build_k_e(&f, &[3.0, 6.0, 7.5]).unwrap();
        let dir = [0.3, -0.7];
        assert!((3.0 * a.support(&dir).unwrap() - b.support(&dir).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dimension_reduction() {
        assert_eq!(dimension_reduce(&[4.0, 9.0], 2), vec![2.0, 3.0]);
        assert_eq!(dimension_reduce(&[4.0, 9.0], 1), vec![4.0, 9.0]);
        let r = radii(&[std::f64::consts::PI; 3], 2).unwrap();
        assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn riesz_sobolev_verdicts() {
        let f = LinearFamily::riesz_sobolev(1);
        let c = certify(&f, &[1.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(c.verdict, Verdict::StrictlyAdmissible);
        let w = c.indices[2].witness.as_ref().unwrap();
        assert!((w.point[0] - 0.25).abs() < 1e-12 && (w.point[1] - 0.25).abs() < 1e-12);
        assert!((w.min_slack - 0.25).abs() < 1e-12);
        assert!(c.genericity.unwrap().generic);

        let c = certify(&f, &[1.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(c.verdict, Verdict::WeaklyAdmissible);
        let w = c.indices[2].witness.as_ref().unwrap();
        assert!(w.min_slack.abs() < 1e-12);
        assert!((w.point[0].abs() - 0.5).abs() < 1e-12);

        let c = certify(&f, &[1.0, 1.0, 3.0], 1).unwrap();
        assert_eq!(c.verdict, Verdict::Inadmissible);
        assert!(!c.indices[2].face_reached);
    }

    #[test]
    fn higher_dimension_reduces_to_lines() {
        let f = LinearFamily::riesz_sobolev(2);
        let pi = std::f64::consts::PI;
        let c = certify(&f, &[pi, pi, pi], 2).unwrap();
        assert_eq!(c.verdict, Verdict::StrictlyAdmissible);
    }

    #[test]
    fn genericity_examples() {
        let f = LinearFamily::riesz_sobolev(1);
        let g = check_generic(&f, &[1.0, 1.0, 1.0]).unwrap();
        assert!(g.generic);
        assert_eq!(g.vertices.len(), 6);
        assert!(g.active_counts.iter().all(|&c| c == 2));
        let g = check_generic(&f, &[1.0, 1.0, 2.0]).unwrap();
        assert!(!g.generic);
        assert!(g.active_counts.contains(&3));
    }
}
