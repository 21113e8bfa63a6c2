//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on tiny matrices (a handful of rows), so the API
//! trades generality for plain `Vec` inputs that are easy to build from
//! coefficient tables.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative singular-value tolerance used for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

/// Numerical rank of the matrix whose rows are given.
pub fn rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let sv = matrix_from_rows(rows).singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis of the orthogonal complement of the span of `rows` in R^m.
///
/// Columns are returned as vectors of length `m`, ordered by increasing
/// eigenvalue of `AᵀA` so the choice is deterministic.
pub fn null_space(rows: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..m)
            .map(|i| (0..m).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    let a = matrix_from_rows(rows);
    let ata = a.transpose() * &a;
    let eig = SymmetricEigen::new(ata);
    let emax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    // Eigenvalues of AᵀA carry rounding of order ε·emax.
    let tol = (RANK_RTOL * RANK_RTOL).max(64.0 * f64::EPSILON) * emax.max(f64::MIN_POSITIVE);
    idx.into_iter()
        .filter(|&i| eig.eigenvalues[i] <= tol)
        .map(|i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().cloned().collect();
            // Fix the sign so the first significant entry is positive.
            if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
                if first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect()
}

/// Determinant of a square matrix given by rows.
pub fn det(rows: &[Vec<f64>]) -> f64 {
    matrix_from_rows(rows).determinant()
}

/// Inverse of a square matrix given by rows, `None` if singular.
pub fn inverse(rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let inv = matrix_from_rows(rows).try_inverse()?;
    Some(
        (0..inv.nrows())
            .map(|i| (0..inv.ncols()).map(|j| inv[(i, j)]).collect())
            .collect(),
    )
}

/// Solves `A x = b` for square `A`.
pub fn solve(rows: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let a = matrix_from_rows(rows);
    let rhs = DVector::from_column_slice(b);
    a.lu().solve(&rhs).map(|x| x.iter().cloned().collect())
}

/// Least-squares solution of `A x ≈ b` (full column rank assumed).
pub fn least_squares(rows: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let a = matrix_from_rows(rows);
    let rhs = DVector::from_column_slice(b);
    let svd = a.svd(true, true);
    svd.solve(&rhs, 1e-13).ok().map(|x| x.iter().cloned().collect())
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = matrix_from_rows(a);
    let nrm = m.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while nrm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let ms = &m * scale;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &ms / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    (0..n).map(|i| (0..n).map(|j| sum[(i, j)]).collect()).collect()
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn symmetric_eigenvalues(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(matrix_from_rows(rows));
    let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Orthogonal projection of `v` onto the column space of `a` (rows × cols).
pub fn project_onto_columns(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mat = matrix_from_rows(a);
    let svd = mat.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut out = vec![0.0; v.len()];
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= RANK_RTOL * smax {
            continue;
        }
        let col = u.column(k);
        let c: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
        for (o, ui) in out.iter_mut().zip(col.iter()) {
            *o += c * ui;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_riesz_sobolev_rows() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(rank(&rows), 2);
        assert_eq!(rank(&rows[..1]), 1);
        assert_eq!(rank(&[vec![1.0, 1.0], vec![2.0, 2.0]]), 1);
    }

    #[test]
    fn null_space_is_orthonormal_and_orthogonal() {
        let rows = vec![vec![1.0, 1.0, 1.0]];
        let ns = null_space(&rows, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(dot(v, &rows[0]).abs() < 1e-12);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert!(dot(&ns[0], &ns[1]).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_oblique_unit_vectors() {
        for k in 0..200 {
            let a = 0.0317 * k as f64;
            let ns = null_space(&[vec![a.cos(), a.sin()]], 2);
            assert_eq!(ns.len(), 1, "angle {a}");
            assert!((ns[0][0] * a.cos() + ns[0][1] * a.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t: f64 = 0.7;
        let e = expm(&[vec![0.0, -t], vec![t, 0.0]]);
        assert!((e[0][0] - t.cos()).abs() < 1e-13);
        assert!((e[1][0] - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn expm_of_trace_free_has_unit_determinant() {
        let e = expm(&[vec![0.3, 0.8], vec![-0.2, -0.3]]);
        assert!((det(&e) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_columns() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let v = [1.0, 1.0, 2.0];
        let p = project_onto_columns(&a, &v);
        for (x, y) in p.iter().zip(v) {
            assert!((x - y).abs() < 1e-12);
        }
        let w = [1.0, 1.0, -1.0];
        let p = project_onto_columns(&a, &w);
        assert!(norm(&p) < 1e-12);
    }
}
