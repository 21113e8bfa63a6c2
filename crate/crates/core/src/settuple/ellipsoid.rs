use crate::error::{LabError, Result};
use crate::family::omega;
use crate::linalg;
use crate::slice::quadratic_roots;

/// `center + ψ(B(0, radius))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: Vec<Vec<f64>>,
    pub radius: f64,
    inv: Vec<Vec<f64>>,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, shape: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        let d = center.len();
        if d == 0 || shape.len() != d || shape.iter().any(|r| r.len() != d) {
            return Err(LabError::argument("ellipsoid shape must be d×d"));
        }
        if !(radius >= 0.0) {
            return Err(LabError::argument("ellipsoid radius must be nonnegative"));
        }
        let inv = linalg::inverse(&shape).ok_or_else(|| LabError::argument("singular ellipsoid shape"))?;
        Ok(Ellipsoid { center, shape, radius, inv })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let d = center.len();
        Self::new(center, linalg::identity(d), radius).expect("identity shape")
    }

    pub fn d(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d = self.d();
        let mut s = 0.0;
        for i in 0..d {
            let mut v = 0.0;
            for k in 0..d {
                v += self.inv[i][k] * (x[k] - self.center[k]);
            }
            s += v * v;
        }
        s <= self.radius * self.radius
    }

    pub fn measure(&self) -> f64 {
        omega(self.d()) * self.radius.powi(self.d() as i32) * linalg::det(&self.shape).abs()
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let half: Vec<f64> = self.shape.iter().map(|r| self.radius * linalg::norm(r)).collect();
        (
            self.center.iter().zip(&half).map(|(c, h)| c - h).collect(),
            self.center.iter().zip(&half).map(|(c, h)| c + h).collect(),
        )
    }

    /// Parameter interval `{t : origin + t·dir ∈ E}` on the whole line.
    pub fn line_interval(&self, origin: &[f64], dir: &[f64]) -> Option<(f64, f64)> {
        let d = self.d();
        let diff: Vec<f64> = (0..d).map(|k| origin[k] - self.center[k]).collect();
        let p = linalg::mat_vec(&self.inv, &diff);
        let q = linalg::mat_vec(&self.inv, dir);
        let a = linalg::dot(&q, &q);
        let b = 2.0 * linalg::dot(&p, &q);
        let c = linalg::dot(&p, &p) - self.radius * self.radius;
        let mut r = quadratic_roots(a, b, c);
        if r.len() < 2 {
            return None;
        }
        r.sort_by(f64::total_cmp);
        Some((r[0], r[1]))
    }

    /// Image under `x ↦ A x + b`.
    pub fn transformed(&self, a: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let c: Vec<f64> = linalg::mat_vec(a, &self.center).iter().zip(b).map(|(x, y)| x + y).collect();
        Self::new(c, linalg::mat_mul(a, &self.shape), self.radius)
    }
}
