//! Set representations and tuples: ellipsoids, radial graphs and rasters.

mod ellipsoid;
mod grid;
mod ops;
pub mod random;
mod radial;
mod sphere;

pub use ellipsoid::Ellipsoid;
pub use grid::{GridSet, GridSpec};
pub use ops::{
    ball_tuple, boundary_profiles, moments, radial_ball_tuple, radial_from_harmonic, rasterize,
    radial_from_harmonic_on, symmetric_difference, truncate_to_annulus, BoundaryProfile, GridRows,
    Truncation,
};
pub use radial::RadialGraph;
pub use sphere::{catmull_rom_periodic, SphereGrid};

use crate::error::{LabError, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub enum SetRepr {
    Ellipsoid(Ellipsoid),
    Radial(RadialGraph),
    Grid(GridSet),
}

impl SetRepr {
    pub fn d(&self) -> usize {
        match self {
            SetRepr::Ellipsoid(e) => e.d(),
            SetRepr::Radial(r) => r.d(),
            SetRepr::Grid(g) => g.d(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SetRepr::Ellipsoid(_) => "ellipsoid",
            SetRepr::Radial(_) => "radial",
            SetRepr::Grid(_) => "grid",
        }
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SetRepr::Ellipsoid(e) => e.contains(x),
            SetRepr::Radial(r) => r.contains(x),
            SetRepr::Grid(g) => g.contains(x),
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            SetRepr::Ellipsoid(e) => e.measure(),
            SetRepr::Radial(r) => r.measure(),
            SetRepr::Grid(g) => g.measure(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.measure() == 0.0
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            SetRepr::Ellipsoid(e) => e.bounding_box(),
            SetRepr::Radial(r) => r.bounding_box(),
            SetRepr::Grid(g) => g.bounding_box(),
        }
    }

    /// Sorted disjoint intervals `{t ≥ 0 : origin + t·dir ∈ E}`.
    pub fn ray_intervals(&self, origin: &[f64], dir: &[f64]) -> Vec<(f64, f64)> {
        match self {
            SetRepr::Ellipsoid(e) => match e.line_interval(origin, dir) {
                Some((a, b)) if b > 0.0 => vec![(a.max(0.0), b)],
                _ => Vec::new(),
            },
            SetRepr::Radial(r) if r.center.iter().zip(origin).all(|(a, b)| a == b) => {
                vec![(0.0, r.boundary(dir))]
            }
            _ => self.march_ray(origin, dir),
        }
    }

    fn march_ray(&self, origin: &[f64], dir: &[f64]) -> Vec<(f64, f64)> {
        let (lo, hi) = self.bounding_box();
        let d = self.d();
        let mut t_max: f64 = 0.0;
        for corner in 0..(1usize << d) {
            let dist2: f64 = (0..d)
                .map(|k| {
                    let c = if corner >> k & 1 == 1 { hi[k] } else { lo[k] };
                    (c - origin[k]).powi(2)
                })
                .sum();
            t_max = t_max.max(dist2.sqrt());
        }
        if t_max == 0.0 {
            return Vec::new();
        }
        let step = match self {
            SetRepr::Grid(g) => g.spec.h / 4.0,
            _ => t_max / 4000.0,
        };
        let at = |t: f64| -> bool {
            let p: Vec<f64> = (0..d).map(|k| origin[k] + t * dir[k]).collect();
            self.contains(&p)
        };
        let refine = |mut a: f64, mut b: f64, inside_a: bool| -> f64 {
            for _ in 0..48 {
                let m = 0.5 * (a + b);
                if at(m) == inside_a {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let n = (t_max / step).ceil() as usize + 1;
        let mut out = Vec::new();
        let mut prev = at(0.0);
        let mut open = if prev { Some(0.0) } else { None };
        for i in 1..=n {
            let t = i as f64 * step;
            let cur = at(t);
            if cur != prev {
                let edge = refine(t - step, t, prev);
                if cur {
                    open = Some(edge);
                } else if let Some(a) = open.take() {
                    out.push((a, edge));
                }
            }
            prev = cur;
        }
        if let Some(a) = open {
            out.push((a, n as f64 * step));
        }
        out
    }

    /// Range of the first coordinate over the set; `None` when empty.
    pub fn x_extent(&self) -> Option<(f64, f64)> {
        if self.is_empty() {
            return None;
        }
        match self {
            SetRepr::Radial(r) if r.d() == 2 => Some(r.x_extent()),
            _ => {
                let (lo, hi) = self.bounding_box();
                Some((lo[0], hi[0]))
            }
        }
    }

    /// Vertical chord `{t : (x, t) ∈ E}` of a planar set.
    pub fn vertical_chord(&self, x: f64) -> Vec<(f64, f64)> {
        match self {
            SetRepr::Ellipsoid(e) => e.line_interval(&[x, 0.0], &[0.0, 1.0]).into_iter().collect(),
            SetRepr::Radial(r) => r.vertical_chord(x),
            SetRepr::Grid(g) => match g.spec.axis_index(x) {
                Some(i) => g.runs(1, &[i, 0]),
                None => Vec::new(),
            },
        }
    }

    pub fn translated(&self, v: &[f64]) -> Result<SetRepr> {
        Ok(match self {
            SetRepr::Ellipsoid(e) => SetRepr::Ellipsoid(e.transformed(&linalg::identity(e.d()), v)?),
            SetRepr::Radial(r) => SetRepr::Radial(r.translated(v)),
            SetRepr::Grid(g) => {
                let d = g.d();
                SetRepr::Grid(g.pull_back(g.spec, |x, y| {
                    for k in 0..d {
                        y[k] = x[k] - v[k];
                    }
                }))
            }
        })
    }

    /// Image under an invertible linear map.
    pub fn linear_image(&self, a: &[Vec<f64>]) -> Result<SetRepr> {
        Ok(match self {
            SetRepr::Ellipsoid(e) => SetRepr::Ellipsoid(e.transformed(a, &vec![0.0; e.d()])?),
            SetRepr::Radial(r) => SetRepr::Radial(r.linear_image(a)?),
            SetRepr::Grid(g) => {
                let inv = linalg::inverse(a).ok_or_else(|| LabError::argument("singular map"))?;
                let d = g.d();
                SetRepr::Grid(g.pull_back(g.spec, |x, y| {
                    for i in 0..d {
                        y[i] = (0..d).map(|k| inv[i][k] * x[k]).sum();
                    }
                }))
            }
        })
    }

    /// `factor · E`.
    pub fn scaled(&self, factor: f64) -> Result<SetRepr> {
        if !(factor > 0.0) {
            return Err(LabError::argument("scale factor must be positive"));
        }
        Ok(match self {
            SetRepr::Ellipsoid(e) => SetRepr::Ellipsoid(Ellipsoid::new(
                e.center.iter().map(|c| c * factor).collect(),
                e.shape.clone(),
                e.radius * factor,
            )?),
            SetRepr::Radial(r) => SetRepr::Radial(r.scaled(factor)?),
            SetRepr::Grid(g) => {
                let spec = GridSpec::new(g.spec.d, g.spec.h * factor, g.spec.n_half)?;
                SetRepr::Grid(GridSet::new(spec, g.cells.clone())?)
            }
        })
    }
}

/// A `J`-tuple of sets in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetTuple {
    pub d: usize,
    pub sets: Vec<SetRepr>,
}

impl SetTuple {
    pub fn new(d: usize, sets: Vec<SetRepr>) -> Result<Self> {
        if sets.iter().any(|s| s.d() != d) {
            return Err(LabError::argument("all sets must live in the same dimension"));
        }
        Ok(SetTuple { d, sets })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn measures(&self) -> Vec<f64> {
        self.sets.iter().map(SetRepr::measure).collect()
    }

    /// `E_j + v_j` per index.
    pub fn translated(&self, shifts: &[Vec<f64>]) -> Result<SetTuple> {
        if shifts.len() != self.len() {
            return Err(LabError::argument("one shift per set is required"));
        }
        let sets = self.sets.iter().zip(shifts).map(|(s, v)| s.translated(v)).collect::<Result<_>>()?;
        SetTuple::new(self.d, sets)
    }

    /// `A(E_j)` for every index.
    pub fn linear_image(&self, a: &[Vec<f64>]) -> Result<SetTuple> {
        let sets = self.sets.iter().map(|s| s.linear_image(a)).collect::<Result<_>>()?;
        SetTuple::new(self.d, sets)
    }

    /// `(r_j^{-1} E_j)`.
    pub fn dilated(&self, r: &[f64]) -> Result<SetTuple> {
        if r.len() != self.len() {
            return Err(LabError::argument("one dilation factor per set is required"));
        }
        let sets = self.sets.iter().zip(r).map(|(s, &f)| s.scaled(1.0 / f)).collect::<Result<_>>()?;
        SetTuple::new(self.d, sets)
    }
}
