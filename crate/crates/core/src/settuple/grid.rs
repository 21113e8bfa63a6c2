use rayon::prelude::*;

use crate::error::{LabError, Result};

/// Raster geometry: cells of side `h`, indices `[0, 2·n_half)` per axis,
/// cell `i` covering `[(i − n_half)·h, (i − n_half + 1)·h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub h: f64,
    pub n_half: usize,
}

impl GridSpec {
    pub fn new(d: usize, h: f64, n_half: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(LabError::argument("grids support d ∈ {1, 2, 3}"));
        }
        if !(h > 0.0) || n_half == 0 {
            return Err(LabError::argument("grid needs positive cell size and extent"));
        }
        Ok(GridSpec { d, h, n_half })
    }

    /// Cell `r_max / cells_per_radius`, box of half-width `margin · r_max`.
    pub fn covering(d: usize, r_max: f64, cells_per_radius: usize, margin: f64) -> Result<Self> {
        let h = r_max / cells_per_radius as f64;
        let n_half = (margin * cells_per_radius as f64).ceil() as usize;
        Self::new(d, h, n_half)
    }

    /// Default raster: `h = r_max/256` (`/32` in three dimensions), box `1.5·r_max`.
    pub fn default_for(d: usize, r_max: f64) -> Result<Self> {
        let cells = if d == 3 { 32 } else { 256 };
        Self::covering(d, r_max, cells, 1.5)
    }

    pub fn side(&self) -> usize {
        2 * self.n_half
    }

    pub fn total(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.n_half as f64 + 0.5) * self.h
    }

    pub fn axis_index(&self, x: f64) -> Option<usize> {
        let i = (x / self.h).floor() + self.n_half as f64;
        if i >= 0.0 && i < self.side() as f64 {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Multi-index of linear index `idx` (axis 0 fastest).
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        let s = self.side();
        for o in out.iter_mut().take(self.d) {
            *o = idx % s;
            idx /= s;
        }
    }

    pub fn center(&self, idx: usize, out: &mut [f64]) {
        let s = self.side();
        let mut r = idx;
        for o in out.iter_mut().take(self.d) {
            *o = self.coord(r % s);
            r /= s;
        }
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        let s = self.side();
        let mut idx = 0;
        let mut stride = 1;
        for &xc in x.iter().take(self.d) {
            idx += self.axis_index(xc)? * stride;
            stride *= s;
        }
        Some(idx)
    }
}

/// Boolean raster on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    pub spec: GridSpec,
    pub cells: Vec<bool>,
    count: usize,
}

impl GridSet {
    pub fn new(spec: GridSpec, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != spec.total() {
            return Err(LabError::argument("raster size does not match grid"));
        }
        let count = cells.iter().filter(|&&c| c).count();
        Ok(GridSet { spec, cells, count })
    }

    pub fn empty(spec: GridSpec) -> Self {
        GridSet { spec, cells: vec![false; spec.total()], count: 0 }
    }

    /// Cell-center rasterization of a predicate.
    pub fn from_fn<F: Fn(&[f64]) -> bool + Sync>(spec: GridSpec, f: F) -> Self {
        let cells: Vec<bool> = (0..spec.total())
            .into_par_iter()
            .map(|idx| {
                let mut x = [0.0; 3];
                spec.center(idx, &mut x);
                f(&x[..spec.d])
            })
            .collect();
        let count = cells.iter().filter(|&&c| c).count();
        GridSet { spec, cells, count }
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn recount(&mut self) {
        self.count = self.cells.iter().filter(|&&c| c).count();
    }

    pub fn measure(&self) -> f64 {
        self.count as f64 * self.spec.cell_volume()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.spec.index_of(x).is_some_and(|i| self.cells[i])
    }

    /// Tight box around occupied cells; a degenerate box at 0 when empty.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d();
        let mut lo = vec![usize::MAX; d];
        let mut hi = vec![0usize; d];
        let mut mi = [0usize; 3];
        for (idx, &c) in self.cells.iter().enumerate() {
            if c {
                self.spec.unravel(idx, &mut mi);
                for a in 0..d {
                    lo[a] = lo[a].min(mi[a]);
                    hi[a] = hi[a].max(mi[a]);
                }
            }
        }
        if self.count == 0 {
            return (vec![0.0; d], vec![0.0; d]);
        }
        let h = self.spec.h;
        let n = self.spec.n_half as f64;
        (
            lo.iter().map(|&i| (i as f64 - n) * h).collect(),
            hi.iter().map(|&i| (i as f64 - n + 1.0) * h).collect(),
        )
    }

    /// Runs along `axis` through the line of cells sharing the other indices
    /// of `base` (whose `axis` entry is ignored), in coordinates.
    pub fn runs(&self, axis: usize, base: &[usize]) -> Vec<(f64, f64)> {
        let s = self.spec.side();
        let mut stride = 1;
        let mut start = 0;
        let mut mult = 1;
        for (a, &b) in base.iter().enumerate().take(self.d()) {
            if a == axis {
                stride = mult;
            } else {
                start += b * mult;
            }
            mult *= s;
        }
        let h = self.spec.h;
        let n = self.spec.n_half as f64;
        let mut out = Vec::new();
        let mut open: Option<usize> = None;
        for i in 0..s {
            let c = self.cells[start + i * stride];
            match (c, open) {
                (true, None) => open = Some(i),
                (false, Some(a)) => {
                    out.push(((a as f64 - n) * h, (i as f64 - n) * h));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(a) = open {
            out.push(((a as f64 - n) * h, (s as f64 - n) * h));
        }
        out
    }

    /// Resamples `x ↦ self(pull(x))` at cell centers of `spec`.
    pub fn pull_back<F: Fn(&[f64], &mut [f64]) + Sync>(&self, spec: GridSpec, pull: F) -> Self {
        GridSet::from_fn(spec, |x| {
            let mut y = [0.0; 3];
            pull(x, &mut y[..spec.d]);
            self.contains(&y[..spec.d])
        })
    }

    /// Run-length encoding: header line then alternating run lengths
    /// starting with a run of empty cells.
    pub fn to_rle(&self) -> String {
        let mut s = format!("grid d={} h={} n_half={}\n", self.spec.d, self.spec.h, self.spec.n_half);
        let mut runs = Vec::new();
        let mut cur = false;
        let mut len = 0usize;
        for &c in &self.cells {
            if c == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = c;
                len = 1;
            }
        }
        runs.push(len);
        let body: Vec<String> = runs.iter().map(|r| r.to_string()).collect();
        s.push_str(&body.join(" "));
        s.push('\n');
        s
    }

    pub fn from_rle(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| LabError::argument("empty raster file"))?;
        let mut d = None;
        let mut h = None;
        let mut n_half = None;
        for tok in header.split_whitespace().skip(1) {
            let (k, v) = tok.split_once('=').ok_or_else(|| LabError::argument("bad raster header"))?;
            let bad = |_| LabError::argument(format!("bad raster header value {v}"));
            match k {
                "d" => d = Some(v.parse::<usize>().map_err(bad)?),
                "h" => h = Some(v.parse::<f64>().map_err(|_| LabError::argument("bad h"))?),
                "n_half" => n_half = Some(v.parse::<usize>().map_err(bad)?),
                _ => return Err(LabError::argument(format!("unknown raster header key {k}"))),
            }
        }
        let spec = GridSpec::new(
            d.ok_or_else(|| LabError::argument("raster header lacks d"))?,
            h.ok_or_else(|| LabError::argument("raster header lacks h"))?,
            n_half.ok_or_else(|| LabError::argument("raster header lacks n_half"))?,
        )?;
        let mut cells = Vec::with_capacity(spec.total());
        let mut cur = false;
        for line in lines {
            for tok in line.split_whitespace() {
                let len: usize = tok.parse().map_err(|_| LabError::argument("bad run length"))?;
                cells.extend(std::iter::repeat_n(cur, len));
                cur = !cur;
            }
        }
        GridSet::new(spec, cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rle_round_trip() {
        let spec = GridSpec::new(2, 0.1, 8).unwrap();
        let g = GridSet::from_fn(spec, |x| x[0] * x[0] + x[1] * x[1] < 0.3);
        let back = GridSet::from_rle(&g.to_rle()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn runs_along_both_axes() {
        let spec = GridSpec::new(2, 1.0, 2).unwrap();
        let g = GridSet::from_fn(spec, |x| x[0] > 0.0 && x[1] < 0.0);
        assert_eq!(g.runs(0, &[0, 0]), vec![(0.0, 2.0)]);
        assert_eq!(g.runs(1, &[3, 0]), vec![(-2.0, 0.0)]);
        assert_eq!(g.count(), 4);
    }

    #[test]
    fn index_and_center_agree() {
        let spec = GridSpec::new(3, 0.5, 3).unwrap();
        let mut x = [0.0; 3];
        for idx in [0, 17, 100, spec.total() - 1] {
            spec.center(idx, &mut x);
            assert_eq!(spec.index_of(&x), Some(idx));
        }
    }
}
