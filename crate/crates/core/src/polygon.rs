//! Convex polygons in the plane: half-plane clipping and exact area.

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0,x1]×[y0,y1]` as a counter-clockwise polygon.
pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Point> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

/// Clips a convex polygon to the half-plane `a·p ≤ b` (Sutherland–Hodgman).
pub fn clip(poly: &[Point], a: [f64; 2], b: f64) -> Vec<Point> {
    let n = poly.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let fp = a[0] * p[0] + a[1] * p[1] - b;
        let fq = a[0] * q[0] + a[1] * q[1] - b;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// Clips to the slab `lo ≤ a·p ≤ hi`.
pub fn clip_slab(poly: &[Point], a: [f64; 2], lo: f64, hi: f64) -> Vec<Point> {
    if lo > hi {
        return Vec::new();
    }
    let p = clip(poly, a, hi);
    clip(&p, [-a[0], -a[1]], -lo)
}

/// Shoelace area (absolute value).
pub fn area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        s += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * s.abs()
}

/// Area of `{p : lo_k ≤ a_k·p ≤ hi_k for all k}`, which must be bounded by
/// the constraints themselves; `bound` is a box half-width known to contain it.
pub fn slab_intersection_area(constraints: &[([f64; 2], f64, f64)], bound: f64) -> f64 {
    let mut poly = rectangle(-bound, bound, -bound, bound);
    for &(a, lo, hi) in constraints {
        poly = clip_slab(&poly, a, lo, hi);
        if poly.is_empty() {
            return 0.0;
        }
    }
    area(&poly)
}
