//! Planar polygon primitives shared by rasterization and intervention siting.
//!
//! Coordinates are projected meters. A [`Polygon`] is an exterior ring plus
//! optional holes; membership uses the even-odd rule over all rings, so holes
//! need no particular winding.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<Vec<[f64; 2]>>,
}

impl Polygon {
    pub fn new(exterior: Vec<[f64; 2]>) -> Self {
        Self {
            exterior,
            holes: Vec::new(),
        }
    }

    /// Axis-aligned rectangle from its lower-left and upper-right corners.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]])
    }

    fn rings(&self) -> impl Iterator<Item = &[[f64; 2]]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    /// Unsigned area: exterior minus holes.
    pub fn area(&self) -> f64 {
        let outer = ring_signed_area(&self.exterior).abs();
        let holes: f64 = self.holes.iter().map(|h| ring_signed_area(h).abs()).sum();
        (outer - holes).max(0.0)
    }

    pub fn bbox(&self) -> Option<([f64; 2], [f64; 2])> {
        let mut it = self.exterior.iter();
        let first = it.next()?;
        let mut lo = *first;
        let mut hi = *first;
        for p in it {
            lo[0] = lo[0].min(p[0]);
            lo[1] = lo[1].min(p[1]);
            hi[0] = hi[0].max(p[0]);
            hi[1] = hi[1].max(p[1]);
        }
        Some((lo, hi))
    }

    /// Even-odd point-in-polygon test. Points exactly on an edge follow the
    /// half-open crossing convention, so a point is never claimed by both of
    /// two polygons sharing that edge.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for ring in self.rings() {
            if ring_crossings_odd(ring, x, y) {
                inside = !inside;
            }
        }
        inside
    }

    pub fn is_degenerate(&self) -> bool {
        self.exterior.len() < 3 || self.area() == 0.0
    }
}

fn ring_signed_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}

fn ring_crossings_odd(ring: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut odd = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (ring[i][0], ring[i][1]);
        let (xj, yj) = (ring[j][0], ring[j][1]);
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
            if x < x_cross {
                odd = !odd;
            }
        }
        j = i;
    }
    odd
}
