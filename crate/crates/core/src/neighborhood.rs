//! Geometry for the adaptive neighborhoods: nearest-edge queries, the strip
//! search for a second edge pixel, and the edge-free ellipse around a pixel.
//!
//! All distances are in pixel units. Vectors are `[row, col]`.

use crate::edges::EdgeMap;
use crate::{Error, Pixel, Result};

const CELL: usize = 8;

/// Exact nearest-neighbor index over the edge pixels, bucketed on a uniform grid.
///
/// Ties are broken by smallest row, then smallest column.
#[derive(Debug, Clone)]
pub struct EdgeDistanceIndex {
    cell_rows: usize,
    cell_cols: usize,
    buckets: Vec<Vec<Pixel>>,
    len: usize,
}

impl EdgeDistanceIndex {
    pub fn new(width: usize, height: usize, edges: &[Pixel]) -> Self {
        let cell_rows = height.div_ceil(CELL).max(1);
        let cell_cols = width.div_ceil(CELL).max(1);
        let mut buckets = vec![Vec::new(); cell_rows * cell_cols];
        for &p in edges {
            assert!(
                p.row < height && p.col < width,
                "edge pixel {p:?} outside the grid"
            );
            buckets[(p.row / CELL) * cell_cols + p.col / CELL].push(p);
        }
        for b in buckets.iter_mut() {
            b.sort_unstable();
            b.dedup();
        }
        let len = buckets.iter().map(Vec::len).sum();
        EdgeDistanceIndex {
            cell_rows,
            cell_cols,
            buckets,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Nearest indexed pixel to `p` satisfying `accept`, no farther than
    /// `sqrt(max_dist2)`. Returns the pixel and its squared distance.
    pub fn nearest_where(
        &self,
        p: Pixel,
        max_dist2: Option<u64>,
        mut accept: impl FnMut(Pixel) -> bool,
    ) -> Option<(Pixel, u64)> {
        if self.is_empty() {
            return None;
        }
        let limit = max_dist2.unwrap_or(u64::MAX);
        let (pr, pc) = ((p.row / CELL) as isize, (p.col / CELL) as isize);
        let max_ring = self.cell_rows.max(self.cell_cols) as isize;
        let mut best: Option<(Pixel, u64)> = None;
        // Chebyshev distance from p to the first pixel outside its own cell
        let margin = [
            p.row % CELL + 1,
            CELL - p.row % CELL,
            p.col % CELL + 1,
            CELL - p.col % CELL,
        ]
        .into_iter()
        .min()
        .expect("four margins") as u64;
        for ring in 0..=max_ring {
            // rings before `ring` cover every pixel closer than this
            let lower = if ring == 0 {
                0
            } else {
                (margin + (ring as u64 - 1) * CELL as u64).pow(2)
            };
            if lower > limit || best.is_some_and(|(_, d)| lower > d) {
                break;
            }
            for (cr, cc) in ring_cells(pr, pc, ring) {
                if cr < 0
                    || cc < 0
                    || cr >= self.cell_rows as isize
                    || cc >= self.cell_cols as isize
                {
                    continue;
                }
                for &q in &self.buckets[cr as usize * self.cell_cols + cc as usize] {
                    let d = p.dist2(q);
                    if d > limit {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((b, bd)) => d < bd || (d == bd && q < b),
                    };
                    if better && accept(q) {
                        best = Some((q, d));
                    }
                }
            }
        }
        best
    }
}

/// Cells at Chebyshev distance `ring` from `(r, c)`.
fn ring_cells(r: isize, c: isize, ring: isize) -> impl Iterator<Item = (isize, isize)> {
    let horizontal = (-ring..=ring).flat_map(move |dc| {
        let bottom = (ring > 0).then_some((r + ring, c + dc));
        std::iter::once((r - ring, c + dc)).chain(bottom)
    });
    let vertical = (1 - ring..ring).flat_map(move |dr| [(r + dr, c - ring), (r + dr, c + ring)]);
    horizontal.chain(vertical)
}

pub fn build_index(edges: &EdgeMap) -> EdgeDistanceIndex {
    EdgeDistanceIndex::new(edges.width(), edges.height(), &edges.edge_pixels())
}

/// The edge pixel nearest to `p` and its distance.
pub fn nearest_edge(index: &EdgeDistanceIndex, p: Pixel) -> Option<(Pixel, f64)> {
    index
        .nearest_where(p, None, |_| true)
        .map(|(q, d2)| (q, (d2 as f64).sqrt()))
}

/// Whether `q` lies in the band through `p` perpendicular to `p → p1`
/// whose half-width is `|p p1|`.
pub fn in_strip(p: Pixel, p1: Pixel, q: Pixel) -> bool {
    let [ur, uc] = sub(p1.as_vec(), p.as_vec());
    let [qr, qc] = sub(q.as_vec(), p.as_vec());
    // |(q − p)·u| < |u|² compares the projection with |p p1| without a sqrt
    (qr * ur + qc * uc).abs() < ur * ur + uc * uc
}

/// The edge pixel nearest to `p` inside the strip perpendicular to `p → p1`,
/// excluding `p1`, searched out to `max_axis + gamma`.
pub fn second_point(
    index: &EdgeDistanceIndex,
    p: Pixel,
    p1: Pixel,
    max_axis: f64,
    gamma: f64,
) -> Option<(Pixel, f64)> {
    let radius = max_axis + gamma;
    let max_dist2 = (radius * radius).floor() as u64;
    index
        .nearest_where(p, Some(max_dist2), |q| q != p1 && in_strip(p, p1, q))
        .map(|(q, d2)| (q, (d2 as f64).sqrt()))
}

/// How the clearance distances map onto the ellipse axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisConvention {
    /// `|PP₁| − γ` and `|PP₂| − γ` are semi-axis lengths; the ellipse then
    /// stops exactly `γ` short of `P₁`.
    #[default]
    Semi,
    /// They are full axis lengths, so semi-axes are half as long.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: [f64; 2],
    /// Semi-axis along the major direction.
    pub a: f64,
    /// Semi-axis along `u_minor`.
    pub b: f64,
    /// Unit vector from the center toward the nearest edge pixel.
    pub u_minor: [f64; 2],
}

impl Ellipse {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Ellipse {
            center,
            a: radius,
            b: radius,
            u_minor: [1.0, 0.0],
        }
    }

    pub fn u_major(&self) -> [f64; 2] {
        [-self.u_minor[1], self.u_minor[0]]
    }

    /// Normalized squared radius; `<= 1` inside the ellipse.
    pub fn radius2(&self, q: [f64; 2]) -> f64 {
        let d = sub(q, self.center);
        let along_minor = dot(d, self.u_minor) / self.b;
        let along_major = dot(d, self.u_major()) / self.a;
        along_minor * along_minor + along_major * along_major
    }

    pub fn contains(&self, q: [f64; 2]) -> bool {
        self.radius2(q) <= 1.0
    }

    pub fn strictly_contains(&self, q: [f64; 2]) -> bool {
        self.radius2(q) < 1.0
    }

    /// Largest distance from the center to any point of the ellipse.
    pub fn extent(&self) -> f64 {
        self.a.max(self.b)
    }

    /// Half-height of the ellipse's bounding box, in rows.
    pub fn row_extent(&self) -> f64 {
        let (m, j) = (self.u_minor[0], self.u_major()[0]);
        (self.b * self.b * m * m + self.a * self.a * j * j).sqrt()
    }

    /// Column offsets `(lo, hi)` from the center where the row `dy` rows away
    /// from the center crosses the ellipse.
    pub fn row_span(&self, dy: f64) -> Option<(f64, f64)> {
        let (m, j) = (self.u_minor, self.u_major());
        let (ib2, ia2) = (1.0 / (self.b * self.b), 1.0 / (self.a * self.a));
        let rr = m[0] * m[0] * ib2 + j[0] * j[0] * ia2;
        let rc = m[0] * m[1] * ib2 + j[0] * j[1] * ia2;
        let cc = m[1] * m[1] * ib2 + j[1] * j[1] * ia2;
        let disc = (rc * dy) * (rc * dy) - cc * (rr * dy * dy - 1.0);
        if disc.is_nan() || disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some(((-rc * dy - root) / cc, (-rc * dy + root) / cc))
    }
}

/// Builds the ellipse at `p` that keeps `gamma` clear of both edge pixels.
///
/// `d1 = |PP₁|`, `d2 = |PP₂|` (none when no second edge pixel was found),
/// `u_minor` points from `p` toward `P₁`. Axes are capped at `max_axis`.
pub fn build_ellipse(
    p: Pixel,
    d1: f64,
    d2: Option<f64>,
    u_minor: [f64; 2],
    gamma: f64,
    max_axis: f64,
    convention: AxisConvention,
) -> Result<Ellipse> {
    if d1 <= gamma {
        return Err(Error::InvalidParameter(format!(
            "nearest edge at {d1} is within the clearance {gamma}"
        )));
    }
    let mut b = (d1 - gamma).min(max_axis);
    let mut a = d2.map_or(f64::INFINITY, |d| d - gamma).min(max_axis);
    let mut u = u_minor;
    if a < b {
        std::mem::swap(&mut a, &mut b);
        u = [-u[1], u[0]];
    }
    if convention == AxisConvention::Full {
        a *= 0.5;
        b *= 0.5;
    }
    let norm = u[0].hypot(u[1]);
    Ok(Ellipse {
        center: p.as_vec(),
        a,
        b,
        u_minor: [u[0] / norm, u[1] / norm],
    })
}

/// Unit vector from `p` toward `q`; `p` and `q` must differ.
pub fn direction(p: Pixel, q: Pixel) -> [f64; 2] {
    let d = sub(q.as_vec(), p.as_vec());
    let norm = d[0].hypot(d[1]);
    [d[0] / norm, d[1] / norm]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
