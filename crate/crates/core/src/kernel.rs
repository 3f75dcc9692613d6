//! Local polynomial kernel regression over an elliptical support.
//!
//! The ellipse is the bandwidth: the kernel is positive inside it and zero
//! outside, so no separate bandwidth parameter exists. Offsets are measured in
//! pixels from the ellipse center, `dx` along columns and `dy` along rows.

use nalgebra::{SMatrix, SVector};

use crate::neighborhood::Ellipse;
use crate::{Error, ImageGrid, Result};

/// Normal matrices with a larger eigenvalue spread are treated as singular.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelShape {
    #[default]
    Epanechnikov,
    TruncatedGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    pub shape: KernelShape,
    /// Taylor order of the local fit, at most 2.
    pub order: u8,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            shape: KernelShape::Epanechnikov,
            order: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Fitted intensity at the center.
    pub theta0: f64,
    /// Gradient `(∂/∂x, ∂/∂y)` when the fit is at least linear.
    pub theta1: Option<[f64; 2]>,
    /// Coefficients of `(dx², dx·dy, dy²)` for a quadratic fit.
    pub theta2: Option<[f64; 3]>,
    pub effective_order: u8,
    /// Pixels with positive weight.
    pub n_points: usize,
}

pub fn kernel_weight(ellipse: &Ellipse, q: [f64; 2], shape: KernelShape) -> f64 {
    let r2 = ellipse.radius2(q);
    match shape {
        KernelShape::Epanechnikov => (1.0 - r2).max(0.0),
        KernelShape::TruncatedGaussian if r2 <= 1.0 => (-0.5 * r2).exp(),
        KernelShape::TruncatedGaussian => 0.0,
    }
}

fn basis(order: u8, dx: f64, dy: f64) -> impl Iterator<Item = f64> {
    let terms = [1.0, dx, dy, dx * dx, dx * dy, dy * dy];
    let len = basis_len(order);
    terms.into_iter().take(len)
}

fn basis_len(order: u8) -> usize {
    match order {
        0 => 1,
        1 => 3,
        _ => 6,
    }
}

/// Weighted least-squares polynomial fit inside `ellipse`, clipped to the image.
///
/// A rank-deficient or badly conditioned design drops the order by one and
/// refits; order 0 (the weighted mean) always succeeds.
pub fn local_poly_fit(img: &ImageGrid, ellipse: &Ellipse, spec: KernelSpec) -> Result<FitResult> {
    if spec.order > 2 {
        return Err(Error::InvalidParameter(format!(
            "kernel order {} > 2",
            spec.order
        )));
    }
    let scale = ellipse.extent().max(f64::MIN_POSITIVE);
    let mut normal = Normal::new(spec.order, scale);
    for_each_support(img, ellipse, spec.shape, |dx, dy, w, z| {
        normal.push(dx, dy, w, z)
    });
    if normal.count == 0 {
        return Err(Error::EmptySupport);
    }
    for order in (1..=spec.order).rev() {
        if let Some(coef) = normal.solve(order) {
            let theta1 = Some([coef[1] / scale, coef[2] / scale]);
            let theta2 = (order == 2).then(|| {
                let s2 = scale * scale;
                [coef[3] / s2, coef[4] / s2, coef[5] / s2]
            });
            return Ok(FitResult {
                theta0: coef[0],
                theta1,
                theta2,
                effective_order: order,
                n_points: normal.count,
            });
        }
    }
    Ok(FitResult {
        theta0: normal.rhs[0] / normal.moments[0][0],
        theta1: None,
        theta2: None,
        effective_order: 0,
        n_points: normal.count,
    })
}

/// Calls `f(dx, dy, weight, value)` for every image pixel with positive weight.
fn for_each_support(
    img: &ImageGrid,
    ellipse: &Ellipse,
    shape: KernelShape,
    mut f: impl FnMut(f64, f64, f64, f64),
) {
    let [cr, cc] = ellipse.center;
    // pad the analytic spans so rounding never drops a pixel; the weight
    // test below stays the sole judge of membership
    const PAD: f64 = 1e-6;
    let ry = ellipse.row_extent() + PAD;
    let r0 = (cr - ry).ceil().max(0.0);
    let r1 = (cr + ry).floor().min(img.height() as f64 - 1.0);
    if r0 > r1 {
        return;
    }
    let c_max = img.width() as f64 - 1.0;
    for row in r0 as usize..=r1 as usize {
        let dy = row as f64 - cr;
        let Some((lo, hi)) = ellipse.row_span(dy) else {
            continue;
        };
        let c0 = (cc + lo - PAD).ceil().max(0.0);
        let c1 = (cc + hi + PAD).floor().min(c_max);
        if c0 > c1 {
            continue;
        }
        for col in c0 as usize..=c1 as usize {
            let w = kernel_weight(ellipse, [row as f64, col as f64], shape);
            if w > 0.0 {
                f(col as f64 - cc, dy, w, img.get(row, col));
            }
        }
    }
}

/// Intercept weights of a fit for a fixed ellipse shape and border clipping.
///
/// The fitted intercept is linear in the data, so for a fixed support it is a
/// fixed weighted sum of the pixels under it. Precomputing those weights once
/// lets every pixel with the same support share one factorization.
#[derive(Debug, Clone)]
pub struct EquivalentKernel {
    taps: Vec<(isize, isize, f64)>,
    reach: usize,
    window: [usize; 4],
    effective_order: u8,
}

impl EquivalentKernel {
    /// Weights for `shape` centered on a pixel; the ellipse center is ignored.
    pub fn new(shape: &Ellipse, spec: KernelSpec) -> Result<Self> {
        let reach = shape.extent().ceil() as usize;
        Self::clipped(shape, spec, [reach; 4])
    }

    /// Like [`EquivalentKernel::new`], for a pixel with only `window` =
    /// `[up, down, left, right]` pixels of image on each side, capped at the
    /// reach of `shape`.
    pub fn clipped(shape: &Ellipse, spec: KernelSpec, window: [usize; 4]) -> Result<Self> {
        if spec.order > 2 {
            return Err(Error::InvalidParameter(format!(
                "kernel order {} > 2",
                spec.order
            )));
        }
        let ellipse = Ellipse {
            center: [0.0, 0.0],
            ..*shape
        };
        let reach = ellipse.extent().ceil() as usize;
        let window = window.map(|w| w.min(reach));
        let [up, down, left, right] = window.map(|w| w as isize);
        let mut support = Vec::new();
        for dy in -up..=down {
            for dx in -left..=right {
                let w = kernel_weight(&ellipse, [dy as f64, dx as f64], spec.shape);
                if w > 0.0 {
                    support.push((dy, dx, w));
                }
            }
        }
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let scale = ellipse.extent().max(f64::MIN_POSITIVE);
        let mut normal = Normal::new(spec.order, scale);
        for &(dy, dx, w) in &support {
            normal.push(dx as f64, dy as f64, w, 0.0);
        }
        // G⁻¹e₀ is the first row of G⁻¹, which maps the moments to the intercept
        normal.rhs = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let solved = (1..=spec.order)
            .rev()
            .find_map(|order| normal.solve(order).map(|l| (order, l)));
        let taps = match solved {
            Some((order, l)) => support
                .iter()
                .map(|&(dy, dx, w)| {
                    let dot: f64 = basis(order, dx as f64 / scale, dy as f64 / scale)
                        .zip(l)
                        .map(|(phi, li)| phi * li)
                        .sum();
                    (dy, dx, w * dot)
                })
                .collect(),
            None => {
                let total: f64 = support.iter().map(|s| s.2).sum();
                support
                    .iter()
                    .map(|&(dy, dx, w)| (dy, dx, w / total))
                    .collect()
            }
        };
        Ok(EquivalentKernel {
            taps,
            reach,
            window,
            effective_order: solved.map_or(0, |(order, _)| order),
        })
    }

    /// Farthest offset of any tap along either axis.
    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn effective_order(&self) -> u8 {
        self.effective_order
    }

    /// Image extent around `(row, col)` on each side, capped at the reach.
    pub fn window_at(&self, img: &ImageGrid, row: usize, col: usize) -> [usize; 4] {
        window_at(img, row, col, self.reach)
    }

    /// Fitted intercept at `(row, col)`, or `None` when the image around the
    /// pixel does not match the window this kernel was built for.
    pub fn apply(&self, img: &ImageGrid, row: usize, col: usize) -> Option<f64> {
        (self.window_at(img, row, col) == self.window).then(|| {
            self.taps
                .iter()
                .map(|&(dr, dc, w)| {
                    w * img.get(row.wrapping_add_signed(dr), col.wrapping_add_signed(dc))
                })
                .sum()
        })
    }
}

fn window_at(img: &ImageGrid, row: usize, col: usize, reach: usize) -> [usize; 4] {
    [row, img.height() - 1 - row, col, img.width() - 1 - col].map(|w| w.min(reach))
}

/// Solves the leading `P x P` block on the stack. Designs that are not
/// positive definite or whose condition number exceeds `MAX_CONDITION` are
/// rejected. `trace(G)` and `‖G⁻¹‖_F` bound the extreme eigenvalues within a
/// factor of `P` and `√P`, which settles most cases without an eigensolve.
macro_rules! solve_block {
    ($normal:expr, $p:literal) => {{
        let normal = $normal;
        if normal.count < $p {
            return None;
        }
        let gram = SMatrix::<f64, $p, $p>::from_fn(|i, j| normal.gram(i, j));
        let rhs = SVector::<f64, $p>::from_fn(|i, _| normal.rhs[i]);
        let chol = gram.cholesky()?;
        let upper = gram.trace() * chol.inverse().norm();
        let p = $p as f64;
        if upper > MAX_CONDITION {
            if upper / (p * p.sqrt()) > MAX_CONDITION {
                return None;
            }
            let (lo, hi) = gram
                .symmetric_eigenvalues()
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if lo.is_nan() || lo <= 0.0 || hi / lo > MAX_CONDITION {
                return None;
            }
        }
        let coef = chol.solve(&rhs);
        let mut out = [0.0; 6];
        out[..$p].copy_from_slice(coef.as_slice());
        Some(out)
    }};
}

/// Exponents `(x, y)` of each basis term, ordered by degree.
const POWERS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// Weighted normal equations, kept as the moments `Σ w xᵃ yᵇ` with
/// `a + b ≤ 2·order`. Lower orders use the leading blocks of the Gram matrix,
/// since the basis is ordered by degree.
struct Normal {
    order: u8,
    inv_scale: f64,
    moments: [[f64; 5]; 5],
    rhs: [f64; 6],
    count: usize,
}

impl Normal {
    fn new(order: u8, scale: f64) -> Self {
        Normal {
            order,
            inv_scale: 1.0 / scale,
            moments: [[0.0; 5]; 5],
            rhs: [0.0; 6],
            count: 0,
        }
    }

    fn push(&mut self, dx: f64, dy: f64, w: f64, z: f64) {
        self.count += 1;
        let m = &mut self.moments;
        m[0][0] += w;
        self.rhs[0] += w * z;
        if self.order == 0 {
            return;
        }
        let (x, y) = (dx * self.inv_scale, dy * self.inv_scale);
        let (wx, wy) = (w * x, w * y);
        let (wxx, wxy, wyy) = (wx * x, wx * y, wy * y);
        m[1][0] += wx;
        m[0][1] += wy;
        m[2][0] += wxx;
        m[1][1] += wxy;
        m[0][2] += wyy;
        self.rhs[1] += wx * z;
        self.rhs[2] += wy * z;
        if self.order == 1 {
            return;
        }
        let (wxxx, wxxy, wxyy, wyyy) = (wxx * x, wxx * y, wxy * y, wyy * y);
        m[3][0] += wxxx;
        m[2][1] += wxxy;
        m[1][2] += wxyy;
        m[0][3] += wyyy;
        m[4][0] += wxxx * x;
        m[3][1] += wxxx * y;
        m[2][2] += wxxy * y;
        m[1][3] += wxyy * y;
        m[0][4] += wyyy * y;
        self.rhs[3] += wxx * z;
        self.rhs[4] += wxy * z;
        self.rhs[5] += wyy * z;
    }

    fn gram(&self, i: usize, j: usize) -> f64 {
        let ((ai, bi), (aj, bj)) = (POWERS[i], POWERS[j]);
        self.moments[ai + aj][bi + bj]
    }

    fn solve(&self, order: u8) -> Option<[f64; 6]> {
        match order {
            1 => solve_block!(self, 3),
            _ => solve_block!(self, 6),
        }
    }
}
