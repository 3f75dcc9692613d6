//! Edge pixel detection by jump regression.
//!
//! A least-squares plane is fitted in the `(2k+1)²` window around every
//! pixel. Near a jump, the fitted gradient differs sharply from the gradients
//! fitted in the two disjoint windows displaced along it; the smaller of the
//! two gradient differences is the statistic `δ`, and a pixel is an edge pixel
//! when `δ > σ̂·sqrt(χ²₂(α) / (k·S_x²))`.
//!
//! Coordinates are normalized: one pixel is `1/n` with `n = max(width, height)`,
//! `x` runs along columns and `y` along rows.

use crate::{par, Error, ImageGrid, Pixel, Result};

/// Local plane `b0 + b1·(x − x_i) + b2·(y − y_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneFit {
    pub b0: f64,
    /// Slope along columns, intensity per normalized unit.
    pub b1: f64,
    /// Slope along rows.
    pub b2: f64,
}

impl PlaneFit {
    pub fn gradient(&self) -> [f64; 2] {
        [self.b1, self.b2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDetectParams {
    /// Window half-width `k`; the window side is `2k+1`.
    pub half_width: usize,
    pub alpha: f64,
    /// Use this noise level instead of [`estimate_sigma`].
    pub sigma_override: Option<f64>,
}

impl Default for EdgeDetectParams {
    fn default() -> Self {
        EdgeDetectParams {
            half_width: 2,
            alpha: 0.05,
            sigma_override: None,
        }
    }
}

impl EdgeDetectParams {
    pub fn validate(&self, img: &ImageGrid) -> Result<()> {
        let k = self.half_width;
        if k == 0 {
            return Err(Error::InvalidParameter(
                "edge window half-width must be >= 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let Some(s) = self.sigma_override {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "sigma override {s} is not >= 0"
                )));
            }
        }
        if 2 * k + 1 > img.width().min(img.height()) {
            return Err(Error::InvalidParameter(format!(
                "edge window {} exceeds the {}x{} image",
                2 * k + 1,
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    flags: Vec<bool>,
    delta: Vec<f64>,
    pub threshold: f64,
    pub sigma_hat: f64,
}

impl EdgeMap {
    /// Edge map with the given pixels flagged and no statistic attached.
    pub fn from_pixels(width: usize, height: usize, edges: &[Pixel]) -> Self {
        let mut flags = vec![false; width * height];
        for p in edges {
            flags[p.row * width + p.col] = true;
        }
        EdgeMap {
            width,
            height,
            flags,
            delta: vec![0.0; width * height],
            threshold: 0.0,
            sigma_hat: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_edge(&self, p: Pixel) -> bool {
        self.flags[p.row * self.width + p.col]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn delta(&self, p: Pixel) -> f64 {
        self.delta[p.row * self.width + p.col]
    }

    pub fn edge_pixels(&self) -> Vec<Pixel> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| Pixel::new(i / self.width, i % self.width))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// 255 on edge pixels, 0 elsewhere.
    pub fn mask_image(&self) -> ImageGrid {
        let data = self
            .flags
            .iter()
            .map(|&f| if f { 255.0 } else { 0.0 })
            .collect();
        ImageGrid::new(self.width, self.height, data).expect("mask has the map's shape")
    }

    /// The δ field rescaled so that the largest value maps to 255.
    pub fn delta_image(&self) -> ImageGrid {
        let max = self.delta.iter().cloned().fold(0.0, f64::max);
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        let data = self.delta.iter().map(|d| d * scale).collect();
        ImageGrid::new(self.width, self.height, data).expect("delta has the map's shape")
    }
}

/// Least-squares plane over the `(2k+1)²` window centered at `center`.
///
/// The window is symmetric, so the normal equations are diagonal: the
/// intercept is the window mean and each slope is a ratio of sums. Symmetric
/// differences are accumulated pairwise, which makes the slopes exactly zero
/// on a constant window.
pub fn fit_local_plane(img: &ImageGrid, center: Pixel, k: usize) -> Result<PlaneFit> {
    let Pixel { row, col } = center;
    if row < k || col < k || row + k >= img.height() || col + k >= img.width() {
        return Err(Error::WindowOutOfBounds {
            row,
            col,
            half_width: k,
        });
    }
    Ok(plane_unchecked(img, center, k))
}

fn plane_unchecked(img: &ImageGrid, center: Pixel, k: usize) -> PlaneFit {
    let Pixel { row, col } = center;
    let side = 2 * k + 1;
    let mut sum = 0.0;
    for r in row - k..=row + k {
        for c in col - k..=col + k {
            sum += img.get(r, c);
        }
    }
    let mut sx = 0.0;
    let mut sy = 0.0;
    for s in 1..=k {
        let mut dx = 0.0;
        let mut dy = 0.0;
        for t in 0..side {
            let (r, c) = (row - k + t, col - k + t);
            dx += img.get(r, col + s) - img.get(r, col - s);
            dy += img.get(row + s, c) - img.get(row - s, c);
        }
        sx += s as f64 * dx;
        sy += s as f64 * dy;
    }
    // Σ over the window of s² = side · k(k+1)(2k+1)/3
    let second_moment = (side * side * k * (k + 1)) as f64 / 3.0;
    let n = img.side() as f64;
    PlaneFit {
        b0: sum / (side * side) as f64,
        b1: n * sx / second_moment,
        b2: n * sy / second_moment,
    }
}

/// Plane fits at every pixel whose window lies inside the image.
#[derive(Debug, Clone)]
pub struct GradientField {
    width: usize,
    height: usize,
    half_width: usize,
    fits: Vec<PlaneFit>,
}

impl GradientField {
    pub fn compute(img: &ImageGrid, k: usize) -> Result<Self> {
        let (w, h) = (img.width(), img.height());
        if k == 0 || 2 * k + 1 > w.min(h) {
            return Err(Error::InvalidParameter(format!(
                "edge window {} does not fit the {w}x{h} image",
                2 * k + 1
            )));
        }
        let fits = par::map_indices(w * h, |i| {
            let p = Pixel::new(i / w, i % w);
            if Self::in_region(w, h, k, p.row as isize, p.col as isize) {
                plane_unchecked(img, p, k)
            } else {
                PlaneFit::default()
            }
        });
        Ok(GradientField {
            width: w,
            height: h,
            half_width: k,
            fits,
        })
    }

    fn in_region(w: usize, h: usize, k: usize, row: isize, col: isize) -> bool {
        let k = k as isize;
        row >= k && col >= k && row < h as isize - k && col < w as isize - k
    }

    /// Whether `(row, col)` has a full window.
    pub fn is_valid(&self, row: isize, col: isize) -> bool {
        Self::in_region(self.width, self.height, self.half_width, row, col)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn fit(&self, p: Pixel) -> Option<PlaneFit> {
        self.is_valid(p.row as isize, p.col as isize)
            .then(|| self.fits[p.row * self.width + p.col])
    }

    /// The two comparison pixels `B₁ = p + o`, `B₂ = p − o`, with `o` the
    /// gradient direction rounded to a step whose Chebyshev length is
    /// `2k+1`, so neither window overlaps the one at `p`. A zero gradient
    /// uses the column direction.
    pub fn comparison_offset(&self, p: Pixel) -> Option<(isize, isize)> {
        let fit = self.fit(p)?;
        let (gx, gy) = (fit.b1, fit.b2);
        let (ux, uy) = if gx == 0.0 && gy == 0.0 {
            (1.0, 0.0)
        } else {
            (gx, gy)
        };
        let scale = (2 * self.half_width + 1) as f64 / ux.abs().max(uy.abs());
        Some(((uy * scale).round() as isize, (ux * scale).round() as isize))
    }
}

/// Smaller of the gradient differences between `p` and its two comparison
/// pixels. Comparison pixels without a full window are skipped; with neither
/// available, or at `p` itself without a fit, the statistic is 0.
pub fn delta_statistic(field: &GradientField, p: Pixel) -> f64 {
    let (Some(fit), Some((dr, dc))) = (field.fit(p), field.comparison_offset(p)) else {
        return 0.0;
    };
    let (r, c) = (p.row as isize, p.col as isize);
    [(r + dr, c + dc), (r - dr, c - dc)]
        .into_iter()
        .filter(|&(br, bc)| field.is_valid(br, bc))
        .map(|(br, bc)| {
            let other = field.fits[br as usize * field.width + bc as usize];
            (fit.b1 - other.b1).hypot(fit.b2 - other.b2)
        })
        .reduce(f64::min)
        .unwrap_or(0.0)
}

/// Robust noise level from horizontal first differences,
/// `median(|d − median(d)|) / (0.6745·√2)`.
pub fn estimate_sigma(img: &ImageGrid) -> f64 {
    if img.width() < 2 {
        return 0.0;
    }
    let mut diffs: Vec<f64> = (0..img.height())
        .flat_map(|r| (0..img.width() - 1).map(move |c| (r, c)))
        .map(|(r, c)| img.get(r, c + 1) - img.get(r, c))
        .collect();
    let center = median(&mut diffs);
    for d in diffs.iter_mut() {
        *d = (*d - center).abs();
    }
    median(&mut diffs) / (0.6745 * std::f64::consts::SQRT_2)
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

/// Upper `alpha` quantile of the χ² distribution with two degrees of freedom.
pub fn chi2_quantile_2df(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} is outside (0, 1]"
        )));
    }
    Ok(-2.0 * alpha.ln() + 0.0)
}

/// Detection threshold `σ̂·sqrt(χ²₂(α) / (k·S_x²))`, where
/// `S_x² = k(k+1) / (3n²)` is the variance of the window's x-coordinates.
pub fn edge_threshold(sigma_hat: f64, alpha: f64, k: usize, n: usize) -> Result<f64> {
    let chi2 = chi2_quantile_2df(alpha)?;
    let sx2 = (k * (k + 1)) as f64 / (3.0 * (n * n) as f64);
    Ok(sigma_hat * (chi2 / (k as f64 * sx2)).sqrt())
}

pub fn detect_edges(img: &ImageGrid, params: &EdgeDetectParams) -> Result<EdgeMap> {
    params.validate(img)?;
    let k = params.half_width;
    let sigma_hat = params.sigma_override.unwrap_or_else(|| estimate_sigma(img));
    let threshold = edge_threshold(sigma_hat, params.alpha, k, img.side())?;
    let field = GradientField::compute(img, k)?;
    let w = img.width();
    let delta = par::map_indices(w * img.height(), |i| {
        delta_statistic(&field, Pixel::new(i / w, i % w))
    });
    let flags = delta.iter().map(|&d| d > threshold).collect();
    Ok(EdgeMap {
        width: w,
        height: img.height(),
        flags,
        delta,
        threshold,
        sigma_hat,
    })
}
