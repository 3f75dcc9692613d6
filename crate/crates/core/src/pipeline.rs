//! The integrated denoiser.
//!
//! Edges are detected once on the noisy image. Each pixel within `γ` of an
//! edge pixel is then estimated by the clustering smoother; every other pixel
//! gets a local polynomial fit over its edge-free ellipse. All per-pixel work
//! reads only the original noisy intensities, so the output does not depend on
//! evaluation order.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::cluster::{ClusterParams, ClusterSmoother};
use crate::edges::{detect_edges, estimate_sigma, EdgeDetectParams, EdgeMap};
use crate::kernel::{local_poly_fit, EquivalentKernel, KernelSpec};
use crate::neighborhood::{
    build_ellipse, build_index, direction, nearest_edge, second_point, AxisConvention,
    EdgeDistanceIndex, Ellipse,
};
use crate::{par, Error, ImageGrid, Pixel, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Mode {
    /// Clustering near edges, elliptical kernel regression elsewhere.
    #[default]
    Integrated,
    /// Clustering smoother at every pixel.
    ClusterOnly,
    /// Kernel regression over a circle of radius `max_axis` at every pixel.
    KernelOnly,
    /// Plain 3x3 mean.
    Box3,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Integrated,
        Mode::ClusterOnly,
        Mode::KernelOnly,
        Mode::Box3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Integrated => "integrated",
            Mode::ClusterOnly => "cluster-only",
            Mode::KernelOnly => "kernel-only",
            Mode::Box3 => "box3",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseParams {
    pub edge: EdgeDetectParams,
    /// Dispatch distance to the nearest edge pixel, and the clearance kept
    /// between each ellipse and the edge pixels.
    pub gamma: f64,
    /// Cap on the ellipse semi-axes, pixels.
    pub max_axis: f64,
    pub kernel: KernelSpec,
    /// Clustering settings; `sigma_hat` is replaced by the detector's estimate.
    pub cluster: ClusterParams,
    pub mode: Mode,
    pub axes: AxisConvention,
}

/// Defaults for an image whose larger side is `n` pixels: images below
/// 100x100 use `max_axis = 6`, `γ = 3`, larger ones `max_axis = 10`, `γ = 5`.
/// The clustering radius follows `γ`.
pub fn default_params(n: usize) -> DenoiseParams {
    let (max_axis, gamma) = if n < 100 { (6.0, 3.0) } else { (10.0, 5.0) };
    DenoiseParams {
        edge: EdgeDetectParams::default(),
        gamma,
        max_axis,
        kernel: KernelSpec::default(),
        cluster: ClusterParams {
            h_n: gamma,
            ..ClusterParams::default()
        },
        mode: Mode::Integrated,
        axes: AxisConvention::Semi,
    }
}

impl DenoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.max_axis > 0.0 && self.max_axis.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma ({}) and max axis ({}) must be positive",
                self.gamma, self.max_axis
            )));
        }
        if self.gamma >= self.max_axis {
            return Err(Error::InvalidParameter(format!(
                "gamma ({}) must be below the max axis ({})",
                self.gamma, self.max_axis
            )));
        }
        if self.kernel.order > 2 {
            return Err(Error::InvalidParameter(format!(
                "kernel order {} > 2",
                self.kernel.order
            )));
        }
        self.cluster.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Kernel,
    Cluster,
    Box,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Kernel => "kernel",
            Branch::Cluster => "cluster",
            Branch::Box => "box",
        }
    }
}

/// How one pixel was estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelTrace {
    pub branch: Branch,
    /// Distance to the nearest edge pixel.
    pub d1: Option<f64>,
    /// Distance to the second edge pixel found in the strip; only searched
    /// when it can shorten an axis.
    pub d2: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub effective_order: Option<u8>,
}

impl PixelTrace {
    fn cluster(d1: Option<f64>) -> Self {
        PixelTrace {
            branch: Branch::Cluster,
            d1,
            d2: None,
            a: None,
            b: None,
            effective_order: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    pub image: ImageGrid,
    /// Present for the integrated mode.
    pub edges: Option<EdgeMap>,
    /// Row-major, one entry per pixel.
    pub trace: Vec<PixelTrace>,
}

pub fn denoise(img: &ImageGrid, params: &DenoiseParams) -> Result<ImageGrid> {
    Ok(denoise_traced(img, params)?.image)
}

pub fn denoise_traced(img: &ImageGrid, params: &DenoiseParams) -> Result<DenoiseOutput> {
    params.validate()?;
    let w = img.width();
    let len = w * img.height();
    let pixel = |i: usize| Pixel::new(i / w, i % w);
    let (edges, results) = match params.mode {
        Mode::Integrated => {
            let edges = detect_edges(img, &params.edge)?;
            let index = build_index(&edges);
            let smoother = ClusterSmoother::new(ClusterParams {
                sigma_hat: edges.sigma_hat,
                ..params.cluster
            })?;
            let kernels = Kernels::new(params)?;
            let results = par::map_indices(len, |i| {
                integrated_pixel(img, pixel(i), params, &kernels, &index, &smoother)
            });
            (Some(edges), results)
        }
        Mode::ClusterOnly => {
            let sigma_hat = params
                .edge
                .sigma_override
                .unwrap_or_else(|| estimate_sigma(img));
            let smoother = ClusterSmoother::new(ClusterParams {
                sigma_hat,
                ..params.cluster
            })?;
            let results = par::map_indices(len, |i| {
                Ok((smoother.smooth(img, pixel(i)), PixelTrace::cluster(None)))
            });
            (None, results)
        }
        Mode::KernelOnly => {
            let kernels = Kernels::new(params)?;
            (
                None,
                par::map_indices(len, |i| circle_fit(img, pixel(i), &kernels)),
            )
        }
        Mode::Box3 => (None, par::map_indices(len, |i| Ok(box3(img, pixel(i))))),
    };
    let (data, trace): (Vec<f64>, Vec<PixelTrace>) = results
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(DenoiseOutput {
        image: ImageGrid::new(w, img.height(), data)?,
        edges,
        trace,
    })
}

/// Fit settings plus a precomputed intercept filter for the full circle,
/// which most pixels away from edges and borders use.
struct Kernels {
    spec: KernelSpec,
    circle: Ellipse,
    interior: EquivalentKernel,
    /// Kernels for border pixels, one slot per clip window, built on demand.
    border: Vec<OnceLock<Option<EquivalentKernel>>>,
}

impl Kernels {
    fn new(params: &DenoiseParams) -> Result<Self> {
        let circle = Ellipse::circle([0.0, 0.0], params.max_axis);
        let interior = EquivalentKernel::new(&circle, params.kernel)?;
        let side = interior.reach() + 1;
        Ok(Kernels {
            spec: params.kernel,
            circle,
            interior,
            border: (0..side.pow(4)).map(|_| OnceLock::new()).collect(),
        })
    }

    fn fit(&self, img: &ImageGrid, ellipse: &Ellipse) -> Result<(f64, u8)> {
        let [row, col] = ellipse.center;
        if ellipse.a == self.circle.a && ellipse.b == self.circle.b {
            let (row, col) = (row as usize, col as usize);
            let reach = self.interior.reach();
            let window = self.interior.window_at(img, row, col);
            let kernel = if window == [reach; 4] {
                Some(&self.interior)
            } else {
                let slot = window.iter().fold(0, |acc, &w| acc * (reach + 1) + w);
                self.border[slot]
                    .get_or_init(|| EquivalentKernel::clipped(&self.circle, self.spec, window).ok())
                    .as_ref()
            };
            if let Some(k) = kernel {
                if let Some(v) = k.apply(img, row, col) {
                    return Ok((v, k.effective_order()));
                }
            }
        }
        let fit = local_poly_fit(img, ellipse, self.spec)?;
        Ok((fit.theta0, fit.effective_order))
    }
}

fn integrated_pixel(
    img: &ImageGrid,
    p: Pixel,
    params: &DenoiseParams,
    kernels: &Kernels,
    index: &EdgeDistanceIndex,
    smoother: &ClusterSmoother,
) -> Result<(f64, PixelTrace)> {
    let Some((p1, d1)) = nearest_edge(index, p) else {
        return circle_fit(img, p, kernels);
    };
    if d1 <= params.gamma {
        return Ok((smoother.smooth(img, p), PixelTrace::cluster(Some(d1))));
    }
    // d2 >= d1, so once d1 clears the cap both axes are capped and the
    // second edge pixel cannot shape the ellipse
    let d2 = if d1 - params.gamma >= params.max_axis {
        None
    } else {
        second_point(index, p, p1, params.max_axis, params.gamma).map(|(_, d)| d)
    };
    let ellipse = build_ellipse(
        p,
        d1,
        d2,
        direction(p, p1),
        params.gamma,
        params.max_axis,
        params.axes,
    )?;
    kernel_fit(img, &ellipse, kernels, Some(d1), d2)
}

fn circle_fit(img: &ImageGrid, p: Pixel, kernels: &Kernels) -> Result<(f64, PixelTrace)> {
    let ellipse = Ellipse::circle([p.row as f64, p.col as f64], kernels.circle.a);
    kernel_fit(img, &ellipse, kernels, None, None)
}

fn kernel_fit(
    img: &ImageGrid,
    ellipse: &Ellipse,
    kernels: &Kernels,
    d1: Option<f64>,
    d2: Option<f64>,
) -> Result<(f64, PixelTrace)> {
    let (value, order) = kernels.fit(img, ellipse)?;
    Ok((
        value,
        PixelTrace {
            branch: Branch::Kernel,
            d1,
            d2,
            a: Some(ellipse.a),
            b: Some(ellipse.b),
            effective_order: Some(order),
        },
    ))
}

fn box3(img: &ImageGrid, p: Pixel) -> (f64, PixelTrace) {
    let mut sum = 0.0;
    let mut count = 0.0;
    for dr in -1..=1 {
        for dc in -1..=1 {
            let (r, c) = (p.row as isize + dr, p.col as isize + dc);
            if img.contains(r, c) {
                sum += img.get(r as usize, c as usize);
                count += 1.0;
            }
        }
    }
    let trace = PixelTrace {
        branch: Branch::Box,
        d1: None,
        d2: None,
        a: None,
        b: None,
        effective_order: None,
    };
    (sum / count, trace)
}

/// Per-pixel trace as CSV: `row,col,branch,d1,d2,a,b,effective_order`,
/// empty fields where a value does not apply.
pub fn trace_csv(width: usize, trace: &[PixelTrace]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut out = String::from("row,col,branch,d1,d2,a,b,effective_order\n");
    for (i, t) in trace.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            i / width,
            i % width,
            t.branch.name(),
            opt(t.d1),
            opt(t.d2),
            opt(t.a),
            opt(t.b),
            t.effective_order.map(|o| o.to_string()).unwrap_or_default()
        ));
    }
    out
}
