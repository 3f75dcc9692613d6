//! Local clustering smoother for pixels near edges.
//!
//! The disk around a pixel is split in two by the intensity threshold that
//! maximizes the between/within variance ratio `T`. The estimate is a
//! patch-similarity weighted mean over the cluster holding the pixel itself,
//! so intensities from across an edge never enter the average.

use crate::{Error, ImageGrid, Pixel, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    /// Radius of the clustering disk, pixels.
    pub h_n: f64,
    /// Similarity patches are `(2r+1)²` squares.
    pub patch_radius: usize,
    /// Bandwidth multiplier of the similarity weights.
    pub bn: f64,
    /// Noise level scaling the similarity weights; 0 makes every weight 1.
    pub sigma_hat: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            h_n: 3.0,
            patch_radius: 1,
            bn: 1.0,
            sigma_hat: 0.0,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_n >= 1.0 && self.h_n.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "h_n {} must be >= 1",
                self.h_n
            )));
        }
        if self.patch_radius == 0 {
            return Err(Error::InvalidParameter("patch radius must be >= 1".into()));
        }
        if !(self.bn > 0.0 && self.bn.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "B_n {} must be > 0",
                self.bn
            )));
        }
        if !(self.sigma_hat >= 0.0 && self.sigma_hat.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma {} must be >= 0",
                self.sigma_hat
            )));
        }
        Ok(())
    }
}

/// Two-group split of a set of intensities at threshold `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSplit {
    pub s: f64,
    /// Indices of values `<= s`.
    pub members_low: Vec<usize>,
    /// Indices of values `> s`; empty for a degenerate split.
    pub members_high: Vec<usize>,
    pub mean_low: f64,
    /// Equals `mean_low` when the split is degenerate.
    pub mean_high: f64,
    /// Variance ratio at `s`; `+∞` for a perfect split, 0 when degenerate.
    pub t_value: f64,
}

impl ClusterSplit {
    pub fn is_degenerate(&self) -> bool {
        self.members_high.is_empty()
    }
}

/// Between-group over within-group variability of `values` split at `s`.
pub fn variance_ratio(values: &[f64], s: f64) -> Result<f64> {
    let (low, high): (Vec<f64>, Vec<f64>) = values.iter().partition(|&&z| z <= s);
    if low.is_empty() || high.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64], m: f64| v.iter().map(|z| (z - m) * (z - m)).sum::<f64>();
    let (m, m1, m2) = (mean(values), mean(&low), mean(&high));
    let between = low.len() as f64 * (m1 - m).powi(2) + high.len() as f64 * (m2 - m).powi(2);
    let within = ss(&low, m1) + ss(&high, m2);
    Ok(if within == 0.0 {
        f64::INFINITY
    } else {
        between / within
    })
}

#[derive(Clone, Copy)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    const EMPTY: Moments = Moments {
        count: 0.0,
        mean: 0.0,
        m2: 0.0,
    };

    fn push(self, z: f64) -> Moments {
        let count = self.count + 1.0;
        let delta = z - self.mean;
        let mean = self.mean + delta / count;
        Moments {
            count,
            mean,
            m2: self.m2 + delta * (z - mean),
        }
    }
}

/// Best threshold over sorted values: `(s, T)`, or `None` when all are equal.
///
/// `T` is constant between consecutive distinct values, so midpoints of
/// those gaps are the only candidates. Ties go to the smaller threshold.
fn best_split_sorted(sorted: &[f64]) -> Option<(f64, f64)> {
    let m = sorted.len();
    if m < 2 || sorted[0] == sorted[m - 1] {
        return None;
    }
    let mut suffix = vec![Moments::EMPTY; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1].push(sorted[i]);
    }
    let grand = suffix[0].mean;
    let mut left = Moments::EMPTY;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..m - 1 {
        left = left.push(sorted[i]);
        let (lo, hi) = (sorted[i], sorted[i + 1]);
        if lo == hi {
            continue;
        }
        let right = suffix[i + 1];
        let within = left.m2 + right.m2;
        let between =
            left.count * (left.mean - grand).powi(2) + right.count * (right.mean - grand).powi(2);
        let t = if within == 0.0 {
            f64::INFINITY
        } else {
            between / within
        };
        if best.is_none_or(|(_, bt)| t > bt) {
            let mid = 0.5 * (lo + hi);
            let s = if mid < hi { mid } else { lo };
            best = Some((s, t));
        }
    }
    best
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Threshold `S₀` maximizing [`variance_ratio`], with the resulting clusters.
pub fn optimal_threshold(values: &[f64]) -> Result<ClusterSplit> {
    if values.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mean_of = |idx: &[usize]| idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64;
    let Some((s, t_value)) = best_split_sorted(&sorted_copy(values)) else {
        let members_low: Vec<usize> = (0..values.len()).collect();
        let mean = mean_of(&members_low);
        return Ok(ClusterSplit {
            s: values[0],
            members_low,
            members_high: Vec::new(),
            mean_low: mean,
            mean_high: mean,
            t_value: 0.0,
        });
    };
    let (members_low, members_high): (Vec<usize>, Vec<usize>) =
        (0..values.len()).partition(|&i| values[i] <= s);
    Ok(ClusterSplit {
        s,
        mean_low: mean_of(&members_low),
        mean_high: mean_of(&members_high),
        members_low,
        members_high,
        t_value,
    })
}

/// Similarity weight `exp(−‖Õ(q) − Õ(p)‖² / (2σ̂²·|Õ|·Bₙ))` between the patches
/// around `q` and `p`. Patches are clipped to the image and compared over the
/// offsets valid for both; `|Õ|` counts those offsets.
pub fn patch_weight(img: &ImageGrid, q: Pixel, p: Pixel, params: &ClusterParams) -> f64 {
    if params.sigma_hat <= 0.0 || q == p {
        return 1.0;
    }
    let r = params.patch_radius as isize;
    let mut dist2 = 0.0;
    let mut count = 0usize;
    for dr in -r..=r {
        for dc in -r..=r {
            let (qr, qc) = (q.row as isize + dr, q.col as isize + dc);
            let (pr, pc) = (p.row as isize + dr, p.col as isize + dc);
            if img.contains(qr, qc) && img.contains(pr, pc) {
                let d = img.get(qr as usize, qc as usize) - img.get(pr as usize, pc as usize);
                dist2 += d * d;
                count += 1;
            }
        }
    }
    let sigma2 = params.sigma_hat * params.sigma_hat;
    (-dist2 / (2.0 * sigma2 * count as f64 * params.bn)).exp()
}

/// Precomputed disk offsets for repeated per-pixel smoothing.
#[derive(Debug, Clone)]
pub struct ClusterSmoother {
    params: ClusterParams,
    disk: Vec<(isize, isize)>,
}

impl ClusterSmoother {
    pub fn new(params: ClusterParams) -> Result<Self> {
        params.validate()?;
        let reach = params.h_n.floor() as isize;
        let r2 = params.h_n * params.h_n;
        let disk = (-reach..=reach)
            .flat_map(|dr| (-reach..=reach).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| ((dr * dr + dc * dc) as f64) <= r2)
            .collect();
        Ok(ClusterSmoother { params, disk })
    }

    pub fn params(&self) -> &ClusterParams {
        &self.params
    }

    /// Pixels of the clustering disk around `p`, clipped to the image.
    pub fn neighborhood(&self, img: &ImageGrid, p: Pixel) -> Vec<Pixel> {
        self.disk
            .iter()
            .map(|&(dr, dc)| (p.row as isize + dr, p.col as isize + dc))
            .filter(|&(r, c)| img.contains(r, c))
            .map(|(r, c)| Pixel::new(r as usize, c as usize))
            .collect()
    }

    pub fn smooth(&self, img: &ImageGrid, p: Pixel) -> f64 {
        let hood = self.neighborhood(img, p);
        let values: Vec<f64> = hood.iter().map(|&q| img.at(q)).collect();
        // degenerate split: the whole disk is one cluster
        let home = best_split_sorted(&sorted_copy(&values)).map(|(s, _)| (s, img.at(p) <= s));
        let mut num = 0.0;
        let mut den = 0.0;
        for (&q, &z) in hood.iter().zip(&values) {
            if home.is_none_or(|(s, low)| (z <= s) == low) {
                let w = patch_weight(img, q, p, &self.params);
                num += w * z;
                den += w;
            }
        }
        num / den
    }
}

/// Clustering estimate at `p`: patch-weighted mean over the cluster of the
/// disk of radius `h_n` that contains `p`.
pub fn cluster_smooth_pixel(img: &ImageGrid, p: Pixel, params: &ClusterParams) -> Result<f64> {
    Ok(ClusterSmoother::new(*params)?.smooth(img, p))
}
