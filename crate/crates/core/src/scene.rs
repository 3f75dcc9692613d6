use std::fmt;
use std::str::FromStr;

use crate::{Error, ImageGrid, Result};

const BACKGROUND: f64 = 100.0;
const SQUARE: f64 = 180.0;
const DISK: f64 = 60.0;
const SQUARE_LO: f64 = 0.15;
const SQUARE_HI: f64 = 0.55;
const DISK_CENTER: (f64, f64) = (0.7, 0.7);
const DISK_RADIUS: f64 = 0.35;

/// Smallest side accepted for synthetic scenes.
pub const MIN_SCENE_SIDE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneKind {
    /// Background 100, square of 180 over `[0.15, 0.55]²` and a disk of 60
    /// centered at `(0.7, 0.7)` with radius 0.35 drawn on top. The disk
    /// overlaps the square's corner and leaves the frame, so the scene holds
    /// straight edges, corners and line/curve intersections.
    SquareCircle,
    Constant(f64),
    /// Columns left of `column` take `low`, the rest `high`.
    Step {
        column: usize,
        low: f64,
        high: f64,
    },
}

impl SceneKind {
    /// Intensity at a point of the unit square, `x` along columns, `y` along rows.
    pub fn intensity(&self, x: f64, y: f64, n: usize) -> f64 {
        match *self {
            SceneKind::Constant(level) => level,
            SceneKind::Step { column, low, high } => {
                if x * (n as f64) < column as f64 {
                    low
                } else {
                    high
                }
            }
            SceneKind::SquareCircle => {
                let (cx, cy) = DISK_CENTER;
                let in_disk = (x - cx).powi(2) + (y - cy).powi(2) <= DISK_RADIUS * DISK_RADIUS;
                let in_square =
                    (SQUARE_LO..=SQUARE_HI).contains(&x) && (SQUARE_LO..=SQUARE_HI).contains(&y);
                if in_disk {
                    DISK
                } else if in_square {
                    SQUARE
                } else {
                    BACKGROUND
                }
            }
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneKind::SquareCircle => f.write_str("square-circle"),
            SceneKind::Constant(level) => write!(f, "constant:{level}"),
            SceneKind::Step { column, low, high } => write!(f, "step:{column}:{low}:{high}"),
        }
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    /// Parses `square-circle`, `constant:<level>` or `step:<column>:<low>:<high>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidScene(format!("unrecognized scene {s:?}"));
        let mut parts = s.split(':');
        let kind = match parts.next().ok_or_else(bad)? {
            "square-circle" => SceneKind::SquareCircle,
            "constant" => {
                let level = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                SceneKind::Constant(level)
            }
            "step" => {
                let column = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let low = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let high = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                SceneKind::Step { column, low, high }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub n: usize,
}

impl SceneSpec {
    pub fn square_circle(n: usize) -> Self {
        SceneSpec {
            kind: SceneKind::SquareCircle,
            n,
        }
    }

    pub fn constant(level: f64, n: usize) -> Self {
        SceneSpec {
            kind: SceneKind::Constant(level),
            n,
        }
    }

    pub fn step(column: usize, low: f64, high: f64, n: usize) -> Self {
        SceneSpec {
            kind: SceneKind::Step { column, low, high },
            n,
        }
    }
}

/// Renders a noiseless `n x n` scene, sampling each region at pixel centers.
pub fn synth(spec: &SceneSpec) -> Result<ImageGrid> {
    let n = spec.n;
    if n < MIN_SCENE_SIDE {
        return Err(Error::InvalidScene(format!(
            "side {n} is below the minimum of {MIN_SCENE_SIDE}"
        )));
    }
    let scale = n as f64;
    ImageGrid::from_fn(n, n, |p| {
        let x = (p.col as f64 + 0.5) / scale;
        let y = (p.row as f64 + 0.5) / scale;
        spec.kind.intensity(x, y, n)
    })
}
