//! Points, balls, metrics and the catalogue of computable self-maps.

pub(crate) mod sampler;
pub(crate) mod system;

pub use sampler::{sample_ball, SeededSampler};
pub use system::{apply_iter, enclose_image, MapKind, System, GOLDEN_ROTATION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used by every containment comparison unless a caller overrides it.
pub const DEFAULT_SLACK: f64 = 1e-12;

/// Ambient space a point lives in. Fixes both the domain check and the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceTag {
    /// `R/Z` represented by `[0, 1)`, metric `min(|a-b|, 1-|a-b|)`.
    Circle,
    /// `[0, 1]` with the absolute-value metric.
    Interval,
    /// Truncated `l2(H)`: `M` blocks of `d` scalars, tail treated as zero.
    ShiftTruncation,
}

impl SpaceTag {
    pub fn metric_name(self) -> &'static str {
        match self {
            SpaceTag::Circle => "circle",
            SpaceTag::Interval => "euclidean",
            SpaceTag::ShiftTruncation => "l2-truncated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub space: SpaceTag,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(space: SpaceTag, coords: Vec<f64>) -> Self {
        Point { space, coords }
    }

    pub fn circle(x: f64) -> Self {
        Point::new(SpaceTag::Circle, vec![x])
    }

    pub fn interval(x: f64) -> Self {
        Point::new(SpaceTag::Interval, vec![x])
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    /// Distance in the metric of this point's space. Panics on a space or
    /// dimension mismatch, which is always a programming error here.
    pub fn distance(&self, other: &Point) -> f64 {
        assert_eq!(self.space, other.space, "points from different spaces");
        assert_eq!(self.coords.len(), other.coords.len(), "dimension mismatch");
        coord_distance(self.space, &self.coords, &other.coords)
    }
}

/// Metric on raw coordinate slices.
pub fn coord_distance(space: SpaceTag, a: &[f64], b: &[f64]) -> f64 {
    match space {
        SpaceTag::Circle => a
            .iter()
            .zip(b)
            .map(|(x, y)| circle_distance(*x, *y))
            .fold(0.0, f64::max),
        SpaceTag::Interval | SpaceTag::ShiftTruncation => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Reduces a real number to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Open ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        if center.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ball center has non-finite coordinates"));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.center.distance(p) < self.radius
    }

    /// `self.radius - (d(centers) + inner.radius)`. Non-negative (up to slack)
    /// exactly when the triangle inequality places `inner` inside `self`.
    pub fn containment_margin(&self, inner: &Ball) -> f64 {
        self.radius - (self.center.distance(&inner.center) + inner.radius)
    }

    pub fn contains_ball(&self, inner: &Ball, slack: f64) -> bool {
        self.containment_margin(inner) >= -slack
    }
}
