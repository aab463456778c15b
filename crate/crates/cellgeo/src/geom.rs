//! Planar geometry: points, rectangular observation windows, and point
//! patterns. All types are immutable after construction and safe to share
//! across threads; the operations here are pure functions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A location in the plane, in window units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Point> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::data(format!("non-finite coordinates ({x}, {y})")));
        }
        Ok(Point { x, y })
    }

    /// Euclidean distance to `other`.
    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// An axis-aligned rectangular observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Window> {
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::data("non-finite window bounds"));
        }
        if x_max <= x_min || y_max <= y_min {
            return Err(Error::data(format!(
                "degenerate window [{x_min}, {x_max}] x [{y_min}, {y_max}]: both sides must have positive length"
            )));
        }
        Ok(Window {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// The unit square [0,1] x [0,1].
    pub fn unit() -> Window {
        Window {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn shorter_side(&self) -> f64 {
        self.width().min(self.height())
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Distance from `p` to the nearest window edge (0 on the boundary).
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        (p.x - self.x_min)
            .min(self.x_max - p.x)
            .min(p.y - self.y_min)
            .min(self.y_max - p.y)
    }

    /// Window grown by `margin` on every side.
    pub fn dilate(&self, margin: f64) -> Window {
        Window {
            x_min: self.x_min - margin,
            x_max: self.x_max + margin,
            y_min: self.y_min - margin,
            y_max: self.y_max + margin,
        }
    }
}

/// A finite planar point pattern together with its observation window.
///
/// Every point lies inside the window, boundary inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    points: Vec<Point>,
    window: Window,
}

impl PointPattern {
    pub fn new(points: Vec<Point>, window: Window) -> Result<PointPattern> {
        for (i, p) in points.iter().enumerate() {
            if !window.contains(p) {
                return Err(Error::data(format!(
                    "point {i} at ({}, {}) lies outside the window",
                    p.x, p.y
                )));
            }
        }
        Ok(PointPattern { points, window })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Empirical intensity N / |W|.
    pub fn intensity(&self) -> f64 {
        self.points.len() as f64 / self.window.area()
    }

    /// Minimum pairwise distance, or `None` for patterns with fewer than
    /// two points.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let mut min = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                min = min.min(self.points[i].dist(&self.points[j]));
            }
        }
        Some(min)
    }
}

/// Map a pattern onto the unit square by the affine map that sends its
/// window to [0,1]^2. Each axis is scaled independently, so patterns on
/// non-square windows are stretched; statistics on the result are read in
/// normalized units.
pub fn rescale_to_unit(pattern: &PointPattern) -> Result<PointPattern> {
    let w = pattern.window();
    let (sx, sy) = (w.width(), w.height());
    if sx <= 0.0 || sy <= 0.0 {
        return Err(Error::data("cannot rescale a degenerate window"));
    }
    let points = pattern
        .points()
        .iter()
        .map(|p| Point {
            // clamp guards against round-off pushing boundary points outside
            x: ((p.x - w.x_min) / sx).clamp(0.0, 1.0),
            y: ((p.y - w.y_min) / sy).clamp(0.0, 1.0),
        })
        .collect();
    PointPattern::new(points, Window::unit())
}

/// Count unordered point pairs at distance <= `r`: the interaction
/// statistic s(x) of the Strauss density.
pub fn close_pair_count(pattern: &PointPattern, r: f64) -> Result<usize> {
    if r < 0.0 {
        return Err(Error::config("pair radius must be nonnegative"));
    }
    let pts = pattern.points();
    let mut count = 0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if pts[i].dist(&pts[j]) <= r {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Nearest-neighbor distance for every point, in point order.
pub fn nn_distances(pattern: &PointPattern) -> Result<Vec<f64>> {
    let pts = pattern.points();
    if pts.len() < 2 {
        return Err(Error::data(
            "nearest-neighbor distances require at least 2 points",
        ));
    }
    let mut out = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, q) in pts.iter().enumerate() {
            if i != j {
                best = best.min(p.dist(q));
            }
        }
        out.push(best);
    }
    Ok(out)
}
