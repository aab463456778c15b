//! File formats: CSV for point patterns, curves, envelopes and density
//! maps; JSON (serde) for structured reports. Field layouts are
//! documented in `docs/schemas.md`; every writer here has a matching
//! parser so outputs round-trip losslessly.

use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, Window};
use crate::gof::Envelope;
use crate::stats::{CurveKind, DensityMap, SummaryCurve};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Write `id,x,y` rows plus a window header comment.
pub fn write_pattern_csv(pattern: &PointPattern, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let w = pattern.window();
    writeln!(f, "# window {} {} {} {}", w.x_min, w.x_max, w.y_min, w.y_max)?;
    writeln!(f, "id,x,y")?;
    for (i, p) in pattern.points().iter().enumerate() {
        writeln!(f, "{},{},{}", i, p.x, p.y)?;
    }
    Ok(())
}

/// Parse a pattern written by [`write_pattern_csv`]. Without the window
/// comment the bounding box of the points is used.
pub fn read_pattern_csv(path: &Path) -> Result<PointPattern> {
    let text = std::fs::read_to_string(path)?;
    let mut window: Option<Window> = None;
    let mut points = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# window") {
            let vals: Vec<f64> = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad_line(path, lineno)))
                .collect::<std::result::Result<_, _>>()?;
            if vals.len() != 4 {
                return Err(bad_line(path, lineno));
            }
            window = Some(Window::new(vals[0], vals[1], vals[2], vals[3])?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true; // id,x,y header row
            continue;
        }
        let mut parts = line.split(',');
        let _id = parts.next().ok_or_else(|| bad_line(path, lineno))?;
        let x: f64 = parse_field(parts.next(), path, lineno)?;
        let y: f64 = parse_field(parts.next(), path, lineno)?;
        points.push(Point::new(x, y)?);
    }
    let window = match window {
        Some(w) => w,
        None => bounding_window(&points)?,
    };
    PointPattern::new(points, window)
}

fn parse_field(field: Option<&str>, path: &Path, lineno: usize) -> Result<f64> {
    field
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| bad_line(path, lineno))
}

fn bad_line(path: &Path, lineno: usize) -> Error {
    Error::data(format!(
        "{}: malformed row at line {}",
        path.display(),
        lineno + 1
    ))
}

/// Smallest window containing all points.
pub fn bounding_window(points: &[Point]) -> Result<Window> {
    if points.is_empty() {
        return Err(Error::data("cannot bound an empty point set"));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x_min = x_min.min(p.x);
        x_max = x_max.max(p.x);
        y_min = y_min.min(p.y);
        y_max = y_max.max(p.y);
    }
    Window::new(x_min, x_max, y_min, y_max)
}

/// Write a `grid,value` CSV; missing values become empty cells.
pub fn write_curve_csv(curve: &SummaryCurve, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "grid,value")?;
    for (g, v) in curve.grid.iter().zip(&curve.values) {
        match v {
            Some(v) => writeln!(f, "{g},{v}")?,
            None => writeln!(f, "{g},")?,
        }
    }
    Ok(())
}

/// Parse a curve written by [`write_curve_csv`].
pub fn read_curve_csv(path: &Path, kind: CurveKind) -> Result<SummaryCurve> {
    let text = std::fs::read_to_string(path)?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        grid.push(parse_field(parts.next(), path, lineno)?);
        let v = parts.next().unwrap_or("").trim();
        values.push(if v.is_empty() {
            None
        } else {
            Some(v.parse().map_err(|_| bad_line(path, lineno))?)
        });
    }
    SummaryCurve::new(kind, grid, values)
}

/// Write a `grid,lower,upper,observed` CSV; the observed column is empty
/// when no observed curve is supplied.
pub fn write_envelope_csv(
    envelope: &Envelope,
    observed: Option<&SummaryCurve>,
    path: &Path,
) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "grid,lower,upper,observed")?;
    for (k, g) in envelope.grid.iter().enumerate() {
        let obs = observed
            .and_then(|c| c.values.get(k).copied().flatten())
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(f, "{g},{},{},{obs}", envelope.lower[k], envelope.upper[k])?;
    }
    Ok(())
}

/// Write `x,y,value` rows for every density cell center.
pub fn write_density_csv(map: &DensityMap, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "x,y,value")?;
    let w = &map.window;
    let dx = w.width() / map.nx as f64;
    let dy = w.height() / map.ny as f64;
    for iy in 0..map.ny {
        for ix in 0..map.nx {
            let cx = w.x_min + (ix as f64 + 0.5) * dx;
            let cy = w.y_min + (iy as f64 + 0.5) * dy;
            writeln!(f, "{cx},{cy},{}", map.values[iy * map.nx + ix])?;
        }
    }
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
