//! Edge-corrected summary statistics (G, K, L), kernel density estimation,
//! and the clustering/repulsion classification survey.
//!
//! Edge corrections: the G-function uses the reduced-sample (border)
//! estimator, the K-function uses the translation correction. Both are
//! exact on rectangular windows.
//!
//! The L-function `L(r) = sqrt(K(r)/pi)` linearizes the Poisson
//! benchmark to the diagonal:
//!
//! ```
//! use cellgeo::geom::Window;
//! use cellgeo::sim::sample_poisson;
//! use cellgeo::stats::l_function;
//! use cellgeo::seed::RngSeed;
//!
//! let p = sample_poisson(300.0, Window::unit(), RngSeed(3))?;
//! let l = l_function(&p, &[0.05, 0.1])?;
//! // Poisson data tracks the diagonal
//! assert!((l.values[1].unwrap() - 0.1).abs() < 0.03);
//! # Ok::<(), cellgeo::error::Error>(())
//! ```

use crate::error::{Error, Result};
use crate::geom::{nn_distances, rescale_to_unit, Point, PointPattern, Window};
use crate::seed::RngSeed;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// What a [`SummaryCurve`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    G,
    K,
    L,
    Coverage,
}

/// A statistic evaluated on an ascending grid of distances (or, for
/// coverage curves, dB thresholds). Grid points where the estimator is
/// undefined carry `None` rather than a fabricated zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCurve {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub values: Vec<Option<f64>>,
    /// Set when the request exceeded an estimator reliability bound.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

impl SummaryCurve {
    pub fn new(kind: CurveKind, grid: Vec<f64>, values: Vec<Option<f64>>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::config("grid and values must have equal length"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("grid must be strictly ascending"));
        }
        Ok(SummaryCurve {
            kind,
            grid,
            values,
            warning: None,
        })
    }
}

/// An evenly spaced grid of `n` values over `(0, max]`.
pub fn even_grid(max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| max * i as f64 / n as f64).collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("empty distance grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("distance grid must be strictly ascending"));
    }
    if grid[0] < 0.0 {
        return Err(Error::config("distances must be nonnegative"));
    }
    Ok(())
}

/// Reduced-sample estimator of the nearest-neighbor distance distribution:
/// at each r, the fraction of points at boundary distance >= r whose
/// nearest neighbor lies within r. Grid points where the border rule
/// excludes every point are reported as missing.
pub fn g_function(pattern: &PointPattern, grid: &[f64]) -> Result<SummaryCurve> {
    check_grid(grid)?;
    if pattern.len() < 2 {
        return Err(Error::data("G-function requires at least 2 points"));
    }
    let nn = nn_distances(pattern)?;
    let border: Vec<f64> = pattern
        .points()
        .iter()
        .map(|p| pattern.window().boundary_distance(p))
        .collect();
    let values = grid
        .iter()
        .map(|&r| {
            let mut retained = 0usize;
            let mut hits = 0usize;
            for (d, b) in nn.iter().zip(&border) {
                if *b >= r {
                    retained += 1;
                    if *d <= r {
                        hits += 1;
                    }
                }
            }
            if retained == 0 {
                None
            } else {
                Some(hits as f64 / retained as f64)
            }
        })
        .collect();
    SummaryCurve::new(CurveKind::G, grid.to_vec(), values)
}

/// Translation-corrected Ripley K estimator on a rectangle:
/// each ordered pair (i, j) with d_ij <= r is weighted by the reciprocal
/// of the translation overlap area (W_x - |dx|)(W_y - |dy|), and the sum
/// is divided by the intensity-square convention N(N-1)/|W|^2.
///
/// Grids reaching past a quarter of the shorter window side are computed
/// anyway but flagged with a warning.
pub fn k_function(pattern: &PointPattern, grid: &[f64]) -> Result<SummaryCurve> {
    check_grid(grid)?;
    if pattern.len() < 2 {
        return Err(Error::data("K-function requires at least 2 points"));
    }
    let w = pattern.window();
    let pts = pattern.points();
    let n = pts.len() as f64;
    let r_max = *grid.last().unwrap();

    // accumulate pair weights into the first grid slot >= d, then prefix-sum
    let mut bins = vec![0.0f64; grid.len()];
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let dx = (pts[i].x - pts[j].x).abs();
            let dy = (pts[i].y - pts[j].y).abs();
            let d = dx.hypot(dy);
            if d > r_max {
                continue;
            }
            let slot = grid.partition_point(|&g| g < d);
            if slot >= grid.len() {
                continue;
            }
            let overlap = (w.width() - dx) * (w.height() - dy);
            // 2x: both ordered pairs carry the same weight
            bins[slot] += 2.0 / overlap;
        }
    }
    let lambda_sq = n * (n - 1.0) / (w.area() * w.area());
    let mut running = 0.0;
    let values = bins
        .iter()
        .map(|&b| {
            running += b;
            Some(running / lambda_sq)
        })
        .collect();
    let mut curve = SummaryCurve::new(CurveKind::K, grid.to_vec(), values)?;
    let bound = w.shorter_side() / 4.0;
    if r_max > bound {
        curve.warning = Some(format!(
            "grid max {r_max} exceeds the reliability bound {bound} (quarter of the shorter window side)"
        ));
    }
    Ok(curve)
}

/// Besag's L-function `L(r) = sqrt(K(r) / pi)`; the Poisson benchmark is
/// the diagonal L(r) = r.
pub fn l_function(pattern: &PointPattern, grid: &[f64]) -> Result<SummaryCurve> {
    let k = k_function(pattern, grid)?;
    Ok(l_from_k(&k))
}

/// Elementwise transform of a K curve into an L curve.
pub fn l_from_k(k: &SummaryCurve) -> SummaryCurve {
    SummaryCurve {
        kind: CurveKind::L,
        grid: k.grid.clone(),
        values: k
            .values
            .iter()
            .map(|v| v.map(|k| (k / std::f64::consts::PI).sqrt()))
            .collect(),
        warning: k.warning.clone(),
    }
}

/// A gridded intensity estimate over the window (points per unit area at
/// each of nx x ny cell centers, row-major with x varying fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMap {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DensityMap {
    pub fn cell_area(&self) -> f64 {
        self.window.area() / (self.nx * self.ny) as f64
    }

    /// Total estimated point mass: sum of cell intensities times cell
    /// area. Approximately N for a mass-preserving estimate.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }
}

/// Scott-style bandwidth rule: geometric-mean axis spread times
/// n^(-1/6), in window units.
pub fn scott_bandwidth(pattern: &PointPattern) -> f64 {
    let n = pattern.len() as f64;
    if n < 2.0 {
        return pattern.window().shorter_side() / 8.0;
    }
    let sd = |get: &dyn Fn(&Point) -> f64| {
        let mean = pattern.points().iter().map(get).sum::<f64>() / n;
        (pattern
            .points()
            .iter()
            .map(|p| (get(p) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    };
    let sx = sd(&|p: &Point| p.x);
    let sy = sd(&|p: &Point| p.y);
    ((sx * sy).sqrt()).max(1e-9) * n.powf(-1.0 / 6.0)
}

/// Isotropic Gaussian kernel intensity estimate with reflection boundary
/// correction: each point is mirrored across the four edges and four
/// corners, which keeps the total mass inside the window equal to the
/// point count for bandwidths small relative to the window.
pub fn kernel_density(
    pattern: &PointPattern,
    bandwidth: f64,
    nx: usize,
    ny: usize,
) -> Result<DensityMap> {
    if !(bandwidth > 0.0) {
        return Err(Error::config("bandwidth must be > 0"));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::config("grid must be at least 2 x 2"));
    }
    let w = *pattern.window();
    let dx = w.width() / nx as f64;
    let dy = w.height() / ny as f64;
    let norm = 1.0 / (std::f64::consts::TAU * bandwidth * bandwidth);
    let inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);

    // reflected copies of a point about the window edges
    let copies = |p: &Point| -> [Point; 9] {
        let xs = [p.x, 2.0 * w.x_min - p.x, 2.0 * w.x_max - p.x];
        let ys = [p.y, 2.0 * w.y_min - p.y, 2.0 * w.y_max - p.y];
        let mut out = [*p; 9];
        let mut k = 0;
        for &x in &xs {
            for &y in &ys {
                out[k] = Point { x, y };
                k += 1;
            }
        }
        out
    };

    let mut values = vec![0.0f64; nx * ny];
    for p in pattern.points() {
        for c in copies(p) {
            for iy in 0..ny {
                let cy = w.y_min + (iy as f64 + 0.5) * dy;
                let dy2 = (cy - c.y) * (cy - c.y);
                for ix in 0..nx {
                    let cx = w.x_min + (ix as f64 + 0.5) * dx;
                    let d2 = (cx - c.x) * (cx - c.x) + dy2;
                    values[iy * nx + ix] += norm * (-d2 * inv2h2).exp();
                }
            }
        }
    }
    Ok(DensityMap {
        window: w,
        nx,
        ny,
        values,
    })
}

/// Interaction label of a pattern over a distance interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionVerdict {
    Clustered,
    Repulsive,
    Neither,
}

/// Number of grid points used by [`classify_pattern`].
pub const CLASSIFY_GRID_SIZE: usize = 64;

/// Default classification interval maximum, in normalized (unit-window)
/// units.
pub const DEFAULT_INTERVAL_MAX: f64 = 0.15;

/// Classify a pattern as clustered, repulsive, or neither: evaluate the
/// L-function on a 64-point grid over `(0, interval_max]` and label
/// Clustered only when `L(r) >= r` everywhere and Repulsive only when
/// `L(r) <= r` everywhere.
pub fn classify_pattern(pattern: &PointPattern, interval_max: f64) -> Result<InteractionVerdict> {
    if pattern.len() < 2 {
        return Err(Error::data("classification requires at least 2 points"));
    }
    if !(interval_max > 0.0) {
        return Err(Error::config("interval_max must be > 0"));
    }
    let grid = even_grid(interval_max, CLASSIFY_GRID_SIZE);
    let l = l_function(pattern, &grid)?;
    let mut all_above = true;
    let mut all_below = true;
    for (r, v) in l.grid.iter().zip(&l.values) {
        let v = v.unwrap_or(0.0);
        if v < *r {
            all_above = false;
        }
        if v > *r {
            all_below = false;
        }
    }
    Ok(if all_above {
        InteractionVerdict::Clustered
    } else if all_below {
        InteractionVerdict::Repulsive
    } else {
        InteractionVerdict::Neither
    })
}

/// Result of a subregion survey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyResult {
    pub requested: usize,
    pub classified: usize,
    pub attempts: u64,
    pub clustered: usize,
    pub repulsive: usize,
    pub neither: usize,
    /// False when the retry budget ran out before `requested` subregions
    /// qualified; fractions then describe the partial sample.
    pub complete: bool,
}

impl SurveyResult {
    pub fn clustered_fraction(&self) -> f64 {
        self.clustered as f64 / self.classified.max(1) as f64
    }

    pub fn repulsive_fraction(&self) -> f64 {
        self.repulsive as f64 / self.classified.max(1) as f64
    }

    pub fn neither_fraction(&self) -> f64 {
        self.neither as f64 / self.classified.max(1) as f64
    }
}

/// Classify random square subregions of a large pattern.
///
/// Squares with side uniform in `side_range` are placed uniformly so they
/// fit inside the window; those whose point count falls in `count_range`
/// are rescaled to the unit square and classified. Stops after
/// `n_subregions` qualifying squares or a retry budget of
/// `100 * n_subregions` placements, whichever comes first.
pub fn survey_subregions(
    pattern: &PointPattern,
    n_subregions: usize,
    count_range: (usize, usize),
    side_range: (f64, f64),
    interval_max: f64,
    seed: RngSeed,
) -> Result<SurveyResult> {
    if pattern.is_empty() {
        return Err(Error::data("survey requires a nonempty pattern"));
    }
    if n_subregions == 0 {
        return Err(Error::config("n_subregions must be >= 1"));
    }
    if count_range.0 > count_range.1 || count_range.0 < 2 {
        return Err(Error::config("invalid count range (minimum must be >= 2)"));
    }
    let w = pattern.window();
    if !(side_range.0 > 0.0)
        || side_range.0 > side_range.1
        || side_range.1 > w.shorter_side()
    {
        return Err(Error::config(
            "side range must be positive, ordered, and fit inside the window",
        ));
    }

    let mut rng = seed.rng();
    let budget = 100u64 * n_subregions as u64;
    let mut result = SurveyResult {
        requested: n_subregions,
        classified: 0,
        attempts: 0,
        clustered: 0,
        repulsive: 0,
        neither: 0,
        complete: false,
    };

    while result.classified < n_subregions && result.attempts < budget {
        result.attempts += 1;
        let side = rng.gen_range(side_range.0..=side_range.1);
        let x0 = rng.gen_range(w.x_min..=(w.x_max - side));
        let y0 = rng.gen_range(w.y_min..=(w.y_max - side));
        let sub = Window::new(x0, x0 + side, y0, y0 + side)?;
        let inside: Vec<Point> = pattern
            .points()
            .iter()
            .filter(|p| sub.contains(p))
            .copied()
            .collect();
        if inside.len() < count_range.0 || inside.len() > count_range.1 {
            continue;
        }
        let sub_pattern = PointPattern::new(inside, sub)?;
        let unit = rescale_to_unit(&sub_pattern)?;
        match classify_pattern(&unit, interval_max)? {
            InteractionVerdict::Clustered => result.clustered += 1,
            InteractionVerdict::Repulsive => result.repulsive += 1,
            InteractionVerdict::Neither => result.neither += 1,
        }
        result.classified += 1;
    }
    result.complete = result.classified == n_subregions;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{sample_matern_cluster, sample_poisson};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pat(pts: &[(f64, f64)]) -> PointPattern {
        let points = pts.iter().map(|&(x, y)| Point { x, y }).collect();
        PointPattern::new(points, Window::unit()).unwrap()
    }

    #[test]
    fn g_function_hand_example() {
        // all three points at boundary distance >= 0.1; two have a
        // nearest neighbor within 0.1
        let p = pat(&[(0.2, 0.5), (0.3, 0.5), (0.6, 0.5)]);
        let g = g_function(&p, &[0.1]).unwrap();
        assert_relative_eq!(g.values[0].unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn g_function_zero_at_origin() {
        let p = pat(&[(0.2, 0.5), (0.3, 0.5), (0.6, 0.5)]);
        let g = g_function(&p, &[1e-12]).unwrap();
        assert_eq!(g.values[0].unwrap(), 0.0);
    }

    #[test]
    fn g_function_reports_missing_when_all_excluded() {
        // boundary distances are all < 0.4
        let p = pat(&[(0.2, 0.2), (0.3, 0.2), (0.8, 0.9)]);
        let g = g_function(&p, &[0.1, 0.45]).unwrap();
        assert!(g.values[1].is_none());
    }

    #[test]
    fn g_function_matches_poisson_theory() {
        // mean G(r) over seeds vs 1 - exp(-lambda*pi*r^2)
        let lambda = 300.0;
        let n_rep = 500u64;
        let grid = [0.02, 0.04];
        let mut sums = [0.0f64; 2];
        let mut counts = [0u64; 2];
        for i in 0..n_rep {
            let p = sample_poisson(lambda, Window::unit(), RngSeed(40).child(i)).unwrap();
            let g = g_function(&p, &grid).unwrap();
            for (k, v) in g.values.iter().enumerate() {
                if let Some(v) = v {
                    sums[k] += v;
                    counts[k] += 1;
                }
            }
        }
        for (k, &r) in grid.iter().enumerate() {
            let mean = sums[k] / counts[k] as f64;
            let theory = 1.0 - (-lambda * std::f64::consts::PI * r * r).exp();
            // binomial-style bound on the standard error of the mean
            let se = (theory * (1.0 - theory) / (lambda * n_rep as f64)).sqrt() * 3.0;
            assert!(
                (mean - theory).abs() < 3.0 * se.max(0.002),
                "r={r}: mean {mean} vs theory {theory}"
            );
        }
    }

    #[test]
    fn k_function_two_point_hand_example() {
        // separation 0.125 is exactly representable, so the pair lands
        // exactly on the second grid point
        let p = pat(&[(0.4375, 0.5), (0.5625, 0.5)]);
        let k = k_function(&p, &[0.05, 0.125, 0.2]).unwrap();
        assert_eq!(k.values[0].unwrap(), 0.0);
        // pair weight 1/((1-0.125)(1-0)) per ordered pair, lambda^2 = 2
        assert_relative_eq!(k.values[1].unwrap(), 1.0 / 0.875, epsilon = 1e-12);
        assert_relative_eq!(k.values[2].unwrap(), 1.0 / 0.875, epsilon = 1e-12);
    }

    #[test]
    fn k_function_matches_poisson_theory() {
        let lambda = 300.0;
        let n_rep = 500u64;
        let grid = [0.05, 0.1];
        let mut sums = [0.0f64; 2];
        for i in 0..n_rep {
            let p = sample_poisson(lambda, Window::unit(), RngSeed(41).child(i)).unwrap();
            let k = k_function(&p, &grid).unwrap();
            for (j, v) in k.values.iter().enumerate() {
                sums[j] += v.unwrap();
            }
        }
        for (j, &r) in grid.iter().enumerate() {
            let mean = sums[j] / n_rep as f64;
            let theory = std::f64::consts::PI * r * r;
            assert!(
                (mean - theory).abs() < 0.05 * theory + 0.0005,
                "r={r}: mean {mean} vs pi r^2 = {theory}"
            );
        }
    }

    #[test]
    fn k_function_warns_past_reliability_bound() {
        let p = pat(&[(0.45, 0.5), (0.55, 0.5)]);
        let k = k_function(&p, &[0.3]).unwrap();
        assert!(k.warning.is_some());
        assert!(k.values[0].is_some());
    }

    #[test]
    fn l_transform_identities() {
        let k = SummaryCurve::new(
            CurveKind::K,
            vec![0.05, 0.1],
            vec![
                Some(std::f64::consts::PI * 0.05 * 0.05),
                Some(0.0),
            ],
        )
        .unwrap();
        let l = l_from_k(&k);
        assert_relative_eq!(l.values[0].unwrap(), 0.05, epsilon = 1e-12);
        assert_eq!(l.values[1].unwrap(), 0.0);
    }

    #[test]
    fn matern_cluster_l_above_diagonal() {
        // Table-style urban cluster parameters: clustering pushes L above r
        let grid = even_grid(0.15, 8);
        let n_rep = 200u64;
        let mut sums = vec![0.0; grid.len()];
        for i in 0..n_rep {
            let p =
                sample_matern_cluster(162.48, 0.067, 1.61, Window::unit(), RngSeed(42).child(i))
                    .unwrap();
            if p.len() < 2 {
                continue;
            }
            let l = l_function(&p, &grid).unwrap();
            for (j, v) in l.values.iter().enumerate() {
                sums[j] += v.unwrap();
            }
        }
        for (j, &r) in grid.iter().enumerate() {
            let mean = sums[j] / n_rep as f64;
            assert!(
                mean > r,
                "mean L({r}) = {mean} not above the diagonal for a cluster process"
            );
        }
    }

    #[test]
    fn kde_single_point_mass_and_peak() {
        let p = pat(&[(0.5, 0.5)]);
        let map = kernel_density(&p, 0.1, 21, 21).unwrap();
        assert!((map.total_mass() - 1.0).abs() < 0.01);
        let max_idx = map
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(max_idx, 10 * 21 + 10, "peak should be the central cell");
    }

    #[test]
    fn kde_empty_pattern_is_zero() {
        let p = PointPattern::new(vec![], Window::unit()).unwrap();
        let map = kernel_density(&p, 0.1, 8, 8).unwrap();
        assert!(map.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kde_mass_preserved_and_flat_for_uniform_points() {
        let p = sample_poisson(1000.0, Window::unit(), RngSeed(50)).unwrap();
        let map = kernel_density(&p, 0.1, 20, 20).unwrap();
        let n = p.len() as f64;
        assert!(
            (map.total_mass() - n).abs() / n < 0.01,
            "mass {} vs N {}",
            map.total_mass(),
            n
        );
        let mean = map.values.iter().sum::<f64>() / map.values.len() as f64;
        let var = map
            .values
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / map.values.len() as f64;
        let cv = var.sqrt() / mean;
        assert!(cv < 0.2, "coefficient of variation {cv} too large");
    }

    #[test]
    fn classify_definitional_cases() {
        // clustered: two clumps tighter than the smallest grid distance,
        // so every grid point already sees both within-clump neighbors
        let clustered = pat(&[
            (0.30, 0.30),
            (0.301, 0.30),
            (0.30, 0.301),
            (0.70, 0.70),
            (0.701, 0.70),
            (0.70, 0.701),
        ]);
        assert_eq!(
            classify_pattern(&clustered, 0.15).unwrap(),
            InteractionVerdict::Clustered
        );
        // repulsive: a perfect grid with spacing beyond the interval, so
        // the L-function stays at zero across all of (0, 0.15]
        let mut grid_pts = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                grid_pts.push((0.05 + i as f64 * 0.18, 0.05 + j as f64 * 0.18));
            }
        }
        let regular = pat(&grid_pts);
        assert_eq!(
            classify_pattern(&regular, 0.15).unwrap(),
            InteractionVerdict::Repulsive
        );
    }

    #[test]
    fn classify_poisson_mostly_neither() {
        let n_rep = 100u64;
        let mut neither = 0;
        for i in 0..n_rep {
            let p = sample_poisson(200.0, Window::unit(), RngSeed(60).child(i)).unwrap();
            if classify_pattern(&p, 0.15).unwrap() == InteractionVerdict::Neither {
                neither += 1;
            }
        }
        assert!(
            neither as f64 / n_rep as f64 > 0.7,
            "Poisson patterns classified Neither only {neither}/{n_rep} times"
        );
    }

    #[test]
    fn survey_poisson_field_mostly_neither() {
        let field = sample_poisson(150.0, Window::new(0.0, 4.0, 0.0, 4.0).unwrap(), RngSeed(61))
            .unwrap();
        let res = survey_subregions(&field, 200, (60, 220), (0.7, 1.2), 0.15, RngSeed(62)).unwrap();
        assert!(res.complete);
        assert!(
            res.clustered_fraction() < 0.15 && res.repulsive_fraction() < 0.15,
            "clustered {} repulsive {}",
            res.clustered_fraction(),
            res.repulsive_fraction()
        );
    }

    #[test]
    fn k_homogeneity_under_rescaling() {
        // scaling window and grid by c scales K by c^2 and L by c
        let p = pat(&[(0.2, 0.3), (0.25, 0.3), (0.6, 0.7), (0.63, 0.71), (0.9, 0.1)]);
        let c = 2.5;
        let scaled_pts: Vec<Point> = p
            .points()
            .iter()
            .map(|q| Point {
                x: q.x * c,
                y: q.y * c,
            })
            .collect();
        let scaled =
            PointPattern::new(scaled_pts, Window::new(0.0, c, 0.0, c).unwrap()).unwrap();
        let grid = [0.05, 0.1, 0.2];
        let scaled_grid: Vec<f64> = grid.iter().map(|r| r * c).collect();
        let k1 = k_function(&p, &grid).unwrap();
        let k2 = k_function(&scaled, &scaled_grid).unwrap();
        for (a, b) in k1.values.iter().zip(&k2.values) {
            assert_relative_eq!(a.unwrap() * c * c, b.unwrap(), epsilon = 1e-10);
        }
        let l1 = l_from_k(&k1);
        let l2 = l_from_k(&k2);
        for (a, b) in l1.values.iter().zip(&l2.values) {
            assert_relative_eq!(a.unwrap() * c, b.unwrap(), epsilon = 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // exact symmetries of the corrections on a square window
        #[test]
        fn g_and_k_invariant_under_square_symmetries(
            xs in proptest::collection::vec((0.01f64..0.99, 0.01f64..0.99), 3..20),
        ) {
            let p = pat(&xs);
            let rotated = pat(&xs.iter().map(|&(x, y)| (1.0 - y, x)).collect::<Vec<_>>());
            let reflected = pat(&xs.iter().map(|&(x, y)| (1.0 - x, y)).collect::<Vec<_>>());
            let grid = [0.05, 0.1, 0.2];
            let k0 = k_function(&p, &grid).unwrap();
            let g0 = g_function(&p, &grid).unwrap();
            for q in [rotated, reflected] {
                let kq = k_function(&q, &grid).unwrap();
                let gq = g_function(&q, &grid).unwrap();
                for (a, b) in k0.values.iter().zip(&kq.values) {
                    prop_assert!((a.unwrap() - b.unwrap()).abs() < 1e-10);
                }
                for (a, b) in g0.values.iter().zip(&gq.values) {
                    match (a, b) {
                        (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                        (None, None) => {}
                        _ => prop_assert!(false, "missingness must match"),
                    }
                }
            }
        }

        // K is a function of the point set, not the point order
        #[test]
        fn k_invariant_under_permutation(
            xs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..15),
            seed in 0u64..1000,
        ) {
            let p = pat(&xs);
            let mut shuffled = xs.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut state = seed.wrapping_add(1);
            for i in (1..shuffled.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let q = pat(&shuffled);
            let grid = [0.05, 0.15, 0.25];
            let kp = k_function(&p, &grid).unwrap();
            let kq = k_function(&q, &grid).unwrap();
            for (a, b) in kp.values.iter().zip(&kq.values) {
                prop_assert!((a.unwrap() - b.unwrap()).abs() < 1e-10);
            }
        }

        // indicator monotonicity carries over to the estimator
        #[test]
        fn k_monotone_in_r(
            xs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..15),
        ) {
            let p = pat(&xs);
            let grid = [0.02, 0.05, 0.1, 0.15, 0.2];
            let k = k_function(&p, &grid).unwrap();
            for w in k.values.windows(2) {
                prop_assert!(w[0].unwrap() <= w[1].unwrap() + 1e-12);
            }
        }
    }
}
