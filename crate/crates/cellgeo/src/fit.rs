//! Parameter estimation: closed form for Poisson, maximum pseudolikelihood
//! (MPL) for the Gibbs families via the Berman-Turner device, profile MPL
//! for irregular parameters, and minimum contrast on the K-function for
//! the Matern cluster process.
//!
//! The Berman-Turner device turns the pseudolikelihood
//! `sum_i log lambda(x_i | x) - integral lambda(u | x) du` into a weighted
//! Poisson-regression likelihood over data points plus a regular grid of
//! dummy points, with counting-measure weights. The regression is linear
//! in `(log beta, log gamma)` with the interaction statistic as covariate,
//! so a two-variable Newton iteration solves it.
//!
//! ```
//! use cellgeo::fit::{fit_mpl, GibbsFamily, QuadratureScheme};
//! use cellgeo::geom::Window;
//! use cellgeo::models::ModelSpec;
//! use cellgeo::sim::{sample_gibbs, McmcConfig};
//! use cellgeo::seed::RngSeed;
//!
//! let truth = ModelSpec::Strauss { beta: 200.0, gamma: 0.5, r: 0.05 };
//! let p = sample_gibbs(&truth, Window::unit(), &McmcConfig::with_steps(20_000), RngSeed(4))?;
//! let quad = QuadratureScheme::new(&p)?;
//! let fit = fit_mpl(&p, GibbsFamily::Strauss { r: 0.05 }, &quad)?;
//! if let ModelSpec::Strauss { beta, gamma, .. } = fit.spec {
//!     assert!(beta > 50.0 && gamma < 1.0);
//! }
//! # Ok::<(), cellgeo::error::Error>(())
//! ```

use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, Window};
use crate::models::{FitDiagnostics, FittedModel, ModelSpec};
use crate::stats::{even_grid, k_function};
use serde::{Deserialize, Serialize};

/// A Gibbs family with its irregular parameters fixed; the regular
/// parameters (beta, and gamma where present) are what MPL estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GibbsFamily {
    Strauss { r: f64 },
    StraussHardCore { r: f64, h_c: f64 },
    PoissonHardCore { h_c: f64 },
    GeyerSaturation { r: f64, sat: u32 },
}

impl GibbsFamily {
    fn hard_core(&self) -> Option<f64> {
        match *self {
            GibbsFamily::StraussHardCore { h_c, .. } | GibbsFamily::PoissonHardCore { h_c } => {
                Some(h_c)
            }
            _ => None,
        }
    }

    fn has_interaction(&self) -> bool {
        !matches!(self, GibbsFamily::PoissonHardCore { .. })
    }

    /// Constraint on log gamma: Strauss-type interactions must stay in
    /// (0, 1]; Geyer gamma is free.
    fn log_gamma_max(&self) -> f64 {
        match self {
            GibbsFamily::GeyerSaturation { .. } => f64::INFINITY,
            _ => 0.0,
        }
    }

    fn spec(&self, beta: f64, gamma: f64) -> ModelSpec {
        match *self {
            GibbsFamily::Strauss { r } => ModelSpec::Strauss { beta, gamma, r },
            GibbsFamily::StraussHardCore { r, h_c } => {
                ModelSpec::StraussHardCore { beta, gamma, r, h_c }
            }
            GibbsFamily::PoissonHardCore { h_c } => ModelSpec::PoissonHardCore { beta, h_c },
            GibbsFamily::GeyerSaturation { r, sat } => {
                ModelSpec::GeyerSaturation { beta, gamma, r, sat }
            }
        }
    }
}

/// Berman-Turner quadrature: the data points plus a regular grid of dummy
/// points, weighted by the counting-measure rule (tile area divided by
/// the number of quadrature points in the tile). Weights sum to the
/// window area exactly.
#[derive(Debug, Clone)]
pub struct QuadratureScheme {
    points: Vec<Point>,
    /// First `n_data` entries of `points` are the data points.
    n_data: usize,
    weights: Vec<f64>,
    window: Window,
}

impl QuadratureScheme {
    /// Default dummy grid resolution: `4 * ceil(sqrt(N))` per axis.
    pub fn default_resolution(n_data: usize) -> usize {
        (4 * (n_data as f64).sqrt().ceil() as usize).max(8)
    }

    pub fn new(pattern: &PointPattern) -> Result<QuadratureScheme> {
        Self::with_resolution(pattern, Self::default_resolution(pattern.len()))
    }

    /// Quadrature with an `m x m` dummy grid.
    pub fn with_resolution(pattern: &PointPattern, m: usize) -> Result<QuadratureScheme> {
        if m < 2 {
            return Err(Error::config("dummy grid must be at least 2 x 2"));
        }
        let w = *pattern.window();
        let n_data = pattern.len();
        let mut points: Vec<Point> = pattern.points().to_vec();
        let dx = w.width() / m as f64;
        let dy = w.height() / m as f64;
        for iy in 0..m {
            for ix in 0..m {
                points.push(Point {
                    x: w.x_min + (ix as f64 + 0.5) * dx,
                    y: w.y_min + (iy as f64 + 0.5) * dy,
                });
            }
        }
        // counting-measure weights over the dummy-grid tiles
        let tile_of = |p: &Point| -> usize {
            let ix = (((p.x - w.x_min) / dx) as usize).min(m - 1);
            let iy = (((p.y - w.y_min) / dy) as usize).min(m - 1);
            iy * m + ix
        };
        let mut tile_counts = vec![0usize; m * m];
        for p in &points {
            tile_counts[tile_of(p)] += 1;
        }
        let tile_area = dx * dy;
        let weights = points
            .iter()
            .map(|p| tile_area / tile_counts[tile_of(p)] as f64)
            .collect();
        Ok(QuadratureScheme {
            points,
            n_data,
            weights,
            window: w,
        })
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
}

/// Closed-form Poisson fit: `lambda = N / |W|`. An empty pattern yields
/// a zero-intensity fit flagged degenerate.
pub fn fit_poisson(pattern: &PointPattern) -> FittedModel {
    let n = pattern.len();
    let lambda = n as f64 / pattern.window().area();
    let mut diagnostics = FitDiagnostics::simple(None, n);
    diagnostics.degenerate = n == 0;
    FittedModel {
        spec: ModelSpec::Poisson { lambda },
        fit_window: *pattern.window(),
        diagnostics,
    }
}

/// Interaction covariates for every quadrature point: the statistic `t`
/// such that `log lambda(u | x) = log beta + t(u) * log gamma`, computed
/// against the data points with a data point's own contribution removed.
fn covariates(family: &GibbsFamily, quad: &QuadratureScheme, data: &[Point]) -> Vec<f64> {
    let count_neighbors = |u: &Point, r: f64, self_idx: Option<usize>| -> u32 {
        let mut t = 0;
        for (i, p) in data.iter().enumerate() {
            if Some(i) == self_idx {
                continue;
            }
            if p.dist(u) <= r {
                t += 1;
            }
        }
        t
    };
    quad.points
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let self_idx = if j < quad.n_data { Some(j) } else { None };
            match *family {
                GibbsFamily::PoissonHardCore { .. } => 0.0,
                GibbsFamily::Strauss { r } | GibbsFamily::StraussHardCore { r, .. } => {
                    f64::from(count_neighbors(u, r, self_idx))
                }
                GibbsFamily::GeyerSaturation { r, sat } => {
                    // saturation change statistic of adding u to
                    // data \ {u}
                    let mut delta = 0.0;
                    let mut t_u = 0u32;
                    for (i, p) in data.iter().enumerate() {
                        if Some(i) == self_idx {
                            continue;
                        }
                        if p.dist(u) <= r {
                            t_u += 1;
                            let mut t_i = count_neighbors(p, r, Some(i));
                            if let Some(s) = self_idx {
                                if s != i && data[s].dist(p) <= r {
                                    t_i -= 1;
                                }
                            }
                            if t_i < sat {
                                delta += 1.0;
                            }
                        }
                    }
                    delta + f64::from(t_u.min(sat))
                }
            }
        })
        .collect()
}

/// Hard-core feasibility per quadrature point: a data point within `h_c`
/// of another data point makes the fit infeasible; a dummy point inside
/// some hard core has identically zero conditional intensity and drops
/// out of the integral term.
fn feasibility(
    family: &GibbsFamily,
    quad: &QuadratureScheme,
    data: &[Point],
) -> Result<Vec<bool>> {
    let Some(h_c) = family.hard_core() else {
        return Ok(vec![true; quad.points.len()]);
    };
    let mut feasible = Vec::with_capacity(quad.points.len());
    for (j, u) in quad.points.iter().enumerate() {
        let self_idx = if j < quad.n_data { Some(j) } else { None };
        let violated = data
            .iter()
            .enumerate()
            .any(|(i, p)| Some(i) != self_idx && p.dist(u) < h_c);
        if violated && j < quad.n_data {
            return Err(Error::data(format!(
                "data point {j} violates the fixed hard-core distance {h_c}; \
                 the model is infeasible for this pattern"
            )));
        }
        feasible.push(!violated);
    }
    Ok(feasible)
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_GRAD_TOL: f64 = 1e-8;

/// Log pseudolikelihood at `(theta0, theta1) = (log beta, log gamma)`
/// over a prepared quadrature.
fn objective(
    theta0: f64,
    theta1: f64,
    t: &[f64],
    w: &[f64],
    feasible: &[bool],
    n_data: usize,
) -> f64 {
    let mut obj = 0.0;
    for j in 0..t.len() {
        if !feasible[j] {
            continue;
        }
        let log_lam = theta0 + theta1 * t[j];
        if j < n_data {
            obj += log_lam;
        }
        obj -= w[j] * log_lam.exp();
    }
    obj
}

/// Maximum pseudolikelihood fit of a Gibbs family with fixed irregular
/// parameters.
pub fn fit_mpl(
    pattern: &PointPattern,
    family: GibbsFamily,
    quad: &QuadratureScheme,
) -> Result<FittedModel> {
    if pattern.is_empty() {
        return Err(Error::data("cannot fit a Gibbs model to an empty pattern"));
    }
    let data = pattern.points();
    let n_data = quad.n_data;
    let t = covariates(&family, quad, data);
    let feasible = feasibility(&family, quad, data)?;
    let w = &quad.weights;

    // pure first-order families have the closed-form maximizer
    // beta = N / (feasible weight mass)
    if !family.has_interaction() {
        let w_sum: f64 = w
            .iter()
            .zip(&feasible)
            .filter(|&(_, f)| *f)
            .map(|(w, _)| w)
            .sum();
        let beta = n_data as f64 / w_sum;
        let obj = objective(beta.ln(), 0.0, &t, w, &feasible, n_data);
        return Ok(FittedModel {
            spec: family.spec(beta, 1.0),
            fit_window: *pattern.window(),
            diagnostics: FitDiagnostics::simple(Some(obj), n_data),
        });
    }

    let theta1_max = family.log_gamma_max();
    let newton = |fix_theta1: Option<f64>| -> Result<(f64, f64, f64)> {
        let mut theta0 = (pattern.intensity().max(1e-12)).ln();
        let mut theta1 = fix_theta1.unwrap_or(0.0);
        let mut obj = objective(theta0, theta1, &t, w, &feasible, n_data);
        for _ in 0..NEWTON_MAX_ITER {
            // gradient and Hessian of the weighted Poisson log likelihood
            let (mut g0, mut g1) = (0.0, 0.0);
            let (mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0);
            for j in 0..t.len() {
                if !feasible[j] {
                    continue;
                }
                let lam = (theta0 + theta1 * t[j]).exp();
                if j < n_data {
                    g0 += 1.0;
                    g1 += t[j];
                }
                g0 -= w[j] * lam;
                g1 -= w[j] * lam * t[j];
                h00 += w[j] * lam;
                h01 += w[j] * lam * t[j];
                h11 += w[j] * lam * t[j] * t[j];
            }
            let grad_norm = if fix_theta1.is_some() {
                g0.abs()
            } else {
                g0.hypot(g1)
            };
            if grad_norm < NEWTON_GRAD_TOL {
                return Ok((theta0, theta1, obj));
            }
            // Newton direction: solve H d = g (H is the negated Hessian
            // accumulated above, positive definite)
            let (d0, d1) = if fix_theta1.is_some() {
                (g0 / h00, 0.0)
            } else {
                let det = h00 * h11 - h01 * h01;
                if det.abs() < 1e-300 {
                    return Err(Error::numerical(
                        "singular Hessian in pseudolikelihood Newton iteration",
                    ));
                }
                ((h11 * g0 - h01 * g1) / det, (h00 * g1 - h01 * g0) / det)
            };
            // step-halving
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..50 {
                let c0 = theta0 + step * d0;
                let c1 = theta1 + step * d1;
                let cand = objective(c0, c1, &t, w, &feasible, n_data);
                if cand > obj || (cand - obj).abs() < 1e-14 {
                    theta0 = c0;
                    theta1 = c1;
                    let stalled = (cand - obj).abs() < 1e-14;
                    obj = cand;
                    improved = true;
                    if stalled {
                        return Ok((theta0, theta1, obj));
                    }
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                return Ok((theta0, theta1, obj));
            }
        }
        Err(Error::numerical(format!(
            "pseudolikelihood Newton iteration did not converge within {NEWTON_MAX_ITER} steps \
             (last iterate beta={}, gamma={})",
            theta0.exp(),
            theta1.exp()
        )))
    };

    let (mut theta0, mut theta1, mut obj) = newton(None)?;
    if theta1 > theta1_max {
        // constrained maximum sits on the gamma = 1 boundary
        (theta0, theta1, obj) = newton(Some(theta1_max))?;
    }
    Ok(FittedModel {
        spec: family.spec(theta0.exp(), theta1.exp()),
        fit_window: *pattern.window(),
        diagnostics: FitDiagnostics::simple(Some(obj), n_data),
    })
}

/// Log pseudolikelihood of an arbitrary parameter pair on a quadrature;
/// used by tests and by optimality diagnostics.
pub fn log_pseudolikelihood(
    pattern: &PointPattern,
    family: GibbsFamily,
    beta: f64,
    gamma: f64,
    quad: &QuadratureScheme,
) -> Result<f64> {
    let t = covariates(&family, quad, pattern.points());
    let feasible = feasibility(&family, quad, pattern.points())?;
    Ok(objective(
        beta.ln(),
        gamma.ln(),
        &t,
        &quad.weights,
        &feasible,
        quad.n_data,
    ))
}

/// Candidate grids for the irregular parameters of a profile fit. Only
/// the grids relevant to the family are consulted; an irrelevant grid
/// must be left empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    pub r: Vec<f64>,
    pub h_c: Vec<f64>,
    pub sat: Vec<u32>,
}

impl ProfileGrid {
    fn validate_ascending(&self) -> Result<()> {
        if self.r.windows(2).any(|w| w[1] <= w[0])
            || self.h_c.windows(2).any(|w| w[1] <= w[0])
            || self.sat.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config("profile grids must be strictly ascending"));
        }
        Ok(())
    }
}

/// The family shape to profile-fit, with irregular parameters to be
/// filled from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GibbsFamilyKind {
    Strauss,
    StraussHardCore,
    PoissonHardCore,
    GeyerSaturation,
}

fn family_combinations(kind: GibbsFamilyKind, grid: &ProfileGrid) -> Result<Vec<GibbsFamily>> {
    let need = |vals: &Vec<f64>, name: &str| -> Result<Vec<f64>> {
        if vals.is_empty() {
            Err(Error::config(format!(
                "profile grid for {name} must be nonempty for this family"
            )))
        } else {
            Ok(vals.clone())
        }
    };
    // enumeration order encodes the tie-break: smallest r, then smallest
    // sat, then smallest h_c
    let mut out = Vec::new();
    match kind {
        GibbsFamilyKind::Strauss => {
            for &r in &need(&grid.r, "r")? {
                out.push(GibbsFamily::Strauss { r });
            }
        }
        GibbsFamilyKind::StraussHardCore => {
            for &r in &need(&grid.r, "r")? {
                for &h_c in &need(&grid.h_c, "h_c")? {
                    if h_c < r {
                        out.push(GibbsFamily::StraussHardCore { r, h_c });
                    }
                }
            }
        }
        GibbsFamilyKind::PoissonHardCore => {
            for &h_c in &need(&grid.h_c, "h_c")? {
                out.push(GibbsFamily::PoissonHardCore { h_c });
            }
        }
        GibbsFamilyKind::GeyerSaturation => {
            if grid.sat.is_empty() {
                return Err(Error::config("profile grid for sat must be nonempty"));
            }
            for &r in &need(&grid.r, "r")? {
                for &sat in &grid.sat {
                    out.push(GibbsFamily::GeyerSaturation { r, sat });
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::config(
            "profile grid produced no valid parameter combinations",
        ));
    }
    Ok(out)
}

/// Profile maximum pseudolikelihood: fit every irregular-parameter
/// combination on the grid and keep the one with the largest achieved
/// pseudolikelihood. Ties break toward the smallest irregulars.
pub fn fit_profile(
    pattern: &PointPattern,
    kind: GibbsFamilyKind,
    grid: &ProfileGrid,
    quad: &QuadratureScheme,
) -> Result<FittedModel> {
    grid.validate_ascending()?;
    let combos = family_combinations(kind, grid)?;
    let mut best: Option<FittedModel> = None;
    let mut failures: Vec<String> = Vec::new();
    for family in combos {
        match fit_mpl(pattern, family, quad) {
            Ok(fit) => {
                let obj = fit.diagnostics.objective.unwrap_or(f64::NEG_INFINITY);
                let better = match &best {
                    None => true,
                    Some(b) => obj > b.diagnostics.objective.unwrap_or(f64::NEG_INFINITY),
                };
                if better {
                    best = Some(fit);
                }
            }
            Err(e) => failures.push(format!("{family:?}: {e}")),
        }
    }
    match best {
        Some(mut fit) => {
            fit.diagnostics.profile_grids = profile_grid_diag(kind, grid);
            Ok(fit)
        }
        None => Err(Error::numerical(format!(
            "every profile grid point failed: {}",
            failures.join("; ")
        ))),
    }
}

fn profile_grid_diag(kind: GibbsFamilyKind, grid: &ProfileGrid) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    match kind {
        GibbsFamilyKind::Strauss => out.push(("r".into(), grid.r.clone())),
        GibbsFamilyKind::StraussHardCore => {
            out.push(("r".into(), grid.r.clone()));
            out.push(("h_c".into(), grid.h_c.clone()));
        }
        GibbsFamilyKind::PoissonHardCore => out.push(("h_c".into(), grid.h_c.clone())),
        GibbsFamilyKind::GeyerSaturation => {
            out.push(("r".into(), grid.r.clone()));
            out.push(("sat".into(), grid.sat.iter().map(|&s| s as f64).collect()));
        }
    }
    out
}

/// Closed-form K-function of the Matern cluster process.
pub fn k_matern_cluster(t: f64, kappa: f64, r: f64) -> f64 {
    std::f64::consts::PI * t * t + matern_h(t / (2.0 * r)) / kappa
}

// extra expected neighbors from same-cluster siblings, as a function of
// z = t / (2r); rises from 0 at z = 0 to 1 at z >= 1
fn matern_h(z: f64) -> f64 {
    if z >= 1.0 {
        return 1.0;
    }
    if z <= 0.0 {
        return 0.0;
    }
    let z2 = z * z;
    let s = (1.0 - z2).sqrt();
    2.0 + ((8.0 * z2 - 4.0) * z.acos() - 2.0 * z.asin() + 4.0 * z * s * s * s - 6.0 * z * s)
        / std::f64::consts::PI
}

/// Minimum-contrast fit of the Matern cluster process: choose
/// `(kappa, r)` minimizing the integrated squared difference of the
/// fourth roots of the empirical and theoretical K-functions, then set
/// `mu = N / (kappa * |W|)` by moment matching.
///
/// `r_grid` supplies the cluster-radius candidates; for each, `kappa` is
/// optimized by golden-section search on a log scale within
/// `optimizer_budget` function evaluations.
pub fn fit_matern_cluster(
    pattern: &PointPattern,
    r_grid: &[f64],
    optimizer_budget: usize,
) -> Result<FittedModel> {
    if pattern.len() < 10 {
        return Err(Error::data(
            "Matern cluster fitting requires at least 10 points",
        ));
    }
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] <= 0.0 {
        return Err(Error::config("r grid must be positive and ascending"));
    }
    let w = pattern.window();
    let t_max = w.shorter_side() / 4.0;
    let t_grid = even_grid(t_max, 32);
    let k_hat = k_function(pattern, &t_grid)?;
    let k_hat: Vec<f64> = k_hat.values.iter().map(|v| v.unwrap()).collect();
    let dt = t_grid[1] - t_grid[0];

    let contrast = |kappa: f64, r: f64| -> f64 {
        t_grid
            .iter()
            .zip(&k_hat)
            .map(|(&t, &kh)| {
                let diff = kh.powf(0.25) - k_matern_cluster(t, kappa, r).powf(0.25);
                diff * diff * dt
            })
            .sum()
    };

    let lambda_hat = pattern.intensity();
    let (log_lo, log_hi) = ((0.01 * lambda_hat).ln(), (100.0 * lambda_hat).ln());
    let per_r_budget = (optimizer_budget / r_grid.len()).max(20);

    let mut best: Option<(f64, f64, f64)> = None; // (contrast, kappa, r)
    for &r in r_grid {
        // golden-section on log kappa
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (log_lo, log_hi);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = contrast(c.exp(), r);
        let mut fd = contrast(d.exp(), r);
        for _ in 0..per_r_budget {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = contrast(c.exp(), r);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = contrast(d.exp(), r);
            }
        }
        let (log_k, f) = if fc < fd { (c, fc) } else { (d, fd) };
        if !f.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((bf, _, _)) => f < bf,
        };
        if better {
            best = Some((f, log_k.exp(), r));
        }
    }

    let (contrast_val, kappa, r) = best.ok_or_else(|| {
        Error::numerical("Matern cluster contrast minimization failed on every r candidate")
    })?;
    let mu = pattern.len() as f64 / (kappa * w.area());
    let mut diagnostics = FitDiagnostics::simple(Some(-contrast_val), pattern.len());
    diagnostics.profile_grids = vec![("r".into(), r_grid.to_vec())];
    Ok(FittedModel {
        spec: ModelSpec::MaternCluster { kappa, r, mu },
        fit_window: *w,
        diagnostics,
    })
}
