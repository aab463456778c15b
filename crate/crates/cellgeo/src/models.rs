//! The six point-process families and their unnormalized densities and
//! conditional intensities.
//!
//! A Gibbs process is specified by an unnormalized density
//! `f(x) = a * beta^N(x) * (interaction terms)`; the normalizing constant
//! `a` is intractable and never needed, because both Metropolis-Hastings
//! acceptance and pseudolikelihood fitting only use density ratios. The
//! ratio for adding one point is the Papangelou conditional intensity
//! `lambda(u | x) = f(x + u) / f(x)`, implemented in [`papangelou`].

use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, Window};
use serde::{Deserialize, Serialize};

/// Parameters of one point-process family.
///
/// Serializes to JSON as `{"family": "...", ...parameters}`; see
/// `docs/schemas.md` for the exact field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Homogeneous Poisson process with intensity `lambda` (points per
    /// unit area). Complete spatial randomness.
    Poisson { lambda: f64 },
    /// Strauss process: density `beta^N * gamma^s(x)` with `s(x)` the
    /// number of pairs closer than `r`. Repulsive; `gamma` must lie in
    /// [0,1] (the density is non-integrable for gamma > 1).
    Strauss { beta: f64, gamma: f64, r: f64 },
    /// Strauss process with an additional hard-core distance `h_c < r`:
    /// the density vanishes whenever any pair is closer than `h_c`.
    StraussHardCore {
        beta: f64,
        gamma: f64,
        r: f64,
        h_c: f64,
    },
    /// Poisson process conditioned on all pairs being at least `h_c`
    /// apart.
    PoissonHardCore { beta: f64, h_c: f64 },
    /// Geyer saturation process: each point's pairwise interaction count
    /// is capped at `sat`, which keeps the density integrable for
    /// `gamma > 1` and so covers the clustered regime.
    GeyerSaturation {
        beta: f64,
        gamma: f64,
        r: f64,
        sat: u32,
    },
    /// Matern cluster process: Poisson(`kappa`) parents, each with
    /// Poisson(`mu`) daughters uniform in a disc of radius `r`; only the
    /// daughters are observed.
    MaternCluster { kappa: f64, r: f64, mu: f64 },
}

impl ModelSpec {
    /// Short family tag used in file names and reports.
    pub fn family_name(&self) -> &'static str {
        match self {
            ModelSpec::Poisson { .. } => "poisson",
            ModelSpec::Strauss { .. } => "strauss",
            ModelSpec::StraussHardCore { .. } => "strauss_hard_core",
            ModelSpec::PoissonHardCore { .. } => "poisson_hard_core",
            ModelSpec::GeyerSaturation { .. } => "geyer",
            ModelSpec::MaternCluster { .. } => "matern_cluster",
        }
    }

    /// True for families with a Gibbs density (everything except the
    /// Matern cluster process; the Poisson process is the trivial Gibbs
    /// case with no interaction).
    pub fn is_gibbs(&self) -> bool {
        !matches!(self, ModelSpec::MaternCluster { .. })
    }

    pub fn hard_core_distance(&self) -> Option<f64> {
        match self {
            ModelSpec::StraussHardCore { h_c, .. } | ModelSpec::PoissonHardCore { h_c, .. } => {
                Some(*h_c)
            }
            _ => None,
        }
    }

    /// Check parameter invariants. Call after deserializing.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::config(msg));
        match *self {
            ModelSpec::Poisson { lambda } => {
                if !(lambda >= 0.0) || !lambda.is_finite() {
                    return err(format!("Poisson lambda must be >= 0, got {lambda}"));
                }
            }
            ModelSpec::Strauss { beta, gamma, r } => {
                if !(beta >= 0.0) {
                    return err(format!("Strauss beta must be >= 0, got {beta}"));
                }
                if !(0.0..=1.0).contains(&gamma) {
                    return err(format!(
                        "Strauss gamma must lie in [0,1] (non-integrable above 1), got {gamma}"
                    ));
                }
                if !(r > 0.0) {
                    return err(format!("Strauss r must be > 0, got {r}"));
                }
            }
            ModelSpec::StraussHardCore { beta, gamma, r, h_c } => {
                if !(beta >= 0.0) {
                    return err(format!("beta must be >= 0, got {beta}"));
                }
                if !(0.0..=1.0).contains(&gamma) {
                    return err(format!("gamma must lie in [0,1], got {gamma}"));
                }
                if !(h_c > 0.0) {
                    return err(format!("hard-core distance must be > 0, got {h_c}"));
                }
                if !(r > h_c) {
                    return err(format!(
                        "interaction radius r={r} must exceed the hard-core distance h_c={h_c}"
                    ));
                }
            }
            ModelSpec::PoissonHardCore { beta, h_c } => {
                if !(beta >= 0.0) {
                    return err(format!("beta must be >= 0, got {beta}"));
                }
                if !(h_c > 0.0) {
                    return err(format!("hard-core distance must be > 0, got {h_c}"));
                }
            }
            ModelSpec::GeyerSaturation { beta, gamma, r, .. } => {
                if !(beta >= 0.0) {
                    return err(format!("beta must be >= 0, got {beta}"));
                }
                if !(gamma > 0.0) || !gamma.is_finite() {
                    return err(format!("Geyer gamma must be > 0, got {gamma}"));
                }
                if !(r > 0.0) {
                    return err(format!("Geyer r must be > 0, got {r}"));
                }
            }
            ModelSpec::MaternCluster { kappa, r, mu } => {
                if !(kappa >= 0.0) || !(mu >= 0.0) {
                    return err(format!(
                        "Matern cluster kappa and mu must be >= 0, got kappa={kappa}, mu={mu}"
                    ));
                }
                if !(r > 0.0) {
                    return err(format!("Matern cluster radius must be > 0, got {r}"));
                }
            }
        }
        Ok(())
    }
}

/// Fit diagnostics attached to a [`FittedModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Achieved log-pseudolikelihood (or negative contrast for the
    /// Matern cluster fit; `None` for the closed-form Poisson fit).
    pub objective: Option<f64>,
    /// Irregular-parameter grids searched by a profile fit, as
    /// `(name, candidates)` pairs.
    pub profile_grids: Vec<(String, Vec<f64>)>,
    /// Number of data points the model was fitted to.
    pub n_data: usize,
    /// Set when the fit is degenerate (e.g. Poisson fit to an empty
    /// pattern).
    pub degenerate: bool,
}

impl FitDiagnostics {
    pub fn simple(objective: Option<f64>, n_data: usize) -> Self {
        FitDiagnostics {
            objective,
            profile_grids: Vec::new(),
            n_data,
            degenerate: false,
        }
    }
}

/// A fitted model: parameter estimates plus the window and diagnostics of
/// the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub fit_window: Window,
    pub diagnostics: FitDiagnostics,
}

/// `gamma^t` with the convention `0^0 = 1` (the hard-core limit of the
/// Strauss interaction).
fn gamma_pow(gamma: f64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        gamma.powf(t)
    }
}

/// Count pattern points within distance `r` of `u`, excluding `u` itself
/// if it coincides with a pattern point index `skip`.
fn neighbor_count(points: &[Point], u: &Point, r: f64, skip: Option<usize>) -> u32 {
    let mut t = 0;
    for (i, p) in points.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        if p.dist(u) <= r {
            t += 1;
        }
    }
    t
}

fn any_within(points: &[Point], u: &Point, h: f64, skip: Option<usize>) -> bool {
    points
        .iter()
        .enumerate()
        .any(|(i, p)| Some(i) != skip && p.dist(u) < h)
}

/// Change in the Geyer saturation statistic
/// `S(x) = sum_i min(sat, t(x_i, x \ x_i))` when `u` is added to `x`:
/// `u` contributes its own saturated count and each r-neighbor of `u`
/// gains one interaction, capped at `sat`.
fn geyer_delta(points: &[Point], u: &Point, r: f64, sat: u32, skip: Option<usize>) -> f64 {
    let mut delta = 0.0;
    let mut t_u = 0u32;
    for (i, p) in points.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        if p.dist(u) <= r {
            t_u += 1;
            let t_i = neighbor_count(points, p, r, Some(i)) - skip_adjust(points, p, r, skip, i);
            if t_i < sat {
                delta += 1.0;
            }
        }
    }
    delta + f64::from(t_u.min(sat))
}

// neighbor_count above includes a skipped index's point when counting
// neighbors of p; subtract it when skip is set and within range.
fn skip_adjust(points: &[Point], p: &Point, r: f64, skip: Option<usize>, own: usize) -> u32 {
    match skip {
        Some(s) if s != own && points[s].dist(p) <= r => 1,
        _ => 0,
    }
}

/// Papangelou conditional intensity `lambda(u | x)` of a Gibbs or Poisson
/// model, for a proposed point `u` not in the pattern.
pub fn papangelou(spec: &ModelSpec, pattern: &PointPattern, u: &Point) -> Result<f64> {
    papangelou_skip(spec, pattern.points(), u, None)
}

/// As [`papangelou`] but with pattern point `skip` removed from the
/// conditioning configuration. Used for the data terms of the
/// pseudolikelihood (`lambda(x_i | x \ x_i)`) and for MCMC shift moves.
pub fn papangelou_skip(
    spec: &ModelSpec,
    points: &[Point],
    u: &Point,
    skip: Option<usize>,
) -> Result<f64> {
    match *spec {
        ModelSpec::Poisson { lambda } => Ok(lambda),
        ModelSpec::Strauss { beta, gamma, r } => {
            let t = neighbor_count(points, u, r, skip);
            Ok(beta * gamma_pow(gamma, f64::from(t)))
        }
        ModelSpec::StraussHardCore { beta, gamma, r, h_c } => {
            if any_within(points, u, h_c, skip) {
                Ok(0.0)
            } else {
                let t = neighbor_count(points, u, r, skip);
                Ok(beta * gamma_pow(gamma, f64::from(t)))
            }
        }
        ModelSpec::PoissonHardCore { beta, h_c } => {
            if any_within(points, u, h_c, skip) {
                Ok(0.0)
            } else {
                Ok(beta)
            }
        }
        ModelSpec::GeyerSaturation { beta, gamma, r, sat } => {
            let delta = geyer_delta(points, u, r, sat, skip);
            Ok(beta * gamma_pow(gamma, delta))
        }
        ModelSpec::MaternCluster { .. } => Err(Error::UnsupportedFamily(
            "the Matern cluster process has no Gibbs conditional intensity; \
             use the exact cluster sampler"
                .into(),
        )),
    }
}

/// Log of the unnormalized density `log f(x) - log a`. Returns negative
/// infinity exactly when a hard-core constraint is violated.
pub fn log_density_unnormalized(spec: &ModelSpec, pattern: &PointPattern) -> Result<f64> {
    let pts = pattern.points();
    let n = pts.len() as f64;
    match *spec {
        ModelSpec::Poisson { lambda } => Ok(n * lambda.ln()),
        ModelSpec::Strauss { beta, gamma, r } => {
            let s = crate::geom::close_pair_count(pattern, r)? as f64;
            Ok(n * beta.ln() + log_gamma_term(gamma, s))
        }
        ModelSpec::StraussHardCore { beta, gamma, r, h_c } => {
            if has_close_pair(pts, h_c) {
                return Ok(f64::NEG_INFINITY);
            }
            let s = crate::geom::close_pair_count(pattern, r)? as f64;
            Ok(n * beta.ln() + log_gamma_term(gamma, s))
        }
        ModelSpec::PoissonHardCore { beta, h_c } => {
            if has_close_pair(pts, h_c) {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(n * beta.ln())
            }
        }
        ModelSpec::GeyerSaturation { beta, gamma, r, sat } => {
            let mut s = 0.0;
            for (i, p) in pts.iter().enumerate() {
                let t = neighbor_count(pts, p, r, Some(i));
                s += f64::from(t.min(sat));
            }
            Ok(n * beta.ln() + log_gamma_term(gamma, s))
        }
        ModelSpec::MaternCluster { .. } => Err(Error::UnsupportedFamily(
            "the Matern cluster density is not of Gibbs form".into(),
        )),
    }
}

fn log_gamma_term(gamma: f64, s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else if gamma == 0.0 {
        f64::NEG_INFINITY
    } else {
        s * gamma.ln()
    }
}

fn has_close_pair(pts: &[Point], h: f64) -> bool {
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if pts[i].dist(&pts[j]) < h {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{close_pair_count, Window};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pat(pts: &[(f64, f64)]) -> PointPattern {
        let points = pts.iter().map(|&(x, y)| Point { x, y }).collect();
        PointPattern::new(points, Window::unit()).unwrap()
    }

    #[test]
    fn strauss_two_neighbors() {
        let spec = ModelSpec::Strauss {
            beta: 100.0,
            gamma: 0.5,
            r: 0.05,
        };
        // u at (0.5, 0.5): two points within 0.05, one far away
        let x = pat(&[(0.52, 0.5), (0.5, 0.53), (0.9, 0.9)]);
        let u = Point { x: 0.5, y: 0.5 };
        assert_relative_eq!(papangelou(&spec, &x, &u).unwrap(), 25.0);
    }

    #[test]
    fn hard_core_forces_zero() {
        // Table-style rural hard-core configuration
        let spec = ModelSpec::PoissonHardCore {
            beta: 173.34,
            h_c: 0.015,
        };
        let x = pat(&[(0.5, 0.5)]);
        let u = Point { x: 0.51, y: 0.5 };
        assert_eq!(papangelou(&spec, &x, &u).unwrap(), 0.0);
        // outside the hard core the Poisson form applies
        let v = Point { x: 0.6, y: 0.5 };
        assert_relative_eq!(papangelou(&spec, &x, &v).unwrap(), 173.34);
    }

    #[test]
    fn geyer_unsaturated_equals_strauss() {
        let x = pat(&[(0.5, 0.5), (0.52, 0.5), (0.5, 0.53), (0.2, 0.2)]);
        let u = Point { x: 0.51, y: 0.51 };
        let geyer = ModelSpec::GeyerSaturation {
            beta: 50.0,
            gamma: 0.7,
            r: 0.05,
            sat: 100, // sat >= N(x): saturation never binds
        };
        let strauss = ModelSpec::Strauss {
            beta: 50.0,
            gamma: 0.7,
            r: 0.05,
        };
        // with sat never binding, Delta = 2 * t(u): u's own count plus one
        // per neighbor, so the Geyer value is the Strauss value squared in
        // the gamma factor
        let t = 3.0;
        assert_relative_eq!(
            papangelou(&geyer, &x, &u).unwrap(),
            50.0 * 0.7f64.powf(2.0 * t),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            papangelou(&strauss, &x, &u).unwrap(),
            50.0 * 0.7f64.powf(t),
            epsilon = 1e-12
        );
    }

    #[test]
    fn strauss_gamma_one_reduces_to_poisson() {
        let spec = ModelSpec::Strauss {
            beta: 42.0,
            gamma: 1.0,
            r: 0.1,
        };
        let x = pat(&[(0.5, 0.5), (0.51, 0.5), (0.5, 0.51)]);
        for u in [
            Point { x: 0.505, y: 0.505 },
            Point { x: 0.9, y: 0.9 },
        ] {
            assert_relative_eq!(papangelou(&spec, &x, &u).unwrap(), 42.0);
        }
    }

    #[test]
    fn matern_cluster_rejected() {
        let spec = ModelSpec::MaternCluster {
            kappa: 10.0,
            r: 0.1,
            mu: 2.0,
        };
        let x = pat(&[(0.5, 0.5)]);
        let u = Point { x: 0.1, y: 0.1 };
        assert!(matches!(
            papangelou(&spec, &x, &u),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(log_density_unnormalized(&spec, &x).is_err());
    }

    #[test]
    fn log_density_linear_in_count_at_gamma_one() {
        let spec = ModelSpec::Strauss {
            beta: std::f64::consts::E,
            gamma: 1.0,
            r: 0.05,
        };
        let x = pat(&[(0.1, 0.1), (0.5, 0.5), (0.9, 0.9), (0.2, 0.8)]);
        assert_relative_eq!(log_density_unnormalized(&spec, &x).unwrap(), 4.0);
    }

    #[test]
    fn hard_core_violation_gives_neg_infinity() {
        let spec = ModelSpec::StraussHardCore {
            beta: 100.0,
            gamma: 0.5,
            r: 0.05,
            h_c: 0.02,
        };
        let x = pat(&[(0.5, 0.5), (0.505, 0.5)]);
        assert_eq!(
            log_density_unnormalized(&spec, &x).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn strauss_log_density_matches_pair_counter() {
        use crate::seed::RngSeed;
        let spec = ModelSpec::Strauss {
            beta: 200.0,
            gamma: 0.5,
            r: 0.05,
        };
        let x = crate::sim::sample_poisson(10.0, Window::unit(), RngSeed(5)).unwrap();
        let s = close_pair_count(&x, 0.05).unwrap() as f64;
        let n = x.len() as f64;
        assert_relative_eq!(
            log_density_unnormalized(&spec, &x).unwrap(),
            n * 200.0f64.ln() + s * 0.5f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn validate_rejects_clustered_strauss() {
        let spec = ModelSpec::Strauss {
            beta: 10.0,
            gamma: 1.5,
            r: 0.05,
        };
        assert!(spec.validate().is_err());
        let geyer = ModelSpec::GeyerSaturation {
            beta: 10.0,
            gamma: 1.5,
            r: 0.05,
            sat: 2,
        };
        assert!(geyer.validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let spec = ModelSpec::GeyerSaturation {
            beta: 182.93,
            gamma: 1.25,
            r: 0.03,
            sat: 4,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"family\":\"geyer_saturation\""));
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    fn arb_gibbs_spec() -> impl Strategy<Value = ModelSpec> {
        prop_oneof![
            (1.0f64..300.0).prop_map(|lambda| ModelSpec::Poisson { lambda }),
            (1.0f64..300.0, 0.05f64..1.0, 0.01f64..0.2)
                .prop_map(|(beta, gamma, r)| ModelSpec::Strauss { beta, gamma, r }),
            (1.0f64..300.0, 0.05f64..1.0, 0.05f64..0.2)
                .prop_map(|(beta, gamma, r)| ModelSpec::StraussHardCore {
                    beta,
                    gamma,
                    r,
                    h_c: r / 2.0
                }),
            (1.0f64..300.0, 0.005f64..0.1)
                .prop_map(|(beta, h_c)| ModelSpec::PoissonHardCore { beta, h_c }),
            (1.0f64..300.0, 0.2f64..4.0, 0.01f64..0.2, 0u32..6).prop_map(
                |(beta, gamma, r, sat)| ModelSpec::GeyerSaturation { beta, gamma, r, sat }
            ),
        ]
    }

    proptest! {
        // f(x + u) / f(x) must equal the conditional intensity for every
        // Gibbs family: the one identity both MCMC and pseudolikelihood
        // rest on.
        #[test]
        fn papangelou_consistent_with_density_ratio(
            spec in arb_gibbs_spec(),
            xs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..15),
            u in (0.0f64..1.0, 0.0f64..1.0),
        ) {
            let x = pat(&xs);
            let u = Point { x: u.0, y: u.1 };
            let mut with_u = xs.clone();
            with_u.push((u.x, u.y));
            let x_u = pat(&with_u);

            let lf_x = log_density_unnormalized(&spec, &x).unwrap();
            let lf_xu = log_density_unnormalized(&spec, &x_u).unwrap();
            let lam = papangelou(&spec, &x, &u).unwrap();
            if lf_x.is_finite() && lf_xu.is_finite() {
                prop_assert!(lam > 0.0);
                prop_assert!(
                    (lf_xu - lf_x - lam.ln()).abs() < 1e-9,
                    "ratio mismatch: {} vs {}",
                    lf_xu - lf_x,
                    lam.ln()
                );
            }
        }
    }
}
