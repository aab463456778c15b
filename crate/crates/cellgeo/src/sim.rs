//! Samplers for every model family: exact samplers for the Poisson and
//! Matern cluster processes, Metropolis-Hastings for the Gibbs families.
//!
//! All samplers are pure functions of their seed; identical inputs give an
//! identical pattern on every platform.
//!
//! For hard-core models the chain is started from a feasible state and
//! moves into zero-density states are always rejected, so every returned
//! pattern honors the hard-core distance:
//!
//! ```
//! use cellgeo::geom::Window;
//! use cellgeo::models::ModelSpec;
//! use cellgeo::sim::{sample_gibbs, McmcConfig};
//! use cellgeo::seed::RngSeed;
//!
//! let spec = ModelSpec::StraussHardCore {
//!     beta: 237.24, gamma: 0.5, r: 0.03, h_c: 0.015,
//! };
//! let p = sample_gibbs(&spec, Window::unit(), &McmcConfig::with_steps(20_000), RngSeed(2))?;
//! assert!(p.min_pairwise_distance().unwrap_or(f64::INFINITY) >= 0.015);
//! # Ok::<(), cellgeo::error::Error>(())
//! ```

use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, Window};
use crate::models::{papangelou_skip, ModelSpec};
use crate::seed::RngSeed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Initial state of the Metropolis-Hastings chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Empty,
    /// Poisson pattern with intensity beta (thinned to respect the
    /// hard core for hard-core specs).
    PoissonBeta,
}

/// Configuration of the Metropolis-Hastings sampler.
///
/// Moves are birth (propose a uniform new point), death (remove a uniform
/// existing point) and shift (re-propose one point uniformly); the mix is
/// chosen per step with probabilities `p_birth`, `p_death`, `p_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_steps: u64,
    pub p_birth: f64,
    pub p_death: f64,
    pub p_shift: f64,
    pub initial_state: InitialState,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_steps: 100_000,
            p_birth: 0.4,
            p_death: 0.4,
            p_shift: 0.2,
            initial_state: InitialState::PoissonBeta,
        }
    }
}

impl McmcConfig {
    pub fn with_steps(n_steps: u64) -> Self {
        McmcConfig {
            n_steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_birth, self.p_death, self.p_shift];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("proposal probabilities must lie in [0,1]"));
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("proposal probabilities must sum to 1"));
        }
        if self.n_steps == 0 {
            return Err(Error::config("n_steps must be at least 1"));
        }
        Ok(())
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn uniform_point(rng: &mut ChaCha8Rng, window: &Window) -> Point {
    Point {
        x: rng.gen_range(window.x_min..=window.x_max),
        y: rng.gen_range(window.y_min..=window.y_max),
    }
}

/// Sample a homogeneous Poisson process: Poisson(lambda * |W|) points,
/// each uniform on the window.
pub fn sample_poisson(lambda: f64, window: Window, seed: RngSeed) -> Result<PointPattern> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut rng = seed.rng();
    let n = poisson_count(&mut rng, lambda * window.area());
    let points = (0..n).map(|_| uniform_point(&mut rng, &window)).collect();
    PointPattern::new(points, window)
}

/// Sample a Matern cluster process. Parents are drawn on the window
/// dilated by `r` so clusters centered just outside still contribute
/// daughters; daughters are uniform in the radius-`r` disc around their
/// parent and clipped to the window. Parents are not returned.
pub fn sample_matern_cluster(
    kappa: f64,
    r: f64,
    mu: f64,
    window: Window,
    seed: RngSeed,
) -> Result<PointPattern> {
    if !(kappa >= 0.0) || !(mu >= 0.0) {
        return Err(Error::config("kappa and mu must be >= 0"));
    }
    if !(r > 0.0) {
        return Err(Error::config("cluster radius must be > 0"));
    }
    let mut rng = seed.rng();
    let parent_window = window.dilate(r);
    let n_parents = poisson_count(&mut rng, kappa * parent_window.area());
    let mut daughters = Vec::new();
    for _ in 0..n_parents {
        let parent = uniform_point(&mut rng, &parent_window);
        let n_daughters = poisson_count(&mut rng, mu);
        for _ in 0..n_daughters {
            // uniform in the disc: sqrt-radius times uniform angle
            let rho = r * rng.gen::<f64>().sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let d = Point {
                x: parent.x + rho * theta.cos(),
                y: parent.y + rho * theta.sin(),
            };
            if window.contains(&d) {
                daughters.push(d);
            }
        }
    }
    PointPattern::new(daughters, window)
}

fn first_order_beta(spec: &ModelSpec) -> f64 {
    match *spec {
        ModelSpec::Poisson { lambda } => lambda,
        ModelSpec::Strauss { beta, .. }
        | ModelSpec::StraussHardCore { beta, .. }
        | ModelSpec::PoissonHardCore { beta, .. }
        | ModelSpec::GeyerSaturation { beta, .. } => beta,
        ModelSpec::MaternCluster { .. } => 0.0,
    }
}

/// Sample a Gibbs model by `config.n_steps` Metropolis-Hastings
/// birth/death/shift steps and return the final chain state.
///
/// Acceptance ratios come from the Papangelou conditional intensity:
/// birth accepts with `min(1, lambda(u|x) * |W| * p_death / ((N+1) * p_birth))`,
/// death with the reciprocal form, shift with the intensity ratio at the
/// old and new locations. Hard-core specs start from a thinned initial
/// state, so every visited state (and the returned pattern) respects the
/// hard core.
pub fn sample_gibbs(
    spec: &ModelSpec,
    window: Window,
    config: &McmcConfig,
    seed: RngSeed,
) -> Result<PointPattern> {
    spec.validate()?;
    config.validate()?;
    if !spec.is_gibbs() {
        return Err(Error::UnsupportedFamily(
            "use sample_matern_cluster for the Matern cluster process".into(),
        ));
    }
    if matches!(spec, ModelSpec::Poisson { .. }) {
        return Err(Error::UnsupportedFamily(
            "the Poisson process has an exact sampler; use sample_poisson".into(),
        ));
    }

    let mut rng = seed.rng();
    let area = window.area();
    let mut points: Vec<Point> = match config.initial_state {
        InitialState::Empty => Vec::new(),
        InitialState::PoissonBeta => {
            let n = poisson_count(&mut rng, first_order_beta(spec) * area);
            let mut pts: Vec<Point> = Vec::with_capacity(n as usize);
            let h_c = spec.hard_core_distance();
            for _ in 0..n {
                let p = uniform_point(&mut rng, &window);
                // keep the initial state feasible for hard-core specs so
                // the chain never visits a zero-density state
                if let Some(h) = h_c {
                    if pts.iter().any(|q| q.dist(&p) < h) {
                        continue;
                    }
                }
                pts.push(p);
            }
            pts
        }
    };

    for _ in 0..config.n_steps {
        let move_draw: f64 = rng.gen();
        if move_draw < config.p_birth {
            // birth
            let u = uniform_point(&mut rng, &window);
            let lam = papangelou_skip(spec, &points, &u, None)?;
            let n = points.len() as f64;
            let accept = lam * area * config.p_death / ((n + 1.0) * config.p_birth);
            if accept >= 1.0 || rng.gen::<f64>() < accept {
                points.push(u);
            }
        } else if move_draw < config.p_birth + config.p_death {
            // death
            if points.is_empty() {
                continue;
            }
            let i = rng.gen_range(0..points.len());
            let lam = papangelou_skip(spec, &points, &points[i].clone(), Some(i))?;
            let n = points.len() as f64;
            // lam == 0 means the current state has zero density without
            // point i; always accept the removal
            let accept = if lam > 0.0 {
                n * config.p_birth / (lam * area * config.p_death)
            } else {
                1.0
            };
            if accept >= 1.0 || rng.gen::<f64>() < accept {
                points.swap_remove(i);
            }
        } else {
            // shift
            if points.is_empty() {
                continue;
            }
            let i = rng.gen_range(0..points.len());
            let v = uniform_point(&mut rng, &window);
            let lam_new = papangelou_skip(spec, &points, &v, Some(i))?;
            let lam_old = papangelou_skip(spec, &points, &points[i].clone(), Some(i))?;
            let accept = if lam_old > 0.0 {
                lam_new / lam_old
            } else if lam_new > 0.0 {
                1.0
            } else {
                0.0
            };
            if accept >= 1.0 || rng.gen::<f64>() < accept {
                points[i] = v;
            }
        }
    }

    PointPattern::new(points, window)
}

/// Sample any model family with its natural sampler: exact for Poisson
/// and Matern cluster, MCMC for the Gibbs families.
pub fn sample_model(
    spec: &ModelSpec,
    window: Window,
    mcmc: &McmcConfig,
    seed: RngSeed,
) -> Result<PointPattern> {
    match *spec {
        ModelSpec::Poisson { lambda } => sample_poisson(lambda, window, seed),
        ModelSpec::MaternCluster { kappa, r, mu } => {
            sample_matern_cluster(kappa, r, mu, window, seed)
        }
        _ => sample_gibbs(spec, window, mcmc, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_poisson_is_empty() {
        let p = sample_poisson(0.0, Window::unit(), RngSeed(1)).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn poisson_mean_count_matches_theory() {
        // sample mean over many seeds within 3 standard errors of lambda
        let lambda = 300.0;
        let n_rep = 1000;
        let total: u64 = (0..n_rep)
            .map(|i| {
                sample_poisson(lambda, Window::unit(), RngSeed(100).child(i))
                    .unwrap()
                    .len() as u64
            })
            .sum();
        let mean = total as f64 / n_rep as f64;
        let se = (lambda / n_rep as f64).sqrt();
        assert!(
            (mean - lambda).abs() < 3.0 * se,
            "mean {mean} vs lambda {lambda} (se {se})"
        );
    }

    #[test]
    fn poisson_counts_pass_chi_square() {
        // bin counts and compare to Poisson pmf; chi-square at the 1% level
        let lambda = 20.0;
        let n_rep = 2000usize;
        let counts: Vec<usize> = (0..n_rep)
            .map(|i| {
                sample_poisson(lambda, Window::unit(), RngSeed(7).child(i as u64))
                    .unwrap()
                    .len()
            })
            .collect();

        // bins: <=13, 14, 15, ..., 26, >=27 (tails pooled to keep expected
        // counts above 5)
        let lo = 14usize;
        let hi = 26usize;
        let mut observed = vec![0f64; hi - lo + 3];
        for &c in &counts {
            let idx = if c < lo {
                0
            } else if c > hi {
                observed.len() - 1
            } else {
                c - lo + 1
            };
            observed[idx] += 1.0;
        }
        // Poisson pmf by recurrence
        let mut pmf = vec![0.0f64; 80];
        pmf[0] = (-lambda).exp();
        for k in 1..pmf.len() {
            pmf[k] = pmf[k - 1] * lambda / k as f64;
        }
        let mut expected = vec![0f64; observed.len()];
        for (k, &p) in pmf.iter().enumerate() {
            let idx = if k < lo {
                0
            } else if k > hi {
                expected.len() - 1
            } else {
                k - lo + 1
            };
            expected[idx] += p * n_rep as f64;
        }
        let last = expected.len() - 1;
        expected[last] += (1.0 - pmf.iter().sum::<f64>()) * n_rep as f64;

        let chi2: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        // 15 bins -> 14 degrees of freedom; chi2_{0.99, 14} = 29.14
        assert!(chi2 < 29.14, "chi-square statistic {chi2} too large");
    }

    #[test]
    fn matern_zero_mu_is_empty() {
        let p = sample_matern_cluster(50.0, 0.1, 0.0, Window::unit(), RngSeed(1)).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn matern_mean_count_matches_kappa_mu() {
        // Table-style urban cluster configuration
        let (kappa, r, mu) = (162.48, 0.067, 1.61);
        let n_rep = 1000;
        let total: u64 = (0..n_rep)
            .map(|i| {
                sample_matern_cluster(kappa, r, mu, Window::unit(), RngSeed(2).child(i))
                    .unwrap()
                    .len() as u64
            })
            .sum();
        let mean = total as f64 / n_rep as f64;
        let expected = kappa * mu;
        // cluster processes are overdispersed; allow 3 SE with a
        // conservative per-replicate variance bound of kappa*mu*(1+mu)
        let se = (expected * (1.0 + mu) / n_rep as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs expected {expected} (se {se})"
        );
    }

    #[test]
    fn gibbs_rejects_non_gibbs_families() {
        let mcmc = McmcConfig::with_steps(10);
        assert!(sample_gibbs(
            &ModelSpec::MaternCluster {
                kappa: 10.0,
                r: 0.1,
                mu: 1.0
            },
            Window::unit(),
            &mcmc,
            RngSeed(1)
        )
        .is_err());
        assert!(sample_gibbs(
            &ModelSpec::Poisson { lambda: 10.0 },
            Window::unit(),
            &mcmc,
            RngSeed(1)
        )
        .is_err());
    }

    #[test]
    fn gibbs_is_deterministic() {
        let spec = ModelSpec::Strauss {
            beta: 100.0,
            gamma: 0.5,
            r: 0.05,
        };
        let mcmc = McmcConfig::with_steps(5000);
        let a = sample_gibbs(&spec, Window::unit(), &mcmc, RngSeed(9)).unwrap();
        let b = sample_gibbs(&spec, Window::unit(), &mcmc, RngSeed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hard_core_invariant_holds() {
        let spec = ModelSpec::StraussHardCore {
            beta: 237.24,
            gamma: 0.5,
            r: 0.03,
            h_c: 0.015,
        };
        let mcmc = McmcConfig::with_steps(10_000);
        for i in 0..20 {
            let p = sample_gibbs(&spec, Window::unit(), &mcmc, RngSeed(33).child(i)).unwrap();
            if let Some(d) = p.min_pairwise_distance() {
                assert!(d >= 0.015, "run {i}: min distance {d} below hard core");
            }
        }
    }

    #[test]
    fn strauss_gamma_one_matches_poisson_mean_count() {
        // gamma = 1 reduces the chain target to Poisson(beta)
        let spec = ModelSpec::Strauss {
            beta: 200.0,
            gamma: 1.0,
            r: 0.05,
        };
        let mcmc = McmcConfig::with_steps(20_000);
        let n_rep = 200;
        let total: u64 = (0..n_rep)
            .map(|i| {
                sample_gibbs(&spec, Window::unit(), &mcmc, RngSeed(17).child(i))
                    .unwrap()
                    .len() as u64
            })
            .sum();
        let mean = total as f64 / n_rep as f64;
        let se = (200.0 / n_rep as f64).sqrt();
        assert!(
            (mean - 200.0).abs() < 3.0 * se,
            "mean {mean} vs 200 (se {se})"
        );
    }

    #[test]
    fn strauss_repulsion_lowers_pair_counts() {
        use crate::geom::close_pair_count;
        let spec = ModelSpec::Strauss {
            beta: 200.0,
            gamma: 0.3,
            r: 0.05,
        };
        let mcmc = McmcConfig::with_steps(20_000);
        let n_rep = 100;
        let mut strauss_pairs = 0.0;
        let mut strauss_count = 0.0;
        for i in 0..n_rep {
            let p = sample_gibbs(&spec, Window::unit(), &mcmc, RngSeed(23).child(i)).unwrap();
            strauss_pairs += close_pair_count(&p, 0.05).unwrap() as f64;
            strauss_count += p.len() as f64;
        }
        let matched_lambda = strauss_count / n_rep as f64;
        let mut poisson_pairs = 0.0;
        for i in 0..n_rep {
            let p = sample_poisson(matched_lambda, Window::unit(), RngSeed(24).child(i)).unwrap();
            poisson_pairs += close_pair_count(&p, 0.05).unwrap() as f64;
        }
        let strauss_mean = strauss_pairs / n_rep as f64;
        let poisson_mean = poisson_pairs / n_rep as f64;
        assert!(
            strauss_mean < poisson_mean,
            "repulsive pattern should have fewer close pairs: strauss {strauss_mean} vs poisson {poisson_mean}",
        );
    }

    #[test]
    fn chain_count_distribution_matches_density() {
        // detailed-balance smoke test on a discretized state space: with a
        // tiny window the chain count spends its time across {0, 1, 2, ...}
        // in proportion to the unnormalized Poisson weights (beta*A)^n / n!.
        let spec = ModelSpec::Strauss {
            beta: 0.8,
            gamma: 1.0,
            r: 0.05,
        };
        let window = Window::unit();
        let mcmc = McmcConfig {
            n_steps: 2_000,
            ..Default::default()
        };
        // run many short independent chains and histogram the final count
        let n_rep = 40_000u64;
        let mut hist = [0u64; 16];
        for i in 0..n_rep {
            let p = sample_gibbs(&spec, window, &mcmc, RngSeed(71).child(i)).unwrap();
            let n = p.len().min(hist.len() - 1);
            hist[n] += 1;
        }
        let p0 = hist[0] as f64 / n_rep as f64;
        let p1 = hist[1] as f64 / n_rep as f64;
        let p2 = hist[2] as f64 / n_rep as f64;
        // target ratios: pi(1)/pi(0) = beta*A, pi(2)/pi(1) = beta*A/2
        assert!(
            (p1 / p0 - 0.8).abs() < 0.02 * 0.8 + 0.02,
            "pi(1)/pi(0) = {} vs 0.8",
            p1 / p0
        );
        assert!(
            (p2 / p1 - 0.4).abs() < 0.02 * 0.4 + 0.02,
            "pi(2)/pi(1) = {} vs 0.4",
            p2 / p1
        );
    }
}
