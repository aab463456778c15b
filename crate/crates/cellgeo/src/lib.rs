//! Spatial point-process modeling of cellular base-station deployments.
//!
//! The crate simulates, fits, classifies, and statistically tests six
//! point-process families against observed or synthetic station
//! coordinates, and evaluates the downstream SINR coverage probability of
//! any pattern:
//!
//! - **Poisson** (complete spatial randomness) with an exact sampler;
//! - the Gibbs families **Strauss**, **Strauss hard-core**, **Poisson
//!   hard-core**, and **Geyer saturation**, simulated by a
//!   Metropolis-Hastings birth/death/shift chain and fitted by maximum
//!   pseudolikelihood;
//! - the **Matern cluster** process with an exact sampler and a
//!   minimum-contrast fit on the K-function.
//!
//! The narrative guide lives in `book/`; its code snippets are the
//! doc-tests below and on the public items, so `cargo test` keeps the
//! book honest.
//!
//! # Quick tour
//!
//! Simulate a clustered pattern, check that the L-function sits above the
//! Poisson diagonal, and test it against a fitted Poisson null:
//!
//! ```
//! use cellgeo::geom::Window;
//! use cellgeo::sim::{sample_matern_cluster, McmcConfig};
//! use cellgeo::stats::{classify_pattern, InteractionVerdict};
//! use cellgeo::fit::fit_poisson;
//! use cellgeo::gof::{build_envelope, test_curve, Statistic};
//! use cellgeo::stats::even_grid;
//! use cellgeo::seed::RngSeed;
//!
//! // 40 parent clusters, mean 6 daughters within radius 0.04
//! let pattern = sample_matern_cluster(
//!     40.0, 0.04, 6.0, Window::unit(), RngSeed(7),
//! )?;
//! assert_eq!(
//!     classify_pattern(&pattern, 0.15)?,
//!     InteractionVerdict::Clustered,
//! );
//!
//! let null = fit_poisson(&pattern);
//! let grid = even_grid(0.15, 10);
//! let envelope = build_envelope(
//!     &null, &Statistic::L, &grid, 99, 5,
//!     &McmcConfig::default(), RngSeed(8),
//! )?;
//! assert_eq!(envelope.alpha, 0.1); // 2 * nrank / (1 + nsim)
//!
//! let observed = Statistic::L.evaluate(&pattern, &grid, RngSeed(0))?;
//! let report = test_curve(&observed, &envelope)?;
//! assert!(report.rejected, "clustered data is not Poisson");
//! # Ok::<(), cellgeo::error::Error>(())
//! ```
//!
//! Evaluate the coverage probability of a pattern under Rayleigh fading:
//!
//! ```
//! use cellgeo::geom::Window;
//! use cellgeo::radio::{coverage_curve, ChannelConfig, UserPlacement};
//! use cellgeo::sim::sample_poisson;
//! use cellgeo::seed::RngSeed;
//!
//! let pattern = sample_poisson(500.0, Window::unit(), RngSeed(1))?;
//! let curve = coverage_curve(
//!     &pattern,
//!     &[-10.0, 0.0, 10.0],             // thresholds in dB
//!     &UserPlacement::default(),        // 1000 users, central 2/3 region
//!     &ChannelConfig::default(),        // P=1, alpha=4, W=0, Rayleigh on
//!     RngSeed(2),
//! )?;
//! let at_zero_db = curve.values[1].unwrap();
//! assert!(at_zero_db > 0.4 && at_zero_db < 0.7);
//! # Ok::<(), cellgeo::error::Error>(())
//! ```

// `!(x > 0.0)`-style guards are deliberate: they treat NaN as invalid,
// which `x <= 0.0` would silently accept
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fit;
pub mod geom;
pub mod gof;
pub mod io;
pub mod models;
pub mod radio;
pub mod seed;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
