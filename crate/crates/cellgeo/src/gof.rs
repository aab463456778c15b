//! Pointwise Monte Carlo envelopes and goodness-of-fit tests.
//!
//! An envelope is built from `nsim` simulated realizations of a fitted
//! model: at each grid point the `nrank` highest and `nrank` lowest
//! statistic values are discarded and the surviving extremes become the
//! bounds. The implied significance of the one-point test is
//! `alpha = 2 * nrank / (1 + nsim)` (599 simulations with rank 30 give a
//! 90% envelope).
//!
//! The test rejects when the observed curve leaves the envelope at any
//! grid point. Because the envelope is pointwise, testing a whole grid
//! at once has effective size larger than `alpha`; the calibration is
//! exact only for a single pre-chosen grid point.

use crate::error::{Error, Result};
use crate::geom::PointPattern;
use crate::models::FittedModel;
use crate::radio::{coverage_curve, ChannelConfig, UserPlacement};
use crate::seed::RngSeed;
use crate::sim::{sample_model, McmcConfig};
use crate::stats::{g_function, k_function, l_function, CurveKind, SummaryCurve};
use serde::{Deserialize, Serialize};

/// Which summary statistic an envelope is built on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "statistic", rename_all = "snake_case")]
pub enum Statistic {
    G,
    K,
    L,
    Coverage {
        placement: UserPlacement,
        channel: ChannelConfig,
    },
}

impl Statistic {
    pub fn kind(&self) -> CurveKind {
        match self {
            Statistic::G => CurveKind::G,
            Statistic::K => CurveKind::K,
            Statistic::L => CurveKind::L,
            Statistic::Coverage { .. } => CurveKind::Coverage,
        }
    }

    /// Evaluate this statistic on one pattern. For coverage the grid is
    /// in dB thresholds and `seed` drives the user and channel draws;
    /// the distance statistics are deterministic in the pattern.
    pub fn evaluate(
        &self,
        pattern: &PointPattern,
        grid: &[f64],
        seed: RngSeed,
    ) -> Result<SummaryCurve> {
        match self {
            Statistic::G => g_function(pattern, grid),
            Statistic::K => k_function(pattern, grid),
            Statistic::L => l_function(pattern, grid),
            Statistic::Coverage { placement, channel } => {
                coverage_curve(pattern, grid, placement, channel, seed)
            }
        }
    }
}

/// Pointwise simulation envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nsim: usize,
    pub nrank: usize,
    pub alpha: f64,
}

/// Significance level implied by the envelope ranks.
pub fn envelope_alpha(nsim: usize, nrank: usize) -> f64 {
    2.0 * nrank as f64 / (1.0 + nsim as f64)
}

/// Simulate `nsim` patterns from a fitted model with per-replicate child
/// seeds. Gibbs families run the Metropolis-Hastings sampler with `mcmc`.
pub fn simulate_replicates(
    model: &FittedModel,
    nsim: usize,
    mcmc: &McmcConfig,
    seed: RngSeed,
) -> Result<Vec<PointPattern>> {
    (0..nsim)
        .map(|i| sample_model(&model.spec, model.fit_window, mcmc, seed.child(i as u64)))
        .collect()
}

/// Fraction of simulations allowed to miss a grid point before the
/// envelope build fails.
const MISSING_TOLERANCE: f64 = 0.10;

/// Build an envelope from pre-simulated replicate patterns.
///
/// A replicate on which the statistic cannot be evaluated at a grid point
/// (too few points, say) counts as missing there; grid points missing in
/// more than 10% of replicates fail the build.
pub fn envelope_from_replicates(
    replicates: &[PointPattern],
    statistic: &Statistic,
    grid: &[f64],
    nrank: usize,
    seed: RngSeed,
) -> Result<Envelope> {
    let nsim = replicates.len();
    if nrank == 0 || nsim < 2 * nrank + 1 {
        return Err(Error::config(format!(
            "need nsim >= 2*nrank + 1 surviving curves, got nsim={nsim}, nrank={nrank}"
        )));
    }
    let mut per_point: Vec<Vec<f64>> = vec![Vec::with_capacity(nsim); grid.len()];
    for (i, pattern) in replicates.iter().enumerate() {
        // evaluation failures (e.g. an empty simulated pattern) count as
        // missing at every grid point
        let curve = statistic.evaluate(pattern, grid, seed.child(i as u64));
        if let Ok(curve) = curve {
            for (k, v) in curve.values.iter().enumerate() {
                if let Some(v) = v {
                    per_point[k].push(*v);
                }
            }
        }
    }

    let mut undefined = Vec::new();
    for (k, vals) in per_point.iter().enumerate() {
        if (nsim - vals.len()) as f64 > MISSING_TOLERANCE * nsim as f64 {
            undefined.push(grid[k]);
        }
    }
    if !undefined.is_empty() {
        return Err(Error::numerical(format!(
            "statistic undefined in more than {:.0}% of simulations at grid points {undefined:?}",
            MISSING_TOLERANCE * 100.0
        )));
    }

    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for vals in per_point.iter_mut() {
        if vals.len() < 2 * nrank + 1 {
            return Err(Error::numerical(
                "too few defined statistic values to rank the envelope",
            ));
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lower.push(vals[nrank]);
        upper.push(vals[vals.len() - 1 - nrank]);
    }

    Ok(Envelope {
        kind: statistic.kind(),
        grid: grid.to_vec(),
        lower,
        upper,
        nsim,
        nrank,
        alpha: envelope_alpha(nsim, nrank),
    })
}

/// Simulate from the model and build the envelope in one call.
pub fn build_envelope(
    model: &FittedModel,
    statistic: &Statistic,
    grid: &[f64],
    nsim: usize,
    nrank: usize,
    mcmc: &McmcConfig,
    seed: RngSeed,
) -> Result<Envelope> {
    let replicates = simulate_replicates(model, nsim, mcmc, seed.child(0))?;
    envelope_from_replicates(&replicates, statistic, grid, nrank, seed.child(1))
}

/// Outcome of testing an observed curve against an envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: CurveKind,
    pub rejected: bool,
    /// Maximal runs of consecutive grid points where the observed curve
    /// leaves the envelope, as `(first_r, last_r)` grid values.
    pub exceedance_intervals: Vec<(f64, f64)>,
}

/// Pointwise envelope test: reject when the observed curve lies below
/// the lower or above the upper bound at any grid point.
pub fn test_curve(observed: &SummaryCurve, envelope: &Envelope) -> Result<TestReport> {
    if observed.grid.len() != envelope.grid.len()
        || observed
            .grid
            .iter()
            .zip(&envelope.grid)
            .any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(Error::config(
            "observed curve and envelope are on different grids",
        ));
    }
    let mut intervals = Vec::new();
    let mut run_start: Option<usize> = None;
    for (k, v) in observed.values.iter().enumerate() {
        let exceeds = match v {
            Some(v) => *v < envelope.lower[k] || *v > envelope.upper[k],
            None => false,
        };
        match (exceeds, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(s)) => {
                intervals.push((observed.grid[s], observed.grid[k - 1]));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        intervals.push((observed.grid[s], *observed.grid.last().unwrap()));
    }
    Ok(TestReport {
        statistic: observed.kind,
        rejected: !intervals.is_empty(),
        exceedance_intervals: intervals,
    })
}
