//! SINR and coverage-probability evaluation of a point pattern.
//!
//! A user connects to its nearest base station; the SINR is
//! `P h_k d_k^-alpha / (W + sum_{i != k} P h_i d_i^-alpha)` with per-station
//! gains `h_i` combining optional Rayleigh fading (Exp(1)) and optional
//! lognormal shadowing (`10^(X/10)`, `X ~ N(0, sigma^2)` in dB).
//! Association is strictly nearest-distance, independent of the fading
//! draws.

use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, Window};
use crate::seed::RngSeed;
use crate::stats::{CurveKind, SummaryCurve};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Radio channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Transmit power per base station, linear units.
    pub tx_power: f64,
    /// Path-loss exponent; must exceed 2 (outdoor condition).
    pub path_loss_alpha: f64,
    /// Noise power, linear units; 0 gives the interference-limited regime.
    pub noise: f64,
    /// Lognormal shadowing standard deviation in dB; 0 disables shadowing.
    pub shadowing_sigma_db: f64,
    /// Rayleigh fading on/off.
    pub rayleigh: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            tx_power: 1.0,
            path_loss_alpha: 4.0,
            noise: 0.0,
            shadowing_sigma_db: 0.0,
            rayleigh: true,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power > 0.0) {
            return Err(Error::config("tx power must be > 0"));
        }
        if !(self.path_loss_alpha > 2.0) {
            return Err(Error::config(
                "path-loss exponent must exceed 2 for a finite interference field",
            ));
        }
        if !(self.noise >= 0.0) || !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::config("noise and shadowing sigma must be >= 0"));
        }
        Ok(())
    }
}

/// Where the evaluation users are placed: uniformly in the central
/// sub-window covering `region_fraction` of each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPlacement {
    pub n_users: usize,
    pub region_fraction: f64,
}

impl Default for UserPlacement {
    fn default() -> Self {
        // central 2/3 x 2/3 region mitigates window edge effects
        UserPlacement {
            n_users: 1000,
            region_fraction: 2.0 / 3.0,
        }
    }
}

impl UserPlacement {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::config("n_users must be >= 1"));
        }
        if !(self.region_fraction > 0.0 && self.region_fraction <= 1.0) {
            return Err(Error::config("region fraction must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn region(&self, window: &Window) -> Window {
        let mx = window.width() * (1.0 - self.region_fraction) / 2.0;
        let my = window.height() * (1.0 - self.region_fraction) / 2.0;
        Window {
            x_min: window.x_min + mx,
            x_max: window.x_max - mx,
            y_min: window.y_min + my,
            y_max: window.y_max - my,
        }
    }
}

fn draw_gain(channel: &ChannelConfig, rng: &mut ChaCha8Rng) -> f64 {
    let mut h = 1.0;
    if channel.rayleigh {
        let e: f64 = Exp1.sample(rng);
        h *= e;
    }
    if channel.shadowing_sigma_db > 0.0 {
        let x: f64 = StandardNormal.sample(rng);
        h *= 10f64.powf(x * channel.shadowing_sigma_db / 10.0);
    }
    h
}

/// SINR at `user` with fresh fading/shadowing draws from `rng`.
pub fn sinr_at_user_with_rng(
    pattern: &PointPattern,
    user: &Point,
    channel: &ChannelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    channel.validate()?;
    if pattern.is_empty() {
        return Err(Error::data("SINR requires at least one base station"));
    }
    if !pattern.window().contains(user) {
        return Err(Error::data("user lies outside the pattern window"));
    }
    // serving station: argmin of distance, before any gain draw
    let mut serving = 0usize;
    let mut d_min = f64::INFINITY;
    for (i, p) in pattern.points().iter().enumerate() {
        let d = p.dist(user);
        if d < d_min {
            d_min = d;
            serving = i;
        }
    }
    if d_min == 0.0 {
        return Err(Error::data(
            "user coincides with a base station: singular path loss",
        ));
    }
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, p) in pattern.points().iter().enumerate() {
        let h = draw_gain(channel, rng);
        let rx = channel.tx_power * h * p.dist(user).powf(-channel.path_loss_alpha);
        if i == serving {
            signal = rx;
        } else {
            interference += rx;
        }
    }
    Ok(signal / (channel.noise + interference))
}

/// SINR at `user` from a fixed seed.
pub fn sinr_at_user(
    pattern: &PointPattern,
    user: &Point,
    channel: &ChannelConfig,
    seed: RngSeed,
) -> Result<f64> {
    sinr_at_user_with_rng(pattern, user, channel, &mut seed.rng())
}

const USER_REDRAW_LIMIT: usize = 100;

/// Empirical coverage probability curve: the fraction of users whose
/// SINR exceeds each threshold. Thresholds are in dB
/// (`T_linear = 10^(T_dB / 10)`); the curve grid stays in dB.
///
/// Users are placed uniformly in the central region; each user gets fresh
/// fading/shadowing draws. A user landing exactly on a station is
/// redrawn (bounded retries).
pub fn coverage_curve(
    pattern: &PointPattern,
    thresholds_db: &[f64],
    placement: &UserPlacement,
    channel: &ChannelConfig,
    seed: RngSeed,
) -> Result<SummaryCurve> {
    channel.validate()?;
    placement.validate()?;
    if pattern.is_empty() {
        return Err(Error::data("coverage requires at least one base station"));
    }
    if thresholds_db.windows(2).any(|w| w[1] <= w[0]) || thresholds_db.is_empty() {
        return Err(Error::config("thresholds must be strictly ascending"));
    }
    let region = placement.region(pattern.window());
    let mut rng = seed.rng();
    let mut sinrs = Vec::with_capacity(placement.n_users);
    for _ in 0..placement.n_users {
        let mut placed = false;
        for _ in 0..USER_REDRAW_LIMIT {
            let user = Point {
                x: rng.gen_range(region.x_min..=region.x_max),
                y: rng.gen_range(region.y_min..=region.y_max),
            };
            match sinr_at_user_with_rng(pattern, &user, channel, &mut rng) {
                Ok(s) => {
                    sinrs.push(s);
                    placed = true;
                    break;
                }
                Err(Error::Data(_)) => continue, // on-station user: redraw
                Err(e) => return Err(e),
            }
        }
        if !placed {
            return Err(Error::numerical(
                "could not place a user off the stations within the retry budget",
            ));
        }
    }
    let n = sinrs.len() as f64;
    let values = thresholds_db
        .iter()
        .map(|&t_db| {
            let t_lin = 10f64.powf(t_db / 10.0);
            Some(sinrs.iter().filter(|&&s| s > t_lin).count() as f64 / n)
        })
        .collect();
    SummaryCurve::new(CurveKind::Coverage, thresholds_db.to_vec(), values)
}
