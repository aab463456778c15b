//! Pipeline front end: coordinate ingestion, default fitting recipes per
//! family, and the end-to-end analyze pipeline
//! (ingest -> classify -> fit -> envelope tests -> summary).

use crate::error::{Error, Result};
use crate::fit::{
    fit_matern_cluster, fit_poisson, fit_profile, GibbsFamilyKind, ProfileGrid, QuadratureScheme,
};
use crate::geom::{rescale_to_unit, Point, PointPattern};
use crate::gof::{envelope_from_replicates, simulate_replicates, test_curve, Statistic};
use crate::io;
use crate::models::FittedModel;
use crate::radio::{coverage_curve, ChannelConfig, UserPlacement};
use crate::seed::RngSeed;
use crate::sim::McmcConfig;
use crate::stats::{classify_pattern, even_grid, InteractionVerdict, SummaryCurve};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Coordinate interpretation of the input CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordMode {
    /// `id,x,y` rows already in planar units.
    Planar,
    /// `id,lon,lat` rows in degrees, projected to km.
    Geographic,
}

impl std::str::FromStr for CoordMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planar" => Ok(CoordMode::Planar),
            "geographic" | "geo" => Ok(CoordMode::Geographic),
            other => Err(Error::config(format!("unknown coordinate mode '{other}'"))),
        }
    }
}

const EARTH_RADIUS_KM: f64 = 6371.0;

/// Result of ingesting a station file.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub pattern: PointPattern,
    /// Number of records sharing coordinates with an earlier record;
    /// duplicates are kept, this is a warning count.
    pub duplicates: usize,
}

/// Read a station CSV (`id,lon,lat` geographic or `id,x,y` planar) into
/// a point pattern on its bounding-box window.
///
/// Geographic coordinates are projected with an equirectangular map about
/// the data centroid: `x = R * dlon * cos(lat0)`, `y = R * dlat`, with
/// R = 6371 km. Distortion stays below about 0.5% for sub-province
/// extents at mid latitudes.
pub fn ingest(path: &Path, mode: CoordMode) -> Result<Ingested> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    // skip comment lines (e.g. the window header written by `simulate`)
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::data(format!("{}: empty file", path.display())))?;
    let expected = match mode {
        CoordMode::Planar => "id,x,y",
        CoordMode::Geographic => "id,lon,lat",
    };
    if header.trim() != expected {
        return Err(Error::data(format!(
            "{}: expected header '{expected}', found '{}'",
            path.display(),
            header.trim()
        )));
    }

    let mut raw: Vec<(f64, f64)> = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(malformed(path, lineno));
        }
        let a: f64 = parts[1].trim().parse().map_err(|_| malformed(path, lineno))?;
        let b: f64 = parts[2].trim().parse().map_err(|_| malformed(path, lineno))?;
        if !a.is_finite() || !b.is_finite() {
            return Err(malformed(path, lineno));
        }
        if mode == CoordMode::Geographic {
            let (lon, lat) = (a, b);
            if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
                return Err(Error::data(format!(
                    "{}: coordinates out of range at line {} (lon {lon}, lat {lat})",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        raw.push((a, b));
    }
    if raw.is_empty() {
        return Err(Error::data(format!(
            "{}: no station records",
            path.display()
        )));
    }

    let points: Vec<Point> = match mode {
        CoordMode::Planar => raw
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect::<Result<_>>()?,
        CoordMode::Geographic => {
            let n = raw.len() as f64;
            let lon0 = raw.iter().map(|r| r.0).sum::<f64>() / n;
            let lat0 = raw.iter().map(|r| r.1).sum::<f64>() / n;
            let cos_lat0 = lat0.to_radians().cos();
            raw.iter()
                .map(|&(lon, lat)| {
                    Point::new(
                        EARTH_RADIUS_KM * (lon - lon0).to_radians() * cos_lat0,
                        EARTH_RADIUS_KM * (lat - lat0).to_radians(),
                    )
                })
                .collect::<Result<_>>()?
        }
    };

    let mut duplicates = 0;
    for i in 0..points.len() {
        if points[..i]
            .iter()
            .any(|p| p.x == points[i].x && p.y == points[i].y)
        {
            duplicates += 1;
        }
    }

    let window = io::bounding_window(&points)?;
    Ok(Ingested {
        pattern: PointPattern::new(points, window)?,
        duplicates,
    })
}

fn malformed(path: &Path, lineno: usize) -> Error {
    Error::data(format!(
        "{}: malformed row at line {}",
        path.display(),
        lineno + 1
    ))
}

/// Model families selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poisson,
    Strauss,
    StraussHardCore,
    PoissonHardCore,
    Geyer,
    MaternCluster,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Strauss => "strauss",
            Family::StraussHardCore => "sh",
            Family::PoissonHardCore => "phcp",
            Family::Geyer => "geyer",
            Family::MaternCluster => "mcp",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "ppp" => Ok(Family::Poisson),
            "strauss" => Ok(Family::Strauss),
            "sh" | "strauss_hard_core" => Ok(Family::StraussHardCore),
            "phcp" | "poisson_hard_core" => Ok(Family::PoissonHardCore),
            "geyer" => Ok(Family::Geyer),
            "mcp" | "matern_cluster" => Ok(Family::MaternCluster),
            other => Err(Error::config(format!("unknown model family '{other}'"))),
        }
    }
}

/// Parse a comma-separated family list.
pub fn parse_families(s: &str) -> Result<Vec<Family>> {
    s.split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<Vec<Family>>>()
}

/// Fit one family to a pattern with the default grids: profile MPL for
/// Gibbs families (irregular grids scaled to the window and the minimum
/// inter-point distance), minimum contrast for the Matern cluster
/// process, closed form for Poisson.
pub fn fit_family(pattern: &PointPattern, family: Family) -> Result<FittedModel> {
    let side = pattern.window().shorter_side();
    let r_grid: Vec<f64> = [0.02, 0.03, 0.05, 0.08].iter().map(|f| f * side).collect();
    let d_min = pattern.min_pairwise_distance().unwrap_or(side / 10.0);
    // the profile pseudolikelihood of a hard-core distance increases up
    // to the minimum pairwise distance, so the grid reaches just below it
    let h_grid: Vec<f64> = [0.5, 0.75, 0.9, 0.99]
        .iter()
        .map(|f| f * d_min)
        .filter(|h| *h > 0.0)
        .collect();

    match family {
        Family::Poisson => Ok(fit_poisson(pattern)),
        Family::MaternCluster => {
            let mcp_r: Vec<f64> = (1..=15).map(|i| 0.01 * i as f64 * side).collect();
            fit_matern_cluster(pattern, &mcp_r, 600)
        }
        Family::Strauss => {
            let quad = QuadratureScheme::new(pattern)?;
            let grid = ProfileGrid {
                r: r_grid,
                ..Default::default()
            };
            fit_profile(pattern, GibbsFamilyKind::Strauss, &grid, &quad)
        }
        Family::StraussHardCore => {
            if h_grid.is_empty() {
                return Err(Error::data(
                    "pattern has coincident points: no hard-core model is feasible",
                ));
            }
            let quad = QuadratureScheme::new(pattern)?;
            let grid = ProfileGrid {
                r: r_grid,
                h_c: h_grid,
                ..Default::default()
            };
            fit_profile(pattern, GibbsFamilyKind::StraussHardCore, &grid, &quad)
        }
        Family::PoissonHardCore => {
            if h_grid.is_empty() {
                return Err(Error::data(
                    "pattern has coincident points: no hard-core model is feasible",
                ));
            }
            let quad = QuadratureScheme::new(pattern)?;
            let grid = ProfileGrid {
                h_c: h_grid,
                ..Default::default()
            };
            fit_profile(pattern, GibbsFamilyKind::PoissonHardCore, &grid, &quad)
        }
        Family::Geyer => {
            let quad = QuadratureScheme::new(pattern)?;
            let grid = ProfileGrid {
                r: r_grid,
                sat: vec![1, 2, 3, 4, 5],
                ..Default::default()
            };
            fit_profile(pattern, GibbsFamilyKind::GeyerSaturation, &grid, &quad)
        }
    }
}

/// Everything the end-to-end pipeline needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub mode: CoordMode,
    pub families: Vec<Family>,
    /// Maximum distance of the L grid (normalized units).
    pub grid_max: f64,
    /// Number of L grid points.
    pub grid_n: usize,
    /// Coverage thresholds in dB.
    pub thresholds_db: Vec<f64>,
    pub nsim: usize,
    pub nrank: usize,
    pub channel: ChannelConfig,
    pub placement: UserPlacement,
    pub mcmc: McmcConfig,
    pub seed: RngSeed,
    pub interval_max: f64,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input: PathBuf, mode: CoordMode, out_dir: PathBuf, seed: RngSeed) -> Self {
        PipelineConfig {
            input,
            mode,
            families: vec![Family::Poisson, Family::Geyer, Family::MaternCluster],
            grid_max: 0.15,
            grid_n: 12,
            thresholds_db: (-10..=20).step_by(2).map(f64::from).collect(),
            nsim: 99,
            nrank: 5,
            channel: ChannelConfig::default(),
            placement: UserPlacement::default(),
            mcmc: McmcConfig::with_steps(20_000),
            seed,
            interval_max: 0.15,
            out_dir,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::config("at least one family is required"));
        }
        if self.grid_n < 2 || !(self.grid_max > 0.0) {
            return Err(Error::config("invalid statistic grid"));
        }
        if self.nrank == 0 || self.nsim < 2 * self.nrank + 1 {
            return Err(Error::config("need nsim >= 2*nrank + 1"));
        }
        self.channel.validate()?;
        self.placement.validate()?;
        self.mcmc.validate()?;
        Ok(())
    }
}

/// Per-family verdicts in the pipeline summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyVerdict {
    pub family: Family,
    pub spec: crate::models::ModelSpec,
    pub rejected_l: bool,
    pub rejected_coverage: bool,
    pub rejected: bool,
}

/// Final pipeline summary naming the non-rejected models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub input: PathBuf,
    pub n_points: usize,
    pub duplicates: usize,
    pub classification: InteractionVerdict,
    pub alpha: f64,
    pub families: Vec<FamilyVerdict>,
    pub non_rejected: Vec<Family>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    completed_stages: Vec<String>,
    error: Option<String>,
}

/// Run the full pipeline, writing artifacts into `config.out_dir`. On a
/// stage failure, partial outputs are kept and the manifest records the
/// completed stages and the failing stage's error.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;
    let mut manifest = Manifest {
        completed_stages: Vec::new(),
        error: None,
    };
    let result = run_stages(config, &mut manifest);
    if let Err(e) = &result {
        manifest.error = Some(e.to_string());
    }
    io::write_json(&manifest, &config.out_dir.join("manifest.json"))?;
    result
}

fn run_stages(config: &PipelineConfig, manifest: &mut Manifest) -> Result<PipelineSummary> {
    let out = &config.out_dir;
    let stage_err = |stage: &str, e: Error| Error::data(format!("stage {stage}: {e}"));

    // ingest and normalize
    let ingested = ingest(&config.input, config.mode).map_err(|e| stage_err("ingest", e))?;
    let pattern = rescale_to_unit(&ingested.pattern).map_err(|e| stage_err("ingest", e))?;
    io::write_pattern_csv(&pattern, &out.join("pattern_normalized.csv"))?;
    manifest.completed_stages.push("ingest".into());

    // pre-judgement classification
    let classification = classify_pattern(&pattern, config.interval_max)
        .map_err(|e| stage_err("classify", e))?;
    io::write_json(
        &serde_json::json!({
            "verdict": classification,
            "interval_max": config.interval_max,
        }),
        &out.join("classification.json"),
    )?;
    manifest.completed_stages.push("classify".into());

    // fits
    let mut fits: Vec<(Family, FittedModel)> = Vec::new();
    for &family in &config.families {
        let fitted = fit_family(&pattern, family)
            .map_err(|e| stage_err(&format!("fit {}", family.name()), e))?;
        io::write_json(&fitted, &out.join(format!("fit_{}.json", family.name())))?;
        fits.push((family, fitted));
    }
    manifest.completed_stages.push("fit".into());

    // envelope tests on L and coverage, sharing one batch of simulations
    // per family
    let l_grid = even_grid(config.grid_max, config.grid_n);
    let coverage_stat = Statistic::Coverage {
        placement: config.placement,
        channel: config.channel,
    };
    let observed_l = Statistic::L
        .evaluate(&pattern, &l_grid, RngSeed(0))
        .map_err(|e| stage_err("envelope", e))?;
    let observed_cov = coverage_curve(
        &pattern,
        &config.thresholds_db,
        &config.placement,
        &config.channel,
        config.seed.child(1),
    )
    .map_err(|e| stage_err("envelope", e))?;

    let mut verdicts = Vec::new();
    for (idx, (family, fitted)) in fits.iter().enumerate() {
        let fam_seed = config.seed.child(1000 + idx as u64);
        let stage = format!("envelope {}", family.name());
        let replicates = simulate_replicates(fitted, config.nsim, &config.mcmc, fam_seed.child(0))
            .map_err(|e| stage_err(&stage, e))?;

        let env_l =
            envelope_from_replicates(&replicates, &Statistic::L, &l_grid, config.nrank, fam_seed.child(1))
                .map_err(|e| stage_err(&stage, e))?;
        let report_l = test_curve(&observed_l, &env_l).map_err(|e| stage_err(&stage, e))?;
        io::write_envelope_csv(
            &env_l,
            Some(&observed_l),
            &out.join(format!("envelope_{}_l.csv", family.name())),
        )?;
        io::write_json(&env_l, &out.join(format!("envelope_{}_l.json", family.name())))?;
        io::write_json(&report_l, &out.join(format!("test_{}_l.json", family.name())))?;

        let env_cov = envelope_from_replicates(
            &replicates,
            &coverage_stat,
            &config.thresholds_db,
            config.nrank,
            fam_seed.child(2),
        )
        .map_err(|e| stage_err(&stage, e))?;
        let report_cov = test_curve(&observed_cov, &env_cov).map_err(|e| stage_err(&stage, e))?;
        io::write_envelope_csv(
            &env_cov,
            Some(&observed_cov),
            &out.join(format!("envelope_{}_coverage.csv", family.name())),
        )?;
        io::write_json(
            &env_cov,
            &out.join(format!("envelope_{}_coverage.json", family.name())),
        )?;
        io::write_json(
            &report_cov,
            &out.join(format!("test_{}_coverage.json", family.name())),
        )?;

        verdicts.push(FamilyVerdict {
            family: *family,
            spec: fitted.spec.clone(),
            rejected_l: report_l.rejected,
            rejected_coverage: report_cov.rejected,
            rejected: report_l.rejected || report_cov.rejected,
        });
    }
    manifest.completed_stages.push("envelope".into());

    let summary = PipelineSummary {
        input: config.input.clone(),
        n_points: pattern.len(),
        duplicates: ingested.duplicates,
        classification,
        alpha: crate::gof::envelope_alpha(config.nsim, config.nrank),
        non_rejected: verdicts
            .iter()
            .filter(|v| !v.rejected)
            .map(|v| v.family)
            .collect(),
        families: verdicts,
    };
    io::write_json(&summary, &out.join("summary.json"))?;
    manifest.completed_stages.push("summary".into());
    Ok(summary)
}

/// Parse a threshold grid given as either `min:max:count` or a comma
/// list of dB values.
pub fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let values: Vec<f64> = if parts.len() == 3 {
        let min: f64 = parts[0]
            .parse()
            .map_err(|_| Error::config("bad threshold min"))?;
        let max: f64 = parts[1]
            .parse()
            .map_err(|_| Error::config("bad threshold max"))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::config("bad threshold count"))?;
        if count < 2 || !(max > min) {
            return Err(Error::config("threshold range needs max > min, count >= 2"));
        }
        (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect()
    } else {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("bad threshold '{t}'")))
            })
            .collect::<Result<_>>()?
    };
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("thresholds must be strictly ascending"));
    }
    Ok(values)
}

/// Observed summary curve of the pattern for a named statistic.
pub fn observed_curve(
    pattern: &PointPattern,
    statistic: &Statistic,
    grid: &[f64],
    seed: RngSeed,
) -> Result<SummaryCurve> {
    statistic.evaluate(pattern, grid, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_ingest_basic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.csv");
        std::fs::write(&path, "id,x,y\na,0.0,0.0\nb,1.0,0.5\nc,2.0,1.0\n").unwrap();
        let ing = ingest(&path, CoordMode::Planar).unwrap();
        assert_eq!(ing.pattern.len(), 3);
        assert_eq!(ing.duplicates, 0);
        let w = ing.pattern.window();
        assert_eq!((w.x_min, w.x_max, w.y_min, w.y_max), (0.0, 2.0, 0.0, 1.0));
    }

    #[test]
    fn geographic_projection_scales_lon_by_cos_lat() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("geo.csv");
        // all points at 60N: x spacing should be half the equatorial value
        std::fs::write(
            &path,
            "id,lon,lat\na,100.0,60.0\nb,100.1,60.0\nc,100.2,60.001\n",
        )
        .unwrap();
        let ing = ingest(&path, CoordMode::Geographic).unwrap();
        let pts = ing.pattern.points();
        let dx = pts[1].x - pts[0].x;
        // the projection uses the centroid latitude as reference
        let mean_lat: f64 = (60.0 + 60.0 + 60.001) / 3.0;
        let expected = EARTH_RADIUS_KM * 0.1f64.to_radians() * mean_lat.to_radians().cos();
        assert!((dx - expected).abs() < 1e-9, "{dx} vs {expected}");
    }

    #[test]
    fn out_of_range_latitude_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("geo.csv");
        std::fs::write(&path, "id,lon,lat\na,100.0,60.0\nb,100.1,95.0\n").unwrap();
        let err = ingest(&path, CoordMode::Geographic).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn duplicates_counted_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.csv");
        std::fs::write(&path, "id,x,y\na,0.5,0.5\nb,0.5,0.5\nc,1.0,1.0\n").unwrap();
        let ing = ingest(&path, CoordMode::Planar).unwrap();
        assert_eq!(ing.pattern.len(), 3);
        assert_eq!(ing.duplicates, 1);
    }

    #[test]
    fn threshold_parsing() {
        assert_eq!(parse_thresholds("-10:10:5").unwrap(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(parse_thresholds("-3,0,3").unwrap(), vec![-3.0, 0.0, 3.0]);
        assert!(parse_thresholds("3,0").is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!(
            parse_families("poisson, phcp, sh ,geyer,mcp").unwrap(),
            vec![
                Family::Poisson,
                Family::PoissonHardCore,
                Family::StraussHardCore,
                Family::Geyer,
                Family::MaternCluster
            ]
        );
        assert!(parse_families("poisson,klingon").is_err());
    }
}
