use cellgeo::cli::{
    fit_family, ingest, observed_curve, parse_families, parse_thresholds, run_pipeline, CoordMode,
    Family, PipelineConfig,
};
use cellgeo::error::{Error, Result};
use cellgeo::fit::fit_poisson;
use cellgeo::geom::{rescale_to_unit, PointPattern, Window};
use cellgeo::gof::{
    envelope_from_replicates, simulate_replicates, test_curve, Statistic,
};
use cellgeo::io;
use cellgeo::models::ModelSpec;
use cellgeo::radio::{ChannelConfig, UserPlacement};
use cellgeo::seed::RngSeed;
use cellgeo::sim::{sample_model, McmcConfig};
use cellgeo::stats::{classify_pattern, even_grid, survey_subregions};
use clap::{Args, Parser, Subcommand};
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "cellgeo", version, about = "Spatial point-process analysis of base-station deployments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: ingest, classify, fit, envelope-test, summarize
    Run(RunArgs),
    /// Simulate one realization of a model and write it as CSV
    Simulate(SimulateArgs),
    /// Classify a pattern as clustered / repulsive / neither
    Classify(ClassifyArgs),
    /// Fit model families to a pattern
    Fit(FitArgs),
    /// Build a simulation envelope for one family and test the data against it
    Envelope(EnvelopeArgs),
    /// Coverage probability curve of the observed pattern
    Coverage(CoverageArgs),
    /// Survey random subregions and report clustering/repulsion fractions
    Survey(SurveyArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Station CSV (header `id,x,y` planar or `id,lon,lat` geographic)
    #[arg(long)]
    input: PathBuf,
    /// Coordinate mode: planar | geographic
    #[arg(long, default_value = "planar")]
    mode: String,
}

impl InputArgs {
    fn load_normalized(&self) -> Result<PointPattern> {
        let mode: CoordMode = self.mode.parse()?;
        let ingested = ingest(&self.input, mode)?;
        if ingested.duplicates > 0 {
            eprintln!("warning: {} duplicate coordinate record(s) kept", ingested.duplicates);
        }
        rescale_to_unit(&ingested.pattern)
    }
}

#[derive(Args)]
struct ChannelArgs {
    /// Path-loss exponent (must exceed 2)
    #[arg(long = "alpha-pathloss", default_value_t = 4.0)]
    alpha_pathloss: f64,
    /// Lognormal shadowing standard deviation in dB (0 disables)
    #[arg(long = "sigma-shadow", default_value_t = 0.0)]
    sigma_shadow: f64,
    /// Noise power, linear units
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Disable Rayleigh fading
    #[arg(long = "no-rayleigh", default_value_t = false)]
    no_rayleigh: bool,
    /// Number of evaluation users
    #[arg(long = "n-users", default_value_t = 1000)]
    n_users: usize,
}

impl ChannelArgs {
    fn channel(&self) -> ChannelConfig {
        ChannelConfig {
            tx_power: 1.0,
            path_loss_alpha: self.alpha_pathloss,
            noise: self.noise,
            shadowing_sigma_db: self.sigma_shadow,
            rayleigh: !self.no_rayleigh,
        }
    }

    fn placement(&self) -> UserPlacement {
        UserPlacement {
            n_users: self.n_users,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated families: poisson,strauss,sh,phcp,geyer,mcp
    #[arg(long, default_value = "poisson,geyer,mcp")]
    families: String,
    #[arg(long, default_value_t = 99)]
    nsim: usize,
    #[arg(long, default_value_t = 5)]
    nrank: usize,
    #[arg(long, env = "CELLGEO_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Coverage thresholds in dB: `min:max:count` or a comma list
    #[arg(long, default_value = "-10:20:16")]
    thresholds: String,
    /// L-statistic grid maximum (normalized units)
    #[arg(long = "grid-max", default_value_t = 0.15)]
    grid_max: f64,
    /// L-statistic grid size
    #[arg(long = "grid-n", default_value_t = 12)]
    grid_n: usize,
    /// Metropolis-Hastings steps per Gibbs simulation
    #[arg(long = "mcmc-steps", default_value_t = 20_000)]
    mcmc_steps: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model as JSON, e.g. '{"family":"poisson","lambda":300}'
    #[arg(long = "spec-json", conflicts_with = "spec_file")]
    spec_json: Option<String>,
    /// Path to a model JSON file (same schema as fit output `spec`)
    #[arg(long = "spec-file")]
    spec_file: Option<PathBuf>,
    /// Window as `x_min,x_max,y_min,y_max`
    #[arg(long, default_value = "0,1,0,1")]
    window: String,
    #[arg(long, env = "CELLGEO_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long = "mcmc-steps", default_value_t = 100_000)]
    mcmc_steps: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Classification interval maximum (normalized units)
    #[arg(long = "interval-max", default_value_t = 0.15)]
    interval_max: f64,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "poisson,geyer,mcp")]
    families: String,
    /// Output directory for fit_<family>.json files
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Family to fit and simulate from
    #[arg(long)]
    family: String,
    /// Statistic: l | g | k | coverage
    #[arg(long, default_value = "l")]
    statistic: String,
    #[arg(long, default_value_t = 99)]
    nsim: usize,
    #[arg(long, default_value_t = 5)]
    nrank: usize,
    #[arg(long, env = "CELLGEO_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long = "grid-max", default_value_t = 0.15)]
    grid_max: f64,
    #[arg(long = "grid-n", default_value_t = 12)]
    grid_n: usize,
    #[arg(long, default_value = "-10:20:16")]
    thresholds: String,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long = "mcmc-steps", default_value_t = 20_000)]
    mcmc_steps: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "-10:20:16")]
    thresholds: String,
    #[arg(long, env = "CELLGEO_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Output CSV path (a .json twin is written alongside)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SurveyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long = "n-subregions", default_value_t = 1000)]
    n_subregions: usize,
    #[arg(long = "count-min", default_value_t = 60)]
    count_min: usize,
    #[arg(long = "count-max", default_value_t = 220)]
    count_max: usize,
    /// Subregion side range; defaults derive from the pattern intensity
    /// so expected counts straddle the count range
    #[arg(long = "side-min")]
    side_min: Option<f64>,
    #[arg(long = "side-max")]
    side_max: Option<f64>,
    #[arg(long = "interval-max", default_value_t = 0.15)]
    interval_max: f64,
    #[arg(long, env = "CELLGEO_SEED", default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

fn parse_window(s: &str) -> Result<Window> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::config(format!("bad window component '{t}'")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != 4 {
        return Err(Error::config("window must be x_min,x_max,y_min,y_max"));
    }
    Window::new(vals[0], vals[1], vals[2], vals[3])
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = PipelineConfig::new(
        args.input.input.clone(),
        args.input.mode.parse()?,
        args.out,
        RngSeed(args.seed),
    );
    config.families = parse_families(&args.families)?;
    config.nsim = args.nsim;
    config.nrank = args.nrank;
    config.thresholds_db = parse_thresholds(&args.thresholds)?;
    config.channel = args.channel.channel();
    config.placement = args.channel.placement();
    config.grid_max = args.grid_max;
    config.grid_n = args.grid_n;
    config.mcmc = McmcConfig::with_steps(args.mcmc_steps);
    let summary = run_pipeline(&config)?;
    let non_rejected: Vec<&str> = summary.non_rejected.iter().map(|f| f.name()).collect();
    println!(
        "classification: {:?}; non-rejected models: [{}]",
        summary.classification,
        non_rejected.join(", ")
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let json = match (&args.spec_json, &args.spec_file) {
        (Some(j), _) => j.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)?,
        (None, None) => return Err(Error::config("provide --spec-json or --spec-file")),
    };
    let spec: ModelSpec = serde_json::from_str(&json)?;
    spec.validate()?;
    let window = parse_window(&args.window)?;
    let mcmc = McmcConfig::with_steps(args.mcmc_steps);
    let pattern = sample_model(&spec, window, &mcmc, RngSeed(args.seed))?;
    io::write_pattern_csv(&pattern, &args.out)?;
    println!("simulated {} points from {}", pattern.len(), spec.family_name());
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let pattern = args.input.load_normalized()?;
    let verdict = classify_pattern(&pattern, args.interval_max)?;
    io::write_json(
        &serde_json::json!({
            "verdict": verdict,
            "interval_max": args.interval_max,
            "n_points": pattern.len(),
        }),
        &args.out,
    )?;
    println!("{verdict:?}");
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let pattern = args.input.load_normalized()?;
    std::fs::create_dir_all(&args.out)?;
    for family in parse_families(&args.families)? {
        let fitted = fit_family(&pattern, family)?;
        let path = args.out.join(format!("fit_{}.json", family.name()));
        io::write_json(&fitted, &path)?;
        println!("{}: {}", family.name(), serde_json::to_string(&fitted.spec)?);
    }
    Ok(())
}

fn cmd_envelope(args: EnvelopeArgs) -> Result<()> {
    let pattern = args.input.load_normalized()?;
    let family: Family = args.family.parse()?;
    let fitted = if family == Family::Poisson {
        fit_poisson(&pattern)
    } else {
        fit_family(&pattern, family)?
    };
    let (statistic, grid) = match args.statistic.as_str() {
        "l" => (Statistic::L, even_grid(args.grid_max, args.grid_n)),
        "g" => (Statistic::G, even_grid(args.grid_max, args.grid_n)),
        "k" => (Statistic::K, even_grid(args.grid_max, args.grid_n)),
        "coverage" => (
            Statistic::Coverage {
                placement: args.channel.placement(),
                channel: args.channel.channel(),
            },
            parse_thresholds(&args.thresholds)?,
        ),
        other => return Err(Error::config(format!("unknown statistic '{other}'"))),
    };
    let seed = RngSeed(args.seed);
    let mcmc = McmcConfig::with_steps(args.mcmc_steps);
    let replicates = simulate_replicates(&fitted, args.nsim, &mcmc, seed.child(0))?;
    let envelope =
        envelope_from_replicates(&replicates, &statistic, &grid, args.nrank, seed.child(1))?;
    let observed = observed_curve(&pattern, &statistic, &grid, seed.child(2))?;
    let report = test_curve(&observed, &envelope)?;
    std::fs::create_dir_all(&args.out)?;
    let stem = format!("envelope_{}_{}", family.name(), args.statistic);
    io::write_envelope_csv(&envelope, Some(&observed), &args.out.join(format!("{stem}.csv")))?;
    io::write_json(&envelope, &args.out.join(format!("{stem}.json")))?;
    io::write_json(&report, &args.out.join(format!("test_{}_{}.json", family.name(), args.statistic)))?;
    println!(
        "alpha={}, rejected={}",
        envelope.alpha, report.rejected
    );
    Ok(())
}

fn cmd_coverage(args: CoverageArgs) -> Result<()> {
    let pattern = args.input.load_normalized()?;
    let thresholds = parse_thresholds(&args.thresholds)?;
    let curve = cellgeo::radio::coverage_curve(
        &pattern,
        &thresholds,
        &args.channel.placement(),
        &args.channel.channel(),
        RngSeed(args.seed),
    )?;
    io::write_curve_csv(&curve, &args.out)?;
    io::write_json(&curve, &args.out.with_extension("json"))?;
    Ok(())
}

fn cmd_survey(args: SurveyArgs) -> Result<()> {
    let mode: CoordMode = args.input.mode.parse()?;
    let ingested = ingest(&args.input.input, mode)?;
    let pattern = ingested.pattern;
    let w = pattern.window();
    let intensity = pattern.intensity();
    if intensity <= 0.0 {
        return Err(Error::data("survey requires a nonempty pattern"));
    }
    // default side range: expected counts span the count range
    let side_min = args
        .side_min
        .unwrap_or_else(|| (args.count_min as f64 / intensity).sqrt())
        .min(w.shorter_side());
    let side_max = args
        .side_max
        .unwrap_or_else(|| (args.count_max as f64 / intensity).sqrt())
        .min(w.shorter_side());
    let result = survey_subregions(
        &pattern,
        args.n_subregions,
        (args.count_min, args.count_max),
        (side_min, side_max),
        args.interval_max,
        RngSeed(args.seed),
    )?;
    if !result.complete {
        eprintln!(
            "warning: only {}/{} subregions qualified within {} attempts",
            result.classified, result.requested, result.attempts
        );
    }
    let mut f = std::fs::File::create(&args.out)?;
    writeln!(f, "region,point_count,area,clustered_pct,repulsive_pct,neither_pct")?;
    let region = args
        .input
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    writeln!(
        f,
        "{region},{},{},{},{},{}",
        pattern.len(),
        w.area(),
        100.0 * result.clustered_fraction(),
        100.0 * result.repulsive_fraction(),
        100.0 * result.neither_fraction(),
    )?;
    println!(
        "classified {} subregions: {:.2}% clustered, {:.2}% repulsive",
        result.classified,
        100.0 * result.clustered_fraction(),
        100.0 * result.repulsive_fraction()
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Envelope(args) => cmd_envelope(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::Survey(args) => cmd_survey(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
