//! `mmloc`: command-line front end for the mmWave tracer, localizer and
//! Monte Carlo harness.
//!
//! Exit codes: 0 on success, 1 on invalid input or usage, 2 on I/O failure.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde_json::json;

use mmwave_loc::geometry::{load_map, IndoorMap, MapError};
use mmwave_loc::localization::{
    locate, read_observations_csv, write_observations_csv, ObservationFileError, PathObservation,
    DEFAULT_CLUSTER_THRESHOLD, DEFAULT_MAX_INTERACTIONS,
};
use mmwave_loc::raytracer::{TraceConfig, Tracer};
use mmwave_loc::simharness::{
    export_cdf, write_per_user_csv, write_summary_csv, Scenario, ScenarioFile, ScenarioFileError,
};
use mmwave_loc::Vec3;

#[derive(Debug, Parser)]
#[command(
    name = "mmloc",
    version,
    about = "Indoor mmWave ray tracing and map-assisted localization"
)]
struct Cli {
    /// Overrides the random seed of commands that draw random numbers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace all multipath components between two points and print them as CSV.
    Trace(TraceArgs),
    /// Localize a user from an observation CSV and print the fix as JSON.
    Locate(LocateArgs),
    /// Run a Monte Carlo scenario and write error tables and CDFs.
    Simulate(SimulateArgs),
    /// Check that a map file loads and is well formed.
    ValidateMap {
        /// Map file (JSON).
        file: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct TraceArgs {
    #[arg(long)]
    map: PathBuf,
    /// Transmitter position `x,y,z` in meters.
    #[arg(long)]
    tx: Point,
    /// Receiver position `x,y,z` in meters.
    #[arg(long)]
    rx: Point,
    /// Carrier frequency in Hz.
    #[arg(long, default_value_t = 73e9)]
    freq: f64,
    /// Icosphere subdivision factor for the launch grid.
    #[arg(long, default_value_t = 50)]
    tess: u32,
    #[arg(long, default_value_t = 0.0)]
    tx_power_dbm: f64,
    #[arg(long, default_value_t = -120.0)]
    min_power_dbm: f64,
    #[arg(long, default_value_t = 3)]
    max_reflections: u32,
    #[arg(long, default_value_t = 3)]
    max_transmissions: u32,
    /// Also write the components as downlink observations for `locate`.
    #[arg(long)]
    observations: Option<PathBuf>,
    /// Base-station id used in the observation file.
    #[arg(long, default_value_t = 0)]
    bs_id: u32,
}

#[derive(Debug, clap::Args)]
struct LocateArgs {
    #[arg(long)]
    map: PathBuf,
    /// Observation CSV: bs_id,bs_x,bs_y,bs_z,az_deg,el_deg,tof_ns.
    #[arg(long)]
    obs: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_INTERACTIONS)]
    max_interactions: u32,
    /// Clustering distance in meters.
    #[arg(long, default_value_t = DEFAULT_CLUSTER_THRESHOLD)]
    threshold: f64,
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy)]
struct Point(Vec3);

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("expected x,y,z: {e}"))?;
        match parts[..] {
            [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Point(Vec3::new(x, y, z))),
            _ => Err("expected three finite numbers x,y,z".into()),
        }
    }
}

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(e) | Failure::Io(e) => e,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn invalid<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Invalid(e.to_string())
}

fn io_failure<E: std::fmt::Display>(e: E, what: String) -> Failure {
    Failure::Io(format!("{what}: {e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Trace(args) => trace(&args),
        Command::Locate(args) => locate_cmd(&args),
        Command::Simulate(args) => simulate(&args, cli.seed),
        Command::ValidateMap { file } => validate_map(&file),
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_failure(e, format!("cannot open {}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(e, format!("cannot create {}", path.display())))
}

fn read_map(path: &Path) -> CliResult<IndoorMap> {
    load_map(open(path)?).map_err(|e| {
        let io = matches!(e, MapError::Io(_));
        let what = format!("map {}", path.display());
        if io {
            io_failure(e, what)
        } else {
            invalid(format!("{what}: {e}"))
        }
    })
}

fn csv_failure(e: csv::Error, path: &Path) -> Failure {
    let io = e.is_io_error();
    let what = format!("writing {}", path.display());
    if io {
        io_failure(e, what)
    } else {
        invalid(format!("{what}: {e}"))
    }
}

fn validate_map(path: &Path) -> CliResult<()> {
    let map = read_map(path)?;
    let b = map.bounds();
    println!(
        "{}: ok ({} surfaces, bounds {} to {})",
        path.display(),
        map.surfaces().len(),
        b.min,
        b.max
    );
    Ok(())
}

fn trace(args: &TraceArgs) -> CliResult<()> {
    let map = read_map(&args.map)?;
    let cfg = TraceConfig {
        frequency_hz: args.freq,
        tx_power_dbm: args.tx_power_dbm,
        max_reflections: args.max_reflections,
        max_transmissions: args.max_transmissions,
        tessellation: args.tess,
        min_power_dbm: args.min_power_dbm,
        ..TraceConfig::default()
    };
    let tracer = Tracer::new(cfg).map_err(invalid)?;
    let components = tracer.trace(&map, args.tx.0, args.rx.0).map_err(invalid)?;

    let stdout = io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    let stdout_failure = |e: csv::Error| csv_failure(e, Path::new("standard output"));
    w.write_record([
        "tof_ns",
        "aod_az_deg",
        "aod_el_deg",
        "aoa_az_deg",
        "aoa_el_deg",
        "power_dbm",
        "path_length_m",
        "signature",
    ])
    .map_err(stdout_failure)?;
    for c in &components {
        w.write_record([
            (c.tof * 1e9).to_string(),
            c.aod.0.to_degrees().to_string(),
            c.aod.1.to_degrees().to_string(),
            c.aoa.0.to_degrees().to_string(),
            c.aoa.1.to_degrees().to_string(),
            c.received_power_dbm.to_string(),
            c.path_length.to_string(),
            c.signature_label(&map),
        ])
        .map_err(stdout_failure)?;
    }
    w.flush().map_err(|e| io_failure(e, "writing standard output".into()))?;

    if let Some(path) = &args.observations {
        let obs: Vec<PathObservation> = components
            .iter()
            .map(|c| PathObservation::from_downlink(args.bs_id, c))
            .collect();
        write_observations_csv(create(path)?, &obs).map_err(|e| match e {
            ObservationFileError::Csv(e) => csv_failure(e, path),
            other => invalid(other),
        })?;
    }
    Ok(())
}

fn locate_cmd(args: &LocateArgs) -> CliResult<()> {
    let map = read_map(&args.map)?;
    let observations = read_observations_csv(open(&args.obs)?).map_err(|e| {
        let io = matches!(&e, ObservationFileError::Csv(c) if c.is_io_error());
        let what = format!("observations {}", args.obs.display());
        if io {
            io_failure(e, what)
        } else {
            invalid(format!("{what}: {e}"))
        }
    })?;
    if !(args.threshold > 0.0 && args.threshold.is_finite()) {
        return Err(invalid("--threshold must be a positive number"));
    }
    let est = locate(&map, &observations, args.max_interactions, args.threshold).map_err(invalid)?;
    let d = &est.diagnostics;
    let clusters: Vec<_> = d
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({
                "centroid": [c.centroid.x, c.centroid.y, c.centroid.z],
                "members": c.member_count,
                "distinct_observations": c.distinct_observations(),
                "rms_radius_m": c.rms_radius(),
                "refuted": d.refuted[i],
            })
        })
        .collect();
    let out = json!({
        "position": [est.position.x, est.position.y, est.position.z],
        "ambiguous": d.ambiguous,
        "selected_cluster": d.selected,
        "candidate_count": d.candidate_count,
        "dropped_observations": d.dropped_observations,
        "clusters": clusters,
    });
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, &out).map_err(invalid)?;
    writeln!(lock).map_err(|e| io_failure(e, "writing standard output".into()))?;
    Ok(())
}

fn simulate(args: &SimulateArgs, seed: Option<u64>) -> CliResult<()> {
    let (mut file, map) = ScenarioFile::load(&args.scenario).map_err(|e| {
        let io = matches!(
            e,
            ScenarioFileError::Io { .. }
                | ScenarioFileError::Map {
                    source: MapError::Io(_),
                    ..
                }
        );
        let what = format!("scenario {}", args.scenario.display());
        if io {
            io_failure(e, what)
        } else {
            invalid(format!("{what}: {e}"))
        }
    })?;
    if let Some(seed) = seed {
        file.rng_seed = seed;
    }
    let max_bs = file.max_bs_count().map_err(invalid)?;
    let cfg = file.config(max_bs).map_err(invalid)?;
    let scenario = Scenario::prepare(&map, &cfg, max_bs).map_err(invalid)?;

    let mut counts = file.bs_counts.clone();
    counts.sort_unstable();
    counts.dedup();
    let mut runs = Vec::with_capacity(counts.len());
    for &n in &counts {
        if n == 0 {
            return Err(invalid("bs_counts entries must be at least 1"));
        }
        runs.push(scenario.run(n, cfg.sigma_aod, cfg.sigma_tof).map_err(invalid)?);
    }
    let links = scenario.run_links(cfg.sigma_aod, cfg.sigma_tof).map_err(invalid)?;

    fs::create_dir_all(&args.out).map_err(|e| io_failure(e, format!("cannot create {}", args.out.display())))?;
    let write = |name: String, f: &dyn Fn(BufWriter<File>) -> csv::Result<()>| -> CliResult<()> {
        let path = args.out.join(name);
        f(create(&path)?).map_err(|e| csv_failure(e, &path))
    };
    write("per_user.csv".into(), &|w| write_per_user_csv(&runs, w))?;
    write("summary.csv".into(), &|w| write_summary_csv(&runs, w))?;
    write("links_summary.csv".into(), &|w| {
        write_summary_csv(std::slice::from_ref(&links), w)
    })?;
    for stats in &runs {
        write(format!("cdf_{}bs.csv", stats.bs_count), &|w| export_cdf(stats, w))?;
    }
    println!(
        "simulated {} users x {} trials for base-station counts {:?}; wrote {}",
        scenario.users().len(),
        cfg.n_trials,
        counts,
        args.out.display()
    );
    Ok(())
}
