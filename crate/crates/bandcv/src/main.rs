//! Command-line driver for bandwidth-sweep experiments.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use bandcv::builders::{random_regular, KnnGraphConfig};
use bandcv::crossval::{sweep, CrossvalConfig, SweepResult};
use bandcv::ingest::{parse_station_csv, to_experiment, DEFAULT_MISSING_TOKENS};
use bandcv::sampling::{make_folds, select_known_set, SelectionStrategy};
use bandcv::signals::{synth_bandlimited, BandlimitedSpec};
use bandcv::spectral::spectral_decompose;
use bandcv::{subvector, Error, Graph};

const EXIT_USAGE: u8 = 2;
const EXIT_INGEST: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "bandcv",
    about = "Bandlimited graph signal reconstruction error estimation via conditioning-aware cross-validation"
)]
struct Cli {
    /// Config file with `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// CI mode: require an explicit --seed.
    #[arg(long, global = true)]
    ci: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random-regular graph with a synthetic noisy bandlimited signal.
    Synth(SynthArgs),
    /// Sensor-network graph built from a station CSV.
    Sensor(SensorArgs),
    /// Summarize a graph stored in edge-list format.
    GraphInfo { graph: PathBuf },
}

#[derive(Args)]
struct SynthArgs {
    /// Vertex count [default: 1000]
    #[arg(long)]
    n: Option<usize>,
    /// Regular degree [default: 6]
    #[arg(long)]
    degree: Option<usize>,
    /// True signal bandwidth [default: 20]
    #[arg(long)]
    bw: Option<usize>,
    /// Signal power (per-vertex mean square) [default: 1.0]
    #[arg(long)]
    power: Option<f64>,
    /// Noise power [default: 0.1]
    #[arg(long)]
    noise: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SensorArgs {
    /// Station CSV path (header: id,lat,lon,elev_m,...)
    #[arg(long)]
    stations: PathBuf,
    /// Name of the measurement column [default: value]
    #[arg(long)]
    value_column: Option<String>,
    /// Gaussian kernel width in km [default: 50]
    #[arg(long)]
    sigma: Option<f64>,
    /// Neighbors per vertex [default: 5]
    #[arg(long)]
    k_neighbors: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Known-set size [default: 200]
    #[arg(long)]
    samples: Option<usize>,
    /// Known-set strategy: random or greedy-dopt [default: random]
    #[arg(long)]
    strategy: Option<String>,
    /// Cross-validation folds per repeat [default: 10]
    #[arg(long)]
    k_folds: Option<usize>,
    /// K-fold repeats [default: 50]
    #[arg(long)]
    repeats: Option<usize>,
    /// Bandwidth sweep as start:stop:step (stop inclusive when aligned)
    /// [default: 10:110:10]
    #[arg(long)]
    sweep: Option<String>,
    /// RNG seed [default: 0; required with --ci]
    #[arg(long)]
    seed: Option<u64>,
    /// Singular-value clip threshold of the weighted estimator [default: 1.0]
    #[arg(long)]
    clip: Option<f64>,
    /// Output CSV path; a *_normalized.csv sibling is written too
    /// [default: sweep.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

struct ConfigFile {
    entries: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        let mut entries = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("expected key = value, got {line:?}"),
                })?;
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(ConfigFile { entries })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Infeasible(format!("config key {key} has invalid value {raw:?}"))
            }),
        }
    }
}

fn resolve<T: std::str::FromStr + Clone>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T, Error> {
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(cfg.get::<T>(key)?.unwrap_or(default))
}

/// Parse `start:stop:step`, inclusive of stop when the grid lands on it.
fn parse_sweep(spec: &str) -> Result<Vec<usize>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Infeasible(format!(
            "sweep must be start:stop:step, got {spec:?}"
        )));
    }
    let parse = |s: &str| -> Result<usize, Error> {
        s.parse()
            .map_err(|_| Error::Infeasible(format!("bad sweep component {s:?}")))
    };
    let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step == 0 || start == 0 || stop < start {
        return Err(Error::Infeasible(format!("invalid sweep range {spec:?}")));
    }
    Ok((start..=stop).step_by(step).collect())
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

struct ResolvedCommon {
    samples: usize,
    strategy: SelectionStrategy,
    k_folds: usize,
    repeats: usize,
    bandwidths: Vec<usize>,
    sweep_spec: String,
    seed: u64,
    clip: f64,
    out: PathBuf,
}

fn resolve_common(args: &CommonArgs, cfg: &ConfigFile, ci: bool) -> Result<ResolvedCommon, Error> {
    let seed = match (args.seed, cfg.get::<u64>("seed")?) {
        (Some(s), _) => s,
        (None, Some(s)) => s,
        (None, None) if ci => {
            return Err(Error::Infeasible("--seed is required in --ci mode".into()))
        }
        (None, None) => 0,
    };
    let sweep_spec = resolve(args.sweep.clone(), cfg, "sweep", "10:110:10".to_string())?;
    let strategy_name = resolve(args.strategy.clone(), cfg, "strategy", "random".to_string())?;
    Ok(ResolvedCommon {
        samples: resolve(args.samples, cfg, "samples", 200)?,
        strategy: strategy_name.parse()?,
        k_folds: resolve(args.k_folds, cfg, "k_folds", 10)?,
        repeats: resolve(args.repeats, cfg, "repeats", 50)?,
        bandwidths: parse_sweep(&sweep_spec)?,
        sweep_spec,
        seed,
        clip: resolve(args.clip, cfg, "clip", 1.0)?,
        out: resolve(args.out.clone(), cfg, "out", PathBuf::from("sweep.csv"))?,
    })
}

fn normalized_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned());
    let name = match ext {
        Some(ext) => format!("{stem}_normalized.{ext}"),
        None => format!("{stem}_normalized"),
    };
    out.with_file_name(name)
}

fn run_pipeline(
    graph: &Graph,
    ground_truth: &[f64],
    common: &ResolvedCommon,
    mut metadata: Vec<String>,
) -> Result<SweepResult, Error> {
    let basis = spectral_decompose(graph)?;
    let known = select_known_set(&basis, common.samples, common.strategy, common.seed)?;
    let plan = make_folds(&known, common.k_folds, common.repeats, common.seed.wrapping_add(1))?;
    let cfg = CrossvalConfig {
        clip_threshold: common.clip,
        ..Default::default()
    };
    let known_values = subvector(ground_truth, &known);
    let mut result = sweep(
        &basis,
        &known,
        &known_values,
        &common.bandwidths,
        &plan,
        Some(ground_truth),
        &cfg,
    )?;
    metadata.push(format!("samples={}", common.samples));
    metadata.push(format!("strategy={}", common.strategy.name()));
    metadata.push(format!("k_folds={}", common.k_folds));
    metadata.push(format!("repeats={}", common.repeats));
    metadata.push(format!("sweep={}", common.sweep_spec));
    metadata.push(format!("seed={}", common.seed));
    metadata.push(format!("fold_seed={}", common.seed.wrapping_add(1)));
    metadata.push(format!("clip={}", common.clip));
    metadata.push(format!(
        "graph_hash=sha256:{}",
        sha256_hex(graph.to_edge_list().as_bytes())
    ));
    result.metadata = metadata;
    Ok(result)
}

fn write_outputs(result: &SweepResult, out: &Path) -> Result<(), Error> {
    result.write_csv(out)?;
    result.write_csv_normalized(&normalized_path(out))?;
    println!(
        "wrote {} and {} ({} bandwidths, argmin_weighted={})",
        out.display(),
        normalized_path(out).display(),
        result.rows.len(),
        result.argmin_weighted
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs, cfg: &ConfigFile, ci: bool) -> Result<(), Error> {
    let common = resolve_common(&args.common, cfg, ci)?;
    let n = resolve(args.n, cfg, "n", 1000)?;
    let degree = resolve(args.degree, cfg, "degree", 6)?;
    let bw = resolve(args.bw, cfg, "bw", 20)?;
    let power = resolve(args.power, cfg, "power", 1.0)?;
    let noise = resolve(args.noise, cfg, "noise", 0.1)?;

    let graph = random_regular(n, degree, common.seed)?;
    let basis = spectral_decompose(&graph)?;
    let signal = synth_bandlimited(
        &basis,
        &BandlimitedSpec {
            bandwidth: bw,
            signal_power: power,
            noise_power: noise,
            seed: common.seed.wrapping_add(2),
        },
    )?;

    let metadata = vec![
        "command=synth".to_string(),
        format!("n={n}"),
        format!("degree={degree}"),
        format!("bw={bw}"),
        format!("power={power}"),
        format!("noise={noise}"),
        format!("signal_seed={}", common.seed.wrapping_add(2)),
    ];
    let result = run_pipeline(&graph, signal.values(), &common, metadata)?;
    write_outputs(&result, &common.out)
}

fn cmd_sensor(args: &SensorArgs, cfg: &ConfigFile, ci: bool) -> Result<(), Error> {
    let common = resolve_common(&args.common, cfg, ci)?;
    let value_column = resolve(args.value_column.clone(), cfg, "value_column", "value".to_string())?;
    let sigma = resolve(args.sigma, cfg, "sigma", 50.0)?;
    let k_neighbors = resolve(args.k_neighbors, cfg, "k_neighbors", 5)?;

    let table = parse_station_csv(&args.stations, &value_column, DEFAULT_MISSING_TOKENS)?;
    let knn_cfg = KnnGraphConfig {
        k: k_neighbors,
        sigma_km: sigma,
        union_symmetrization: true,
    };
    let experiment = to_experiment(&table, &knn_cfg)?;

    let input_bytes = std::fs::read(&args.stations).map_err(|e| Error::Io {
        path: args.stations.display().to_string(),
        source: e,
    })?;
    let metadata = vec![
        "command=sensor".to_string(),
        format!("stations={}", args.stations.display()),
        format!("stations_hash=sha256:{}", sha256_hex(&input_bytes)),
        format!("value_column={value_column}"),
        format!("sigma={sigma}"),
        format!("k_neighbors={k_neighbors}"),
        format!("kept_stations={}", experiment.graph.vertex_count()),
    ];
    let result = run_pipeline(&experiment.graph, experiment.signal.values(), &common, metadata)?;
    write_outputs(&result, &common.out)
}

fn cmd_graph_info(path: &Path) -> Result<(), Error> {
    let graph = Graph::read_edge_list(path)?;
    let degrees = graph.degrees();
    let (dmin, dmax) = degrees
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    println!("vertices: {}", graph.vertex_count());
    println!("edges: {}", graph.edge_count());
    println!("components: {}", graph.connected_components());
    println!("degree min/max: {dmin}/{dmax}");
    println!(
        "graph_hash: sha256:{}",
        sha256_hex(graph.to_edge_list().as_bytes())
    );
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Io { .. } | Error::TooFewPoints { .. } => EXIT_INGEST,
        Error::Numerical(_) | Error::DecompositionFailure { .. } | Error::NonConvergence { .. } => {
            EXIT_NUMERICAL
        }
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match ConfigFile::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(exit_code_for(&err));
        }
    };
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args, &cfg, cli.ci),
        Command::Sensor(args) => cmd_sensor(args, &cfg, cli.ci),
        Command::GraphInfo { graph } => cmd_graph_info(graph),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
