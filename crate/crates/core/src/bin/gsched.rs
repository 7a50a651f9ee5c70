use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gsched::baselines::{sfrob_partition, srel_partition, SrelOptions};
use gsched::experiment::real::{ingest_real_files, synthetic_real_data, write_measurements, write_stations};
use gsched::experiment::{
    run_ablation, run_online_experiment, run_real_experiment, run_static_experiment, ExperimentConfig, ExperimentKind,
    RealDataSpec,
};
use gsched::graph::io::{read_edge_list, write_coords, write_edge_list};
use gsched::partition::{hierarchical_partition, PdcaConfig};
use gsched::scheduler::{run, write_metrics_csv, PartitionSource, SchedulerConfig, SubspaceSource};
use gsched::signals::{SignalTrace, SubspaceDictionary};
use gsched::{Error, Result};

#[derive(Parser)]
#[command(name = "gsched", version, about = "Sensor scheduling by balanced graph node partitioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Proposed,
    Srel,
    Sfrob,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Static,
    Online,
    Real,
    Ablation,
}

#[derive(Subcommand)]
enum Command {
    /// Partition nodes into balanced subsets and write `subset_id,node_id`.
    Partition {
        #[command(flatten)]
        common: Common,
        /// Dictionary matrix file (`rows cols` header, then rows).
        #[arg(long)]
        dictionary: Option<PathBuf>,
        /// Edge list, required for `srel`.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "proposed")]
        method: Method,
        #[arg(long, default_value_t = 4)]
        subsets: usize,
    },
    /// Run the online scheduler on a `t,node,value` trace and write per-step metrics.
    Schedule {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        signals: PathBuf,
        /// Fixed dictionary; the scheduler learns one from the identity when omitted.
        #[arg(long)]
        dictionary: Option<PathBuf>,
    },
    /// Reproduce one of the experiments.
    Experiment {
        #[arg(value_enum)]
        kind: Kind,
        #[command(flatten)]
        common: Common,
    },
    /// Ingest station/measurement CSVs (or generate synthetic ones) into a graph and trace.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "measurements")]
        stations: Option<PathBuf>,
        #[arg(long, requires = "stations")]
        measurements: Option<PathBuf>,
        /// Write synthetic station and measurement CSVs instead of ingesting.
        #[arg(long, conflicts_with_all = ["stations", "measurements"])]
        synthetic: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::InvalidInput(_) => 2,
        Error::NumericalFailure(_) | Error::DegenerateSubspace(_) => 3,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

fn read_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

fn load_dictionary(path: &Path) -> Result<SubspaceDictionary> {
    SubspaceDictionary::read(open(path)?)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Partition { common, dictionary, graph, method, subsets } => {
            let mut pdca: PdcaConfig = read_toml(common.config.as_deref())?;
            if let Some(s) = common.seed {
                pdca.seed = s;
            }
            pdca.validate()?;
            let need_dict = || dictionary.as_deref().ok_or_else(|| Error::Config("--dictionary is required".into()));
            let partition = match method {
                Method::Proposed => {
                    if !subsets.is_power_of_two() || subsets < 2 {
                        return Err(Error::Config(format!("--subsets must be a power of two >= 2, got {subsets}")));
                    }
                    hierarchical_partition(&load_dictionary(need_dict()?)?, subsets.trailing_zeros(), &pdca)?
                }
                Method::Sfrob => sfrob_partition(&load_dictionary(need_dict()?)?, subsets)?,
                Method::Srel => {
                    let g = graph.as_deref().ok_or_else(|| Error::Config("--graph is required for srel".into()))?;
                    srel_partition(&read_edge_list(open(g)?)?, subsets, pdca.seed, SrelOptions::default())?
                }
            };
            partition.write_csv(create(&common.out)?)
        }
        Command::Schedule { common, signals, dictionary } => {
            let mut cfg: SchedulerConfig = read_toml(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let trace = SignalTrace::read_csv(open(&signals)?, cfg.sigma)?;
            let source = match dictionary {
                Some(p) => SubspaceSource::Fixed(load_dictionary(&p)?),
                None => SubspaceSource::Learned(SubspaceDictionary::identity(trace.n_nodes())),
            };
            let records = run(&trace, &cfg, source, PartitionSource::Adaptive)?;
            write_metrics_csv(&records, create(&common.out)?)
        }
        Command::Experiment { kind, common } => {
            let expected = match kind {
                Kind::Static => ExperimentKind::Static,
                Kind::Online => ExperimentKind::OnlineSynthetic,
                Kind::Real => ExperimentKind::OnlineReal,
                Kind::Ablation => ExperimentKind::Ablation,
            };
            let mut cfg = match &common.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::new(expected),
            };
            if cfg.kind != expected {
                return Err(Error::Config(format!("configuration is for {:?}, not {expected:?}", cfg.kind)));
            }
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let dir = &common.out;
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
            match kind {
                Kind::Static => {
                    let out = run_static_experiment(&cfg)?;
                    out.write_records_csv(create(&dir.join("static_records.csv"))?)?;
                    out.write_table_csv(create(&dir.join("static_table.csv"))?)?;
                    for row in &out.table {
                        let cells: Vec<String> = row.values.iter().map(|(c, v)| format!("{c}={v:.2}")).collect();
                        println!("{} {}: {}", row.signal, if row.noisy { "noisy" } else { "clean" }, cells.join(" "));
                    }
                }
                _ => {
                    let (name, out) = match kind {
                        Kind::Online => ("online", run_online_experiment(&cfg)?),
                        Kind::Real => ("real", run_real_experiment(&cfg)?),
                        _ => ("ablation", run_ablation(&cfg)?),
                    };
                    out.write_metrics_csv(create(&dir.join(format!("{name}_metrics.csv")))?)?;
                    out.write_summary_csv(create(&dir.join(format!("{name}_summary.csv")))?)?;
                    for (m, v) in &out.summary {
                        println!("{m}: {v:.3} dB");
                    }
                }
            }
            Ok(())
        }
        Command::Ingest { common, stations, measurements, synthetic } => {
            let mut cfg = match &common.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::new(ExperimentKind::OnlineReal),
            };
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let dir = &common.out;
            std::fs::create_dir_all(dir)?;
            if synthetic {
                let (st, rows) = synthetic_real_data(&cfg.real, cfg.seed)?;
                write_stations(&st, create(&dir.join("stations.csv"))?)?;
                return write_measurements(&rows, create(&dir.join("measurements.csv"))?);
            }
            let source = RealDataSpec {
                stations: stations.or(cfg.real.stations.clone()),
                measurements: measurements.or(cfg.real.measurements.clone()),
                ..cfg.real.clone()
            };
            let (g, trace, data) = ingest_real_files(&source, 0.0, cfg.seed)?;
            write_edge_list(&g, create(&dir.join("graph.edges"))?)?;
            let coords: Vec<[f64; 2]> = data.stations.iter().map(|s| [s.lat, s.lon]).collect();
            write_coords(&coords, create(&dir.join("coords.csv"))?)?;
            trace.write_csv(create(&dir.join("trace.csv"))?)?;
            println!("{} stations, {} months, {} values interpolated", g.n_nodes(), trace.len(), data.n_filled());
            Ok(())
        }
    }
}
