use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, PartitionMethod};
use super::{mean, write_checked_csv};
use crate::baselines::{sfrob_partition, srel_partition};
use crate::error::{Error, Result};
use crate::graph::{random_sensor_graph, spectral_clustering, GftBasis};
use crate::partition::{hierarchical_partition, Partition, PdcaConfig};
use crate::rng;
use crate::sampling::{mse_db, reconstruct_or_pad, sample};
use crate::signals::{gen_hd, gen_pws, SubspaceDictionary};

/// Static signal families.
const SIGNALS: [&str; 2] = ["hd", "pws"];

/// One reconstruction of one subset in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticRecord {
    pub run: usize,
    pub signal: &'static str,
    pub noisy: bool,
    pub method: PartitionMethod,
    /// `None` for the subspace prior, `Some(B)` for the bandlimited basis.
    pub bandwidth: Option<usize>,
    pub subset: usize,
    pub mse_db: f64,
}

impl StaticRecord {
    /// Column label in the summary table, e.g. `srel_bl32`.
    pub fn column(&self) -> String {
        match self.bandwidth {
            None => format!("{}_ss", self.method.name()),
            Some(b) => format!("{}_bl{b}", self.method.name()),
        }
    }
}

/// One row of the summary table: averages in dB per column.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticTableRow {
    pub signal: &'static str,
    pub noisy: bool,
    pub values: Vec<(String, f64)>,
}

impl StaticTableRow {
    pub fn get(&self, column: &str) -> Option<f64> {
        self.values.iter().find(|(c, _)| c == column).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
pub struct StaticOutput {
    pub records: Vec<StaticRecord>,
    pub table: Vec<StaticTableRow>,
    pub columns: Vec<String>,
}

impl StaticOutput {
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let header = ["run", "signal", "noise", "method", "reconstruction", "subset", "mse_db"];
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.run.to_string(),
                    r.signal.to_string(),
                    noise_label(r.noisy).to_string(),
                    r.method.name().to_string(),
                    r.bandwidth.map_or("ss".to_string(), |b| format!("bl{b}")),
                    r.subset.to_string(),
                    r.mse_db.to_string(),
                ]
            })
            .collect();
        write_checked_csv(&header, &rows, out)
    }

    /// `signal,noise,<column>…` with one row per (signal, noise) pair.
    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut header = vec!["signal", "noise"];
        header.extend(self.columns.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = self
            .table
            .iter()
            .map(|row| {
                let mut cells = vec![row.signal.to_string(), noise_label(row.noisy).to_string()];
                cells.extend(self.columns.iter().map(|c| format!("{:.4}", row.get(c).unwrap_or(f64::NAN))));
                cells
            })
            .collect();
        write_checked_csv(&header, &rows, out)
    }

    pub fn row(&self, signal: &str, noisy: bool) -> Option<&StaticTableRow> {
        self.table.iter().find(|r| r.signal == signal && r.noisy == noisy)
    }
}

fn noise_label(noisy: bool) -> &'static str {
    if noisy {
        "noisy"
    } else {
        "clean"
    }
}

/// Repeated static partitioning of random sensor graphs carrying heat-diffusion
/// and piecewise-smooth signals. Runs execute in parallel and merge in order.
pub fn run_static_experiment(cfg: &ExperimentConfig) -> Result<StaticOutput> {
    if cfg.kind != ExperimentKind::Static {
        return Err(Error::Config(format!("expected a static experiment, got {:?}", cfg.kind)));
    }
    cfg.validate()?;
    let per_run: Vec<Result<Vec<StaticRecord>>> = (0..cfg.runs()).into_par_iter().map(|r| static_run(cfg, r)).collect();
    let mut records = Vec::new();
    for r in per_run {
        records.extend(r?);
    }

    let methods = cfg.methods();
    let mut columns = Vec::new();
    for &m in &methods {
        columns.push(format!("{}_ss", m.name()));
        if m != PartitionMethod::Proposed {
            columns.extend(cfg.bandwidths().iter().map(|b| format!("{}_bl{b}", m.name())));
        }
    }
    let mut table = Vec::new();
    for signal in SIGNALS {
        for noisy in [false, true] {
            let values = columns
                .iter()
                .map(|c| {
                    let v = mean(
                        records
                            .iter()
                            .filter(|r| r.signal == signal && r.noisy == noisy && &r.column() == c)
                            .map(|r| r.mse_db),
                    );
                    (c.clone(), v)
                })
                .collect();
            table.push(StaticTableRow { signal, noisy, values });
        }
    }
    Ok(StaticOutput { records, table, columns })
}

fn static_run(cfg: &ExperimentConfig, run: usize) -> Result<Vec<StaticRecord>> {
    let seed = rng::derive(cfg.seed, run as u64);
    let g = random_sensor_graph(cfg.graph.n_nodes, cfg.graph.k_min, cfg.graph.k_max, rng::derive(seed, 0))?;
    let basis = g.gft_basis_of(cfg.graph.laplacian)?;
    let n = g.n_nodes();
    let n_subsets = cfg.n_subsets();
    let (a_hd, x_hd) = gen_hd(&basis, cfg.signal.heat_alpha, rng::derive(seed, 1))?;
    let clusters = spectral_clustering(&g, cfg.signal.n_clusters, rng::derive(seed, 2))?;
    let (a_pws, x_pws) = gen_pws(&basis, &clusters, rng::derive(seed, 3))?;
    let pdca = PdcaConfig { seed: rng::derive(seed, 4), ..cfg.pdca.clone() };
    let depth = n_subsets.trailing_zeros();

    let bandlimited: Vec<(usize, SubspaceDictionary)> = cfg
        .bandwidths()
        .iter()
        .map(|&b| Ok((b, SubspaceDictionary::new(basis.columns(0, b)?)?)))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for (signal, a, x) in [(SIGNALS[0], &a_hd, &x_hd), (SIGNALS[1], &a_pws, &x_pws)] {
        for method in cfg.methods() {
            let partition = match method {
                PartitionMethod::Proposed => hierarchical_partition(a, depth, &pdca)?,
                PartitionMethod::Srel => srel_partition(&g, n_subsets, rng::derive(seed, 5), cfg.srel)?,
                PartitionMethod::Sfrob => sfrob_partition(&sfrob_basis(&basis, n_subsets)?, n_subsets)?,
            };
            let mut dicts: Vec<(Option<usize>, &SubspaceDictionary)> = vec![(None, a)];
            if method != PartitionMethod::Proposed {
                dicts.extend(bandlimited.iter().map(|(b, d)| (Some(*b), d)));
            }
            for noisy in [false, true] {
                let sigma = if noisy { cfg.noise_sigma() } else { 0.0 };
                for (subset, errs) in subset_errors(x, &partition, &dicts, sigma, seed)?.into_iter().enumerate() {
                    for (bandwidth, mse_db) in errs {
                        records.push(StaticRecord { run, signal, noisy, method, bandwidth, subset, mse_db });
                    }
                }
            }
        }
    }
    debug_assert!(records.iter().all(|r| r.subset < n_subsets && n > 0));
    Ok(records)
}

/// Bandlimited basis `[u_0 … u_{B-1}]` with `B = N / n_subsets`, the largest
/// bandwidth each subset can resolve.
pub(crate) fn sfrob_basis(basis: &GftBasis, n_subsets: usize) -> Result<SubspaceDictionary> {
    SubspaceDictionary::new(basis.columns(0, basis.n_nodes() / n_subsets)?)
}

type SubsetErrors = Vec<Vec<(Option<usize>, f64)>>;

fn subset_errors(
    x: &DVector<f64>,
    partition: &Partition,
    dicts: &[(Option<usize>, &SubspaceDictionary)],
    sigma: f64,
    seed: u64,
) -> Result<SubsetErrors> {
    partition
        .subsets()
        .iter()
        .enumerate()
        .map(|(k, set)| {
            // same noise per (run, subset) for every method
            let meas = sample(x, set, sigma, rng::derive(seed, 100 + k as u64))?;
            dicts.iter().map(|(b, a)| Ok((*b, mse_db(x, &reconstruct_or_pad(a, &meas)?.0)))).collect()
        })
        .collect()
}
