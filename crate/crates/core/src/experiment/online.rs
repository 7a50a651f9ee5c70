use std::io::Write;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, PartitionMethod};
use super::real::{ingest_real, ingest_real_files, synthetic_real_data};
use super::static_exp::sfrob_basis;
use super::{mean, write_checked_csv};
use crate::baselines::{sfrob_partition, srel_partition};
use crate::error::{Error, Result};
use crate::graph::{random_sensor_graph, Graph};
use crate::rng;
use crate::scheduler::{
    epoch_partition, run, run_fixed, Confidence, FixedDictionaries, MetricsRecord, PartitionSource, SchedulerConfig,
    SubspaceSource, TrainingSignal,
};
use crate::signals::{SignalTrace, SubspaceDictionary, TvPwsScenario};

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRecord {
    pub run: usize,
    pub method: String,
    pub metrics: MetricsRecord,
}

/// Per-step metrics of every (run, method) and the per-method averages.
#[derive(Debug, Clone)]
pub struct OnlineOutput {
    pub records: Vec<OnlineRecord>,
    /// `(method, mean mse_db)` in method order.
    pub summary: Vec<(String, f64)>,
}

/// Result rows of [`run_ablation`]: `(configuration, mean mse_db)`.
pub type AblationRow = (String, f64);

impl OnlineOutput {
    fn from_runs(methods: &[String], per_task: Vec<(usize, String, Vec<MetricsRecord>)>) -> Self {
        let mut records = Vec::new();
        for (run, method, recs) in per_task {
            records.extend(recs.into_iter().map(|metrics| OnlineRecord { run, method: method.clone(), metrics }));
        }
        let summary = methods
            .iter()
            .map(|m| (m.clone(), mean(records.iter().filter(|r| &r.method == m).map(|r| r.metrics.mse_db))))
            .collect();
        OnlineOutput { records, summary }
    }

    pub fn mean(&self, method: &str) -> Option<f64> {
        self.summary.iter().find(|(m, _)| m == method).map(|(_, v)| *v)
    }

    /// `run,method,t,subset_id,mse_db,epoch,cond`.
    pub fn write_metrics_csv<W: Write>(&self, out: W) -> Result<()> {
        let header = ["run", "method", "t", "subset_id", "mse_db", "epoch", "cond"];
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                let m = &r.metrics;
                vec![
                    r.run.to_string(),
                    r.method.clone(),
                    m.t.to_string(),
                    m.subset_id.to_string(),
                    m.mse_db.to_string(),
                    m.epoch.to_string(),
                    m.cond.to_string(),
                ]
            })
            .collect();
        write_checked_csv(&header, &rows, out)
    }

    /// `method,mean_mse_db`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows: Vec<Vec<String>> = self.summary.iter().map(|(m, v)| vec![m.clone(), format!("{v:.4}")]).collect();
        write_checked_csv(&["method", "mean_mse_db"], &rows, out)
    }
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::Config(format!("expected a {kind:?} experiment, got {:?}", cfg.kind)));
    }
    cfg.validate()
}

/// Runs `(run, method)` tasks in parallel and returns them in task order.
fn run_tasks<F>(runs: usize, methods: &[String], task: F) -> Result<OnlineOutput>
where
    F: Fn(usize, &str) -> Result<Vec<MetricsRecord>> + Sync,
{
    let keys: Vec<(usize, String)> = (0..runs).flat_map(|r| methods.iter().map(move |m| (r, m.clone()))).collect();
    let results: Vec<Result<(usize, String, Vec<MetricsRecord>)>> =
        keys.into_par_iter().map(|(r, m)| task(r, &m).map(|recs| (r, m, recs))).collect();
    let per_task = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(OnlineOutput::from_runs(methods, per_task))
}

pub const METHOD_PROPOSED: &str = "proposed";
pub const METHOD_1: &str = "method1";
pub const METHOD_2: &str = "method2";

/// Time-varying piecewise-smooth signals with known subspaces: adaptive
/// partitioning (proposed) against the `t = 0` partition with the initial
/// subspace (Method 1) or the true subspace at every step (Method 2).
pub fn run_online_experiment(cfg: &ExperimentConfig) -> Result<OnlineOutput> {
    expect_kind(cfg, ExperimentKind::OnlineSynthetic)?;
    let methods: Vec<String> = [METHOD_PROPOSED, METHOD_1, METHOD_2].map(String::from).to_vec();
    let traces: Vec<SignalTrace> =
        (0..cfg.runs()).into_par_iter().map(|r| online_trace(cfg, r)).collect::<Result<_>>()?;
    run_tasks(cfg.runs(), &methods, |r, method| {
        let trace = &traces[r];
        let dicts = trace.subspaces().expect("synthetic traces carry their subspaces");
        let sched = run_scheduler_config(cfg, r);
        match method {
            METHOD_PROPOSED => run(trace, &sched, SubspaceSource::Oracle(dicts), PartitionSource::Adaptive),
            _ => {
                let p0 = epoch_partition(&dicts[0], &sched, 0)?;
                let d = if method == METHOD_1 {
                    FixedDictionaries::Static(dicts[0].clone())
                } else {
                    FixedDictionaries::PerStep(dicts)
                };
                run_fixed(trace, &sched, p0, d)
            }
        }
    })
}

fn run_scheduler_config(cfg: &ExperimentConfig, run: usize) -> SchedulerConfig {
    let mut s = cfg.scheduler_config();
    s.seed = rng::derive(cfg.seed, 0x1000 + run as u64);
    s.pdca.seed = rng::derive(cfg.pdca.seed ^ cfg.seed, 0x2000 + run as u64);
    s
}

fn online_trace(cfg: &ExperimentConfig, run: usize) -> Result<SignalTrace> {
    let seed = rng::derive(cfg.seed, run as u64);
    let g = random_sensor_graph(cfg.graph.n_nodes, cfg.graph.k_min, cfg.graph.k_max, rng::derive(seed, 0))?;
    let basis = g.gft_basis_of(cfg.graph.laplacian)?;
    let mut scenario =
        TvPwsScenario::new(&g, basis, cfg.signal.n_clusters, cfg.signal.drift_probability, rng::derive(seed, 1))?;
    if cfg.signal.drift_hops != 2 {
        let clusters = crate::signals::labels_to_clusters(scenario.drift.initial_labels(), scenario.n_clusters);
        scenario.drift =
            crate::signals::ClusterDrift::new(&g, &clusters, cfg.signal.drift_hops, cfg.signal.drift_probability)?;
    }
    scenario.trace(cfg.signal.duration, 0.0, rng::derive(seed, 2))
}

/// Graph and trace of the real-data experiments: the configured CSV files, or
/// the synthetic fallback when none are given.
pub fn load_real(cfg: &ExperimentConfig) -> Result<(Graph, SignalTrace)> {
    let sigma = cfg.noise_sigma();
    let pick_seed = rng::derive(cfg.seed, 0x7265_616c);
    let (g, trace, _) = if cfg.real.stations.is_some() {
        ingest_real_files(&cfg.real, sigma, pick_seed)?
    } else {
        let (stations, rows) = synthetic_real_data(&cfg.real, rng::derive(cfg.seed, 0x7379_6e))?;
        ingest_real(&stations, &rows, &cfg.real, sigma, pick_seed)?
    };
    Ok((g, trace))
}

/// Learned subspaces on real data: adaptive partitioning against fixed SRel
/// and SFrob partitions, all reconstructing with the online-learned dictionary.
pub fn run_real_experiment(cfg: &ExperimentConfig) -> Result<OnlineOutput> {
    expect_kind(cfg, ExperimentKind::OnlineReal)?;
    let (g, trace) = load_real(cfg)?;
    let n = g.n_nodes();
    let m = cfg.n_subsets();
    let methods: Vec<String> = cfg.methods().iter().map(|p| p.name().to_string()).collect();
    let srel = if cfg.methods().contains(&PartitionMethod::Srel) {
        Some(srel_partition(&g, m, rng::derive(cfg.seed, 5), cfg.srel)?)
    } else {
        None
    };
    let sfrob = if cfg.methods().contains(&PartitionMethod::Sfrob) {
        Some(sfrob_partition(&sfrob_basis(&g.gft_basis_of(cfg.graph.laplacian)?, m)?, m)?)
    } else {
        None
    };
    run_tasks(cfg.runs(), &methods, |r, method| {
        let sched = run_scheduler_config(cfg, r);
        let init = SubspaceSource::Learned(SubspaceDictionary::identity(n));
        let partition = match method {
            "srel" => PartitionSource::Fixed(srel.clone().expect("computed above")),
            "sfrob" => PartitionSource::Fixed(sfrob.clone().expect("computed above")),
            _ => PartitionSource::Adaptive,
        };
        run(&trace, &sched, init, partition)
    })
}

/// The three learning configurations of the ablation, in order.
pub fn ablation_configs(base: &SchedulerConfig) -> Vec<(String, SchedulerConfig)> {
    let sampling = Confidence::Sampling { high: 1.0, low: 0.0 };
    [
        ("config1", sampling, TrainingSignal::Reconstruction),
        ("config2", Confidence::Uniform, TrainingSignal::Reconstruction),
        ("config3", sampling, TrainingSignal::ZeroPadded),
    ]
    .into_iter()
    .map(|(name, confidence, training)| (name.to_string(), SchedulerConfig { confidence, training, ..base.clone() }))
    .collect()
}

/// Sampling-indicator confidence (1), uniform confidence (2) and learning on
/// zero-padded measurements (3), all with adaptive partitioning and minimax
/// reconstruction.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<OnlineOutput> {
    expect_kind(cfg, ExperimentKind::Ablation)?;
    let (g, trace) = load_real(cfg)?;
    let n = g.n_nodes();
    let names: Vec<String> = ablation_configs(&cfg.scheduler_config()).into_iter().map(|(n, _)| n).collect();
    run_tasks(cfg.runs(), &names, |r, name| {
        let sched = ablation_configs(&run_scheduler_config(cfg, r))
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .expect("known configuration");
        run(&trace, &sched, SubspaceSource::Learned(SubspaceDictionary::identity(n)), PartitionSource::Adaptive)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_online() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::OnlineSynthetic);
        cfg.graph.n_nodes = 32;
        cfg.graph.k_max = 6;
        cfg.n_subsets = Some(4);
        cfg.signal.duration = 9;
        cfg.runs = Some(2);
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn method2_matches_proposed_before_first_repartition() {
        let cfg = small_online();
        let out = run_online_experiment(&cfg).unwrap();
        for run in 0..2 {
            let get = |m: &str| -> Vec<MetricsRecord> {
                out.records.iter().filter(|r| r.run == run && r.method == m).map(|r| r.metrics).collect()
            };
            let (p, m2) = (get(METHOD_PROPOSED), get(METHOD_2));
            assert_eq!(p.len(), 9);
            for t in 0..4 {
                assert_eq!(p[t].mse_db.to_bits(), m2[t].mse_db.to_bits(), "run {run} t {t}");
            }
        }
        assert_eq!(out.summary.len(), 3);
    }

    #[test]
    fn online_output_is_deterministic() {
        let cfg = small_online();
        let csv = |o: OnlineOutput| {
            let mut b = Vec::new();
            o.write_metrics_csv(&mut b).unwrap();
            b
        };
        assert_eq!(csv(run_online_experiment(&cfg).unwrap()), csv(run_online_experiment(&cfg).unwrap()));
    }

    #[test]
    fn ablation_produces_three_rows() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Ablation);
        cfg.real.n_sensors = 32;
        cfg.real.synthetic_stations = 60;
        cfg.real.last_year = 2016;
        cfg.n_subsets = Some(4);
        cfg.scheduler.buffer_width = 4;
        cfg.learning.outer_max_iters = 5;
        let out = run_ablation(&cfg).unwrap();
        let names: Vec<&str> = out.summary.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["config1", "config2", "config3"]);
        assert_eq!(out.records.len(), 3 * 12);
    }

    #[test]
    fn wrong_kind_is_a_config_error() {
        let cfg = ExperimentConfig::new(ExperimentKind::Static);
        assert!(matches!(run_online_experiment(&cfg), Err(Error::Config(_))));
    }
}
