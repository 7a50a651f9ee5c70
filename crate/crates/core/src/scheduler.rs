//! Online sensor scheduling: cyclic sampling over a partition that is
//! recomputed every `M` steps, with subspace tracking in between.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dictlearn::{learn, ConfidenceWeights, DictLearnConfig};
use crate::error::{Error, Result};
use crate::partition::{hierarchical_partition, Partition, PdcaConfig};
use crate::rng;
use crate::sampling::{ls_reconstruct, mse_db, reconstruct_or_pad, sample};
use crate::signals::{SignalTrace, SubspaceDictionary};

/// Sliding window of the last `width` training signals and their confidences.
#[derive(Debug, Clone)]
pub struct SignalBuffer {
    width: usize,
    columns: VecDeque<DVector<f64>>,
    confidences: VecDeque<DVector<f64>>,
}

impl SignalBuffer {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("buffer width must be at least 1"));
        }
        Ok(SignalBuffer { width, columns: VecDeque::new(), confidences: VecDeque::new() })
    }

    /// Appends a column, evicting the oldest when full.
    pub fn push(&mut self, column: DVector<f64>, confidence: DVector<f64>) {
        if self.columns.len() == self.width {
            self.columns.pop_front();
            self.confidences.pop_front();
        }
        self.columns.push_back(column);
        self.confidences.push_back(confidence);
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn columns(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.columns.iter()
    }

    /// `(X, W)`, oldest column first.
    pub fn matrices(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        if self.columns.is_empty() {
            return None;
        }
        let x: Vec<_> = self.columns.iter().cloned().collect();
        let w: Vec<_> = self.confidences.iter().cloned().collect();
        Some((DMatrix::from_columns(&x), DMatrix::from_columns(&w)))
    }
}

/// Which signal is stored in the learning buffer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingSignal {
    /// The minimax reconstruction.
    #[default]
    Reconstruction,
    /// Measurements at sampled nodes, zero elsewhere.
    ZeroPadded,
}

/// How confident the learner is in each buffered entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Confidence {
    /// `high` at sampled nodes, `low` elsewhere.
    Sampling { high: f64, low: f64 },
    /// Every node gets weight one.
    Uniform,
}

impl Default for Confidence {
    fn default() -> Self {
        Confidence::Sampling { high: 1.0, low: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Number of subsets `M`, a power of two.
    pub n_subsets: usize,
    pub sigma: f64,
    pub seed: u64,
    pub pdca: PdcaConfig,
    pub learning: DictLearnConfig,
    /// Buffer width `D`.
    pub buffer_width: usize,
    pub confidence: Confidence,
    pub training: TrainingSignal,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            n_subsets: 16,
            sigma: 0.0,
            seed: 0,
            pdca: PdcaConfig::default(),
            learning: DictLearnConfig::default(),
            buffer_width: 20,
            confidence: Confidence::default(),
            training: TrainingSignal::default(),
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.n_subsets.is_power_of_two() || self.n_subsets < 2 {
            return Err(Error::Config(format!("n_subsets must be a power of two >= 2, got {}", self.n_subsets)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.buffer_width == 0 {
            return Err(Error::Config("buffer_width must be at least 1".into()));
        }
        if let Confidence::Sampling { high, low } = self.confidence {
            if !(0.0..=1.0).contains(&high) || !(0.0..=1.0).contains(&low) {
                return Err(Error::Config("confidence weights must lie in [0, 1]".into()));
            }
        }
        self.pdca.validate()?;
        self.learning.validate()
    }
}

/// Where the dictionary used at each step comes from.
#[derive(Debug, Clone)]
pub enum SubspaceSource<'a> {
    /// Learned online from the buffer, starting at the given dictionary.
    Learned(SubspaceDictionary),
    /// The true dictionary of every step.
    Oracle(&'a [SubspaceDictionary]),
    /// One dictionary for all steps.
    Fixed(SubspaceDictionary),
}

#[derive(Debug, Clone)]
pub enum PartitionSource {
    /// Recomputed from the current dictionary every `M` steps.
    Adaptive,
    Fixed(Partition),
}

/// One row of the metrics stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub t: usize,
    pub subset_id: usize,
    pub mse_db: f64,
    /// Index of the partition in use (0 for fixed partitions).
    pub epoch: usize,
    /// Condition number of `SᵀA_t`; infinite when reconstruction fell back to zero padding.
    pub cond: f64,
}

pub const METRICS_HEADER: [&str; 5] = ["t", "subset_id", "mse_db", "epoch", "cond"];

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(METRICS_HEADER)?;
    for r in records {
        if !r.mse_db.is_finite() {
            return Err(Error::numerical(format!("non-finite MSE at t = {}", r.t)));
        }
        wtr.write_record([
            r.t.to_string(),
            r.subset_id.to_string(),
            r.mse_db.to_string(),
            r.epoch.to_string(),
            r.cond.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub reconstruction: DVector<f64>,
    pub record: MetricsRecord,
}

/// Partition computed by the scheduler at the start of `epoch`.
pub fn epoch_partition(a: &SubspaceDictionary, cfg: &SchedulerConfig, epoch: usize) -> Result<Partition> {
    let pdca = PdcaConfig { seed: rng::derive(cfg.pdca.seed, epoch as u64), ..cfg.pdca.clone() };
    hierarchical_partition(a, cfg.n_subsets.trailing_zeros(), &pdca)
}

/// The scheduling state machine.
pub struct Scheduler<'a> {
    cfg: SchedulerConfig,
    source: SubspaceSource<'a>,
    fixed_partition: Option<Partition>,
    t: usize,
    epoch: usize,
    partition: Option<Partition>,
    dictionary: SubspaceDictionary,
    buffer: SignalBuffer,
}

impl<'a> Scheduler<'a> {
    pub fn new(cfg: SchedulerConfig, source: SubspaceSource<'a>, partition: PartitionSource) -> Result<Self> {
        cfg.validate()?;
        let dictionary = match &source {
            SubspaceSource::Learned(a) | SubspaceSource::Fixed(a) => a.clone(),
            SubspaceSource::Oracle(list) => {
                list.first().cloned().ok_or_else(|| Error::invalid("oracle dictionary list is empty"))?
            }
        };
        let n = dictionary.n_nodes();
        if cfg.n_subsets > n {
            return Err(Error::Config(format!("{} subsets for {n} nodes", cfg.n_subsets)));
        }
        let fixed_partition = match partition {
            PartitionSource::Adaptive => None,
            PartitionSource::Fixed(p) => {
                if p.n_subsets() != cfg.n_subsets || p.n_nodes() != n {
                    return Err(Error::Config("fixed partition does not match the configuration".into()));
                }
                Some(p)
            }
        };
        Ok(Scheduler {
            buffer: SignalBuffer::new(cfg.buffer_width)?,
            partition: fixed_partition.clone(),
            fixed_partition,
            cfg,
            source,
            t: 0,
            epoch: 0,
            dictionary,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    /// The dictionary that the next step reconstructs with.
    pub fn dictionary(&self) -> &SubspaceDictionary {
        &self.dictionary
    }

    pub fn buffer(&self) -> &SignalBuffer {
        &self.buffer
    }

    /// Samples, reconstructs and learns from `x` (the true signal at the current step).
    pub fn step(&mut self, x: &DVector<f64>) -> Result<StepOutput> {
        let t = self.t;
        let m = self.cfg.n_subsets;
        if let SubspaceSource::Oracle(list) = &self.source {
            self.dictionary =
                list.get(t).cloned().ok_or_else(|| Error::invalid(format!("no oracle dictionary for t = {t}")))?;
        }
        if x.len() != self.dictionary.n_nodes() {
            return Err(Error::invalid("signal length differs from the dictionary"));
        }
        if t % m == 0 && self.fixed_partition.is_none() {
            self.partition = Some(epoch_partition(&self.dictionary, &self.cfg, t / m)?);
            self.epoch = t / m;
        }
        let partition = self.partition.as_ref().expect("partition set at t = 0");
        let subset_id = t % m;
        let set = partition.subset(subset_id);
        let meas = sample(x, set, self.cfg.sigma, rng::derive(self.cfg.seed, t as u64))?;
        let (x_hat, cond) = reconstruct_or_pad(&self.dictionary, &meas)?;
        let record = MetricsRecord { t, subset_id, mse_db: mse_db(x, &x_hat), epoch: self.epoch, cond };

        if let SubspaceSource::Learned(_) = self.source {
            let column = match self.cfg.training {
                TrainingSignal::Reconstruction => x_hat.clone(),
                TrainingSignal::ZeroPadded => ls_reconstruct(&meas),
            };
            let confidence = match self.cfg.confidence {
                Confidence::Sampling { high, low } => set.indicator().map(|s| if s > 0.0 { high } else { low }),
                Confidence::Uniform => DVector::from_element(x.len(), 1.0),
            };
            self.buffer.push(column, confidence);
            let (bx, bw) = self.buffer.matrices().expect("buffer is non-empty after a push");
            let out = learn(&bx, &ConfidenceWeights::new(bw)?, &self.dictionary, &self.cfg.learning)?;
            self.dictionary = out.dictionary;
        }
        self.t += 1;
        Ok(StepOutput { reconstruction: x_hat, record })
    }
}

/// Runs the scheduler over a whole trace.
pub fn run(
    trace: &SignalTrace,
    cfg: &SchedulerConfig,
    source: SubspaceSource<'_>,
    partition: PartitionSource,
) -> Result<Vec<MetricsRecord>> {
    let mut s = Scheduler::new(cfg.clone(), source, partition)?;
    (0..trace.len()).map(|t| s.step(&trace.signal(t)).map(|o| o.record)).collect()
}

/// Dictionaries for [`run_fixed`].
#[derive(Debug, Clone)]
pub enum FixedDictionaries<'a> {
    /// One dictionary for every step (static subspace).
    Static(SubspaceDictionary),
    /// The true dictionary of every step.
    PerStep(&'a [SubspaceDictionary]),
}

/// Fixed partition with a static or oracle subspace.
pub fn run_fixed(
    trace: &SignalTrace,
    cfg: &SchedulerConfig,
    partition: Partition,
    dictionaries: FixedDictionaries<'_>,
) -> Result<Vec<MetricsRecord>> {
    let source = match dictionaries {
        FixedDictionaries::Static(a) => SubspaceSource::Fixed(a),
        FixedDictionaries::PerStep(list) => SubspaceSource::Oracle(list),
    };
    run(trace, cfg, source, PartitionSource::Fixed(partition))
}

pub fn mean_mse_db(records: &[MetricsRecord]) -> f64 {
    records.iter().map(|r| r.mse_db).sum::<f64>() / records.len().max(1) as f64
}
