//! Balanced graph node partitioning by a difference-of-convex relaxation.

mod neumann;
mod objective;
mod pdca;
mod prox;

use std::io::{Read, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sampling::SamplingSet;

pub use neumann::{neumann_surrogate_check, partition_trace_sum, NeumannCheck};
pub use objective::{grad_f, grad_h, objective_f, objective_h, DcProblem};
pub use pdca::{
    binarize, brute_force_bipartition, hierarchical_partition, pdca_bipartition, BinarizeRule, BipartitionOutcome,
    PdcaConfig, TracePoint, BRUTE_FORCE_MAX_NODES,
};
pub use prox::{prox_g, prox_g_admm, ProxMethod};

/// Continuous indicator `m ∈ [0,1]^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedIndicator {
    values: DVector<f64>,
}

impl RelaxedIndicator {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(-1e-9..=1.0 + 1e-9).contains(*v)) {
            return Err(Error::invalid(format!("relaxed indicator entry {v} outside [0, 1]")));
        }
        Ok(RelaxedIndicator { values })
    }

    pub fn constant(n: usize, v: f64) -> Result<Self> {
        RelaxedIndicator::new(DVector::from_element(n, v))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn complement(&self) -> Self {
        RelaxedIndicator { values: self.values.map(|v| 1.0 - v) }
    }

    /// `1ᵀ (m ⊙ (1 − m))`; zero exactly for binary vectors.
    pub fn infeasibility(&self) -> f64 {
        self.values.iter().map(|v| v * (1.0 - v)).sum()
    }
}

/// Disjoint, covering, size-balanced node subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    subsets: Vec<SamplingSet>,
}

impl Partition {
    pub fn new(subsets: Vec<SamplingSet>) -> Result<Self> {
        let Some(first) = subsets.first() else {
            return Err(Error::invalid("partition needs at least one subset"));
        };
        let n = first.n_nodes();
        let m = subsets.len();
        let (lo, hi) = (n / m, n.div_ceil(m));
        let mut seen = vec![false; n];
        for (k, s) in subsets.iter().enumerate() {
            if s.n_nodes() != n {
                return Err(Error::invalid("partition subsets disagree on the node count"));
            }
            if s.len() < lo || s.len() > hi {
                return Err(Error::invalid(format!("subset {k} has {} nodes, expected {lo} or {hi}", s.len())));
            }
            for &i in s.indices() {
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::invalid(format!("node {i} is in more than one subset")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("node {i} is in no subset")));
        }
        Ok(Partition { subsets })
    }

    /// Builds a partition from per-node subset labels `0..n_subsets`.
    pub fn from_labels(labels: &[usize], n_subsets: usize) -> Result<Self> {
        let mut sets = vec![Vec::new(); n_subsets];
        for (i, &l) in labels.iter().enumerate() {
            if l >= n_subsets {
                return Err(Error::invalid(format!("node {i} has subset label {l} >= {n_subsets}")));
            }
            sets[l].push(i);
        }
        let subsets = sets.into_iter().map(|s| SamplingSet::new(labels.len(), s)).collect::<Result<Vec<_>>>()?;
        Partition::new(subsets)
    }

    pub fn subsets(&self) -> &[SamplingSet] {
        &self.subsets
    }

    pub fn subset(&self, k: usize) -> &SamplingSet {
        &self.subsets[k]
    }

    pub fn n_subsets(&self) -> usize {
        self.subsets.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.subsets[0].n_nodes()
    }

    /// Subset label of every node.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n_nodes()];
        for (k, s) in self.subsets.iter().enumerate() {
            for &i in s.indices() {
                labels[i] = k;
            }
        }
        labels
    }

    /// Writes `subset_id,node_id` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["subset_id", "node_id"])?;
        for (k, s) in self.subsets.iter().enumerate() {
            for &i in s.indices() {
                wtr.write_record([k.to_string(), i.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        if rdr.headers()?.iter().collect::<Vec<_>>() != ["subset_id", "node_id"] {
            return Err(Error::Parse("partition header must be subset_id,node_id".into()));
        }
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad index {s:?}")));
            pairs.push((parse(&rec[0])?, parse(&rec[1])?));
        }
        let n = pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0);
        let m = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
        if pairs.len() != n {
            return Err(Error::Parse(format!("{} rows for {n} nodes", pairs.len())));
        }
        let mut labels = vec![usize::MAX; n];
        for (k, i) in pairs {
            if labels[i] != usize::MAX {
                return Err(Error::Parse(format!("node {i} listed twice")));
            }
            labels[i] = k;
        }
        Partition::from_labels(&labels, m)
    }
}
