//! Ranking-based comparison partitioners: topology-driven (SRel) and
//! signal-driven greedy A-optimality (SFrob).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{eigenvector_centrality, modularity_clustering, Graph, ModularityMethod};
use crate::partition::Partition;
use crate::signals::SubspaceDictionary;

/// Ridge added to `SᵀAAᵀS` by the SFrob ranking.
pub const SFROB_RIDGE: f64 = 1e-8;

/// A permutation of the nodes, most important first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedNodes {
    order: Vec<usize>,
}

impl RankedNodes {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("ranking is not a permutation"));
            }
        }
        Ok(RankedNodes { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Deals ranked nodes to `n_subsets` subsets in turn.
pub fn cyclic_assignment(ranking: &RankedNodes, n_subsets: usize) -> Result<Partition> {
    let n = ranking.len();
    if n_subsets == 0 || n_subsets > n {
        return Err(Error::invalid(format!("cannot deal {n} nodes into {n_subsets} subsets")));
    }
    let mut labels = vec![0; n];
    for (r, &i) in ranking.order().iter().enumerate() {
        labels[i] = r % n_subsets;
    }
    Partition::from_labels(&labels, n_subsets)
}

/// How per-cluster rankings are merged into one list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeOrder {
    /// Whole clusters one after another, largest first. Cyclic dealing then
    /// spreads every cluster over all subsets.
    #[default]
    Concatenate,
    /// Take the next node of each cluster in turn, largest cluster first.
    RoundRobin,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrelOptions {
    pub clustering: ModularityMethod,
    pub merge: MergeOrder,
}

pub fn srel_ranking(g: &Graph, seed: u64, opts: SrelOptions) -> Result<RankedNodes> {
    let mut clusters = modularity_clustering(g, seed, opts.clustering)?;
    let centrality = eigenvector_centrality(g, 1e-12)?;
    for c in clusters.iter_mut() {
        c.sort_by(|&i, &j| centrality[j].total_cmp(&centrality[i]).then(i.cmp(&j)));
    }
    // stable: equal sizes keep their clustering order
    clusters.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let order = match opts.merge {
        MergeOrder::Concatenate => clusters.concat(),
        MergeOrder::RoundRobin => {
            let longest = clusters.first().map_or(0, Vec::len);
            (0..longest).flat_map(|r| clusters.iter().filter_map(move |c| c.get(r).copied())).collect()
        }
    };
    RankedNodes::new(order)
}

pub fn srel_partition(g: &Graph, n_subsets: usize, seed: u64, opts: SrelOptions) -> Result<Partition> {
    if n_subsets < 2 {
        return Err(Error::invalid("SRel needs at least two subsets"));
    }
    cyclic_assignment(&srel_ranking(g, seed, opts)?, n_subsets)
}

/// Greedy ranking by `tr((SᵀAAᵀS + εI)⁻¹)`, ties to the lower node index.
///
/// While the selected rows do not yet span the row space of `A`, the ridge
/// objective is dominated by `(M − rank)/ε` and its differences are lost in
/// rounding at `ε = 1e-8`. Those steps use the `ε → 0` limit instead: with
/// `r_j` the residual of row `j` against the selected rows and `L` the
/// Cholesky factor of `SᵀAAᵀS`, adding `j` raises `tr((SᵀAAᵀS)⁻¹)` by
/// `(1 + ‖L⁻ᵀ Qᵀ a_j‖²) / ‖r_j‖²`. Once every remaining row is in the span,
/// the ridge objective is well conditioned and is reduced directly.
pub fn sfrob_ranking(a: &SubspaceDictionary) -> RankedNodes {
    let am = a.matrix();
    let (n, m) = am.shape();
    let scale = am.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max);
    let span_tol = 1e-10 * scale.max(f64::MIN_POSITIVE);

    let mut selected = vec![false; n];
    let mut order = Vec::with_capacity(n);
    // residual rows (as columns) and coordinates u_j = L⁻ᵀ Qᵀ a_j
    let mut resid: DMatrix<f64> = am.transpose();
    let mut u: Vec<Vec<f64>> = vec![Vec::new(); n];

    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| !selected[j]) {
            let r2 = resid.column(j).norm_squared();
            if r2 <= span_tol {
                continue;
            }
            let cost = (1.0 + u[j].iter().map(|v| v * v).sum::<f64>()) / r2;
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((j, cost));
            }
        }
        let Some((s, _)) = best else { break };
        selected[s] = true;
        order.push(s);
        let delta = resid.column(s).norm();
        let q: DVector<f64> = resid.column(s) / delta;
        let us = u[s].clone();
        for j in (0..n).filter(|&j| !selected[j]) {
            let pi = q.dot(&am.row(j).transpose());
            let coef = pi / delta;
            for (uj, usk) in u[j].iter_mut().zip(&us) {
                *uj -= usk * coef;
            }
            u[j].push(coef);
            let mut col = resid.column_mut(j);
            col.axpy(-pi, &q, 1.0);
        }
    }

    if order.len() < n {
        // remaining rows lie in the span of the selected ones
        let rows = |idx: &[usize]| am.select_rows(idx.iter());
        loop {
            let rest: Vec<usize> = (0..n).filter(|&j| !selected[j]).collect();
            if rest.is_empty() {
                break;
            }
            let sa = rows(&order);
            let f = sa.transpose() * &sa + DMatrix::identity(m, m) * SFROB_RIDGE;
            let chol = f.cholesky().expect("ridge-regularized Gram matrix is positive definite");
            let cand = rows(&rest).transpose();
            let z = chol.solve(&cand);
            let mut best = (rest[0], f64::NEG_INFINITY);
            for (k, &j) in rest.iter().enumerate() {
                let zj = z.column(k);
                let gain = zj.norm_squared() / (1.0 + cand.column(k).dot(&zj));
                if gain > best.1 {
                    best = (j, gain);
                }
            }
            selected[best.0] = true;
            order.push(best.0);
        }
    }
    RankedNodes { order }
}

pub fn sfrob_partition(a: &SubspaceDictionary, n_subsets: usize) -> Result<Partition> {
    cyclic_assignment(&sfrob_ranking(a), n_subsets)
}
