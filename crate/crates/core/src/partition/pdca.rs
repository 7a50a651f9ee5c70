use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::sampling::SamplingSet;
use crate::signals::SubspaceDictionary;

use super::objective::DcProblem;
use super::prox::{prox_g, prox_g_admm, ProxMethod};
use super::{objective_h, Partition, RelaxedIndicator};

/// Largest node count [`brute_force_bipartition`] accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 14;

/// How the relaxed indicator is turned into two node sets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinarizeRule {
    /// The `⌈N/2⌉` largest entries form the first set (ties by node index).
    #[default]
    TopHalf,
    /// Entries `≥ 1/2` form the first set, then the lowest members are moved
    /// out (or the highest non-members in) until it has `⌈N/2⌉` nodes.
    ThresholdHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdcaConfig {
    /// Step size is `1/lipschitz`.
    pub lipschitz: f64,
    pub beta: f64,
    pub max_iters: usize,
    /// Stop once `‖m⁺ − m‖ / √N` drops to this.
    pub tol: f64,
    pub binarize: BinarizeRule,
    pub seed: u64,
    pub prox: ProxMethod,
    /// Raise `lipschitz` to a computed bound on the Lipschitz constant of
    /// `∇f` when it is smaller, which keeps the iteration monotone.
    pub enforce_lipschitz_bound: bool,
}

impl Default for PdcaConfig {
    fn default() -> Self {
        PdcaConfig {
            lipschitz: 1e3,
            beta: 1.0,
            max_iters: 5000,
            tol: 1e-6,
            binarize: BinarizeRule::TopHalf,
            seed: 0,
            prox: ProxMethod::Bisection,
            enforce_lipschitz_bound: true,
        }
    }
}

impl PdcaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::Config(format!("lipschitz must be positive, got {}", self.lipschitz)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Objective values at one feasible iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iter: usize,
    pub f: f64,
    pub h: f64,
}

impl TracePoint {
    /// `f − h` (the constraint indicator is zero at feasible iterates).
    pub fn dc(&self) -> f64 {
        self.f - self.h
    }
}

#[derive(Debug, Clone)]
pub struct BipartitionOutcome {
    /// `⌈N/2⌉` nodes.
    pub first: SamplingSet,
    /// `⌊N/2⌋` nodes.
    pub second: SamplingSet,
    pub relaxed: RelaxedIndicator,
    pub trace: Vec<TracePoint>,
    pub iterations: usize,
    pub converged: bool,
    pub lipschitz: f64,
    /// `f` at the binarized indicator.
    pub binary_objective: f64,
}

impl BipartitionOutcome {
    /// Writes `iter,f,h,F` rows.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["iter", "f", "h", "F"])?;
        for p in &self.trace {
            wtr.write_record([
                p.iter.to_string(),
                format!("{:e}", p.f),
                format!("{:e}", p.h),
                format!("{:e}", p.dc()),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Splits `0..n` into the `⌈n/2⌉` preferred nodes and the rest.
pub fn binarize(m: &DVector<f64>, rule: BinarizeRule) -> (Vec<usize>, Vec<usize>) {
    let n = m.len();
    let want = n.div_ceil(2);
    // descending value, ascending index
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j].total_cmp(&m[i]).then(i.cmp(&j)));
    let mut chosen = vec![false; n];
    match rule {
        BinarizeRule::TopHalf => {
            for &i in &order[..want] {
                chosen[i] = true;
            }
        }
        BinarizeRule::ThresholdHalf => {
            let mut count = 0;
            for i in 0..n {
                if m[i] >= 0.5 {
                    chosen[i] = true;
                    count += 1;
                }
            }
            for &i in order.iter().rev() {
                if count <= want {
                    break;
                }
                if chosen[i] {
                    chosen[i] = false;
                    count -= 1;
                }
            }
            for &i in order.iter() {
                if count >= want {
                    break;
                }
                if !chosen[i] {
                    chosen[i] = true;
                    count += 1;
                }
            }
        }
    }
    let first = (0..n).filter(|&i| chosen[i]).collect();
    let second = (0..n).filter(|&i| !chosen[i]).collect();
    (first, second)
}

fn default_start(n: usize, seed: u64) -> DVector<f64> {
    let mut r = rng::stream(seed, 0x6d30);
    DVector::from_fn(n, |_, _| 0.5 + r.random_range(-0.01..0.01))
}

fn run_pdca(prob: &DcProblem, cfg: &PdcaConfig, m0: Option<&RelaxedIndicator>) -> Result<BipartitionOutcome> {
    cfg.validate()?;
    let n = prob.n_nodes();
    if n < 2 {
        return Err(Error::invalid("bipartition needs at least two nodes"));
    }
    let mut m = match m0 {
        Some(m0) if m0.len() != n => {
            return Err(Error::invalid(format!("initial indicator has {} entries, expected {n}", m0.len())))
        }
        Some(m0) => m0.values().clone(),
        None => default_start(n, cfg.seed),
    };
    let lipschitz = if cfg.enforce_lipschitz_bound { cfg.lipschitz.max(prob.lipschitz_bound()) } else { cfg.lipschitz };
    let gamma = 1.0 / lipschitz;
    let target = n as f64 / 2.0;
    let sqrt_n = (n as f64).sqrt();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=cfg.max_iters {
        iterations = k;
        let step = prob.grad_f(&m) - super::grad_h(&m, cfg.beta);
        let v = &m - gamma * step;
        let next = match cfg.prox {
            ProxMethod::Bisection => prox_g(&v, target),
            ProxMethod::Admm => prox_g_admm(&v, target, 100_000),
        }
        .map_err(|e| Error::numerical(format!("PDCA iteration {k}: {e}")))?
        .into_values();
        let f = prob.f(&next);
        let h = objective_h(&next, cfg.beta);
        if !f.is_finite() || !h.is_finite() {
            return Err(Error::numerical(format!("PDCA diverged at iteration {k}")));
        }
        trace.push(TracePoint { iter: k, f, h });
        let change = (&next - &m).norm() / sqrt_n;
        m = next;
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }
    let relaxed = RelaxedIndicator::new(m)?;
    log::debug!(
        "PDCA on {n} nodes: {iterations} iterations, converged={converged}, residual infeasibility {:.3e}",
        relaxed.infeasibility()
    );
    let (first, second) = binarize(relaxed.values(), cfg.binarize);
    let mut ind = DVector::zeros(n);
    for &i in &first {
        ind[i] = 1.0;
    }
    let binary_objective = prob.f(&ind);
    Ok(BipartitionOutcome {
        first: SamplingSet::new(n, first)?,
        second: SamplingSet::new(n, second)?,
        relaxed,
        trace,
        iterations,
        converged,
        lipschitz,
        binary_objective,
    })
}

/// Balanced bipartition of the rows of `a` by the proximal DC algorithm.
///
/// `m0` defaults to `0.5·1` plus a seeded `U(−0.01, 0.01)` perturbation.
pub fn pdca_bipartition(
    a: &SubspaceDictionary,
    cfg: &PdcaConfig,
    m0: Option<&RelaxedIndicator>,
) -> Result<BipartitionOutcome> {
    run_pdca(&DcProblem::from_dictionary(a), cfg, m0)
}

fn visit_combinations(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + n - k) else {
            return;
        };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Exhaustive search over balanced bipartitions.
///
/// Minimizes `tr((S₁ᵀAAᵀS₁)⁻¹) + tr((S₂ᵀAAᵀS₂)⁻¹)` when `exact`, otherwise the
/// squared-trace surrogate. Returns the first (lexicographic) minimizer.
pub fn brute_force_bipartition(a: &SubspaceDictionary, exact: bool) -> Result<(SamplingSet, SamplingSet, f64)> {
    let n = a.n_nodes();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::invalid(format!("brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")));
    }
    if n < 2 {
        return Err(Error::invalid("bipartition needs at least two nodes"));
    }
    let p = a.node_gram();
    let prob = DcProblem::from_node_gram(&p);
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut failure = None;
    visit_combinations(n, n.div_ceil(2), |first| {
        let value = if exact {
            let mut in_first = vec![false; n];
            for &i in first {
                in_first[i] = true;
            }
            let second: Vec<usize> = (0..n).filter(|&i| !in_first[i]).collect();
            let side = |s: &[usize]| {
                let b = p.select_rows(s.iter()).select_columns(s.iter());
                linalg::trace_inverse_psd(&b)
            };
            match (side(first), side(&second)) {
                (Ok(x), Ok(y)) => x + y,
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            }
        } else {
            let mut m = DVector::zeros(n);
            for &i in first {
                m[i] = 1.0;
            }
            prob.f(&m)
        };
        match &best {
            Some((_, b)) if !(value < *b) => {}
            _ => best = Some((first.to_vec(), value)),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (first, value) = best.expect("at least one combination");
    let second = (0..n).filter(|i| !first.contains(i)).collect();
    Ok((SamplingSet::new(n, first)?, SamplingSet::new(n, second)?, value))
}

fn split(p: &DMatrix<f64>, nodes: Vec<usize>, depth: u32, cfg: &PdcaConfig, seed: u64) -> Result<Vec<Vec<usize>>> {
    if depth == 0 {
        return Ok(vec![nodes]);
    }
    let sub = p.select_rows(nodes.iter()).select_columns(nodes.iter());
    let local = PdcaConfig { seed, ..cfg.clone() };
    let out = run_pdca(&DcProblem::from_node_gram(&sub), &local, None)?;
    let left: Vec<usize> = out.first.indices().iter().map(|&i| nodes[i]).collect();
    let right: Vec<usize> = out.second.indices().iter().map(|&i| nodes[i]).collect();
    let (l, r) = rayon::join(
        || split(p, left, depth - 1, cfg, rng::derive(seed, 1)),
        || split(p, right, depth - 1, cfg, rng::derive(seed, 2)),
    );
    let mut sets = l?;
    sets.extend(r?);
    Ok(sets)
}

/// `2^k` balanced subsets by recursive bipartitioning.
///
/// Each subproblem restricts `A` to the rows of the nodes being split.
pub fn hierarchical_partition(a: &SubspaceDictionary, k: u32, cfg: &PdcaConfig) -> Result<Partition> {
    let n = a.n_nodes();
    let m = 1usize
        .checked_shl(k)
        .filter(|&m| m <= n)
        .ok_or_else(|| Error::invalid(format!("cannot split {n} nodes into 2^{k} subsets")))?;
    cfg.validate()?;
    let p = a.node_gram();
    let sets = split(&p, (0..n).collect(), k, cfg, cfg.seed)?;
    debug_assert_eq!(sets.len(), m);
    Partition::new(sets.into_iter().map(|s| SamplingSet::new(n, s)).collect::<Result<_>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::objective_f;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn random_dict(n: usize, m: usize, seed: u64) -> SubspaceDictionary {
        let mut r = rng::stream(seed, 11);
        SubspaceDictionary::new(DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut r))).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(PdcaConfig::default().validate().is_ok());
        assert!(PdcaConfig { beta: 0.0, ..Default::default() }.validate().is_err());
        assert!(PdcaConfig { lipschitz: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn binarize_rules() {
        let m = DVector::from_vec(vec![0.9, 0.1, 0.6, 0.6, 0.2]);
        assert_eq!(binarize(&m, BinarizeRule::TopHalf), (vec![0, 2, 3], vec![1, 4]));
        let all_high = DVector::from_vec(vec![0.9, 0.8, 0.7, 0.6]);
        assert_eq!(binarize(&all_high, BinarizeRule::ThresholdHalf), (vec![0, 1], vec![2, 3]));
        let all_low = DVector::from_vec(vec![0.1, 0.4, 0.2, 0.3]);
        assert_eq!(binarize(&all_low, BinarizeRule::ThresholdHalf), (vec![1, 3], vec![0, 2]));
    }

    #[test]
    fn identity_dictionary_any_balanced_split_is_optimal() {
        let a = SubspaceDictionary::identity(8);
        let out = pdca_bipartition(&a, &PdcaConfig::default(), None).unwrap();
        assert_eq!(out.first.len(), 4);
        let mut m = DVector::zeros(8);
        for i in 0..4 {
            m[i] = 1.0;
        }
        assert_relative_eq!(out.binary_objective, objective_f(&m, &a), epsilon = 1e-12);
    }

    #[test]
    fn brute_force_identity_ties() {
        let (_, _, v) = brute_force_bipartition(&SubspaceDictionary::identity(4), true).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-12);
        assert!(brute_force_bipartition(&SubspaceDictionary::identity(15), false).is_err());
    }

    #[test]
    fn brute_force_bounds_pdca() {
        for seed in 0..5 {
            let a = random_dict(6, 3, seed);
            let (_, _, best) = brute_force_bipartition(&a, false).unwrap();
            let out = pdca_bipartition(&a, &PdcaConfig::default(), None).unwrap();
            assert!(best <= out.binary_objective + 1e-12);
        }
    }

    #[test]
    fn iterates_feasible_and_descending() {
        let a = random_dict(10, 4, 3);
        let out = pdca_bipartition(&a, &PdcaConfig::default(), None).unwrap();
        let m = out.relaxed.values();
        assert!((m.sum() - 5.0).abs() <= 1e-9);
        for w in out.trace.windows(2) {
            assert!(w[1].dc() <= w[0].dc() + 1e-9);
        }
    }

    #[test]
    fn complement_start_swaps_subsets() {
        let a = random_dict(10, 3, 8);
        let m0 = RelaxedIndicator::new(default_start(10, 4)).unwrap();
        let cfg = PdcaConfig::default();
        let x = pdca_bipartition(&a, &cfg, Some(&m0)).unwrap();
        let y = pdca_bipartition(&a, &cfg, Some(&m0.complement())).unwrap();
        assert_eq!(x.first, y.second);
        assert_eq!(x.second, y.first);
        assert_relative_eq!(x.binary_objective, y.binary_objective, max_relative = 1e-12);
    }

    #[test]
    fn admm_prox_gives_same_partition() {
        let a = random_dict(12, 4, 9);
        let cfg = PdcaConfig { max_iters: 300, ..Default::default() };
        let x = pdca_bipartition(&a, &cfg, None).unwrap();
        let y = pdca_bipartition(&a, &PdcaConfig { prox: ProxMethod::Admm, ..cfg }, None).unwrap();
        assert_relative_eq!(x.relaxed.values(), y.relaxed.values(), epsilon = 1e-6);
    }

    #[test]
    fn hierarchy_sizes() {
        let a = random_dict(37, 5, 1);
        let k1 = hierarchical_partition(&a, 1, &PdcaConfig::default()).unwrap();
        let direct = pdca_bipartition(&a, &PdcaConfig::default(), None).unwrap();
        assert_eq!(k1.subset(0), &direct.first);
        let k3 = hierarchical_partition(&a, 3, &PdcaConfig::default()).unwrap();
        assert_eq!(k3.n_subsets(), 8);
        assert!(k3.subsets().iter().all(|s| s.len() == 4 || s.len() == 5));
        assert!(hierarchical_partition(&a, 6, &PdcaConfig::default()).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let out = pdca_bipartition(&random_dict(4, 2, 0), &PdcaConfig::default(), None).unwrap();
        let mut buf = Vec::new();
        out.write_trace_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iter,f,h,F\n1,"));
    }
}
