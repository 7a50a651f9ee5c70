//! Synthetic graph-signal generators and the subspace dictionaries behind them.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{GftBasis, Graph};
use crate::matrix_io;
use crate::rng;

/// Number of low-frequency eigenvectors in the piecewise-smooth dictionary.
pub const PWS_SMOOTH_ATOMS: usize = 32;
/// Variance of the cluster-offset coefficients of piecewise-smooth signals.
pub const PWS_OFFSET_VARIANCE: f64 = 5.0;

/// Generation transform `A` (N×M) whose column span is the signal subspace.
///
/// Columns are never identically zero and all entries are finite. `M` may
/// exceed `N` (the time-varying piecewise-smooth model stacks an `N×N` filter
/// with cluster indicators).
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDictionary {
    matrix: DMatrix<f64>,
}

impl SubspaceDictionary {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::invalid("dictionary must be non-empty"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dictionary has non-finite entries"));
        }
        if let Some(j) = (0..matrix.ncols()).find(|&j| matrix.column(j).iter().all(|v| *v == 0.0)) {
            return Err(Error::invalid(format!("dictionary column {j} is identically zero")));
        }
        Ok(SubspaceDictionary { matrix })
    }

    pub fn identity(n: usize) -> Self {
        SubspaceDictionary { matrix: DMatrix::identity(n, n) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.matrix.ncols()
    }

    /// `A Aᵀ` (N×N).
    pub fn node_gram(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }

    /// `[self, other]`.
    pub fn hstack(&self, other: &SubspaceDictionary) -> Result<Self> {
        if self.n_nodes() != other.n_nodes() {
            return Err(Error::invalid("cannot stack dictionaries over different node counts"));
        }
        let mut m = DMatrix::zeros(self.n_nodes(), self.n_atoms() + other.n_atoms());
        m.columns_mut(0, self.n_atoms()).copy_from(&self.matrix);
        m.columns_mut(self.n_atoms(), other.n_atoms()).copy_from(&other.matrix);
        SubspaceDictionary::new(m)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        matrix_io::write_matrix(&self.matrix, out)
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        SubspaceDictionary::new(matrix_io::read_matrix(input)?)
    }
}

fn normal_vector(rng: &mut rng::Rng, n: usize, mean: f64, std: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        mean + std * z
    })
}

/// Heat-diffusion dictionary `U exp(-αΛ) Uᵀ`.
pub fn heat_dictionary(basis: &GftBasis, alpha: f64) -> Result<SubspaceDictionary> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("heat diffusion needs alpha >= 0, got {alpha}")));
    }
    SubspaceDictionary::new(basis.spectral_filter(|l| (-alpha * l).exp()))
}

/// Heat-diffusion signal `x = A_heat d` with `d ~ N(1, I)`.
pub fn gen_hd(basis: &GftBasis, alpha: f64, seed: u64) -> Result<(SubspaceDictionary, DVector<f64>)> {
    let a = heat_dictionary(basis, alpha)?;
    let mut rng = rng::stream(seed, 0x6864);
    let d = normal_vector(&mut rng, a.n_atoms(), 1.0, 1.0);
    let x = a.matrix() * d;
    Ok((a, x))
}

/// Checks that `clusters` partition `0..n` and returns per-node labels.
pub fn cluster_labels(n: usize, clusters: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut label = vec![usize::MAX; n];
    for (c, set) in clusters.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::invalid(format!("cluster {c} is empty")));
        }
        for &i in set {
            if i >= n {
                return Err(Error::invalid(format!("cluster {c} references node {i} of {n}")));
            }
            if label[i] != usize::MAX {
                return Err(Error::invalid(format!("node {i} appears in more than one cluster")));
            }
            label[i] = c;
        }
    }
    if let Some(i) = label.iter().position(|&l| l == usize::MAX) {
        return Err(Error::invalid(format!("node {i} is not covered by any cluster")));
    }
    Ok(label)
}

/// Indicator columns `[1_T1, …, 1_Tc]` for a node partition.
pub fn cluster_indicators(n: usize, clusters: &[Vec<usize>]) -> Result<DMatrix<f64>> {
    cluster_labels(n, clusters)?;
    let mut m = DMatrix::zeros(n, clusters.len());
    for (c, set) in clusters.iter().enumerate() {
        for &i in set {
            m[(i, c)] = 1.0;
        }
    }
    Ok(m)
}

/// Piecewise-smooth dictionary `[u_1, …, u_32 | 1_T1, 1_T2, 1_T3]`.
///
/// The smooth block starts at the second-smallest graph frequency; `u_0`
/// (constant on connected graphs) is left out.
pub fn pws_dictionary(basis: &GftBasis, clusters: &[Vec<usize>]) -> Result<SubspaceDictionary> {
    let n = basis.n_nodes();
    let smooth = basis.columns(1, PWS_SMOOTH_ATOMS.min(n.saturating_sub(1)))?;
    let ind = cluster_indicators(n, clusters)?;
    let mut m = DMatrix::zeros(n, smooth.ncols() + ind.ncols());
    m.columns_mut(0, smooth.ncols()).copy_from(&smooth);
    m.columns_mut(smooth.ncols(), ind.ncols()).copy_from(&ind);
    SubspaceDictionary::new(m)
}

/// Coefficients of a piecewise-smooth signal: `d1 ~ N(1, I)` on the smooth
/// block and `d2 ~ N(0, 5I)` on the cluster offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct PwsCoefficients {
    pub smooth: DVector<f64>,
    pub offsets: DVector<f64>,
}

impl PwsCoefficients {
    pub fn draw(n_smooth: usize, n_clusters: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, 0x7077_73);
        let smooth = normal_vector(&mut rng, n_smooth, 1.0, 1.0);
        let offsets = normal_vector(&mut rng, n_clusters, 0.0, PWS_OFFSET_VARIANCE.sqrt());
        PwsCoefficients { smooth, offsets }
    }

    pub fn stacked(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.smooth.len() + self.offsets.len());
        d.rows_mut(0, self.smooth.len()).copy_from(&self.smooth);
        d.rows_mut(self.smooth.len(), self.offsets.len()).copy_from(&self.offsets);
        d
    }
}

/// Piecewise-smooth signal `x = A_PWS1 d1 + A_PWS2 d2`.
pub fn gen_pws(basis: &GftBasis, clusters: &[Vec<usize>], seed: u64) -> Result<(SubspaceDictionary, DVector<f64>)> {
    let a = pws_dictionary(basis, clusters)?;
    let coeffs = PwsCoefficients::draw(a.n_atoms() - clusters.len(), clusters.len(), seed);
    let x = a.matrix() * coeffs.stacked();
    Ok((a, x))
}

/// Diffusion rate of the time-varying smooth block: `α(t) = 2 + t/8`.
pub fn tv_alpha(t: usize) -> f64 {
    2.0 + t as f64 / 8.0
}

/// Dictionary and signal of the time-varying piecewise-smooth model at time `t`:
/// `A_t = [U exp(-α(t)Λ) Uᵀ, 1_T1(t), 1_T2(t), 1_T3(t)]`, `x_t = A_t [d1; d2]`.
///
/// `coeffs.smooth` must have one entry per node.
pub fn gen_tv_pws(
    basis: &GftBasis,
    t: usize,
    clusters_t: &[Vec<usize>],
    coeffs: &PwsCoefficients,
) -> Result<(SubspaceDictionary, DVector<f64>)> {
    let n = basis.n_nodes();
    if coeffs.smooth.len() != n || coeffs.offsets.len() != clusters_t.len() {
        return Err(Error::invalid(format!(
            "time-varying model needs {n} smooth and {} offset coefficients, got {} and {}",
            clusters_t.len(),
            coeffs.smooth.len(),
            coeffs.offsets.len()
        )));
    }
    let smooth = heat_dictionary(basis, tv_alpha(t))?;
    let ind = SubspaceDictionary::new(cluster_indicators(n, clusters_t)?)?;
    let a = smooth.hstack(&ind)?;
    let x = a.matrix() * coeffs.stacked();
    Ok((a, x))
}

/// Random relabeling of nodes close to the initial cluster boundaries.
///
/// Nodes within `max_hops` of a node in a different initial cluster are
/// eligible. At every step each eligible node independently, with probability
/// `probability`, moves to one of the other clusters chosen uniformly. A move
/// that would empty a cluster is skipped.
#[derive(Debug, Clone)]
pub struct ClusterDrift {
    initial: Vec<usize>,
    eligible: Vec<bool>,
    n_clusters: usize,
    probability: f64,
}

impl ClusterDrift {
    pub fn new(g: &Graph, clusters: &[Vec<usize>], max_hops: usize, probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::invalid(format!("drift probability {probability} outside [0, 1]")));
        }
        let n = g.n_nodes();
        let initial = cluster_labels(n, clusters)?;
        let mut eligible = vec![false; n];
        for c in 0..clusters.len() {
            let others: Vec<usize> = (0..n).filter(|&i| initial[i] != c).collect();
            let dist = g.hop_distances(&others);
            for &i in &clusters[c] {
                if dist[i].is_some_and(|d| d <= max_hops) {
                    eligible[i] = true;
                }
            }
        }
        Ok(ClusterDrift { initial, eligible, n_clusters: clusters.len(), probability })
    }

    pub fn initial_labels(&self) -> &[usize] {
        &self.initial
    }

    pub fn eligible(&self) -> &[bool] {
        &self.eligible
    }

    /// One drift step from `labels`.
    pub fn advance(&self, labels: &[usize], rng: &mut rng::Rng) -> Vec<usize> {
        let mut next = labels.to_vec();
        let mut sizes = vec![0usize; self.n_clusters];
        for &l in labels {
            sizes[l] += 1;
        }
        for i in 0..next.len() {
            if !self.eligible[i] {
                continue;
            }
            let flip = rng.random::<f64>() < self.probability;
            let pick = rng.random_range(0..self.n_clusters.saturating_sub(1).max(1));
            if !flip || self.n_clusters < 2 || sizes[next[i]] <= 1 {
                continue;
            }
            let target = if pick >= next[i] { pick + 1 } else { pick };
            sizes[next[i]] -= 1;
            sizes[target] += 1;
            next[i] = target;
        }
        next
    }
}

/// Groups per-node labels into `n_clusters` node sets (label order).
pub fn labels_to_clusters(labels: &[usize], n_clusters: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_clusters];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    out
}

/// N×T signal matrix, optionally with the ground-truth dictionary of every column.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    signals: DMatrix<f64>,
    subspaces: Option<Vec<SubspaceDictionary>>,
    noise_sigma: f64,
}

impl SignalTrace {
    pub fn new(signals: DMatrix<f64>, subspaces: Option<Vec<SubspaceDictionary>>, noise_sigma: f64) -> Result<Self> {
        if signals.ncols() == 0 || signals.nrows() == 0 {
            return Err(Error::invalid("signal trace needs at least one node and one time step"));
        }
        if !(noise_sigma >= 0.0) {
            return Err(Error::invalid(format!("noise sigma must be >= 0, got {noise_sigma}")));
        }
        if let Some(s) = &subspaces {
            if s.len() != signals.ncols() {
                return Err(Error::invalid(format!("{} dictionaries for {} time steps", s.len(), signals.ncols())));
            }
            if s.iter().any(|a| a.n_nodes() != signals.nrows()) {
                return Err(Error::invalid("dictionary node count differs from the signals"));
            }
        }
        Ok(SignalTrace { signals, subspaces, noise_sigma })
    }

    pub fn signals(&self) -> &DMatrix<f64> {
        &self.signals
    }

    pub fn signal(&self, t: usize) -> DVector<f64> {
        self.signals.column(t).into_owned()
    }

    pub fn subspaces(&self) -> Option<&[SubspaceDictionary]> {
        self.subspaces.as_deref()
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn n_nodes(&self) -> usize {
        self.signals.nrows()
    }

    pub fn len(&self) -> usize {
        self.signals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.ncols() == 0
    }

    /// Writes `t,node,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "node", "value"])?;
        for t in 0..self.len() {
            for i in 0..self.n_nodes() {
                wtr.write_record([t.to_string(), i.to_string(), format!("{:e}", self.signals[(i, t)])])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a `t,node,value` CSV; every `(t, node)` pair must appear exactly once.
    pub fn read_csv<R: Read>(input: R, noise_sigma: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "node", "value"] {
            return Err(Error::Parse(format!("trace header must be t,node,value, got {headers:?}")));
        }
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let t: usize = rec[0].trim().parse().map_err(|_| Error::Parse(format!("bad t {:?}", &rec[0])))?;
            let i: usize = rec[1].trim().parse().map_err(|_| Error::Parse(format!("bad node {:?}", &rec[1])))?;
            let v: f64 = rec[2].trim().parse().map_err(|_| Error::Parse(format!("bad value {:?}", &rec[2])))?;
            rows.push((t, i, v));
        }
        let n = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        let len = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        if rows.len() != n * len {
            return Err(Error::Parse(format!("trace has {} rows, expected {n}x{len}", rows.len())));
        }
        let mut m = DMatrix::from_element(n, len, f64::NAN);
        for (t, i, v) in rows {
            if !m[(i, t)].is_nan() {
                return Err(Error::Parse(format!("duplicate entry for t={t}, node={i}")));
            }
            m[(i, t)] = v;
        }
        SignalTrace::new(m, None, noise_sigma)
    }

    /// Writes one dictionary file per time step (`dict_t{t:04}.txt`) into `dir`.
    pub fn write_subspaces(&self, dir: &Path) -> Result<()> {
        let Some(subspaces) = &self.subspaces else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        for (t, a) in subspaces.iter().enumerate() {
            let file = std::fs::File::create(dir.join(format!("dict_t{t:04}.txt")))?;
            a.write(std::io::BufWriter::new(file))?;
        }
        Ok(())
    }
}

/// `x + η`, `η ~ N(0, σ² I)`.
pub fn add_noise(x: &DVector<f64>, sigma: f64, seed: u64) -> Result<DVector<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::invalid(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = rng::stream(seed, 0x6e6f_6973_65);
    Ok(x + normal_vector(&mut rng, x.len(), 0.0, sigma))
}

/// A full time-varying piecewise-smooth scenario on a fixed graph.
#[derive(Debug, Clone)]
pub struct TvPwsScenario {
    pub basis: GftBasis,
    pub drift: ClusterDrift,
    pub coeffs: PwsCoefficients,
    pub n_clusters: usize,
}

impl TvPwsScenario {
    /// Spectral clusters at `t = 0`, two-hop boundary drift with probability
    /// `drift_probability`, and coefficients fixed for the whole run.
    pub fn new(g: &Graph, basis: GftBasis, n_clusters: usize, drift_probability: f64, seed: u64) -> Result<Self> {
        let clusters = crate::graph::spectral_clustering(g, n_clusters, rng::derive(seed, 1))?;
        let drift = ClusterDrift::new(g, &clusters, 2, drift_probability)?;
        let coeffs = PwsCoefficients::draw(g.n_nodes(), clusters.len(), rng::derive(seed, 2));
        Ok(TvPwsScenario { basis, drift, coeffs, n_clusters: clusters.len() })
    }

    /// Cluster labels for `t = 0..duration`.
    pub fn cluster_schedule(&self, duration: usize, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = rng::stream(seed, 0x6472_6966);
        let mut labels = self.drift.initial_labels().to_vec();
        let mut out = Vec::with_capacity(duration);
        for t in 0..duration {
            if t > 0 {
                labels = self.drift.advance(&labels, &mut rng);
            }
            out.push(labels.clone());
        }
        out
    }

    /// Noiseless signals `x_0 … x_{duration-1}` with their ground-truth dictionaries.
    pub fn trace(&self, duration: usize, noise_sigma: f64, seed: u64) -> Result<SignalTrace> {
        let n = self.basis.n_nodes();
        let schedule = self.cluster_schedule(duration, seed);
        let mut signals = DMatrix::zeros(n, duration);
        let mut dicts = Vec::with_capacity(duration);
        for (t, labels) in schedule.iter().enumerate() {
            let clusters = labels_to_clusters(labels, self.n_clusters);
            let (a, x) = gen_tv_pws(&self.basis, t, &clusters, &self.coeffs)?;
            signals.set_column(t, &x);
            dicts.push(a);
        }
        SignalTrace::new(signals, Some(dicts), noise_sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_sensor_graph;
    use approx::assert_relative_eq;

    fn lstsq_residual(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
        let q = crate::linalg::orthonormal_basis(a).unwrap();
        let fit = &q * (q.transpose() * x);
        (fit - x).norm() / x.norm()
    }

    #[test]
    fn heat_with_zero_alpha_is_identity() {
        let g = random_sensor_graph(20, 2, 4, 1).unwrap();
        let b = g.gft_basis().unwrap();
        let (a, x) = gen_hd(&b, 0.0, 5).unwrap();
        assert_relative_eq!(a.matrix().clone(), DMatrix::identity(20, 20), epsilon = 1e-10);
        let mut rng = rng::stream(5, 0x6864);
        let d = normal_vector(&mut rng, 20, 1.0, 1.0);
        assert_relative_eq!(x, d, epsilon = 1e-10);
    }

    #[test]
    fn heat_dictionary_symmetric_and_signal_in_range() {
        let g = random_sensor_graph(40, 2, 8, 2).unwrap();
        let b = g.gft_basis().unwrap();
        let (a, x) = gen_hd(&b, 10.0, 3).unwrap();
        assert_relative_eq!(a.matrix().clone(), a.matrix().transpose(), epsilon = 1e-10);
        assert!(lstsq_residual(a.matrix(), &x) < 1e-10);
    }

    #[test]
    fn pws_requires_partition_and_is_piecewise_constant_without_smooth_part() {
        let g = random_sensor_graph(60, 2, 8, 4).unwrap();
        let b = g.gft_basis().unwrap();
        let clusters = crate::graph::spectral_clustering(&g, 3, 1).unwrap();
        let (a, x) = gen_pws(&b, &clusters, 9).unwrap();
        assert_eq!(a.n_atoms(), PWS_SMOOTH_ATOMS + 3);
        assert!(lstsq_residual(a.matrix(), &x) < 1e-10);

        let coeffs = PwsCoefficients {
            smooth: DVector::zeros(PWS_SMOOTH_ATOMS),
            offsets: DVector::from_vec(vec![1.0, -2.0, 3.0]),
        };
        let flat = a.matrix() * coeffs.stacked();
        for (c, set) in clusters.iter().enumerate() {
            for &i in set {
                assert_relative_eq!(flat[i], coeffs.offsets[c], epsilon = 1e-12);
            }
        }

        let mut broken = clusters.clone();
        let dup = broken[1][0];
        broken[0].push(dup);
        assert!(gen_pws(&b, &broken, 1).is_err());
        let missing: Vec<Vec<usize>> = vec![clusters[0].clone(), clusters[1].clone()];
        assert!(gen_pws(&b, &missing, 1).is_err());
    }

    #[test]
    fn offset_variance_is_five() {
        let draws = 20_000;
        let mut acc = 0.0;
        let mut sq = 0.0;
        for s in 0..draws {
            let c = PwsCoefficients::draw(1, 3, s);
            for v in c.offsets.iter() {
                acc += v;
                sq += v * v;
            }
        }
        let m = (draws * 3) as f64;
        let var = sq / m - (acc / m).powi(2);
        assert!((var - 5.0).abs() / 5.0 < 0.03, "variance {var}");
    }

    #[test]
    fn tv_alpha_values_and_monotone_decay() {
        assert_eq!(tv_alpha(0), 2.0);
        assert_eq!(tv_alpha(8), 3.0);
        let lambda_max = 12.0;
        let mut prev = f64::INFINITY;
        for t in 0..64 {
            let v = (-tv_alpha(t) * lambda_max).exp();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn drift_only_touches_two_hop_boundary_nodes() {
        let g = random_sensor_graph(128, 2, 8, 11).unwrap();
        let basis = g.gft_basis().unwrap();
        let scenario = TvPwsScenario::new(&g, basis, 3, 0.5, 21).unwrap();
        let init = scenario.drift.initial_labels().to_vec();
        // independent two-hop oracle: walk neighbors of neighbors
        let mut near_boundary = vec![false; 128];
        for i in 0..128 {
            for j in g.neighbors(i) {
                if init[j] != init[i] {
                    near_boundary[i] = true;
                }
                for k in g.neighbors(j) {
                    if init[k] != init[i] {
                        near_boundary[i] = true;
                    }
                }
            }
        }
        assert_eq!(scenario.drift.eligible(), near_boundary.as_slice());
        let schedule = scenario.cluster_schedule(64, 3);
        let mut changed_any = false;
        for labels in &schedule {
            for i in 0..128 {
                if labels[i] != init[i] {
                    changed_any = true;
                    assert!(near_boundary[i], "node {i} changed but is not near a boundary");
                }
            }
        }
        assert!(changed_any);
    }

    #[test]
    fn tv_trace_columns_lie_in_their_dictionaries() {
        let g = random_sensor_graph(64, 2, 8, 5).unwrap();
        let basis = g.gft_basis().unwrap();
        let scenario = TvPwsScenario::new(&g, basis, 3, 0.5, 7).unwrap();
        let trace = scenario.trace(4, 0.0, 8).unwrap();
        let dicts = trace.subspaces().unwrap();
        for t in 0..4 {
            assert_eq!(dicts[t].n_atoms(), 64 + 3);
            assert!(lstsq_residual(dicts[t].matrix(), &trace.signal(t)) < 1e-10);
        }
    }

    #[test]
    fn noise_identity_and_variance() {
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(add_noise(&x, 0.0, 1).unwrap(), x);
        assert!(add_noise(&x, -1.0, 1).is_err());

        let sigma2: f64 = 1e-3;
        let zero = DVector::zeros(100_000);
        let noisy = add_noise(&zero, sigma2.sqrt(), 42).unwrap();
        let var = noisy.norm_squared() / noisy.len() as f64;
        assert!((var - sigma2).abs() / sigma2 < 0.02, "variance {var}");
    }

    #[test]
    fn trace_csv_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.5]);
        let trace = SignalTrace::new(m, None, 0.1).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let back = SignalTrace::read_csv(buf.as_slice(), 0.1).unwrap();
        assert_eq!(back, trace);
    }
}
