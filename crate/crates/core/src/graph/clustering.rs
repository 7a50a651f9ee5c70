//! Node clustering: seeded k-means on spectral embeddings and modularity maximization.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::rng;

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITERS: usize = 300;
const KMEANS_RESEED_BUDGET: usize = 20;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
}

/// Lloyd's k-means with k-means++ seeding on the rows of `points`.
///
/// Runs `restarts` independent initializations and keeps the lowest inertia.
/// A restart that empties a cluster is re-seeded; after a fixed retry budget
/// the call fails.
pub fn kmeans(points: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-means with k = {k} on {n} points")));
    }
    let mut best: Option<KMeansResult> = None;
    let mut reseeds = 0;
    let mut attempt = 0u64;
    let mut done = 0;
    while done < restarts.max(1) {
        let mut rng = rng::stream(seed, attempt);
        attempt += 1;
        match lloyd(points, k, &mut rng) {
            Some(result) => {
                done += 1;
                if best.as_ref().is_none_or(|b| result.inertia < b.inertia) {
                    best = Some(result);
                }
            }
            None => {
                reseeds += 1;
                if reseeds > KMEANS_RESEED_BUDGET {
                    return Err(Error::numerical(format!(
                        "k-means kept producing empty clusters after {KMEANS_RESEED_BUDGET} re-seeds"
                    )));
                }
            }
        }
    }
    Ok(best.expect("at least one restart completes"))
}

fn sq_dist(points: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    points.row(i).iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut rng::Rng) -> Option<KMeansResult> {
    let (n, dim) = points.shape();
    let row = |i: usize| points.row(i).iter().cloned().collect::<Vec<f64>>();

    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = vec![row(rng.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centers.push(row(pick));
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(points, i, centers.last().unwrap()));
        }
    }

    let mut labels = vec![0usize; n];
    for iter in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for i in 0..n {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(points, i, center);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[i] != best.1 || iter == 0 {
                changed |= labels[i] != best.1;
                labels[i] = best.1;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(points.row(i).iter()) {
                *s += v;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for c in 0..k {
            for s in sums[c].iter_mut() {
                *s /= counts[c] as f64;
            }
        }
        centers = sums;
        if !changed && iter > 0 {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points, i, &centers[labels[i]])).sum();
    Some(KMeansResult { labels, inertia })
}

/// Groups `labels` into node sets ordered by their smallest member.
pub(crate) fn labels_to_sets(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = Vec::new();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for (node, &l) in labels.iter().enumerate() {
        match order.iter().position(|&x| x == l) {
            Some(p) => sets[p].push(node),
            None => {
                order.push(l);
                sets.push(vec![node]);
            }
        }
    }
    sets
}

/// Spectral clustering: seeded k-means on the rows of the first `n_clusters`
/// Laplacian eigenvectors. Clusters are returned ordered by smallest node id.
pub fn spectral_clustering(g: &Graph, n_clusters: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = g.n_nodes();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::invalid(format!("cannot form {n_clusters} clusters from {n} nodes")));
    }
    if n_clusters == 1 {
        return Ok(vec![(0..n).collect()]);
    }
    let basis = g.gft_basis()?;
    let features = basis.columns(0, n_clusters)?;
    let result = kmeans(&features, n_clusters, KMEANS_RESTARTS, seed)?;
    Ok(labels_to_sets(&result.labels))
}

/// Newman–Girvan modularity of a node clustering.
pub fn modularity(g: &Graph, clusters: &[Vec<usize>]) -> f64 {
    let n = g.n_nodes();
    let w = g.weights();
    let two_m: f64 = w.sum();
    if two_m <= 0.0 {
        return 0.0;
    }
    let deg = g.degrees();
    let mut label = vec![usize::MAX; n];
    for (c, set) in clusters.iter().enumerate() {
        for &i in set {
            label[i] = c;
        }
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if label[i] == label[j] {
                q += w[(i, j)] - deg[i] * deg[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Modularity heuristic used by [`modularity_clustering`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModularityMethod {
    /// Clauset–Newman–Moore greedy agglomeration.
    #[default]
    GreedyAgglomerative,
    /// Louvain local moving with community aggregation.
    Louvain,
}

/// Modularity-maximizing clustering; exact ties are broken by the seeded generator.
pub fn modularity_clustering(g: &Graph, seed: u64, method: ModularityMethod) -> Result<Vec<Vec<usize>>> {
    if g.n_edges() == 0 {
        return Err(Error::invalid("modularity clustering needs at least one edge"));
    }
    let labels = match method {
        ModularityMethod::GreedyAgglomerative => greedy_agglomerative(g, seed),
        ModularityMethod::Louvain => louvain(g, seed),
    };
    Ok(labels_to_sets(&labels))
}

fn greedy_agglomerative(g: &Graph, seed: u64) -> Vec<usize> {
    let n = g.n_nodes();
    let two_m = g.weights().sum();
    // e[i][j]: fraction of edge ends joining communities i and j (i != j)
    let mut e = g.weights() / two_m;
    let mut a: Vec<f64> = g.degrees().iter().map(|d| d / two_m).collect();
    let mut alive = vec![true; n];
    let mut label: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, 0x636e_6d);

    loop {
        let mut best = 0.0;
        let mut ties: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !alive[j] || e[(i, j)] <= 0.0 {
                    continue;
                }
                let dq = 2.0 * (e[(i, j)] - a[i] * a[j]);
                if dq > best + 1e-15 {
                    best = dq;
                    ties.clear();
                    ties.push((i, j));
                } else if (dq - best).abs() <= 1e-15 && dq > 0.0 {
                    ties.push((i, j));
                }
            }
        }
        if ties.is_empty() {
            break;
        }
        let (i, j) = ties[rng.random_range(0..ties.len())];
        for k in 0..n {
            if k != i && k != j {
                let v = e[(j, k)];
                e[(i, k)] += v;
                e[(k, i)] += v;
            }
            e[(j, k)] = 0.0;
            e[(k, j)] = 0.0;
        }
        e[(i, i)] = 0.0;
        a[i] += a[j];
        a[j] = 0.0;
        alive[j] = false;
        for l in label.iter_mut() {
            if *l == j {
                *l = i;
            }
        }
    }
    label
}

fn louvain(g: &Graph, seed: u64) -> Vec<usize> {
    let n = g.n_nodes();
    let mut rng = rng::stream(seed, 0x6c76_6e);
    // node -> current super-node
    let mut membership: Vec<usize> = (0..n).collect();
    let mut w = g.weights().clone();

    loop {
        let size = w.nrows();
        let two_m: f64 = w.sum();
        let k: Vec<f64> = w.row_iter().map(|r| r.sum()).collect();
        let mut comm: Vec<usize> = (0..size).collect();
        let mut tot: Vec<f64> = k.clone();
        let mut improved_any = false;

        let mut order: Vec<usize> = (0..size).collect();
        order.shuffle(&mut rng);
        loop {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                tot[ci] -= k[i];
                let mut links: Vec<(usize, f64)> = Vec::new();
                for j in 0..size {
                    let wij = w[(i, j)];
                    if j != i && wij > 0.0 {
                        match links.iter_mut().find(|(c, _)| *c == comm[j]) {
                            Some(entry) => entry.1 += wij,
                            None => links.push((comm[j], wij)),
                        }
                    }
                }
                let gain = |c: usize, kin: f64| kin - tot[c] * k[i] / two_m;
                let own = links.iter().find(|(c, _)| *c == ci).map(|l| l.1).unwrap_or(0.0);
                let mut best = (gain(ci, own), ci);
                for &(c, kin) in &links {
                    let gv = gain(c, kin);
                    if gv > best.0 + 1e-12 {
                        best = (gv, c);
                    }
                }
                tot[best.1] += k[i];
                if best.1 != ci {
                    comm[i] = best.1;
                    moved = true;
                    improved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        if !improved_any {
            break;
        }

        // renumber and aggregate
        let mut renum = vec![usize::MAX; size];
        let mut next = 0;
        for c in comm.iter() {
            if renum[*c] == usize::MAX {
                renum[*c] = next;
                next += 1;
            }
        }
        let mut agg = DMatrix::zeros(next, next);
        for i in 0..size {
            for j in 0..size {
                let (a, b) = (renum[comm[i]], renum[comm[j]]);
                // intra-community weight becomes a self loop of the aggregate node
                agg[(a, b)] += w[(i, j)];
            }
        }
        for m in membership.iter_mut() {
            *m = renum[comm[*m]];
        }
        if next == size {
            break;
        }
        w = agg;
    }
    membership
}
