use nalgebra::DMatrix;
use rand::Rng as _;

use super::Graph;
use crate::error::{Error, Result};
use crate::rng;

/// Mean Earth radius used by [`haversine_km`].
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance between two `(lat, lon)` points given in degrees.
pub fn haversine_km(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lat1, lon1) = (a[0].to_radians(), a[1].to_radians());
    let (lat2, lon2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().clamp(0.0, 1.0).asin()
}

/// k-NN graph under an arbitrary distance, symmetrized by the union of directed edges.
///
/// Node `i` links to its `k_per_node[i]` nearest nodes (ties broken by index).
/// An undirected edge exists when either endpoint selected the other, and its
/// weight is `weight(d)`.
pub fn build_knn_graph_by(
    n: usize,
    k_per_node: &[usize],
    distance: impl Fn(usize, usize) -> f64,
    weight: impl Fn(f64) -> f64,
) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid(format!("k-NN graph needs at least 2 nodes, got {n}")));
    }
    if k_per_node.len() != n {
        return Err(Error::invalid(format!("{} neighbor counts for {n} nodes", k_per_node.len())));
    }
    if let Some((i, k)) = k_per_node.iter().enumerate().find(|(_, &k)| k == 0 || k >= n) {
        return Err(Error::invalid(format!("node {i}: k = {k} must be in [1, {n})")));
    }

    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(i, j);
            if !d.is_finite() || d < 0.0 {
                return Err(Error::invalid(format!("invalid distance {d} between {i} and {j}")));
            }
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    let mut w = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in order.iter().take(k_per_node[i]) {
            let weight = weight(dist[(i, j)]);
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
    }
    Graph::from_weights(w)
}

/// Euclidean k-NN graph on planar coordinates with weights `exp(-d^2)`.
pub fn build_knn_graph(coords: &[[f64; 2]], k_per_node: &[usize]) -> Result<Graph> {
    let g = build_knn_graph_by(
        coords.len(),
        k_per_node,
        |i, j| {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            (dx * dx + dy * dy).sqrt()
        },
        |d| (-d * d).exp(),
    )?;
    g.with_coords(coords.to_vec())
}

/// Random sensor graph: `n` uniform points in the unit square, each linked to
/// `k` nearest neighbors with `k` drawn uniformly from `k_min..=k_max`.
pub fn random_sensor_graph(n: usize, k_min: usize, k_max: usize, seed: u64) -> Result<Graph> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::invalid(format!("invalid neighbor range {k_min}..={k_max}")));
    }
    let mut rng = rng::stream(seed, 0x6e6f_6465);
    let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let ks: Vec<usize> = (0..n).map(|_| rng.random_range(k_min..=k_max)).collect();
    build_knn_graph(&coords, &ks)
}
