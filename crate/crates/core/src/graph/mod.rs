//! Weighted undirected graphs and their spectral (GFT) machinery.

mod centrality;
mod clustering;
pub mod io;
mod knn;

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

pub use centrality::eigenvector_centrality;
pub use clustering::{kmeans, modularity, modularity_clustering, spectral_clustering, KMeansResult, ModularityMethod};
pub use knn::{build_knn_graph, build_knn_graph_by, haversine_km, random_sensor_graph, EARTH_RADIUS_KM};

const SYMMETRY_TOL: f64 = 1e-12;

/// A weighted undirected graph stored as a dense adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: DMatrix<f64>,
    coords: Option<Vec<[f64; 2]>>,
}

impl Graph {
    /// Validates and wraps an adjacency matrix.
    ///
    /// The matrix must be square, finite, nonnegative, symmetric within
    /// `1e-12` and have an exactly zero diagonal. Tiny asymmetries are
    /// averaged away.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::invalid(format!(
                "adjacency must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        let n = weights.nrows();
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal entry at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!("invalid weight {w} at ({i}, {j})")));
                }
                if (w - weights[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!("asymmetric weights at ({i}, {j})")));
                }
            }
        }
        let weights = (&weights + weights.transpose()) * 0.5;
        Ok(Graph { weights, coords: None })
    }

    /// Builds a graph from an undirected edge list over `n` nodes.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(i, j, weight) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if i == j {
                return Err(Error::invalid(format!("self loop at node {i}")));
            }
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
        Graph::from_weights(w)
    }

    pub fn with_coords(mut self, coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.len() != self.n_nodes() {
            return Err(Error::invalid(format!("{} coordinates for {} nodes", coords.len(), self.n_nodes())));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n_nodes(), self.weights.row_iter().map(|r| r.sum()))
    }

    /// Combinatorial Laplacian `L = D - W`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.weights.clone();
        for (i, d) in self.degrees().iter().enumerate() {
            l[(i, i)] = *d;
        }
        l
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(j, _)| j)
            .collect::<Vec<_>>()
            .into_iter()
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }

    /// Connected-component label per node, labels numbered from zero in order of first node.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        let n = self.n_nodes();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            label[start] = count;
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().1 == 1
    }

    /// Hop distance from the nearest source node, `None` if unreachable.
    pub fn hop_distances(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_nodes()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Symmetric normalized Laplacian `I - D^{-1/2} W D^{-1/2}`; isolated nodes keep a zero row.
    pub fn normalized_laplacian(&self) -> DMatrix<f64> {
        let inv_sqrt = self.degrees().map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 });
        let n = self.n_nodes();
        DMatrix::from_fn(n, n, |i, j| {
            let off = -self.weights[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            if i == j && inv_sqrt[i] > 0.0 {
                1.0 + off
            } else {
                off
            }
        })
    }

    /// Laplacian eigendecomposition (graph Fourier basis).
    pub fn gft_basis(&self) -> Result<GftBasis> {
        self.gft_basis_of(LaplacianKind::Combinatorial)
    }

    pub fn gft_basis_of(&self, kind: LaplacianKind) -> Result<GftBasis> {
        let l = match kind {
            LaplacianKind::Combinatorial => self.laplacian(),
            LaplacianKind::Normalized => self.normalized_laplacian(),
        };
        let (eigenvalues, eigenvectors) = linalg::symmetric_eigen_sorted(&l)?;
        Ok(GftBasis { eigenvalues, eigenvectors })
    }
}

/// Variation operator whose eigenvectors define the GFT.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianKind {
    /// `D - W`.
    #[default]
    Combinatorial,
    /// `I - D^{-1/2} W D^{-1/2}`.
    Normalized,
}

/// Free-function form of [`Graph::laplacian`].
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    g.laplacian()
}

/// Free-function form of [`Graph::gft_basis`].
pub fn gft_basis(g: &Graph) -> Result<GftBasis> {
    g.gft_basis()
}

/// Graph frequencies (ascending) and the orthonormal GFT matrix `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct GftBasis {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl GftBasis {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn n_nodes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U f(Λ) Uᵀ`.
    pub fn spectral_filter(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            let g = f(*lambda);
            scaled.column_mut(j).scale_mut(g);
        }
        scaled * self.eigenvectors.transpose()
    }

    /// Eigenvectors `u_start .. u_{start+count-1}` as columns.
    pub fn columns(&self, start: usize, count: usize) -> Result<DMatrix<f64>> {
        if start + count > self.n_nodes() {
            return Err(Error::invalid(format!(
                "requested eigenvectors {start}..{} of {}",
                start + count,
                self.n_nodes()
            )));
        }
        Ok(self.eigenvectors.columns(start, count).into_owned())
    }

    /// Forward transform `Uᵀ x`.
    pub fn transform(&self, x: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(x)
    }

    /// Number of eigenvalues within `tol` of zero.
    pub fn zero_multiplicity(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|v| v.abs() <= tol).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path2() -> Graph {
        Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn normalized_spectrum_in_unit_interval_pair() {
        let g = Graph::from_edges(4, &[(0, 1, 2.0), (1, 2, 1.0), (2, 3, 0.5), (3, 0, 1.0)]).unwrap();
        let b = g.gft_basis_of(LaplacianKind::Normalized).unwrap();
        assert_relative_eq!(b.eigenvalues()[0], 0.0, epsilon = 1e-12);
        assert!(b.eigenvalues().iter().all(|&l| (-1e-12..=2.0 + 1e-12).contains(&l)));
        let sqrt_d = g.degrees().map(f64::sqrt);
        let null = g.normalized_laplacian() * sqrt_d;
        assert!(null.norm() < 1e-12);
    }

    #[test]
    fn two_node_laplacian_and_basis() {
        let g = path2();
        let l = g.laplacian();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let b = g.gft_basis().unwrap();
        assert_relative_eq!(b.eigenvalues()[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(b.eigenvalues()[1], 2.0, epsilon = 1e-12);
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(b.eigenvectors()[(0, 0)], s, epsilon = 1e-12);
        assert_relative_eq!(b.eigenvectors()[(1, 0)], s, epsilon = 1e-12);
        assert_relative_eq!(b.eigenvectors()[(0, 1)], s, epsilon = 1e-12);
        assert_relative_eq!(b.eigenvectors()[(1, 1)], -s, epsilon = 1e-12);
    }

    #[test]
    fn rejects_asymmetry_and_diagonal() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(Graph::from_weights(asym).is_err());
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        assert!(Graph::from_weights(diag).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(Graph::from_weights(neg).is_err());
    }

    #[test]
    fn components_and_hops() {
        let g = Graph::from_edges(5, &[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        let (labels, count) = g.connected_components();
        assert_eq!(count, 2);
        assert_eq!(labels, vec![0, 0, 0, 1, 1]);
        assert_eq!(g.hop_distances(&[0]), vec![Some(0), Some(1), Some(2), None, None]);
    }

    #[test]
    fn spectral_filter_identity_at_zero() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let b = g.gft_basis().unwrap();
        assert_relative_eq!(b.spectral_filter(|_| 1.0), DMatrix::identity(3, 3), epsilon = 1e-12);
        assert_relative_eq!(b.spectral_filter(|l| l), g.laplacian(), epsilon = 1e-12);
    }
}
