use nalgebra::DVector;

use super::Graph;
use crate::error::{Error, Result};

const MAX_ITERS: usize = 100_000;

/// Eigenvector centrality: the Perron vector of `W`, unit ℓ2 norm, nonnegative.
///
/// Power iteration runs on `W + I` (same eigenvector, no oscillation on
/// bipartite graphs). Disconnected graphs are handled per component: each
/// component's Perron vector is scaled by its own spectral radius relative to
/// the largest one, so nodes outside the dominant component do not collapse to zero.
pub fn eigenvector_centrality(g: &Graph, tol: f64) -> Result<DVector<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = g.n_nodes();
    let (labels, count) = g.connected_components();
    let mut out = DVector::zeros(n);
    let mut radii = vec![0.0; count];

    for comp in 0..count {
        let nodes: Vec<usize> = (0..n).filter(|&i| labels[i] == comp).collect();
        let m = nodes.len();
        if m == 1 {
            out[nodes[0]] = 1.0;
            continue;
        }
        let w = g.weights().select_rows(&nodes).select_columns(&nodes);
        let mut x = DVector::from_element(m, 1.0 / (m as f64).sqrt());
        let mut converged = false;
        for _ in 0..MAX_ITERS {
            let mut y = &w * &x + &x;
            let norm = y.norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::numerical("eigenvector centrality iterate vanished"));
            }
            y /= norm;
            let delta = (&y - &x).amax();
            x = y;
            if delta <= tol * 1e-3 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(format!(
                "eigenvector centrality did not converge within {MAX_ITERS} iterations"
            )));
        }
        radii[comp] = x.dot(&(&w * &x));
        for (local, &node) in nodes.iter().enumerate() {
            out[node] = x[local].max(0.0);
        }
    }

    if count > 1 {
        let rmax = radii.iter().cloned().fold(0.0, f64::max);
        if rmax > 0.0 {
            for i in 0..n {
                out[i] *= radii[labels[i]] / rmax;
            }
        }
    }
    let norm = out.norm();
    if norm > 0.0 {
        out /= norm;
    }
    Ok(out)
}
