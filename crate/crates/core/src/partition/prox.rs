use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::RelaxedIndicator;

/// How the projection onto `{m ∈ [0,1]^N : 1ᵀm = c}` is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxMethod {
    /// Exact search for the shift `τ` in `clip(v − τ, 0, 1)`.
    #[default]
    Bisection,
    /// Alternating projections between the box and the hyperplane (ADMM).
    Admm,
}

fn check_target(n: usize, target: f64) -> Result<()> {
    if !(target > 0.0 && target < n as f64) {
        return Err(Error::invalid(format!("target cardinality {target} outside (0, {n})")));
    }
    Ok(())
}

fn clipped_sum(v: &DVector<f64>, tau: f64) -> f64 {
    v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).sum()
}

/// Euclidean projection of `v` onto `[0,1]^N ∩ {1ᵀm = target}`.
pub fn prox_g(v: &DVector<f64>, target: f64) -> Result<RelaxedIndicator> {
    let n = v.len();
    check_target(n, target)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("prox_g input is not finite"));
    }
    if v.iter().all(|x| (0.0..=1.0).contains(x)) && (v.sum() - target).abs() <= 1e-12 {
        return RelaxedIndicator::new(v.clone());
    }

    // φ(τ) = Σ clip(v_i − τ, 0, 1) is nonincreasing and piecewise linear with
    // kinks at v_i and v_i − 1. Bisect over the sorted kinks for the segment
    // containing φ(τ) = target, then solve the linear piece exactly.
    let mut kinks: Vec<f64> = v.iter().flat_map(|&x| [x - 1.0, x]).collect();
    kinks.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = (0, kinks.len() - 1);
    // φ(kinks[0]) = N > target ≥ 0 = φ(kinks[last])
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if clipped_sum(v, kinks[mid]) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (kinks[lo], kinks[hi]);
    let probe = 0.5 * (a + b);
    let mut n_free = 0usize;
    let mut free_sum = 0.0;
    let mut n_one = 0usize;
    for &x in v.iter() {
        let y = x - probe;
        if y >= 1.0 {
            n_one += 1;
        } else if y > 0.0 {
            n_free += 1;
            free_sum += x;
        }
    }
    let tau = if n_free == 0 { a } else { ((free_sum + n_one as f64 - target) / n_free as f64).clamp(a, b) };
    RelaxedIndicator::new(v.map(|x| (x - tau).clamp(0.0, 1.0)))
}

/// The same projection by ADMM, splitting the hyperplane and the box.
///
/// Runs until primal and dual residuals fall below `1e-13` or `max_iters`.
pub fn prox_g_admm(v: &DVector<f64>, target: f64, max_iters: usize) -> Result<RelaxedIndicator> {
    let n = v.len();
    check_target(n, target)?;
    let rho = 1.0;
    let mut z = v.map(|x| x.clamp(0.0, 1.0));
    let mut u = DVector::zeros(n);
    for _ in 0..max_iters {
        let w = (v + rho * (&z - &u)) / (1.0 + rho);
        let x = &w + DVector::from_element(n, (target - w.sum()) / n as f64);
        let z_prev = z.clone();
        z = (&x + &u).map(|t| t.clamp(0.0, 1.0));
        u += &x - &z;
        let primal = (&x - &z).norm();
        let dual = rho * (&z - &z_prev).norm();
        if primal < 1e-13 && dual < 1e-13 {
            break;
        }
    }
    RelaxedIndicator::new(z)
}
