//! Confidence-weighted dictionary learning for subspace tracking.
//!
//! Minimizes `Σᵢ ‖Wᵢ(xᵢ − A dᵢ)‖²` subject to a row-wise ℓ1 budget on the
//! coefficients, alternating proximal gradient on `D` with gradient descent on `A`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::signals::SubspaceDictionary;

/// Coefficients `D` (M×D), one column per buffered signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub matrix: DMatrix<f64>,
}

/// Per-node confidence of every buffered signal, stored as an N×D matrix of columns `wᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceWeights {
    matrix: DMatrix<f64>,
}

impl ConfidenceWeights {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = matrix.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("confidence weight {v} outside [0, 1]")));
        }
        Ok(ConfidenceWeights { matrix })
    }

    pub fn ones(n: usize, d: usize) -> Self {
        ConfidenceWeights { matrix: DMatrix::from_element(n, d, 1.0) }
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("no confidence columns"));
        }
        ConfidenceWeights::new(DMatrix::from_columns(columns))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn max(&self) -> f64 {
        self.matrix.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictLearnConfig {
    /// Sparsity budget `K`; each coefficient row gets `K/N`.
    pub budget: f64,
    /// Fixed coefficient step; derived from the curvature when absent.
    pub step_d: Option<f64>,
    /// Fixed dictionary step; derived from the curvature when absent.
    pub step_a: Option<f64>,
    pub outer_max_iters: usize,
    pub inner_max_iters: usize,
    pub outer_tol: f64,
    pub inner_tol: f64,
}

impl Default for DictLearnConfig {
    fn default() -> Self {
        DictLearnConfig {
            budget: 300.0,
            step_d: None,
            step_a: None,
            outer_max_iters: 50,
            inner_max_iters: 200,
            outer_tol: 1e-5,
            inner_tol: 1e-6,
        }
    }
}

impl DictLearnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(Error::Config(format!("budget must be positive, got {}", self.budget)));
        }
        for (name, step) in [("step_d", self.step_d), ("step_a", self.step_a)] {
            if let Some(s) = step {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {s}")));
                }
            }
        }
        if !(self.outer_tol > 0.0 && self.inner_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.outer_max_iters == 0 || self.inner_max_iters == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

// power-iteration estimates approach λ_max from below
const CURVATURE_SAFETY: f64 = 1.05;

/// `−2 Aᵀ diag(w)² (x − A d)`.
pub fn psi_grad_col(x: &DVector<f64>, a: &DMatrix<f64>, d: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let r = (x - a * d).component_mul(w).component_mul(w);
    -2.0 * a.tr_mul(&r)
}

/// `Σᵢ ‖diag(wᵢ)(xᵢ − A dᵢ)‖²`.
pub fn weighted_objective(x: &DMatrix<f64>, a: &DMatrix<f64>, d: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (x - a * d).component_mul(w).norm_squared()
}

/// `W² ⊙ (AD − X)`, the shared factor of both gradients.
fn weighted_residual(x: &DMatrix<f64>, a: &DMatrix<f64>, d: &DMatrix<f64>, w2: &DMatrix<f64>) -> DMatrix<f64> {
    (a * d - x).component_mul(w2)
}

/// Gradient of the weighted objective with respect to `D`: `2 Aᵀ (W² ⊙ (AD − X))`.
pub fn grad_coefficients(x: &DMatrix<f64>, a: &DMatrix<f64>, d: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    2.0 * a.tr_mul(&weighted_residual(x, a, d, &w.component_mul(w)))
}

/// Gradient with respect to `A`: `2 Σᵢ Wᵢ² (A dᵢ − xᵢ) dᵢᵀ`.
pub fn grad_dictionary(x: &DMatrix<f64>, a: &DMatrix<f64>, d: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    2.0 * weighted_residual(x, a, d, &w.component_mul(w)) * d.transpose()
}

// a projected row sums to the radius only up to rounding
fn fits_budget(l1: f64, radius: f64, len: usize) -> bool {
    l1 <= radius * (1.0 + 4.0 * f64::EPSILON * len as f64)
}

/// Row threshold `ζ ≥ 0` with `Σⱼ max(0, |yⱼ| − ζ) = radius`, or 0 when the row fits.
fn row_threshold(row: &[f64], radius: f64) -> f64 {
    let l1: f64 = row.iter().map(|v| v.abs()).sum();
    if fits_budget(l1, radius, row.len()) {
        return 0.0;
    }
    let mut mags: Vec<f64> = row.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    // with the k largest magnitudes active, ζ = (Σ_{top k} − radius)/k
    let mut acc = 0.0;
    let mut zeta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        acc += m;
        let cand = (acc - radius) / (k + 1) as f64;
        if cand >= m {
            break;
        }
        zeta = cand;
    }
    zeta.max(0.0)
}

/// Row-wise `sign(y) min(|y|, ζᵢ)`: the ℓ∞-side of the Moreau decomposition.
pub fn prox_linf_rows(y: &DMatrix<f64>, radius: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    for i in 0..y.nrows() {
        let row: Vec<f64> = y.row(i).iter().cloned().collect();
        let zeta = row_threshold(&row, radius);
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = v.signum() * v.abs().min(zeta);
        }
    }
    out
}

/// Projection of every row onto the ℓ1 ball of radius `radius`, as `Y − prox_linf_rows(Y)`.
pub fn prox_l1_budget(y: &DMatrix<f64>, radius: f64) -> DMatrix<f64> {
    let mut out = y - prox_linf_rows(y, radius);
    for mut row in out.row_iter_mut() {
        for v in row.iter_mut() {
            // |y| − min(|y|, ζ) is never negative; drop the sign of exact zeros
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        // ζ is computed from magnitudes that can dwarf the radius; pull the
        // rounding excess back so a second application is the identity
        let l1: f64 = row.iter().map(|v| v.abs()).sum();
        if !fits_budget(l1, radius, row.len()) {
            row *= radius / l1;
        }
    }
    out
}

fn check_shapes(x: &DMatrix<f64>, a: &DMatrix<f64>, w: &ConfidenceWeights) -> Result<()> {
    if a.nrows() != x.nrows() || w.matrix.shape() != x.shape() {
        return Err(Error::invalid(format!(
            "shape mismatch: X {:?}, A {:?}, W {:?}",
            x.shape(),
            a.shape(),
            w.matrix.shape()
        )));
    }
    Ok(())
}

fn relative_change(new: &DMatrix<f64>, old: &DMatrix<f64>) -> f64 {
    let denom = old.norm().max(f64::MIN_POSITIVE);
    (new - old).norm() / denom
}

/// Proximal gradient on `D` with `A` fixed, starting from `d0`.
pub fn update_coefficients(
    x: &DMatrix<f64>,
    a: &SubspaceDictionary,
    w: &ConfidenceWeights,
    d0: &CoefficientMatrix,
    cfg: &DictLearnConfig,
) -> Result<CoefficientMatrix> {
    cfg.validate()?;
    let am = a.matrix();
    check_shapes(x, am, w)?;
    let radius = cfg.budget / x.nrows() as f64;
    let wmax2 = w.max().powi(2);
    let step = match cfg.step_d {
        Some(s) => s,
        None => {
            let curv = CURVATURE_SAFETY * linalg::gram_lambda_max(am, 100) * wmax2;
            if curv == 0.0 {
                return Ok(CoefficientMatrix { matrix: prox_l1_budget(&d0.matrix, radius) });
            }
            0.9 / curv
        }
    };
    let w2 = w.matrix.component_mul(&w.matrix);
    let mut d = d0.matrix.clone();
    for _ in 0..cfg.inner_max_iters {
        let grad = 2.0 * am.tr_mul(&weighted_residual(x, am, &d, &w2));
        let next = prox_l1_budget(&(&d - step * grad), radius);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("coefficient update produced non-finite values"));
        }
        let change = relative_change(&next, &d);
        d = next;
        if change <= cfg.inner_tol {
            break;
        }
    }
    Ok(CoefficientMatrix { matrix: d })
}

/// Gradient descent on `A` with `D` fixed, starting from `a0`.
pub fn update_dictionary(
    x: &DMatrix<f64>,
    d: &CoefficientMatrix,
    w: &ConfidenceWeights,
    a0: &DMatrix<f64>,
    cfg: &DictLearnConfig,
) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    check_shapes(x, a0, w)?;
    let dm = &d.matrix;
    let wmax2 = w.max().powi(2);
    let step = match cfg.step_a {
        Some(s) => s,
        None => {
            let dt = dm.transpose();
            let curv = CURVATURE_SAFETY * linalg::gram_lambda_max(&dt, 100) * wmax2;
            if curv == 0.0 {
                return Ok(a0.clone());
            }
            0.9 / curv
        }
    };
    let w2 = w.matrix.component_mul(&w.matrix);
    let mut a = a0.clone();
    for _ in 0..cfg.inner_max_iters {
        let grad = 2.0 * weighted_residual(x, &a, dm, &w2) * dm.transpose();
        let next = &a - step * grad;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("dictionary update produced non-finite values"));
        }
        let change = relative_change(&next, &a);
        a = next;
        if change <= cfg.inner_tol {
            break;
        }
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub dictionary: SubspaceDictionary,
    /// Coefficients of the columns with nonzero confidence, in their original order.
    pub coefficients: CoefficientMatrix,
    /// Weighted objective after every outer iteration.
    pub objective: Vec<f64>,
}

/// Alternating minimization warm-started at `a_init` with `D = 11ᵀ`.
///
/// Columns whose confidence is zero everywhere are dropped first, so they
/// have no influence on the result.
pub fn learn(
    x: &DMatrix<f64>,
    w: &ConfidenceWeights,
    a_init: &SubspaceDictionary,
    cfg: &DictLearnConfig,
) -> Result<LearnOutcome> {
    cfg.validate()?;
    check_shapes(x, a_init.matrix(), w)?;
    let keep: Vec<usize> = (0..x.ncols()).filter(|&j| w.matrix.column(j).iter().any(|v| *v != 0.0)).collect();
    let m = a_init.n_atoms();
    if keep.is_empty() {
        return Ok(LearnOutcome {
            dictionary: a_init.clone(),
            coefficients: CoefficientMatrix { matrix: DMatrix::zeros(m, 0) },
            objective: Vec::new(),
        });
    }
    let x = x.select_columns(keep.iter());
    let w = ConfidenceWeights { matrix: w.matrix.select_columns(keep.iter()) };

    let mut a = a_init.matrix().clone();
    let mut d = CoefficientMatrix { matrix: DMatrix::from_element(m, keep.len(), 1.0) };
    let mut objective = Vec::new();
    let mut prev = weighted_objective(&x, &a, &d.matrix, &w.matrix);
    for _ in 0..cfg.outer_max_iters {
        let dict = SubspaceDictionary::new(a.clone())
            .map_err(|e| Error::numerical(format!("dictionary update degenerated: {e}")))?;
        d = update_coefficients(&x, &dict, &w, &d, cfg)?;
        a = update_dictionary(&x, &d, &w, &a, cfg)?;
        let obj = weighted_objective(&x, &a, &d.matrix, &w.matrix);
        objective.push(obj);
        let rel = (prev - obj).abs() / prev.max(f64::MIN_POSITIVE);
        prev = obj;
        if rel <= cfg.outer_tol {
            break;
        }
    }
    let dictionary =
        SubspaceDictionary::new(a).map_err(|e| Error::numerical(format!("learned dictionary degenerated: {e}")))?;
    Ok(LearnOutcome { dictionary, coefficients: d, objective })
}
