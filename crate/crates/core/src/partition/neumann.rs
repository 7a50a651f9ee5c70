use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::SamplingSet;
use crate::signals::SubspaceDictionary;

use super::Partition;

/// Trace-inverse of `B = SᵀAAᵀS` against its truncated Neumann expansions.
///
/// `order1` and `order2` follow the expansion `(1/α) Σₙ tr((I − αB)ⁿ)`, whose
/// infinite sum is `tr(B⁻¹)/α²`. Multiply by `α²` (see [`NeumannCheck::rescaled`])
/// to compare against `exact` directly. The constant factor does not change
/// which partition minimizes the surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannCheck {
    /// `0.9 / ‖B‖_op`.
    pub alpha: f64,
    /// `tr(B⁻¹)`.
    pub exact: f64,
    /// `(1/α) tr(2I − αB)`.
    pub order1: f64,
    /// `(1/α) tr(3I − 3αB + (αB)²)`.
    pub order2: f64,
}

impl NeumannCheck {
    /// `(α² order1, α² order2)`, truncations of a series that sums to `tr(B⁻¹)`.
    pub fn rescaled(&self) -> (f64, f64) {
        let s = self.alpha * self.alpha;
        (s * self.order1, s * self.order2)
    }
}

pub fn neumann_surrogate_check(a: &SubspaceDictionary, set: &SamplingSet) -> Result<NeumannCheck> {
    if set.n_nodes() != a.n_nodes() || set.is_empty() {
        return Err(Error::invalid("sampling set does not match the dictionary"));
    }
    let sta = set.restrict_rows(a.matrix());
    let b = &sta * sta.transpose();
    let exact = linalg::trace_inverse_psd(&b)?;
    if !exact.is_finite() {
        return Err(Error::DegenerateSubspace("SᵀAAᵀS is singular".into()));
    }
    let op = b.symmetric_eigenvalues().max();
    let alpha = 0.9 / op;
    let k = b.nrows() as f64;
    let ab: DMatrix<f64> = alpha * &b;
    let order1 = (2.0 * k - ab.trace()) / alpha;
    let order2 = (3.0 * k - 3.0 * ab.trace() + ab.norm_squared()) / alpha;
    Ok(NeumannCheck { alpha, exact, order1, order2 })
}

/// `Σᵢ tr(SᵢᵀAAᵀSᵢ)`, which equals `tr(AAᵀ)` for every partition.
pub fn partition_trace_sum(a: &SubspaceDictionary, partition: &Partition) -> f64 {
    partition.subsets().iter().map(|s| s.restrict_rows(a.matrix()).norm_squared()).sum()
}
