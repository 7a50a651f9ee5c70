//! Node sampling, minimax and zero-padding reconstruction, and the A-optimality criterion.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::signals::SubspaceDictionary;

/// Lower clamp for [`mse_db`], so exact recovery stays finite.
pub const MSE_FLOOR_DB: f64 = -320.0;

/// A set of sampled nodes, stored both as sorted indices and as a 0/1 indicator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SamplingSet {
    n_nodes: usize,
    indices: Vec<usize>,
}

impl SamplingSet {
    pub fn new(n_nodes: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("sampling set has duplicate nodes"));
        }
        if let Some(&last) = indices.last() {
            if last >= n_nodes {
                return Err(Error::invalid(format!("node {last} out of range for {n_nodes} nodes")));
            }
        }
        Ok(SamplingSet { n_nodes, indices })
    }

    pub fn from_indicator(indicator: &[bool]) -> Self {
        let indices = indicator.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        SamplingSet { n_nodes: indicator.len(), indices }
    }

    pub fn all(n_nodes: usize) -> Self {
        SamplingSet { n_nodes, indices: (0..n_nodes).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn indicator(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.n_nodes);
        for &i in &self.indices {
            m[i] = 1.0;
        }
        m
    }

    /// The N×K selection matrix `S`.
    pub fn selection_matrix(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.n_nodes, self.len());
        for (k, &i) in self.indices.iter().enumerate() {
            s[(i, k)] = 1.0;
        }
        s
    }

    /// `Sᵀ A`: the rows of `a` at the sampled nodes.
    pub fn restrict_rows(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        a.select_rows(self.indices.iter())
    }

    fn check_nodes(&self, n: usize) -> Result<()> {
        if n != self.n_nodes {
            return Err(Error::invalid(format!("sampling set is over {} nodes but the operand has {n}", self.n_nodes)));
        }
        Ok(())
    }
}

/// Sampled values `y = Sᵀx + η`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub values: DVector<f64>,
    pub set: SamplingSet,
    pub sigma: f64,
}

/// Observes `x` on `set` with `N(0, σ²)` noise.
///
/// The noise is drawn for every node and then restricted to the set, so two
/// sets sampled with the same seed see identical noise on shared nodes.
pub fn sample(x: &DVector<f64>, set: &SamplingSet, sigma: f64, seed: u64) -> Result<Measurement> {
    set.check_nodes(x.len())?;
    if set.is_empty() {
        return Err(Error::invalid("cannot sample on an empty set"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    let mut values = x.select_rows(set.indices.iter());
    if sigma > 0.0 {
        let mut r = rng::stream(seed, 0x7361_6d70);
        let noise: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut r)).collect();
        for (k, &i) in set.indices.iter().enumerate() {
            values[k] += sigma * noise[i];
        }
    }
    Ok(Measurement { values, set: set.clone(), sigma })
}

/// Minimax reconstruction `A (SᵀA)† y` together with the condition number of `SᵀA`.
pub fn minimax_reconstruct_with_cond(a: &SubspaceDictionary, meas: &Measurement) -> Result<(DVector<f64>, f64)> {
    meas.set.check_nodes(a.n_nodes())?;
    if meas.values.len() != meas.set.len() {
        return Err(Error::invalid("measurement length differs from its sampling set"));
    }
    let sta = meas.set.restrict_rows(a.matrix());
    if sta.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateSubspace("the sampled rows of A are all zero".into()));
    }
    let pinv = linalg::pseudo_inverse(&sta)?;
    let x = a.matrix() * (&pinv.matrix * &meas.values);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSubspace("reconstruction is not finite".into()));
    }
    Ok((x, pinv.cond))
}

/// Minimax reconstruction `A (SᵀA)† y`.
pub fn minimax_reconstruct(a: &SubspaceDictionary, meas: &Measurement) -> Result<DVector<f64>> {
    minimax_reconstruct_with_cond(a, meas).map(|(x, _)| x)
}

/// Minimax reconstruction, or zero padding with `cond = inf` when the sampled
/// rows of `A` carry no information.
pub fn reconstruct_or_pad(a: &SubspaceDictionary, meas: &Measurement) -> Result<(DVector<f64>, f64)> {
    match minimax_reconstruct_with_cond(a, meas) {
        Err(Error::DegenerateSubspace(msg)) => {
            log::warn!("minimax reconstruction degenerate ({msg}); using zero padding");
            Ok((ls_reconstruct(meas), f64::INFINITY))
        }
        other => other,
    }
}

/// Zero-padding reconstruction: sampled nodes carry `y`, all others are zero.
pub fn ls_reconstruct(meas: &Measurement) -> DVector<f64> {
    let mut x = DVector::zeros(meas.set.n_nodes());
    for (k, &i) in meas.set.indices().iter().enumerate() {
        x[i] = meas.values[k];
    }
    x
}

/// `tr((SᵀAAᵀS)⁻¹)`, or `+∞` when the matrix is singular.
pub fn aopt_objective(a: &SubspaceDictionary, set: &SamplingSet) -> Result<f64> {
    set.check_nodes(a.n_nodes())?;
    if set.is_empty() {
        return Ok(f64::INFINITY);
    }
    let sta = set.restrict_rows(a.matrix());
    linalg::trace_inverse_psd(&(&sta * sta.transpose()))
}

/// Expected squared error of minimax reconstruction under white noise of
/// variance `σ²`, for signals in the range of `A` recoverable from `set`.
pub fn mse_expected(a: &SubspaceDictionary, set: &SamplingSet, sigma: f64) -> Result<f64> {
    set.check_nodes(a.n_nodes())?;
    let sta = set.restrict_rows(a.matrix());
    let pinv = linalg::pseudo_inverse(&sta)?;
    Ok(sigma * sigma * (a.matrix() * pinv.matrix).norm_squared())
}

/// `tr(Γ_η) tr(AᵀA) tr((SᵀAAᵀS)⁻¹)` with `Γ_η = σ² I_K`.
pub fn mse_upper_bound(a: &SubspaceDictionary, set: &SamplingSet, sigma: f64) -> Result<f64> {
    let tr_noise = sigma * sigma * set.len() as f64;
    Ok(tr_noise * a.matrix().norm_squared() * aopt_objective(a, set)?)
}

/// `10 log10(‖x̃ − x‖² / N)`, floored at [`MSE_FLOOR_DB`].
pub fn mse_db(x: &DVector<f64>, x_hat: &DVector<f64>) -> f64 {
    assert_eq!(x.len(), x_hat.len(), "mse_db operands differ in length");
    let mse = (x_hat - x).norm_squared() / x.len() as f64;
    if mse > 0.0 {
        (10.0 * mse.log10()).max(MSE_FLOOR_DB)
    } else {
        MSE_FLOOR_DB
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rand_matrix(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut g = rng::stream(seed, 99);
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut g))
    }

    #[test]
    fn sample_trivial_cases() {
        let x = DVector::from_vec(vec![3.0, 7.0]);
        let all = sample(&x, &SamplingSet::all(2), 0.0, 0).unwrap();
        assert_eq!(all.values, x);
        let one = sample(&x, &SamplingSet::new(2, vec![0]).unwrap(), 0.0, 0).unwrap();
        assert_eq!(one.values.as_slice(), &[3.0]);
        assert!(sample(&x, &SamplingSet::new(2, vec![]).unwrap(), 0.0, 0).is_err());
    }

    #[test]
    fn sample_noise_variance() {
        let n = 16;
        let x = DVector::zeros(n);
        let set = SamplingSet::new(n, vec![1, 4, 5, 9, 12]).unwrap();
        let sigma: f64 = 0.3;
        let draws = 10_000;
        let mut acc = 0.0;
        for s in 0..draws {
            acc += sample(&x, &set, sigma, s).unwrap().values.norm_squared() / set.len() as f64;
        }
        let est = acc / draws as f64;
        assert!((est - sigma * sigma).abs() / (sigma * sigma) < 0.03, "{est}");
    }

    #[test]
    fn common_noise_on_shared_nodes() {
        let x = DVector::zeros(10);
        let a = sample(&x, &SamplingSet::new(10, vec![2, 3]).unwrap(), 1.0, 5).unwrap();
        let b = sample(&x, &SamplingSet::new(10, vec![3, 8]).unwrap(), 1.0, 5).unwrap();
        assert_eq!(a.values[1], b.values[0]);
    }

    #[test]
    fn minimax_identity_full_sampling() {
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let m = sample(&x, &SamplingSet::all(3), 0.0, 0).unwrap();
        let rec = minimax_reconstruct(&SubspaceDictionary::identity(3), &m).unwrap();
        assert_relative_eq!(rec, x, epsilon = 1e-14);
    }

    #[test]
    fn minimax_recovers_signals_in_range() {
        let a = SubspaceDictionary::new(rand_matrix(20, 5, 1)).unwrap();
        let d = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 3.0]);
        let x = a.matrix() * d;
        let set = SamplingSet::new(20, vec![0, 3, 7, 11, 15, 19]).unwrap();
        let rec = minimax_reconstruct(&a, &sample(&x, &set, 0.0, 0).unwrap()).unwrap();
        assert!((rec - &x).norm() / x.norm() <= 1e-8);
    }

    #[test]
    fn minimax_rank_deficient_is_minimum_norm_consistent() {
        // two identical sampled rows make SᵀA rank one
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 1.0, 3.0, 0.0]);
        let dict = SubspaceDictionary::new(a.clone()).unwrap();
        let set = SamplingSet::new(4, vec![0, 1]).unwrap();
        let x = DVector::from_vec(vec![5.0, 5.0, 1.0, 1.0]);
        let meas = sample(&x, &set, 0.0, 0).unwrap();
        let rec = minimax_reconstruct(&dict, &meas).unwrap();
        // oracle: min-norm d' with [1 2] d' = 5 is d' = (1, 2)
        let d_min = DVector::from_vec(vec![1.0, 2.0]);
        assert_relative_eq!(rec, &a * d_min, epsilon = 1e-12);
    }

    #[test]
    fn minimax_rejects_zero_rows() {
        let a = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 1.0]);
        let dict = SubspaceDictionary::new(a).unwrap();
        let meas =
            sample(&DVector::from_vec(vec![0.0, 1.0, 1.0]), &SamplingSet::new(3, vec![0]).unwrap(), 0.0, 0).unwrap();
        assert!(matches!(minimax_reconstruct(&dict, &meas), Err(Error::DegenerateSubspace(_))));
    }

    #[test]
    fn ls_reconstruct_zero_pads() {
        let set = SamplingSet::new(3, vec![1]).unwrap();
        let m = Measurement { values: DVector::from_vec(vec![5.0]), set, sigma: 0.0 };
        assert_eq!(ls_reconstruct(&m).as_slice(), &[0.0, 5.0, 0.0]);
    }

    #[test]
    fn aopt_trivial_and_dense_oracle() {
        let set = SamplingSet::new(6, vec![0, 2, 5]).unwrap();
        assert_relative_eq!(aopt_objective(&SubspaceDictionary::identity(6), &set).unwrap(), 3.0, epsilon = 1e-12);

        let two = SubspaceDictionary::new(DMatrix::from_row_slice(2, 1, &[1.0, 1.0])).unwrap();
        assert_relative_eq!(aopt_objective(&two, &SamplingSet::new(2, vec![0]).unwrap()).unwrap(), 1.0);
        // two sampled rows of a rank-one dictionary
        assert_eq!(aopt_objective(&two, &SamplingSet::all(2)).unwrap(), f64::INFINITY);

        let a = SubspaceDictionary::new(rand_matrix(8, 5, 3)).unwrap();
        let set = SamplingSet::new(8, vec![1, 2, 4, 7]).unwrap();
        let s = set.selection_matrix();
        let g = s.transpose() * a.matrix() * a.matrix().transpose() * s;
        let inv = g.try_inverse().unwrap();
        assert_relative_eq!(aopt_objective(&a, &set).unwrap(), inv.trace(), max_relative = 1e-10);
    }

    #[test]
    fn mse_db_closed_forms() {
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(mse_db(&x, &x), MSE_FLOOR_DB);
        assert_relative_eq!(mse_db(&x, &DVector::zeros(2)), 10.0 * 0.5f64.log10(), epsilon = 1e-12);
        assert_relative_eq!(mse_db(&DVector::zeros(4), &DVector::from_element(4, 1.0)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_error_within_bound() {
        let a = SubspaceDictionary::new(rand_matrix(12, 4, 8)).unwrap();
        let set = SamplingSet::new(12, vec![0, 2, 3, 6, 9, 11]).unwrap();
        let x = a.matrix() * DVector::from_vec(vec![1.0, -1.0, 2.0, 0.5]);
        let sigma = 0.1;
        let draws = 4000;
        let mut acc = 0.0;
        for s in 0..draws {
            let rec = minimax_reconstruct(&a, &sample(&x, &set, sigma, s).unwrap()).unwrap();
            acc += (rec - &x).norm_squared();
        }
        let est = acc / draws as f64;
        let expected = mse_expected(&a, &set, sigma).unwrap();
        assert!((est - expected).abs() / expected < 0.1, "{est} vs {expected}");
        assert!(est <= mse_upper_bound(&a, &set, sigma).unwrap());
    }

    proptest! {
        #[test]
        fn ls_reconstruct_is_idempotent(vals in prop::collection::vec(-10.0f64..10.0, 8), mask in prop::collection::vec(any::<bool>(), 8)) {
            let set = SamplingSet::from_indicator(&mask);
            prop_assume!(!set.is_empty());
            let x = DVector::from_vec(vals);
            let once = ls_reconstruct(&sample(&x, &set, 0.0, 0).unwrap());
            let twice = ls_reconstruct(&sample(&once, &set, 0.0, 0).unwrap());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn indicator_and_indices_agree(mask in prop::collection::vec(any::<bool>(), 1..30)) {
            let set = SamplingSet::from_indicator(&mask);
            prop_assert_eq!(set.indicator().sum() as usize, set.len());
            for (i, &b) in mask.iter().enumerate() {
                prop_assert_eq!(set.contains(i), b);
            }
        }
    }
}
