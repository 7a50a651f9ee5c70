use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::signals::SubspaceDictionary;

/// `tr((Aᵀ diag(m) A)²) + tr((Aᵀ diag(1−m) A)²)`.
pub fn objective_f(m: &DVector<f64>, a: &SubspaceDictionary) -> f64 {
    let a = a.matrix();
    let weighted = |w: &DVector<f64>| {
        let mut da = a.clone();
        for (i, mut row) in da.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let b = a.transpose() * da;
        b.norm_squared()
    };
    weighted(m) + weighted(&m.map(|v| 1.0 - v))
}

/// `2 Diag(AAᵀ (2 diag(m) − I) AAᵀ)`.
pub fn grad_f(m: &DVector<f64>, a: &SubspaceDictionary) -> DVector<f64> {
    let p = a.node_gram();
    let s = m.map(|v| 2.0 * v - 1.0);
    DVector::from_fn(m.len(), |i, _| 2.0 * p.row(i).iter().zip(s.iter()).map(|(pij, sj)| pij * pij * sj).sum::<f64>())
}

/// `β (1ᵀ(m ⊙ m) − 1ᵀm)`.
pub fn objective_h(m: &DVector<f64>, beta: f64) -> f64 {
    beta * m.iter().map(|v| v * v - v).sum::<f64>()
}

/// `β (2m − 1)`.
pub fn grad_h(m: &DVector<f64>, beta: f64) -> DVector<f64> {
    m.map(|v| beta * (2.0 * v - 1.0))
}

/// The squared-trace bipartition objective in quadratic form.
///
/// With `P = AAᵀ` and `Q = P ⊙ P`, `f(m) = mᵀQm + (1−m)ᵀQ(1−m)` and
/// `∇f(m) = 2Q(2m − 1)`, so `∇f` is `4λ_max(Q)`-Lipschitz.
#[derive(Debug, Clone)]
pub struct DcProblem {
    q: DMatrix<f64>,
}

impl DcProblem {
    pub fn from_dictionary(a: &SubspaceDictionary) -> Self {
        DcProblem::from_node_gram(&a.node_gram())
    }

    /// `p` must be the (symmetric) node Gram matrix `AAᵀ`.
    pub fn from_node_gram(p: &DMatrix<f64>) -> Self {
        DcProblem { q: p.component_mul(p) }
    }

    pub fn n_nodes(&self) -> usize {
        self.q.nrows()
    }

    pub fn f(&self, m: &DVector<f64>) -> f64 {
        let c = m.map(|v| 1.0 - v);
        m.dot(&(&self.q * m)) + c.dot(&(&self.q * &c))
    }

    pub fn grad_f(&self, m: &DVector<f64>) -> DVector<f64> {
        let s = m.map(|v| 2.0 * v - 1.0);
        2.0 * (&self.q * s)
    }

    /// An upper bound on the Lipschitz constant of `∇f`.
    pub fn lipschitz_bound(&self) -> f64 {
        4.0 * linalg::perron_upper_bound(&self.q, 200)
    }
}
