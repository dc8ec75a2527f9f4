use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_dim, SupportBox, TwoLevelTarget};
use crate::error::{EvalError, TargetError};
use crate::linalg::{
    cholesky, cholesky_matrix, dot, log_mvn_density_factored, CholeskyFactor, Matrix, SpdMatrix,
};

/// Row-major `n × d` design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self, TargetError> {
        if n_cols == 0 || data.len() != n_rows * n_cols {
            return Err(TargetError::DataShape(format!(
                "{} values cannot form a {n_rows}x{n_cols} design matrix",
                data.len()
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TargetError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(TargetError::DataShape("ragged design matrix rows".into()));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// `XᵀX`
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.n_cols);
        for i in 0..self.n_rows {
            g.add_outer(self.row(i), 1.0);
        }
        g
    }

    /// Whether the columns are linearly independent.
    pub fn has_full_column_rank(&self) -> bool {
        let g = self.gram();
        let scale = g.diagonal().iter().cloned().fold(0.0, f64::max);
        if scale <= 0.0 {
            return false;
        }
        match cholesky_matrix(&g) {
            Ok(f) => (0..self.n_cols).all(|i| f.lower()[(i, i)].powi(2) > 1e-10 * scale),
            Err(_) => false,
        }
    }

    fn select(&self, rows: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * self.n_cols);
        for &i in rows {
            out.extend_from_slice(self.row(i));
        }
        out
    }
}

/// Bayesian logistic regression on tall, imbalanced data.
///
/// `log π` uses every row. `log π*` keeps all one-response rows and replaces
/// the zero-response sum with a subsample sum scaled by `N0/n0`. Both add the
/// Gaussian prior `N(0, Σ0)`.
#[derive(Clone, Debug)]
pub struct LogisticTarget {
    d: usize,
    ones: Vec<f64>,
    subsample: Vec<f64>,
    /// Zero-response rows outside the subsample.
    rest: Vec<f64>,
    subsample_scale: f64,
    prior_factor: CholeskyFactor,
    support: SupportBox,
    n_zero: usize,
    n_sub: usize,
}

/// `ln(1 + e^η)` without overflow.
#[inline]
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

impl LogisticTarget {
    /// `subsample` indexes zero-response rows of `x`; `bound` gives the
    /// support box `[-bound, bound]^d`.
    pub fn new(
        x: &DesignMatrix,
        y: &[u8],
        subsample: &[usize],
        prior: SpdMatrix,
        bound: f64,
    ) -> Result<Self, TargetError> {
        let d = x.n_cols();
        if y.len() != x.n_rows() {
            return Err(TargetError::DataShape(format!(
                "{} responses for {} design rows",
                y.len(),
                x.n_rows()
            )));
        }
        if let Some(v) = y.iter().find(|&&v| v > 1) {
            return Err(TargetError::DataShape(format!(
                "response {v} is not binary"
            )));
        }
        if prior.dim() != d {
            return Err(TargetError::DataShape(format!(
                "prior covariance is {0}x{0} but design has {d} columns",
                prior.dim()
            )));
        }
        if !x.has_full_column_rank() {
            return Err(TargetError::DataShape(
                "design matrix is rank deficient".into(),
            ));
        }
        if subsample.is_empty() {
            return Err(TargetError::DataShape(
                "zero-response subsample is empty".into(),
            ));
        }
        let mut seen = vec![false; x.n_rows()];
        for &i in subsample {
            if i >= x.n_rows() || y[i] != 0 {
                return Err(TargetError::DataShape(format!(
                    "subsample index {i} is not a zero-response row"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(TargetError::DataShape(format!(
                    "subsample index {i} repeated"
                )));
            }
        }
        if !(bound > 0.0) {
            return Err(TargetError::InvalidParameter {
                name: "bound",
                reason: format!("must be positive, got {bound}"),
            });
        }
        let one_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
        let zero_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
        let rest_rows: Vec<usize> = zero_rows.iter().copied().filter(|&i| !seen[i]).collect();
        let prior_factor = cholesky(&prior)?;
        Ok(Self {
            d,
            ones: x.select(&one_rows),
            subsample: x.select(subsample),
            rest: x.select(&rest_rows),
            subsample_scale: zero_rows.len() as f64 / subsample.len() as f64,
            prior_factor,
            support: SupportBox::new(vec![-bound; d], vec![bound; d])?,
            n_zero: zero_rows.len(),
            n_sub: subsample.len(),
        })
    }

    /// Uniformly chosen `n0` distinct zero-response rows.
    pub fn random_zero_subsample(
        y: &[u8],
        n0: usize,
        seed: u64,
    ) -> Result<Vec<usize>, TargetError> {
        let zero_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
        if n0 == 0 || n0 > zero_rows.len() {
            return Err(TargetError::InvalidParameter {
                name: "subsample_size",
                reason: format!("need 1 <= n0 <= {}, got {n0}", zero_rows.len()),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> = sample(&mut rng, zero_rows.len(), n0)
            .into_iter()
            .map(|k| zero_rows[k])
            .collect();
        picked.sort_unstable();
        Ok(picked)
    }

    pub fn n_ones(&self) -> usize {
        self.ones.len() / self.d
    }

    pub fn n_zeros(&self) -> usize {
        self.n_zero
    }

    pub fn subsample_size(&self) -> usize {
        self.n_sub
    }

    fn ones_term(&self, beta: &[f64]) -> f64 {
        // η − ln(1+e^η) = −ln(1+e^{−η})
        self.ones
            .chunks_exact(self.d)
            .map(|r| -softplus(-dot(r, beta)))
            .sum()
    }

    fn zeros_term(rows: &[f64], d: usize, beta: &[f64]) -> f64 {
        rows.chunks_exact(d).map(|r| -softplus(dot(r, beta))).sum()
    }

    // Both likelihoods are assembled from the same three partial sums in a
    // fixed order, so reusing the first two gives bit-identical results.
    fn full_from_parts(ones: f64, sub: f64, rest: f64) -> f64 {
        ones + (sub + rest)
    }

    fn approx_from_parts(&self, ones: f64, sub: f64) -> f64 {
        ones + self.subsample_scale * sub
    }

    /// Full-data log-likelihood `l(β)`.
    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        Self::full_from_parts(
            self.ones_term(beta),
            Self::zeros_term(&self.subsample, self.d, beta),
            Self::zeros_term(&self.rest, self.d, beta),
        )
    }

    /// Subsampled log-likelihood `l*(β)`.
    pub fn approx_log_likelihood(&self, beta: &[f64]) -> f64 {
        self.approx_from_parts(
            self.ones_term(beta),
            Self::zeros_term(&self.subsample, self.d, beta),
        )
    }

    fn log_prior(&self, beta: &[f64]) -> f64 {
        log_mvn_density_factored(beta, &vec![0.0; self.d], &self.prior_factor)
    }

    /// Posterior mode and the inverse negative Hessian there, via Newton's method.
    pub fn laplace_approximation(&self) -> (Vec<f64>, Matrix) {
        let d = self.d;
        let prior_prec = self.prior_factor.inverse();
        let mut beta = vec![0.0; d];
        let mut hess_inv = prior_prec.clone();
        for _ in 0..100 {
            let mut grad: Vec<f64> = prior_prec.mul_vec(&beta).iter().map(|v| -v).collect();
            let mut h = prior_prec.clone();
            for (rows, label) in [(&self.ones, 1.0), (&self.subsample, 0.0), (&self.rest, 0.0)] {
                for r in rows.chunks_exact(d) {
                    let p = 1.0 / (1.0 + (-dot(r, &beta)).exp());
                    for (g, xv) in grad.iter_mut().zip(r) {
                        *g += (label - p) * xv;
                    }
                    h.add_outer(r, p * (1.0 - p));
                }
            }
            let f = cholesky_matrix(&h).expect("negative Hessian is positive definite");
            let step = f.solve_upper(&f.solve_lower(&grad));
            let size = step.iter().map(|s| s.abs()).fold(0.0, f64::max);
            beta.iter_mut().zip(&step).for_each(|(b, s)| *b += s);
            hess_inv = f.inverse();
            if size < 1e-10 {
                break;
            }
        }
        (beta, hess_inv)
    }
}

impl TwoLevelTarget for LogisticTarget {
    fn dim(&self) -> usize {
        self.d
    }

    fn support(&self) -> &SupportBox {
        &self.support
    }

    fn log_pi_star(&self, beta: &[f64]) -> Result<f64, EvalError> {
        check_dim(beta, self.d)?;
        if !self.support.contains(beta) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.approx_log_likelihood(beta) + self.log_prior(beta))
    }

    fn log_pi(&self, beta: &[f64]) -> Result<f64, EvalError> {
        check_dim(beta, self.d)?;
        if !self.support.contains(beta) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_likelihood(beta) + self.log_prior(beta))
    }

    fn log_pi_star_partial(&self, beta: &[f64], scratch: &mut Vec<f64>) -> Result<f64, EvalError> {
        scratch.clear();
        check_dim(beta, self.d)?;
        if !self.support.contains(beta) {
            return Ok(f64::NEG_INFINITY);
        }
        let ones = self.ones_term(beta);
        let sub = Self::zeros_term(&self.subsample, self.d, beta);
        let prior = self.log_prior(beta);
        scratch.extend([ones, sub, prior]);
        Ok(self.approx_from_parts(ones, sub) + prior)
    }

    fn log_pi_refined(&self, beta: &[f64], scratch: &[f64]) -> Result<f64, EvalError> {
        let &[ones, sub, prior] = scratch else {
            return self.log_pi(beta);
        };
        let rest = Self::zeros_term(&self.rest, self.d, beta);
        Ok(Self::full_from_parts(ones, sub, rest) + prior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DesignMatrix, Vec<u8>) {
        let rows = vec![
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        (
            DesignMatrix::from_rows(&rows).unwrap(),
            vec![1, 0, 0, 1, 0, 0],
        )
    }

    #[test]
    fn full_subsample_matches_exactly() {
        let (x, y) = toy();
        let zeros: Vec<usize> = (0..6).filter(|&i| y[i] == 0).collect();
        let t = LogisticTarget::new(&x, &y, &zeros, SpdMatrix::scaled_identity(3, 100.0), 20.0)
            .unwrap();
        for b in [[0.1, -0.5, 0.3], [2.0, 1.0, -1.0], [0.0, 0.0, 0.0]] {
            assert_eq!(t.log_pi(&b).unwrap(), t.log_pi_star(&b).unwrap());
        }
    }

    #[test]
    fn likelihood_at_origin() {
        let (x, y) = toy();
        let t = LogisticTarget::new(&x, &y, &[1, 2], SpdMatrix::scaled_identity(3, 100.0), 20.0)
            .unwrap();
        assert!((t.log_likelihood(&[0.0; 3]) + 6.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn likelihood_matches_direct_bernoulli() {
        let (x, y) = toy();
        let t = LogisticTarget::new(&x, &y, &[1, 4], SpdMatrix::scaled_identity(3, 100.0), 20.0)
            .unwrap();
        let beta = [0.3, -1.2, 0.8];
        let direct: f64 = (0..6)
            .map(|i| {
                let p = 1.0 / (1.0 + (-dot(x.row(i), &beta)).exp());
                if y[i] == 1 {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            })
            .sum();
        assert!((t.log_likelihood(&beta) - direct).abs() < 1e-12);
        // Scaled subsample: ones + (4/2)·(rows 1 and 4)
        let sub: f64 = [0usize, 3]
            .iter()
            .map(|&i| -softplus(-dot(x.row(i), &beta)))
            .sum::<f64>()
            + 2.0
                * [1usize, 4]
                    .iter()
                    .map(|&i| -softplus(dot(x.row(i), &beta)))
                    .sum::<f64>();
        assert!((t.approx_log_likelihood(&beta) - sub).abs() < 1e-12);
    }

    #[test]
    fn refined_evaluation_is_bitwise_full() {
        let (x, y) = toy();
        let t = LogisticTarget::new(&x, &y, &[2, 5], SpdMatrix::scaled_identity(3, 100.0), 20.0)
            .unwrap();
        let mut scratch = Vec::new();
        for b in [[0.1, -0.5, 0.3], [2.0, 1.0, -1.0], [-3.0, 0.7, 4.0]] {
            let star = t.log_pi_star_partial(&b, &mut scratch).unwrap();
            assert_eq!(star, t.log_pi_star(&b).unwrap());
            assert_eq!(
                t.log_pi_refined(&b, &scratch).unwrap(),
                t.log_pi(&b).unwrap()
            );
        }
        let out = [25.0, 0.0, 0.0];
        assert_eq!(
            t.log_pi_star_partial(&out, &mut scratch).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(t.log_pi_refined(&out, &scratch).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = toy();
        let prior = SpdMatrix::scaled_identity(3, 100.0);
        assert!(LogisticTarget::new(&x, &y[..5], &[1], prior.clone(), 20.0).is_err());
        assert!(LogisticTarget::new(&x, &y, &[0], prior.clone(), 20.0).is_err());
        assert!(LogisticTarget::new(&x, &y, &[1, 1], prior.clone(), 20.0).is_err());
        let dup =
            DesignMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(LogisticTarget::new(&dup, &[0, 1, 0], &[0], SpdMatrix::identity(2), 20.0).is_err());
    }

    #[test]
    fn laplace_mode_has_zero_gradient() {
        let (x, y) = toy();
        let t = LogisticTarget::new(&x, &y, &[1, 2], SpdMatrix::scaled_identity(3, 100.0), 20.0)
            .unwrap();
        let (mode, cov) = t.laplace_approximation();
        let h = 1e-5;
        for j in 0..3 {
            let mut up = mode.clone();
            let mut dn = mode.clone();
            up[j] += h;
            dn[j] -= h;
            let g = (t.log_pi(&up).unwrap() - t.log_pi(&dn).unwrap()) / (2.0 * h);
            assert!(g.abs() < 1e-6, "gradient {g}");
        }
        assert!(cholesky_matrix(&cov).is_ok());
    }

    #[test]
    fn subsample_is_reproducible_and_valid() {
        let y: Vec<u8> = (0..100).map(|i| (i % 7 == 0) as u8).collect();
        let a = LogisticTarget::random_zero_subsample(&y, 30, 4).unwrap();
        let b = LogisticTarget::random_zero_subsample(&y, 30, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        assert!(a.iter().all(|&i| y[i] == 0));
        assert!(LogisticTarget::random_zero_subsample(&y, 1000, 4).is_err());
    }
}
