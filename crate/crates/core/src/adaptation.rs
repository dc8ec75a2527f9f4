//! Adaptive proposal covariance.
//!
//! The proposal covariance after `t` absorbed chain states is
//!
//! ```text
//! C_t = C0                                  if t < t0
//! C_t = s_d * cov(x_0..x_{t-1}) + s_d*eps*I  otherwise
//! ```
//!
//! with `cov` the unbiased (divisor `t - 1`) sample covariance. Mean and
//! scatter are tracked with a Welford recursion. The Cholesky factor of `C_t`
//! is refreshed every `update_period` absorbs, either by rank-one updates of
//! the previous factor or, when more than `d` data terms are pending, by a
//! fresh factorization.

use crate::error::LinalgError;
use crate::linalg::{
    cholesky, cholesky_matrix, rank_one_update_in_place, CholeskyFactor, Matrix, SpdMatrix,
};
use crate::targets::SupportBox;

/// Proposal scale that is optimal for Gaussian targets with Gaussian proposals.
pub fn default_scale(d: usize) -> f64 {
    2.4 * 2.4 / d as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptationConfig {
    /// Covariance used while fewer than `t0` states have been absorbed.
    pub c0: SpdMatrix,
    pub t0: usize,
    pub s_d: f64,
    pub epsilon: f64,
    /// Refresh the proposal factor every `update_period` absorbs.
    pub update_period: usize,
}

impl AdaptationConfig {
    pub fn dim(&self) -> usize {
        self.c0.dim()
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut problems = Vec::new();
        if self.t0 == 0 {
            problems.push("t0 must be positive".to_string());
        }
        if !(self.s_d > 0.0 && self.s_d.is_finite()) {
            problems.push(format!("s_d must be positive, got {}", self.s_d));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            problems.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.update_period == 0 {
            problems.push("update period K must be positive".to_string());
        }
        if cholesky(&self.c0).is_err() {
            problems.push("C0 is not positive definite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        }
    }
}

/// `s_d = 2.4²/d`, `C0 = c·s_d·I`, `eps = 1e-6·diam²`, `t0 = 100`, `K = 1`.
pub fn default_config(d: usize, support: &SupportBox) -> AdaptationConfig {
    default_config_with_c(d, support, 1.0)
}

/// [`default_config`] with an explicit `C0` shrink factor `c` (`c <= 1`).
pub fn default_config_with_c(d: usize, support: &SupportBox, c: f64) -> AdaptationConfig {
    assert!(d >= 1, "dimension must be at least 1");
    let s_d = default_scale(d);
    AdaptationConfig {
        c0: SpdMatrix::scaled_identity(d, c * s_d),
        t0: 100,
        s_d,
        epsilon: 1e-6 * support.diameter_squared(),
        update_period: 1,
    }
}

#[derive(Clone, Debug)]
pub struct AdaptationState {
    config: AdaptationConfig,
    t: usize,
    mean: Vec<f64>,
    /// Sum of squared deviations about the running mean.
    scatter: Matrix,
    factor: CholeskyFactor,
    c0_factor: CholeskyFactor,
    /// Scaled deviations `sqrt((n-1)/n)(x_n - mean_{n-1})` absorbed since the last refresh.
    pending: Vec<Vec<f64>>,
    /// Absorb count at the last refresh that produced an adaptive factor.
    adaptive_since: Option<usize>,
}

impl AdaptationState {
    pub fn new(config: AdaptationConfig) -> Result<Self, LinalgError> {
        let c0_factor = cholesky(&config.c0)?;
        let d = config.dim();
        Ok(Self {
            t: 0,
            mean: vec![0.0; d],
            scatter: Matrix::zeros(d),
            factor: c0_factor.clone(),
            c0_factor,
            pending: Vec::new(),
            adaptive_since: None,
            config,
        })
    }

    pub fn config(&self) -> &AdaptationConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of absorbed states.
    pub fn count(&self) -> usize {
        self.t
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Unbiased sample covariance of the absorbed states (zero for fewer than two).
    pub fn empirical_covariance(&self) -> Matrix {
        if self.t < 2 {
            Matrix::zeros(self.dim())
        } else {
            self.scatter.scaled(1.0 / (self.t - 1) as f64)
        }
    }

    /// Proposal covariance prescribed for the current count, computed directly.
    pub fn scheduled_covariance(&self) -> Matrix {
        if self.t < self.config.t0 {
            return self.config.c0.matrix().clone();
        }
        let mut c = self.empirical_covariance().scaled(self.config.s_d);
        c.add_to_diagonal(self.config.s_d * self.config.epsilon);
        c
    }

    /// Factor of the proposal covariance in force (as of the last refresh).
    pub fn proposal_factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn proposal_covariance(&self) -> Matrix {
        self.factor.recompose()
    }

    /// Adds a chain state to the running moments and refreshes the proposal
    /// factor when the absorb count is a multiple of the update period.
    pub fn absorb(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim(), "absorbed state has wrong dimension");
        self.t += 1;
        let n = self.t as f64;
        if self.t == 1 {
            self.mean.copy_from_slice(x);
        } else {
            let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
            for (m, dlt) in self.mean.iter_mut().zip(&delta) {
                *m += dlt / n;
            }
            let w = (n - 1.0) / n;
            self.scatter.add_outer(&delta, w);
            let s = w.sqrt();
            self.pending
                .push(delta.into_iter().map(|v| v * s).collect());
        }
        if self.t.is_multiple_of(self.config.update_period) {
            self.refresh();
        }
    }

    fn refresh(&mut self) {
        let t = self.t;
        let d = self.dim();
        if t < self.config.t0 {
            self.factor = self.c0_factor.clone();
            self.adaptive_since = None;
            self.pending.clear();
            return;
        }
        match self.adaptive_since {
            Some(prev) if prev >= 2 && self.pending.len() <= d => {
                self.rank_one_refresh(prev);
                if !self.factor_is_finite() {
                    self.full_refresh();
                }
            }
            _ => self.full_refresh(),
        }
        self.pending.clear();
        self.adaptive_since = Some(t);
    }

    /// Moves the factor from `C_prev` to `C_t` with one rank-one update per
    /// pending state plus one per coordinate axis to restore the jitter.
    fn rank_one_refresh(&mut self, prev: usize) {
        let s_d = self.config.s_d;
        let eps = self.config.epsilon;
        let shrink = (prev - 1) as f64 / (self.t - 1) as f64;
        self.factor.scale(shrink.sqrt());
        let w = (s_d / (self.t - 1) as f64).sqrt();
        for u in &self.pending {
            let v: Vec<f64> = u.iter().map(|a| a * w).collect();
            rank_one_update_in_place(&mut self.factor, &v);
        }
        let jitter = (s_d * eps * (1.0 - shrink)).sqrt();
        let d = self.dim();
        let mut e = vec![0.0; d];
        for i in 0..d {
            e[i] = jitter;
            rank_one_update_in_place(&mut self.factor, &e);
            e[i] = 0.0;
        }
    }

    fn full_refresh(&mut self) {
        let mut c = self.scheduled_covariance();
        let mut extra = self.config.s_d * self.config.epsilon;
        // Only reachable when eps is below rounding noise of the scatter.
        loop {
            match cholesky_matrix(&c) {
                Ok(f) => {
                    self.factor = f;
                    return;
                }
                Err(_) => {
                    c.add_to_diagonal(extra);
                    extra *= 10.0;
                }
            }
        }
    }

    fn factor_is_finite(&self) -> bool {
        self.factor.lower().as_slice().iter().all(|v| v.is_finite())
    }
}
