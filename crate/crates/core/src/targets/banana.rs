use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{check_dim, SupportBox, TwoLevelTarget};
use crate::error::{EvalError, TargetError};
use crate::linalg::{cholesky, log_mvn_density_factored, CholeskyFactor, Matrix, SpdMatrix};

/// The unit-Jacobian twist `(x1, x2, ..) -> (a x1, x2/a + b a²(x1²+1), ..)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist {
    pub a: f64,
    pub b: f64,
}

impl Twist {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.apply_in_place(&mut y);
        y
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        let (a, b) = (self.a, self.b);
        let x1 = x[0];
        x[0] = a * x1;
        x[1] = x[1] / a + b * a * a * (x1 * x1 + 1.0);
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let (a, b) = (self.a, self.b);
        let mut x = y.to_vec();
        let x1 = y[0] / a;
        x[0] = x1;
        x[1] = a * (y[1] - b * a * a * (x1 * x1 + 1.0));
        x
    }
}

/// Gaussian `N(mu, sigma)` composed with a [`Twist`], truncated to a box of
/// ±k marginal standard deviations of the twisted distribution. The
/// surrogate is the untwisted Gaussian.
#[derive(Clone, Debug)]
pub struct BananaTarget {
    mu: Vec<f64>,
    sigma: SpdMatrix,
    factor: CholeskyFactor,
    twist: Twist,
    support: SupportBox,
}

impl BananaTarget {
    pub fn new(
        mu: Vec<f64>,
        sigma: SpdMatrix,
        a: f64,
        b: f64,
        truncation_sd: f64,
    ) -> Result<Self, TargetError> {
        let d = mu.len();
        if d < 2 {
            return Err(TargetError::DataShape("banana target needs d >= 2".into()));
        }
        if sigma.dim() != d {
            return Err(TargetError::DataShape(format!(
                "mean has length {d} but covariance is {0}x{0}",
                sigma.dim()
            )));
        }
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(TargetError::InvalidParameter {
                name: "a",
                reason: format!("twist needs finite a != 0 and finite b, got a = {a}, b = {b}"),
            });
        }
        if !(truncation_sd > 0.0) {
            return Err(TargetError::InvalidParameter {
                name: "truncation_sd",
                reason: format!("must be positive, got {truncation_sd}"),
            });
        }
        let factor = cholesky(&sigma)?;
        let twist = Twist { a, b };
        let (mean, var) = twisted_moments(&mu, sigma.matrix(), twist);
        let half: Vec<f64> = var.iter().map(|v| truncation_sd * v.sqrt()).collect();
        let support = SupportBox::centered(&mean, &half)?;
        Ok(Self {
            mu,
            sigma,
            factor,
            twist,
            support,
        })
    }

    /// d = 8, a = 1, b = 0.05, μ = 0, Σ = diag(10, 1, …, 1), truncated at 5 sd.
    pub fn paper() -> Self {
        let mut diag = vec![1.0; 8];
        diag[0] = 10.0;
        Self::new(
            vec![0.0; 8],
            SpdMatrix::from_diagonal(&diag),
            1.0,
            0.05,
            5.0,
        )
        .expect("reference configuration is valid")
    }

    pub fn twist(&self) -> Twist {
        self.twist
    }

    pub fn mean(&self) -> &[f64] {
        &self.mu
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.sigma
    }

    pub fn covariance_factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Squared Mahalanobis distance of `φ(x)` from the Gaussian mean.
    pub fn twisted_distance_squared(&self, x: &[f64]) -> f64 {
        let y = self.twist.apply(x);
        let diff: Vec<f64> = y.iter().zip(&self.mu).map(|(a, m)| a - m).collect();
        self.factor.quad_form_inv(&diff)
    }

    /// Squared-distance threshold of the probability-`p` region: the χ²_d quantile.
    pub fn region_threshold(&self, p: f64) -> f64 {
        chi_squared_quantile(self.mu.len(), p)
    }

    /// Whether `x` lies in the probability-`p` highest density region.
    pub fn region_indicator(&self, x: &[f64], p: f64) -> bool {
        self.twisted_distance_squared(x) <= self.region_threshold(p)
    }
}

pub fn chi_squared_quantile(d: usize, p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "coverage level must lie in (0, 1)");
    ChiSquared::new(d as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}

/// Exact mean and variance of each coordinate of `φ⁻¹(y)`, `y ~ N(mu, sigma)`.
fn twisted_moments(mu: &[f64], s: &Matrix, tw: Twist) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (tw.a, tw.b);
    let mut mean = mu.to_vec();
    let mut var = s.diagonal();
    // x1 = y1 / a
    mean[0] = mu[0] / a;
    var[0] = s[(0, 0)] / (a * a);
    // x2 = a y2 - a b (y1² + a²)
    let e_y1sq = s[(0, 0)] + mu[0] * mu[0];
    mean[1] = a * mu[1] - a * b * (e_y1sq + a * a);
    let var_y1sq = 2.0 * s[(0, 0)] * s[(0, 0)] + 4.0 * mu[0] * mu[0] * s[(0, 0)];
    let cov_y2_y1sq = 2.0 * mu[0] * s[(0, 1)];
    var[1] = a * a * (s[(1, 1)] + b * b * var_y1sq - 2.0 * b * cov_y2_y1sq);
    (mean, var)
}

impl TwoLevelTarget for BananaTarget {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn support(&self) -> &SupportBox {
        &self.support
    }

    fn log_pi_star(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_dim(x, self.dim())?;
        if !self.support.contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(log_mvn_density_factored(x, &self.mu, &self.factor))
    }

    fn log_pi(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_dim(x, self.dim())?;
        if !self.support.contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        let y = self.twist.apply(x);
        Ok(log_mvn_density_factored(&y, &self.mu, &self.factor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn untwisted_is_identical_to_surrogate() {
        let t = BananaTarget::new(
            vec![0.0; 4],
            SpdMatrix::from_diagonal(&[10.0, 1.0, 1.0, 1.0]),
            1.0,
            0.0,
            5.0,
        )
        .unwrap();
        for x in [
            [0.1, -2.0, 0.3, 1.0],
            [3.0, 1.0, -1.0, 0.0],
            [-7.0, 0.5, 2.0, -2.0],
        ] {
            assert_eq!(
                t.log_pi(&x).unwrap().to_bits(),
                t.log_pi_star(&x).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn reference_configuration() {
        let t = BananaTarget::paper();
        assert_eq!(t.twist(), Twist { a: 1.0, b: 0.05 });
        assert_eq!(
            t.covariance().matrix().diagonal(),
            vec![10.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]
        );
        // x2 has mean -b(E y1² + 1) = -0.55 and variance 1 + b²·2·100 = 1.5
        let lo = t.support().lower()[1];
        let hi = t.support().upper()[1];
        assert!(((lo + hi) / 2.0 + 0.55).abs() < 1e-12);
        assert!(((hi - lo) / 10.0 - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn center_point_is_inside_every_region() {
        let t = BananaTarget::paper();
        let x = t.twist().inverse(t.mean());
        assert!(t.twisted_distance_squared(&x) < 1e-20);
        for p in [0.01, 0.5, 0.683, 0.99] {
            assert!(t.region_indicator(&x, p));
        }
    }

    #[test]
    fn chi_squared_quantile_reference() {
        // χ²_2 quantile has closed form -2 ln(1-p)
        assert!((chi_squared_quantile(2, 0.683) + 2.0 * (0.317f64).ln()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn twist_round_trip(x in prop::collection::vec(-10.0f64..10.0, 3..6), a in 0.5f64..2.0, b in -0.1f64..0.1) {
            let tw = Twist { a, b };
            let back = tw.inverse(&tw.apply(&x));
            for (u, v) in back.iter().zip(&x) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }

        #[test]
        fn regions_are_nested(x in prop::collection::vec(-6.0f64..6.0, 8), p in 0.05f64..0.9, dp in 0.0f64..0.09) {
            let t = BananaTarget::paper();
            if t.region_indicator(&x, p) {
                prop_assert!(t.region_indicator(&x, p + dp));
            }
        }
    }
}
