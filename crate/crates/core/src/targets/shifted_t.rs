use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::{check_dim, SupportBox, TwoLevelTarget};
use crate::error::{EvalError, TargetError};
use crate::linalg::{cholesky, log_mvn_density_factored, CholeskyFactor, Matrix, SpdMatrix};

/// Multivariate shifted t with location `mu`, shape `sigma` and `nu` degrees
/// of freedom, truncated to `mu ± k·sd` per coordinate. The surrogate is the
/// Gaussian `N(mu, sigma)`.
#[derive(Clone, Debug)]
pub struct ShiftedTTarget {
    mu: Vec<f64>,
    sigma: SpdMatrix,
    factor: CholeskyFactor,
    nu: f64,
    log_norm: f64,
    support: SupportBox,
}

impl ShiftedTTarget {
    pub fn new(
        mu: Vec<f64>,
        sigma: SpdMatrix,
        nu: f64,
        truncation_sd: f64,
    ) -> Result<Self, TargetError> {
        let d = mu.len();
        if sigma.dim() != d {
            return Err(TargetError::DataShape(format!(
                "location has length {d} but shape matrix is {0}x{0}",
                sigma.dim()
            )));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(TargetError::InvalidParameter {
                name: "nu",
                reason: format!("must be positive, got {nu}"),
            });
        }
        if !(truncation_sd > 0.0) {
            return Err(TargetError::InvalidParameter {
                name: "truncation_sd",
                reason: format!("must be positive, got {truncation_sd}"),
            });
        }
        let factor = cholesky(&sigma)?;
        let df = d as f64;
        let log_norm = ln_gamma((nu + df) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * df * (nu * PI).ln()
            - 0.5 * factor.log_det();
        // Marginal sd is sqrt(Σ_ii ν/(ν-2)); for ν <= 2 fall back to the scale.
        let var_factor = if nu > 2.0 { nu / (nu - 2.0) } else { 1.0 };
        let half: Vec<f64> = sigma
            .matrix()
            .diagonal()
            .iter()
            .map(|s| truncation_sd * (s * var_factor).sqrt())
            .collect();
        let support = SupportBox::centered(&mu, &half)?;
        Ok(Self {
            mu,
            sigma,
            factor,
            nu,
            log_norm,
            support,
        })
    }

    /// d = 8, ν = 10, μ = (0..7), Σ_ij = σ_iσ_jρ^|i-j| with
    /// σ² = (1,1,1,1,1,2,4,6) and ρ = 0.4, truncated at 5 sd.
    pub fn paper() -> Self {
        let mu: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let sigma = Self::banded_shape(&[1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 4.0, 6.0], 0.4);
        Self::new(mu, sigma, 10.0, 5.0).expect("reference configuration is valid")
    }

    /// `Σ_ij = σ_i σ_j ρ^|i-j|` from variances `σ²`.
    pub fn banded_shape(variances: &[f64], rho: f64) -> SpdMatrix {
        let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
        let m = Matrix::from_fn(sd.len(), |i, j| {
            sd[i] * sd[j] * rho.powi((i as i32 - j as i32).abs())
        });
        SpdMatrix::new(m).expect("banded shape is symmetric")
    }

    pub fn location(&self) -> &[f64] {
        &self.mu
    }

    pub fn shape(&self) -> &SpdMatrix {
        &self.sigma
    }

    pub fn shape_factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Covariance of the untruncated distribution, `Σ ν/(ν-2)` (requires ν > 2).
    pub fn covariance(&self) -> Matrix {
        self.sigma.matrix().scaled(self.nu / (self.nu - 2.0))
    }

    /// Untruncated t log density.
    pub fn log_density_untruncated(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        let q = self.factor.quad_form_inv(&diff);
        let d = self.mu.len() as f64;
        self.log_norm - 0.5 * (self.nu + d) * (q / self.nu).ln_1p()
    }
}

impl TwoLevelTarget for ShiftedTTarget {
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
        Ok(self.log_density_untruncated(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configuration() {
        let t = ShiftedTTarget::paper();
        assert_eq!(t.dim(), 8);
        assert_eq!(t.location(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let s = t.shape().matrix();
        assert!((s[(5, 5)] - 2.0).abs() < 1e-14);
        assert!((s[(6, 7)] - (4.0f64 * 6.0).sqrt() * 0.4).abs() < 1e-14);
        assert!((s[(0, 2)] - 0.16).abs() < 1e-14);
        // 5 marginal sds of the t: sqrt(6 * 10/8) * 5 around 7
        let half = 5.0 * (6.0f64 * 1.25).sqrt();
        assert!((t.support().upper()[7] - (7.0 + half)).abs() < 1e-12);
    }

    #[test]
    fn elliptical_symmetry() {
        let t = ShiftedTTarget::paper();
        let v = [0.5, -0.3, 1.0, 0.2, -1.1, 0.7, 2.0, -1.5];
        let p: Vec<f64> = t.location().iter().zip(&v).map(|(m, d)| m + d).collect();
        let m: Vec<f64> = t.location().iter().zip(&v).map(|(m, d)| m - d).collect();
        assert!((t.log_pi(&p).unwrap() - t.log_pi(&m).unwrap()).abs() < 1e-12);
        assert!((t.log_pi_star(&p).unwrap() - t.log_pi_star(&m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn univariate_reference_value() {
        // Student-t(10) density at 0: Γ(5.5) / (Γ(5) sqrt(10π)).
        let t = ShiftedTTarget::new(vec![0.0], SpdMatrix::identity(1), 10.0, 5.0).unwrap();
        let gamma_5_5 = 52.342_777_784_553_52_f64; // 4.5·3.5·2.5·1.5·0.5·sqrt(π)
        let expected = (gamma_5_5 / (24.0 * (10.0 * PI).sqrt())).ln();
        assert!((t.log_pi(&[0.0]).unwrap() - expected).abs() < 1e-12);
        // and against statrs' univariate t
        use statrs::distribution::{Continuous, StudentsT};
        let st = StudentsT::new(0.0, 1.0, 10.0).unwrap();
        assert!((t.log_pi(&[1.3]).unwrap() - st.ln_pdf(1.3)).abs() < 1e-12);
    }

    #[test]
    fn outside_box_is_neg_infinity() {
        let t = ShiftedTTarget::paper();
        let mut x = t.location().to_vec();
        x[0] = 100.0;
        assert_eq!(t.log_pi(&x).unwrap(), f64::NEG_INFINITY);
        assert_eq!(t.log_pi_star(&x).unwrap(), f64::NEG_INFINITY);
        assert!(t.log_pi(&[0.0; 3]).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ShiftedTTarget::new(vec![0.0], SpdMatrix::identity(1), 0.0, 5.0).is_err());
        assert!(ShiftedTTarget::new(vec![0.0, 1.0], SpdMatrix::identity(1), 3.0, 5.0).is_err());
    }
}
