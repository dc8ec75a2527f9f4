//! Two-level targets: an expensive log density `log π` paired with a cheap
//! surrogate `log π*`, both restricted to a bounded support box.

mod banana;
mod logistic;
mod lotka_volterra;
mod shifted_t;

pub use banana::{BananaTarget, Twist};
pub use logistic::{DesignMatrix, LogisticTarget};
pub use lotka_volterra::{LotkaVolterraTarget, LvPriors, ObservationSet, LV_PARAM_NAMES};
pub use shifted_t::ShiftedTTarget;

use rand::Rng;

use crate::error::{EvalError, TargetError};

/// Axis-aligned box `lower <= x <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SupportBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, TargetError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(TargetError::DataShape(format!(
                "support bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(TargetError::InvalidParameter {
                    name: "support",
                    reason: format!("coordinate {i}: need finite lower < upper, got [{l}, {u}]"),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `center ± half_width` per coordinate.
    pub fn centered(center: &[f64], half_width: &[f64]) -> Result<Self, TargetError> {
        Self::new(
            center.iter().zip(half_width).map(|(c, h)| c - h).collect(),
            center.iter().zip(half_width).map(|(c, h)| c + h).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Squared Euclidean length of the box diagonal.
    pub fn diameter_squared(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }
}

/// A target density with a cheap surrogate, both known up to additive constants.
///
/// Both densities must return `-inf` outside [`support`](Self::support).
/// Implementations are immutable and shared between concurrently running chains.
pub trait TwoLevelTarget: Sync {
    fn dim(&self) -> usize;

    fn support(&self) -> &SupportBox;

    /// Cheap surrogate `log π*`.
    fn log_pi_star(&self, x: &[f64]) -> Result<f64, EvalError>;

    /// Expensive target `log π`.
    fn log_pi(&self, x: &[f64]) -> Result<f64, EvalError>;

    /// `log π*`, leaving in `scratch` partial results that
    /// [`log_pi_refined`](Self::log_pi_refined) may reuse at the same `x`.
    fn log_pi_star_partial(&self, x: &[f64], scratch: &mut Vec<f64>) -> Result<f64, EvalError> {
        scratch.clear();
        self.log_pi_star(x)
    }

    /// `log π` at the point last passed to
    /// [`log_pi_star_partial`](Self::log_pi_star_partial). Must equal
    /// [`log_pi`](Self::log_pi) bit for bit.
    fn log_pi_refined(&self, x: &[f64], _scratch: &[f64]) -> Result<f64, EvalError> {
        self.log_pi(x)
    }
}

impl<T: TwoLevelTarget + ?Sized> TwoLevelTarget for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn support(&self) -> &SupportBox {
        (**self).support()
    }
    fn log_pi_star(&self, x: &[f64]) -> Result<f64, EvalError> {
        (**self).log_pi_star(x)
    }
    fn log_pi(&self, x: &[f64]) -> Result<f64, EvalError> {
        (**self).log_pi(x)
    }
    fn log_pi_star_partial(&self, x: &[f64], scratch: &mut Vec<f64>) -> Result<f64, EvalError> {
        (**self).log_pi_star_partial(x, scratch)
    }
    fn log_pi_refined(&self, x: &[f64], scratch: &[f64]) -> Result<f64, EvalError> {
        (**self).log_pi_refined(x, scratch)
    }
}

/// Uses the expensive density as its own surrogate, so `log π* ≡ log π`.
#[derive(Clone, Debug)]
pub struct ExactSurrogate<T>(pub T);

impl<T: TwoLevelTarget> TwoLevelTarget for ExactSurrogate<T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn support(&self) -> &SupportBox {
        self.0.support()
    }
    fn log_pi_star(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.0.log_pi(x)
    }
    fn log_pi(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.0.log_pi(x)
    }
}

pub(crate) fn check_dim(x: &[f64], d: usize) -> Result<(), EvalError> {
    if x.len() == d {
        Ok(())
    } else {
        Err(EvalError::Dimension {
            expected: d,
            found: x.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_basics() {
        let b = SupportBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert!(b.contains(&[0.0, 1.0]));
        assert!(b.contains(&[1.0, 2.0]));
        assert!(!b.contains(&[1.5, 1.0]));
        assert!(!b.contains(&[0.0]));
        assert_eq!(b.diameter_squared(), 8.0);
        assert!(SupportBox::new(vec![1.0], vec![1.0]).is_err());
        assert!(SupportBox::new(vec![1.0], vec![0.0, 2.0]).is_err());
    }
}
