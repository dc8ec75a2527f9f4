use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_dim, SupportBox, TwoLevelTarget};
use crate::error::{EvalError, TargetError};
use crate::ode::{solve_lv_with, Integrator, LvParams, SolverGrid};

/// Parameter order used by [`LotkaVolterraTarget`].
pub const LV_PARAM_NAMES: [&str; 8] = [
    "alpha", "beta", "gamma", "delta", "sigma1", "sigma2", "y1_0", "y2_0",
];

/// Population counts of prey (species 1) and predator (species 2).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    pub times: Vec<f64>,
    pub counts: [Vec<f64>; 2],
}

impl ObservationSet {
    pub fn new(times: Vec<f64>, prey: Vec<f64>, predator: Vec<f64>) -> Result<Self, TargetError> {
        if times.is_empty() || times.len() != prey.len() || times.len() != predator.len() {
            return Err(TargetError::DataShape(format!(
                "{} times, {} prey and {} predator counts",
                times.len(),
                prey.len(),
                predator.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(TargetError::DataShape(
                "observation times must be strictly increasing".into(),
            ));
        }
        if prey
            .iter()
            .chain(&predator)
            .any(|c| !(*c > 0.0 && c.is_finite()))
        {
            return Err(TargetError::DataShape(
                "counts must be positive and finite".into(),
            ));
        }
        Ok(Self {
            times,
            counts: [prey, predator],
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Observation times measured from the first one.
    pub fn relative_times(&self) -> Vec<f64> {
        self.times.iter().map(|t| t - self.times[0]).collect()
    }

    /// Noisy observations `log z = log y + N(0, σ_j²)` of a solution on `grid`.
    pub fn synthetic(
        params: &LvParams,
        y0: [f64; 2],
        sigma: [f64; 2],
        grid: &SolverGrid,
        seed: u64,
    ) -> Result<Self, EvalError> {
        let traj = solve_lv_with(params, y0, grid, Integrator::Rk4)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = [
            Vec::with_capacity(traj.len()),
            Vec::with_capacity(traj.len()),
        ];
        for y in &traj {
            for j in 0..2 {
                let e: f64 = rng.sample(StandardNormal);
                counts[j].push(y[j] * (sigma[j] * e).exp());
            }
        }
        Ok(Self {
            times: grid.observation_times.clone(),
            counts,
        })
    }
}

/// Priors of the calibration problem. Rates are uniform on `(0, max)`; noise
/// scales and initial populations are log-normal, truncated to boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct LvPriors {
    pub alpha_max: f64,
    pub beta_max: f64,
    pub gamma_max: f64,
    pub delta_max: f64,
    /// (log-location, log-scale) of the noise standard deviations.
    pub sigma_lognormal: (f64, f64),
    pub sigma_bounds: (f64, f64),
    /// (log-location, log-scale) of the initial populations.
    pub y0_lognormal: (f64, f64),
    pub y0_bounds: (f64, f64),
}

impl Default for LvPriors {
    fn default() -> Self {
        let ln10 = 10f64.ln();
        Self {
            alpha_max: 0.1,
            beta_max: 0.01,
            gamma_max: 0.1,
            delta_max: 0.01,
            sigma_lognormal: (-1.0, 1.0),
            sigma_bounds: ((-5f64).exp(), 3f64.exp()),
            y0_lognormal: (ln10, 1.0),
            y0_bounds: ((ln10 - 4.0).exp(), (ln10 + 4.0).exp()),
        }
    }
}

impl LvPriors {
    pub fn support(&self) -> Result<SupportBox, TargetError> {
        let (sl, su) = self.sigma_bounds;
        let (yl, yu) = self.y0_bounds;
        SupportBox::new(
            vec![0.0, 0.0, 0.0, 0.0, sl, sl, yl, yl],
            vec![
                self.alpha_max,
                self.beta_max,
                self.gamma_max,
                self.delta_max,
                su,
                su,
                yu,
                yu,
            ],
        )
    }

    /// Log prior density inside the support (up to truncation normalization).
    fn log_density(&self, theta: &[f64]) -> f64 {
        let uniform =
            -(self.alpha_max.ln() + self.beta_max.ln() + self.gamma_max.ln() + self.delta_max.ln());
        let (ms, ss) = self.sigma_lognormal;
        let (my, sy) = self.y0_lognormal;
        uniform
            + log_lognormal(theta[4], ms, ss)
            + log_lognormal(theta[5], ms, ss)
            + log_lognormal(theta[6], my, sy)
            + log_lognormal(theta[7], my, sy)
    }
}

#[inline]
fn log_lognormal(x: f64, loc: f64, scale: f64) -> f64 {
    let lx = x.ln();
    -lx - scale.ln() - 0.5 * (2.0 * PI).ln() - (lx - loc).powi(2) / (2.0 * scale * scale)
}

/// Posterior of `θ = (α, β, γ, δ, σ1, σ2, y1⁰, y2⁰)` given log-normal
/// observations of a Lotka–Volterra trajectory. `log π` solves on the fine
/// grid, `log π*` on the coarse grid.
#[derive(Clone, Debug)]
pub struct LotkaVolterraTarget {
    data: ObservationSet,
    log_counts: [Vec<f64>; 2],
    sum_log_counts: [f64; 2],
    fine: SolverGrid,
    coarse: SolverGrid,
    integrator: Integrator,
    priors: LvPriors,
    support: SupportBox,
}

impl LotkaVolterraTarget {
    pub fn new(
        data: ObservationSet,
        fine: SolverGrid,
        coarse: SolverGrid,
        priors: LvPriors,
    ) -> Result<Self, TargetError> {
        Self::with_integrator(data, fine, coarse, priors, Integrator::Rk4)
    }

    pub fn with_integrator(
        data: ObservationSet,
        fine: SolverGrid,
        coarse: SolverGrid,
        priors: LvPriors,
        integrator: Integrator,
    ) -> Result<Self, TargetError> {
        let rel = data.relative_times();
        for (name, grid) in [("fine", &fine), ("coarse", &coarse)] {
            let same = grid.observation_times.len() == rel.len()
                && grid
                    .observation_times
                    .iter()
                    .zip(&rel)
                    .all(|(a, b)| (a - grid.t_start - b).abs() < 1e-9);
            if !same {
                return Err(TargetError::DataShape(format!(
                    "{name} grid observation times do not match the data"
                )));
            }
        }
        let log_counts = [
            data.counts[0].iter().map(|c| c.ln()).collect::<Vec<_>>(),
            data.counts[1].iter().map(|c| c.ln()).collect::<Vec<_>>(),
        ];
        let sum_log_counts = [log_counts[0].iter().sum(), log_counts[1].iter().sum()];
        let support = priors.support()?;
        Ok(Self {
            data,
            log_counts,
            sum_log_counts,
            fine,
            coarse,
            integrator,
            priors,
            support,
        })
    }

    pub fn data(&self) -> &ObservationSet {
        &self.data
    }

    pub fn priors(&self) -> &LvPriors {
        &self.priors
    }

    pub fn split(theta: &[f64]) -> (LvParams, [f64; 2], [f64; 2]) {
        (
            LvParams {
                alpha: theta[0],
                beta: theta[1],
                gamma: theta[2],
                delta: theta[3],
            },
            [theta[4], theta[5]],
            [theta[6], theta[7]],
        )
    }

    /// Log-likelihood of the data given a solution on `grid`.
    pub fn log_likelihood_on(&self, theta: &[f64], grid: &SolverGrid) -> Result<f64, EvalError> {
        let (params, sigma, y0) = Self::split(theta);
        let traj = solve_lv_with(&params, y0, grid, self.integrator)?;
        let n = self.data.len() as f64;
        let mut total = 0.0;
        for j in 0..2 {
            let s = sigma[j];
            let ss: f64 = traj
                .iter()
                .zip(&self.log_counts[j])
                .map(|(y, lz)| (lz - y[j].ln()).powi(2))
                .sum();
            total +=
                -self.sum_log_counts[j] - n * (s.ln() + 0.5 * (2.0 * PI).ln()) - ss / (2.0 * s * s);
        }
        Ok(total)
    }

    fn log_posterior(&self, theta: &[f64], grid: &SolverGrid) -> Result<f64, EvalError> {
        check_dim(theta, 8)?;
        if !self.support.contains(theta) || theta[..4].iter().any(|&v| v <= 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_likelihood_on(theta, grid)? + self.priors.log_density(theta))
    }
}

impl TwoLevelTarget for LotkaVolterraTarget {
    fn dim(&self) -> usize {
        8
    }

    fn support(&self) -> &SupportBox {
        &self.support
    }

    fn log_pi_star(&self, theta: &[f64]) -> Result<f64, EvalError> {
        self.log_posterior(theta, &self.coarse)
    }

    fn log_pi(&self, theta: &[f64]) -> Result<f64, EvalError> {
        self.log_posterior(theta, &self.fine)
    }
}
