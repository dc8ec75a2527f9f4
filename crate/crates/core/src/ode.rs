//! Fixed-step integration of the Lotka–Volterra predator–prey system
//!
//! ```text
//! dy1/dt = α y1 − β y1 y2
//! dy2/dt = −γ y2 + δ y1 y2
//! ```

use crate::error::EvalError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvParams {
    /// Prey growth rate [1/year].
    pub alpha: f64,
    /// Predation rate [1/(year·count)].
    pub beta: f64,
    /// Predator decline rate [1/year].
    pub gamma: f64,
    /// Predator growth per prey [1/(year·count)].
    pub delta: f64,
}

impl LvParams {
    #[inline]
    pub fn rhs(&self, y: [f64; 2]) -> [f64; 2] {
        let [y1, y2] = y;
        [
            self.alpha * y1 - self.beta * y1 * y2,
            -self.gamma * y2 + self.delta * y1 * y2,
        ]
    }

    /// Equilibrium `(γ/δ, α/β)`.
    pub fn equilibrium(&self) -> [f64; 2] {
        [self.gamma / self.delta, self.alpha / self.beta]
    }

    /// `δ y1 − γ ln y1 + β y2 − α ln y2`, constant along exact trajectories.
    pub fn conserved_quantity(&self, y: [f64; 2]) -> f64 {
        self.delta * y[0] - self.gamma * y[0].ln() + self.beta * y[1] - self.alpha * y[1].ln()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

/// Uniform time grid with observation times that fall on grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub observation_times: Vec<f64>,
    /// Grid index of each observation time.
    observation_steps: Vec<usize>,
    n_steps: usize,
}

impl SolverGrid {
    /// `steps_per_unit` grid points per unit time on `[t_start, t_end]`.
    pub fn new(
        t_start: f64,
        t_end: f64,
        steps_per_unit: usize,
        observation_times: Vec<f64>,
    ) -> Result<Self, String> {
        if !(t_end > t_start) {
            return Err(format!("need t_end > t_start, got [{t_start}, {t_end}]"));
        }
        if steps_per_unit == 0 {
            return Err("steps per unit time must be positive".into());
        }
        let step = 1.0 / steps_per_unit as f64;
        let n_steps = ((t_end - t_start) * steps_per_unit as f64).round() as usize;
        if ((n_steps as f64) * step - (t_end - t_start)).abs() > 1e-9 {
            return Err(format!(
                "interval [{t_start}, {t_end}] is not a whole number of steps"
            ));
        }
        let mut observation_steps = Vec::with_capacity(observation_times.len());
        let mut last = None;
        for &t in &observation_times {
            let k = ((t - t_start) * steps_per_unit as f64).round();
            if k < 0.0 || k as usize > n_steps || ((k * step + t_start) - t).abs() > 1e-9 {
                return Err(format!("observation time {t} is not on the grid"));
            }
            let k = k as usize;
            if last.is_some_and(|l| k <= l) {
                return Err("observation times must be strictly increasing".into());
            }
            last = Some(k);
            observation_steps.push(k);
        }
        Ok(Self {
            t_start,
            t_end,
            step,
            observation_times,
            observation_steps,
            n_steps,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
}

/// Daily (1/365 year) and monthly (1/12 year) grids over `n_years` with
/// annual observations at `0, 1, …, n_years`.
pub fn standard_grids(n_years: usize) -> (SolverGrid, SolverGrid) {
    let obs: Vec<f64> = (0..=n_years).map(|y| y as f64).collect();
    let fine =
        SolverGrid::new(0.0, n_years as f64, 365, obs.clone()).expect("daily grid is aligned");
    let coarse = SolverGrid::new(0.0, n_years as f64, 12, obs).expect("monthly grid is aligned");
    (fine, coarse)
}

/// Populations at each observation time.
pub type Trajectory = Vec<[f64; 2]>;

pub fn solve_lv(
    params: &LvParams,
    y0: [f64; 2],
    grid: &SolverGrid,
) -> Result<Trajectory, EvalError> {
    solve_lv_with(params, y0, grid, Integrator::Rk4)
}

/// Integrates from `t_start`; fails as soon as a state is nonpositive or nonfinite.
pub fn solve_lv_with(
    params: &LvParams,
    y0: [f64; 2],
    grid: &SolverGrid,
    integrator: Integrator,
) -> Result<Trajectory, EvalError> {
    if !(y0[0] > 0.0 && y0[1] > 0.0 && y0[0].is_finite() && y0[1].is_finite()) {
        return Err(EvalError::SolverFailure {
            time: grid.t_start,
            reason: "initial state is not positive",
        });
    }
    let h = grid.step;
    let mut y = y0;
    let mut out = Vec::with_capacity(grid.observation_steps.len());
    let mut next_obs = grid.observation_steps.iter().peekable();
    let last = grid.observation_steps.last().copied().unwrap_or(0);
    for k in 0..=last {
        if next_obs.peek() == Some(&&k) {
            out.push(y);
            next_obs.next();
        }
        if k == last {
            break;
        }
        y = match integrator {
            Integrator::Rk4 => rk4_step(params, y, h),
            Integrator::Euler => euler_step(params, y, h),
        };
        if !(y[0] > 0.0 && y[1] > 0.0 && y[0].is_finite() && y[1].is_finite()) {
            return Err(EvalError::SolverFailure {
                time: grid.t_start + (k + 1) as f64 * h,
                reason: "state became nonpositive or nonfinite",
            });
        }
    }
    Ok(out)
}

#[inline]
fn rk4_step(p: &LvParams, y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = p.rhs(y);
    let k2 = p.rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = p.rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = p.rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[inline]
fn euler_step(p: &LvParams, y: [f64; 2], h: f64) -> [f64; 2] {
    let f = p.rhs(y);
    [y[0] + h * f[0], y[1] + h * f[1]]
}
