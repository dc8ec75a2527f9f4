//! JSON experiment configuration.
//!
//! Parsing fills every field that has a fixed default. Fields whose default
//! depends on the target (dimension, support box) stay `None` until
//! [`ExperimentConfig::resolve`] fills them; the effective configuration
//! written next to the outputs has every field set, so reloading it is a
//! fixed point.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::Projection;
use crate::ode::Integrator;
use crate::samplers::KernelKind;
use crate::targets::SupportBox;

use super::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    ShiftedT {
        /// Defaults to `(0, 1, …, d-1)`.
        #[serde(default)]
        mu: Option<Vec<f64>>,
        #[serde(default = "t_variances")]
        variances: Vec<f64>,
        #[serde(default = "t_rho")]
        rho: f64,
        #[serde(default = "t_nu")]
        nu: f64,
        #[serde(default = "five")]
        truncation_sd: f64,
    },
    Banana {
        /// Defaults to the origin.
        #[serde(default)]
        mu: Option<Vec<f64>>,
        #[serde(default = "banana_variances")]
        variances: Vec<f64>,
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "banana_b")]
        b: f64,
        #[serde(default = "five")]
        truncation_sd: f64,
    },
    Logistic {
        data: LogisticData,
        #[serde(default = "logistic_n0")]
        subsample_size: usize,
        #[serde(default)]
        subsample_seed: u64,
        #[serde(default = "logistic_prior_variance")]
        prior_variance: f64,
        #[serde(default = "logistic_bound")]
        bound: f64,
    },
    LotkaVolterra {
        data: LvData,
        #[serde(default = "daily")]
        fine_steps_per_year: usize,
        #[serde(default = "monthly")]
        coarse_steps_per_year: usize,
        #[serde(default)]
        integrator: Integrator,
        /// Upper ends of the uniform priors on `(α, β, γ, δ)`.
        #[serde(default = "lv_rate_max")]
        rate_max: Vec<f64>,
    },
}

fn t_variances() -> Vec<f64> {
    vec![1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 4.0, 6.0]
}
fn t_rho() -> f64 {
    0.4
}
fn t_nu() -> f64 {
    10.0
}
fn five() -> f64 {
    5.0
}
fn one() -> f64 {
    1.0
}
fn banana_variances() -> Vec<f64> {
    let mut v = vec![1.0; 8];
    v[0] = 10.0;
    v
}
fn banana_b() -> f64 {
    0.05
}
fn logistic_n0() -> usize {
    10_000
}
fn logistic_prior_variance() -> f64 {
    100.0
}
fn logistic_bound() -> f64 {
    20.0
}
fn lv_rate_max() -> Vec<f64> {
    vec![0.1, 0.01, 0.1, 0.01]
}
fn daily() -> usize {
    365
}
fn monthly() -> usize {
    12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum LogisticData {
    Csv {
        path: PathBuf,
        response: String,
        #[serde(default)]
        categorical: Vec<String>,
        #[serde(default)]
        numeric: Vec<String>,
    },
    Synthetic {
        #[serde(default = "bank_rows")]
        n_rows: usize,
        #[serde(default = "bank_zero_fraction")]
        zero_fraction: f64,
        /// Defaults to [`super::datasets::DEFAULT_BETA`].
        #[serde(default)]
        beta_true: Option<Vec<f64>>,
        #[serde(default)]
        seed: u64,
    },
}

fn bank_rows() -> usize {
    41_188
}
fn bank_zero_fraction() -> f64 {
    0.887
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum LvData {
    Csv {
        path: PathBuf,
    },
    Synthetic {
        #[serde(default = "lv_theta")]
        theta: Vec<f64>,
        #[serde(default = "twenty")]
        n_years: usize,
        #[serde(default)]
        seed: u64,
    },
}

/// `(α, β, γ, δ, σ1, σ2, y1⁰, y2⁰)` used to simulate data by default.
pub fn lv_theta() -> Vec<f64> {
    vec![0.08, 0.004, 0.09, 0.005, 0.15, 0.15, 30.0, 8.0]
}
fn twenty() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default = "tsam")]
    pub kernel: KernelKind,
    /// Signed so that negative values are reported as validation errors.
    pub n_iters: i64,
    #[serde(default = "half")]
    pub burn_in_fraction: f64,
    #[serde(default = "one_i")]
    pub thinning: i64,
    #[serde(default)]
    pub adaptation: AdaptationSpec,
    #[serde(default)]
    pub initial: InitialSpec,
}

fn tsam() -> KernelKind {
    KernelKind::Tsam
}
fn half() -> f64 {
    0.5
}
fn one_i() -> i64 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptationSpec {
    /// Defaults to `2.4²/d`.
    pub s_d: Option<f64>,
    /// Defaults to 100.
    pub t0: Option<i64>,
    /// Defaults to `1e-6` times the squared support diameter.
    pub epsilon: Option<f64>,
    /// Factor refresh period; defaults to 1.
    pub k: Option<i64>,
    /// Defaults to `s_d·I`.
    pub c0: Option<C0Spec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum C0Spec {
    /// `c·s_d·I`.
    Scaled {
        c: f64,
    },
    Diagonal {
        diag: Vec<f64>,
    },
    Full {
        rows: Vec<Vec<f64>>,
    },
    /// `c·s_d` times the Laplace covariance; logistic targets only.
    Laplace {
        c: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Uniform,
    Point {
        x: Vec<f64>,
    },
    /// Posterior mode; logistic targets only.
    LaplaceMode,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    #[default]
    SingleRun,
    McEstimate {
        #[serde(default)]
        function: FunctionSpec,
        replicates: i64,
        n_list: Vec<i64>,
    },
    Coverage {
        #[serde(default = "coverage_p")]
        p: f64,
        replicates: i64,
        n_list: Vec<i64>,
    },
    EdpmCompare {
        #[serde(default = "tsam")]
        kernel_a: KernelKind,
        #[serde(default = "am")]
        kernel_b: KernelKind,
        #[serde(default = "log_posterior")]
        projections: Vec<Projection>,
        /// Thinning levels applied to the retained chains before computing ESS.
        #[serde(default = "thinning_levels")]
        thinning: Vec<i64>,
    },
}

fn coverage_p() -> f64 {
    0.683
}
fn am() -> KernelKind {
    KernelKind::Am
}
fn log_posterior() -> Vec<Projection> {
    vec![Projection::LogPosterior]
}
fn thinning_levels() -> Vec<i64> {
    vec![1, 10, 20]
}

/// Bounded test function averaged by the Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `scale·exp(-rate·Σx_i)`.
    ExpSum {
        scale: f64,
        rate: f64,
    },
    Constant {
        value: f64,
    },
    Coordinate {
        index: usize,
    },
}

impl Default for FunctionSpec {
    fn default() -> Self {
        Self::ExpSum {
            scale: 10.0,
            rate: 0.1,
        }
    }
}

impl FunctionSpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Self::ExpSum { scale, rate } => scale * (-rate * x.iter().sum::<f64>()).exp(),
            Self::Constant { value } => value,
            Self::Coordinate { index } => x[index],
        }
    }
}

fn finite_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks everything that does not need the constructed target.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut v = Vec::new();
        self.target.collect_violations(&mut v);
        self.sampler.collect_violations(&mut v);
        match &self.experiment {
            ExperimentSpec::SingleRun => {}
            ExperimentSpec::McEstimate {
                function,
                replicates,
                n_list,
            } => {
                check_replicates(*replicates, n_list, &mut v);
                match *function {
                    FunctionSpec::ExpSum { scale, rate }
                        if !(scale.is_finite() && rate.is_finite()) =>
                    {
                        v.push("experiment.function: scale and rate must be finite".into())
                    }
                    FunctionSpec::Constant { value } if !value.is_finite() => {
                        v.push("experiment.function.value must be finite".into())
                    }
                    _ => {}
                }
            }
            ExperimentSpec::Coverage {
                p,
                replicates,
                n_list,
            } => {
                check_replicates(*replicates, n_list, &mut v);
                if !(*p > 0.0 && *p < 1.0) {
                    v.push(format!("experiment.p must lie in (0, 1), got {p}"));
                }
                if !matches!(self.target, TargetSpec::Banana { .. }) {
                    v.push("coverage experiments need a banana target".into());
                }
            }
            ExperimentSpec::EdpmCompare {
                projections,
                thinning,
                ..
            } => {
                if projections.is_empty() {
                    v.push("experiment.projections must not be empty".into());
                }
                if thinning.is_empty() || thinning.iter().any(|&k| k < 1) {
                    v.push("experiment.thinning levels must be at least 1".into());
                }
            }
        }
        let logistic = matches!(self.target, TargetSpec::Logistic { .. });
        if !logistic && matches!(self.sampler.initial, InitialSpec::LaplaceMode) {
            v.push("sampler.initial laplace_mode needs a logistic target".into());
        }
        if !logistic && matches!(self.sampler.adaptation.c0, Some(C0Spec::Laplace { .. })) {
            v.push("sampler.adaptation.c0 laplace needs a logistic target".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(v))
        }
    }

    /// Fills target-dependent defaults. Idempotent.
    pub fn resolve(&mut self, dim: usize, support: &SupportBox) {
        match &mut self.target {
            TargetSpec::ShiftedT { mu, variances, .. } => {
                mu.get_or_insert_with(|| (0..variances.len()).map(|i| i as f64).collect());
            }
            TargetSpec::Banana { mu, variances, .. } => {
                mu.get_or_insert_with(|| vec![0.0; variances.len()]);
            }
            TargetSpec::Logistic { data, .. } => {
                if let LogisticData::Synthetic { beta_true, .. } = data {
                    beta_true.get_or_insert_with(|| super::datasets::DEFAULT_BETA.to_vec());
                }
            }
            TargetSpec::LotkaVolterra { .. } => {}
        }
        let a = &mut self.sampler.adaptation;
        a.s_d.get_or_insert(crate::adaptation::default_scale(dim));
        a.t0.get_or_insert(100);
        a.epsilon.get_or_insert(1e-6 * support.diameter_squared());
        a.k.get_or_insert(1);
        a.c0.get_or_insert(C0Spec::Scaled { c: 1.0 });
    }
}

fn check_replicates(m: i64, n_list: &[i64], v: &mut Vec<String>) {
    if m < 2 {
        v.push(format!("experiment.replicates must be at least 2, got {m}"));
    }
    if n_list.is_empty() || n_list.iter().any(|&n| n < 1) {
        v.push("experiment.n_list must be a nonempty list of positive lengths".into());
    }
}

impl TargetSpec {
    fn collect_violations(&self, v: &mut Vec<String>) {
        match self {
            TargetSpec::ShiftedT {
                mu,
                variances,
                rho,
                nu,
                truncation_sd,
            } => {
                check_gaussian_shape(mu.as_deref(), variances, truncation_sd, v);
                if !(rho.abs() < 1.0) {
                    v.push(format!("target.rho must lie in (-1, 1), got {rho}"));
                }
                if !(*nu > 2.0 && nu.is_finite()) {
                    v.push(format!(
                        "target.nu must exceed 2 (finite variance), got {nu}"
                    ));
                }
            }
            TargetSpec::Banana {
                mu,
                variances,
                a,
                b,
                truncation_sd,
            } => {
                check_gaussian_shape(mu.as_deref(), variances, truncation_sd, v);
                if variances.len() < 2 {
                    v.push("banana targets need dimension at least 2".into());
                }
                if !(a.is_finite() && *a != 0.0) {
                    v.push(format!("target.a must be finite and nonzero, got {a}"));
                }
                if !b.is_finite() {
                    v.push(format!("target.b must be finite, got {b}"));
                }
            }
            TargetSpec::Logistic {
                data,
                subsample_size,
                prior_variance,
                bound,
                ..
            } => {
                if *subsample_size == 0 {
                    v.push("target.subsample_size must be positive".into());
                }
                if !finite_positive(*prior_variance) {
                    v.push(format!(
                        "target.prior_variance must be positive, got {prior_variance}"
                    ));
                }
                if !finite_positive(*bound) {
                    v.push(format!("target.bound must be positive, got {bound}"));
                }
                match data {
                    LogisticData::Csv {
                        response,
                        categorical,
                        numeric,
                        ..
                    } => {
                        if categorical.iter().chain(numeric).any(|c| c == response) {
                            v.push(format!(
                                "response column `{response}` is also listed as a predictor"
                            ));
                        }
                    }
                    LogisticData::Synthetic {
                        n_rows,
                        zero_fraction,
                        beta_true,
                        ..
                    } => {
                        if *n_rows < 2 {
                            v.push("target.data.n_rows must be at least 2".into());
                        }
                        if !(*zero_fraction > 0.0 && *zero_fraction < 1.0) {
                            v.push(format!(
                                "target.data.zero_fraction must lie in (0, 1), got {zero_fraction}"
                            ));
                        }
                        if let Some(b) = beta_true {
                            if b.len() != super::datasets::SYNTHETIC_COLUMNS {
                                v.push(format!(
                                    "target.data.beta_true needs {} entries, got {}",
                                    super::datasets::SYNTHETIC_COLUMNS,
                                    b.len()
                                ));
                            }
                            if b.iter().any(|x| !x.is_finite()) {
                                v.push("target.data.beta_true must be finite".into());
                            }
                        }
                    }
                }
            }
            TargetSpec::LotkaVolterra {
                data,
                fine_steps_per_year,
                coarse_steps_per_year,
                rate_max,
                ..
            } => {
                if *fine_steps_per_year == 0 || *coarse_steps_per_year == 0 {
                    v.push("target grid resolutions must be positive".into());
                }
                if rate_max.len() != 4 || rate_max.iter().any(|r| !finite_positive(*r)) {
                    v.push("target.rate_max needs 4 positive entries".into());
                }
                if let LvData::Synthetic { theta, n_years, .. } = data {
                    if theta.len() != 8 {
                        v.push(format!(
                            "target.data.theta needs 8 entries, got {}",
                            theta.len()
                        ));
                    } else if theta.iter().any(|t| !finite_positive(*t)) {
                        v.push("target.data.theta entries must be positive".into());
                    }
                    if *n_years == 0 {
                        v.push("target.data.n_years must be positive".into());
                    }
                }
            }
        }
    }
}

fn check_gaussian_shape(
    mu: Option<&[f64]>,
    variances: &[f64],
    truncation_sd: &f64,
    v: &mut Vec<String>,
) {
    if variances.is_empty() {
        v.push("target.variances must not be empty".into());
    }
    if variances.iter().any(|s| !finite_positive(*s)) {
        v.push("target.variances must be positive".into());
    }
    if let Some(mu) = mu {
        if mu.len() != variances.len() {
            v.push(format!(
                "target.mu has {} entries but target.variances has {}",
                mu.len(),
                variances.len()
            ));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            v.push("target.mu must be finite".into());
        }
    }
    if !finite_positive(*truncation_sd) {
        v.push(format!(
            "target.truncation_sd must be positive, got {truncation_sd}"
        ));
    }
}

impl SamplerSpec {
    fn collect_violations(&self, v: &mut Vec<String>) {
        if self.n_iters <= 0 {
            v.push(format!(
                "sampler.n_iters must be positive, got {}",
                self.n_iters
            ));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            v.push(format!(
                "sampler.burn_in_fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            ));
        }
        if self.thinning < 1 {
            v.push(format!(
                "sampler.thinning must be at least 1, got {}",
                self.thinning
            ));
        }
        let a = &self.adaptation;
        if let Some(s) = a.s_d {
            if !finite_positive(s) {
                v.push(format!("sampler.adaptation.s_d must be positive, got {s}"));
            }
        }
        if let Some(t0) = a.t0 {
            if t0 < 1 {
                v.push(format!("sampler.adaptation.t0 must be positive, got {t0}"));
            }
        }
        if let Some(e) = a.epsilon {
            if !finite_positive(e) {
                v.push(format!(
                    "sampler.adaptation.epsilon must be positive, got {e}"
                ));
            }
        }
        if let Some(k) = a.k {
            if k < 1 {
                v.push(format!("sampler.adaptation.k must be positive, got {k}"));
            }
        }
        match &a.c0 {
            Some(C0Spec::Scaled { c }) | Some(C0Spec::Laplace { c }) if !finite_positive(*c) => {
                v.push(format!("sampler.adaptation.c0.c must be positive, got {c}"))
            }
            Some(C0Spec::Diagonal { diag }) if diag.iter().any(|d| !finite_positive(*d)) => {
                v.push("sampler.adaptation.c0.diag must be positive".into())
            }
            _ => {}
        }
        if let InitialSpec::Point { x } = &self.initial {
            if x.iter().any(|c| !c.is_finite()) {
                v.push("sampler.initial.x must be finite".into());
            }
        }
    }
}
