//! Configuration-driven experiment runner behind the `tsam` binary.
//!
//! A run parses and validates a JSON [`ExperimentConfig`], builds the target,
//! fills target-dependent defaults, writes `effective_config.json` and then
//! the experiment outputs into the output directory.

pub mod config;
pub mod datasets;
pub mod output;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::adaptation::AdaptationConfig;
use crate::diagnostics::{coverage_experiment, edpm, mc_estimate_experiment};
use crate::error::EvalError;
use crate::linalg::{Matrix, SpdMatrix};
use crate::ode::SolverGrid;
use crate::samplers::{run_chain, KernelKind, SamplerConfig};
use crate::targets::{
    BananaTarget, LogisticTarget, LotkaVolterraTarget, LvPriors, ObservationSet, ShiftedTTarget,
    SupportBox, TwoLevelTarget,
};

pub use config::ExperimentConfig;
use config::{C0Spec, ExperimentSpec, InitialSpec, LogisticData, LvData, TargetSpec};
use datasets::DatasetError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("cannot load data: {0}")]
    Data(#[from] DatasetError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for problems with the inputs, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) | Self::Validation(_) | Self::Data(_) => 2,
            Self::Io { .. } | Self::Runtime(_) => 3,
        }
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Self::Validation(vec![msg.into()])
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("writing {}: {e}", path.display()))
}

/// Parses and validates a configuration file. Relative data paths are taken
/// relative to the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    anchor_paths(&mut cfg, base);
    cfg.validate()?;
    Ok(cfg)
}

fn anchor_paths(cfg: &mut ExperimentConfig, base: &Path) {
    let anchor = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    match &mut cfg.target {
        TargetSpec::Logistic {
            data: LogisticData::Csv { path, .. },
            ..
        } => anchor(path),
        TargetSpec::LotkaVolterra {
            data: LvData::Csv { path },
            ..
        } => anchor(path),
        _ => {}
    }
}

/// A constructed target of any supported kind.
#[derive(Clone, Debug)]
pub enum BuiltTarget {
    ShiftedT(ShiftedTTarget),
    Banana(BananaTarget),
    Logistic {
        target: LogisticTarget,
        /// Posterior mode and covariance, when the configuration asks for them.
        laplace: Option<(Vec<f64>, Matrix)>,
    },
    LotkaVolterra(LotkaVolterraTarget),
}

impl TwoLevelTarget for BuiltTarget {
    fn dim(&self) -> usize {
        match self {
            Self::ShiftedT(t) => t.dim(),
            Self::Banana(t) => t.dim(),
            Self::Logistic { target, .. } => target.dim(),
            Self::LotkaVolterra(t) => t.dim(),
        }
    }

    fn support(&self) -> &SupportBox {
        match self {
            Self::ShiftedT(t) => t.support(),
            Self::Banana(t) => t.support(),
            Self::Logistic { target, .. } => target.support(),
            Self::LotkaVolterra(t) => t.support(),
        }
    }

    fn log_pi_star(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self {
            Self::ShiftedT(t) => t.log_pi_star(x),
            Self::Banana(t) => t.log_pi_star(x),
            Self::Logistic { target, .. } => target.log_pi_star(x),
            Self::LotkaVolterra(t) => t.log_pi_star(x),
        }
    }

    fn log_pi(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self {
            Self::ShiftedT(t) => t.log_pi(x),
            Self::Banana(t) => t.log_pi(x),
            Self::Logistic { target, .. } => target.log_pi(x),
            Self::LotkaVolterra(t) => t.log_pi(x),
        }
    }

    fn log_pi_star_partial(&self, x: &[f64], scratch: &mut Vec<f64>) -> Result<f64, EvalError> {
        match self {
            Self::Logistic { target, .. } => target.log_pi_star_partial(x, scratch),
            _ => {
                scratch.clear();
                self.log_pi_star(x)
            }
        }
    }

    fn log_pi_refined(&self, x: &[f64], scratch: &[f64]) -> Result<f64, EvalError> {
        match self {
            Self::Logistic { target, .. } => target.log_pi_refined(x, scratch),
            _ => self.log_pi(x),
        }
    }
}

fn gaussian_shape(variances: &[f64], rho: f64) -> SpdMatrix {
    ShiftedTTarget::banded_shape(variances, rho)
}

/// Observation grids on `[0, span]` matching the data's relative times.
fn data_grids(
    data: &ObservationSet,
    fine: usize,
    coarse: usize,
) -> Result<(SolverGrid, SolverGrid), CliError> {
    let rel = data.relative_times();
    let span = *rel.last().expect("observation set is nonempty");
    if span <= 0.0 {
        return Err(CliError::invalid(
            "LV data needs at least two observation times",
        ));
    }
    let grid = |steps| SolverGrid::new(0.0, span, steps, rel.clone()).map_err(CliError::invalid);
    Ok((grid(fine)?, grid(coarse)?))
}

/// Builds the target described by `cfg` (data files included).
pub fn build_target(cfg: &ExperimentConfig) -> Result<BuiltTarget, CliError> {
    let bad = |e: crate::error::TargetError| CliError::invalid(format!("target: {e}"));
    match &cfg.target {
        TargetSpec::ShiftedT {
            mu,
            variances,
            rho,
            nu,
            truncation_sd,
        } => {
            let mu = mu
                .clone()
                .unwrap_or_else(|| (0..variances.len()).map(|i| i as f64).collect());
            ShiftedTTarget::new(mu, gaussian_shape(variances, *rho), *nu, *truncation_sd)
                .map(BuiltTarget::ShiftedT)
                .map_err(bad)
        }
        TargetSpec::Banana {
            mu,
            variances,
            a,
            b,
            truncation_sd,
        } => {
            let mu = mu.clone().unwrap_or_else(|| vec![0.0; variances.len()]);
            BananaTarget::new(
                mu,
                SpdMatrix::from_diagonal(variances),
                *a,
                *b,
                *truncation_sd,
            )
            .map(BuiltTarget::Banana)
            .map_err(bad)
        }
        TargetSpec::Logistic {
            data,
            subsample_size,
            subsample_seed,
            prior_variance,
            bound,
        } => {
            let ds = match data {
                LogisticData::Csv {
                    path,
                    response,
                    categorical,
                    numeric,
                } => datasets::load_logistic_csv(path, response, categorical, numeric)?,
                LogisticData::Synthetic {
                    n_rows,
                    zero_fraction,
                    beta_true,
                    seed,
                } => {
                    let beta = beta_true.as_deref().unwrap_or(&datasets::DEFAULT_BETA);
                    datasets::generate_synthetic_logistic(
                        *n_rows,
                        Some(*zero_fraction),
                        beta,
                        *seed,
                    )
                    .dataset()
                }
            };
            let sub =
                LogisticTarget::random_zero_subsample(&ds.y, *subsample_size, *subsample_seed)
                    .map_err(bad)?;
            let d = ds.design.n_cols();
            let prior = SpdMatrix::scaled_identity(d, *prior_variance);
            let target =
                LogisticTarget::new(&ds.design, &ds.y, &sub, prior, *bound).map_err(bad)?;
            let needs_laplace = matches!(cfg.sampler.initial, InitialSpec::LaplaceMode)
                || matches!(cfg.sampler.adaptation.c0, Some(C0Spec::Laplace { .. }));
            let laplace = needs_laplace.then(|| target.laplace_approximation());
            Ok(BuiltTarget::Logistic { target, laplace })
        }
        TargetSpec::LotkaVolterra {
            data,
            fine_steps_per_year,
            coarse_steps_per_year,
            integrator,
            rate_max,
        } => {
            let obs = match data {
                LvData::Csv { path } => datasets::load_lv_csv(path)?,
                LvData::Synthetic {
                    theta,
                    n_years,
                    seed,
                } => {
                    let (params, sigma, y0) = LotkaVolterraTarget::split(theta);
                    let times: Vec<f64> = (0..=*n_years).map(|y| y as f64).collect();
                    let grid = SolverGrid::new(0.0, *n_years as f64, *fine_steps_per_year, times)
                        .map_err(CliError::invalid)?;
                    ObservationSet::synthetic(&params, y0, sigma, &grid, *seed)
                        .map_err(|e| CliError::invalid(format!("cannot simulate LV data: {e}")))?
                }
            };
            let (fine, coarse) = data_grids(&obs, *fine_steps_per_year, *coarse_steps_per_year)?;
            let priors = LvPriors {
                alpha_max: rate_max[0],
                beta_max: rate_max[1],
                gamma_max: rate_max[2],
                delta_max: rate_max[3],
                ..LvPriors::default()
            };
            LotkaVolterraTarget::with_integrator(obs, fine, coarse, priors, *integrator)
                .map(BuiltTarget::LotkaVolterra)
                .map_err(bad)
        }
    }
}

/// Sampler settings for `kernel`; `cfg` must be resolved.
pub fn sampler_config(
    cfg: &ExperimentConfig,
    target: &BuiltTarget,
    kernel: KernelKind,
    seed: u64,
) -> Result<SamplerConfig, CliError> {
    let d = target.dim();
    let a = &cfg.sampler.adaptation;
    let unresolved = || CliError::Runtime("configuration defaults were not resolved".into());
    let s_d = a.s_d.ok_or_else(unresolved)?;
    let laplace = match target {
        BuiltTarget::Logistic { laplace, .. } => laplace.as_ref(),
        _ => None,
    };
    let c0 = match a.c0.as_ref().ok_or_else(unresolved)? {
        C0Spec::Scaled { c } => SpdMatrix::scaled_identity(d, c * s_d),
        C0Spec::Diagonal { diag } => {
            if diag.len() != d {
                return Err(CliError::invalid(format!(
                    "sampler.adaptation.c0.diag has {} entries, target dimension is {d}",
                    diag.len()
                )));
            }
            SpdMatrix::from_diagonal(diag)
        }
        C0Spec::Full { rows } => {
            let m = Matrix::from_rows(rows)
                .map_err(|e| CliError::invalid(format!("sampler.adaptation.c0: {e}")))?;
            if m.dim() != d {
                return Err(CliError::invalid(format!(
                    "sampler.adaptation.c0 is {0}x{0}, target dimension is {d}",
                    m.dim()
                )));
            }
            SpdMatrix::new(m)
                .map_err(|e| CliError::invalid(format!("sampler.adaptation.c0: {e}")))?
        }
        C0Spec::Laplace { c } => {
            let (_, cov) =
                laplace.ok_or_else(|| CliError::invalid("c0 laplace needs a logistic target"))?;
            SpdMatrix::new(cov.scaled(c * s_d).symmetrized())
                .map_err(|e| CliError::Runtime(format!("Laplace covariance: {e}")))?
        }
    };
    let initial = match &cfg.sampler.initial {
        InitialSpec::Uniform => None,
        InitialSpec::Point { x } => {
            if x.len() != d {
                return Err(CliError::invalid(format!(
                    "sampler.initial.x has {} entries, target dimension is {d}",
                    x.len()
                )));
            }
            Some(x.clone())
        }
        InitialSpec::LaplaceMode => Some(
            laplace
                .ok_or_else(|| CliError::invalid("initial laplace_mode needs a logistic target"))?
                .0
                .clone(),
        ),
    };
    let adaptation = AdaptationConfig {
        c0,
        t0: a.t0.ok_or_else(unresolved)? as usize,
        s_d,
        epsilon: a.epsilon.ok_or_else(unresolved)?,
        update_period: a.k.ok_or_else(unresolved)? as usize,
    };
    adaptation
        .validate()
        .map_err(|e| CliError::invalid(format!("sampler.adaptation: {e}")))?;
    Ok(SamplerConfig {
        kernel,
        adaptation,
        n_iters: cfg.sampler.n_iters as usize,
        burn_in_fraction: cfg.sampler.burn_in_fraction,
        thinning: cfg.sampler.thinning as usize,
        seed,
        initial,
    })
}

/// Files produced by a run.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Human-readable result lines.
    pub notes: Vec<String>,
}

/// `run <config> [--seed N] [--out DIR]`.
pub fn run(
    config_path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<RunReport, CliError> {
    let mut cfg = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    execute(cfg)
}

/// Runs an already validated configuration.
pub fn execute(mut cfg: ExperimentConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let target = build_target(&cfg)?;
    cfg.resolve(target.dim(), target.support());
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(io_err(format!("creating {}", dir.display())))?;
    let mut report = RunReport {
        output_dir: dir.clone(),
        ..Default::default()
    };
    let effective = dir.join("effective_config.json");
    std::fs::write(&effective, cfg.to_json() + "\n")
        .map_err(io_err(format!("writing {}", effective.display())))?;
    report.files.push(effective);

    let runtime = |e: crate::error::DiagnosticsError| CliError::Runtime(e.to_string());
    let seed = cfg.base_seed;
    match &cfg.experiment {
        ExperimentSpec::SingleRun => {
            let sc = sampler_config(&cfg, &target, cfg.sampler.kernel, seed)?;
            let trace = run_chain(&target, &sc).map_err(|e| CliError::Runtime(e.to_string()))?;
            let p = dir.join("trace.csv");
            output::write_trace_csv(&trace, &p).map_err(csv_err(&p))?;
            report.files.push(p);
            let p = dir.join("run_stats.csv");
            output::write_run_stats_csv(&[&trace], &p).map_err(csv_err(&p))?;
            report.files.push(p);
            report.notes.push(format!(
                "{}: {} steps, {} retained, acceptance {:.3}, {} expensive evaluations",
                trace.kernel,
                trace.counters.steps,
                trace.len(),
                trace.counters.acceptance_rate(),
                trace.counters.expensive_evals
            ));
        }
        ExperimentSpec::McEstimate {
            function,
            replicates,
            n_list,
        } => {
            let sc = sampler_config(&cfg, &target, cfg.sampler.kernel, seed)?;
            let ns: Vec<usize> = n_list.iter().map(|&n| n as usize).collect();
            let rows = mc_estimate_experiment(
                &target,
                &sc,
                |x| function.eval(x),
                *replicates as usize,
                &ns,
            )
            .map_err(runtime)?;
            let p = dir.join("summary.csv");
            output::write_replicate_summary_csv(&rows, &p).map_err(csv_err(&p))?;
            report.files.push(p);
            for r in &rows {
                report
                    .notes
                    .push(format!("n = {}: mean {:.6}, sd {:.6}", r.n, r.mean, r.sd));
            }
        }
        ExperimentSpec::Coverage {
            p,
            replicates,
            n_list,
        } => {
            let BuiltTarget::Banana(banana) = &target else {
                return Err(CliError::invalid(
                    "coverage experiments need a banana target",
                ));
            };
            let sc = sampler_config(&cfg, &target, cfg.sampler.kernel, seed)?;
            let ns: Vec<usize> = n_list.iter().map(|&n| n as usize).collect();
            let rows =
                coverage_experiment(banana, &sc, *p, *replicates as usize, &ns).map_err(runtime)?;
            let path = dir.join("summary.csv");
            output::write_replicate_summary_csv(&rows, &path).map_err(csv_err(&path))?;
            report.files.push(path);
            for r in &rows {
                report.notes.push(format!(
                    "n = {}: coverage {:.4}, sd {:.4}",
                    r.n, r.mean, r.sd
                ));
            }
        }
        ExperimentSpec::EdpmCompare {
            kernel_a,
            kernel_b,
            projections,
            thinning,
        } => {
            // sequential on purpose: wall time is part of the result
            let mut traces = Vec::new();
            for (label, kernel) in [("a", *kernel_a), ("b", *kernel_b)] {
                let sc = sampler_config(&cfg, &target, kernel, seed)?;
                let trace =
                    run_chain(&target, &sc).map_err(|e| CliError::Runtime(e.to_string()))?;
                let p = dir.join(format!("trace_{label}.csv"));
                output::write_trace_csv(&trace, &p).map_err(csv_err(&p))?;
                report.files.push(p);
                traces.push(trace);
            }
            let p = dir.join("run_stats.csv");
            output::write_run_stats_csv(&[&traces[0], &traces[1]], &p).map_err(csv_err(&p))?;
            report.files.push(p);
            for &k in thinning {
                let (a, b) = (traces[0].thinned(k as usize), traces[1].thinned(k as usize));
                let mut rows = Vec::new();
                for proj in projections {
                    let (ea, eb) = (
                        edpm(&a, proj).map_err(runtime)?,
                        edpm(&b, proj).map_err(runtime)?,
                    );
                    rows.push(output::EdpmRow {
                        projection: proj.label(),
                        edpm_a: ea,
                        edpm_b: eb,
                        redpm: ea / eb,
                    });
                    report.notes.push(format!(
                        "thin {k}, {}: REDPM {kernel_a}/{kernel_b} = {:.3}",
                        proj.label(),
                        ea / eb
                    ));
                }
                let p = dir.join(format!("summary_thin{k}.csv"));
                output::write_edpm_summary_csv(&rows, &p).map_err(csv_err(&p))?;
                report.files.push(p);
            }
        }
    }
    Ok(report)
}
