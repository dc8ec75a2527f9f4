//! Autocorrelation, effective sample size and the replicated experiments.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::DiagnosticsError;
use crate::linalg::{dot, Matrix};
use crate::samplers::{run_chain, SamplerConfig};
use crate::targets::{BananaTarget, TwoLevelTarget};
use crate::trace::Trace;

fn centered(series: &[f64]) -> Result<(Vec<f64>, f64), DiagnosticsError> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / n;
    // rounding noise on a constant series is not variance
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if c0 <= (scale * f64::EPSILON).powi(2) * 16.0 {
        return Err(DiagnosticsError::DegenerateSeries);
    }
    Ok((c, c0))
}

#[inline]
fn lag_sum(c: &[f64], k: usize) -> f64 {
    c[..c.len() - k]
        .iter()
        .zip(&c[k..])
        .map(|(a, b)| a * b)
        .sum()
}

/// Sample autocorrelations `ρ_0..=ρ_max_lag` with the biased `1/n` normalization.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if series.len() <= max_lag {
        return Err(DiagnosticsError::TooShort {
            len: series.len(),
            needed: max_lag,
        });
    }
    let (c, c0) = centered(series)?;
    let n = c.len() as f64;
    Ok((0..=max_lag)
        .map(|k| if k == 0 { 1.0 } else { lag_sum(&c, k) / n / c0 })
        .collect())
}

/// Integrated autocorrelation time `1 + 2Σρ_k`, truncated by Geyer's initial
/// positive sequence and clamped below at 1.
pub fn integrated_autocorrelation_time(series: &[f64]) -> Result<f64, DiagnosticsError> {
    if series.len() < 2 {
        return Err(DiagnosticsError::TooShort {
            len: series.len(),
            needed: 1,
        });
    }
    let (c, c0) = centered(series)?;
    let n = c.len();
    let rho = |k: usize| {
        if k < n {
            lag_sum(&c, k) / n as f64 / c0
        } else {
            0.0
        }
    };
    // Γ_m = ρ_{2m} + ρ_{2m+1}; Γ_0 includes ρ_0 = 1
    let mut sum_gamma = 0.0;
    let mut m = 0;
    while 2 * m < n {
        let gamma = if m == 0 {
            1.0 + rho(1)
        } else {
            rho(2 * m) + rho(2 * m + 1)
        };
        if gamma <= 0.0 {
            break;
        }
        sum_gamma += gamma;
        m += 1;
    }
    Ok((2.0 * sum_gamma - 1.0).max(1.0))
}

/// `n / τ` with `τ` from [`integrated_autocorrelation_time`]; never exceeds `n`.
pub fn ess(series: &[f64]) -> Result<f64, DiagnosticsError> {
    Ok(series.len() as f64 / integrated_autocorrelation_time(series)?)
}

/// Scalar summary of a multivariate trace.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Projection {
    Coordinate { index: usize },
    LogPosterior,
    Direction { vector: Vec<f64> },
}

impl Projection {
    pub fn label(&self) -> String {
        match self {
            Self::Coordinate { index } => format!("x_{}", index + 1),
            Self::LogPosterior => "log_pi".to_string(),
            Self::Direction { .. } => "direction".to_string(),
        }
    }

    pub fn apply(&self, trace: &Trace) -> Result<Vec<f64>, DiagnosticsError> {
        match self {
            Self::Coordinate { index } if *index < trace.dim => Ok(trace.coordinate(*index)),
            Self::Coordinate { index } => Err(DiagnosticsError::InvalidArgument(format!(
                "coordinate {index} out of range for dimension {}",
                trace.dim
            ))),
            Self::LogPosterior => Ok(trace.log_pi_values()),
            Self::Direction { vector } if vector.len() == trace.dim => {
                Ok(trace.states().map(|x| dot(x, vector)).collect())
            }
            Self::Direction { vector } => Err(DiagnosticsError::InvalidArgument(format!(
                "direction has length {}, trace has dimension {}",
                vector.len(),
                trace.dim
            ))),
        }
    }
}

/// Effective draws per minute from an ESS and a wall time.
pub fn edpm_from(ess: f64, wall_minutes: f64) -> Result<f64, DiagnosticsError> {
    if wall_minutes.is_nan() || wall_minutes <= 0.0 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "wall time must be positive, got {wall_minutes} min"
        )));
    }
    Ok(ess / wall_minutes)
}

pub fn edpm(trace: &Trace, projection: &Projection) -> Result<f64, DiagnosticsError> {
    if trace.is_empty() {
        return Err(DiagnosticsError::TooShort { len: 0, needed: 1 });
    }
    edpm_from(ess(&projection.apply(trace)?)?, trace.wall_minutes())
}

pub fn redpm(a: &Trace, b: &Trace, projection: &Projection) -> Result<f64, DiagnosticsError> {
    Ok(edpm(a, projection)? / edpm(b, projection)?)
}

/// One row of a replicated-experiment summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicateSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation across replicates.
    pub sd: f64,
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Chain length whose post-burn-in part holds at least `n` states.
pub fn iterations_for_retained(n: usize, burn_in_fraction: f64, thinning: usize) -> usize {
    let mut iters = ((n * thinning) as f64 / (1.0 - burn_in_fraction)).ceil() as usize;
    loop {
        let burn = (iters as f64 * burn_in_fraction).floor() as usize;
        if (iters - burn).div_ceil(thinning) >= n {
            return iters;
        }
        iters += 1;
    }
}

/// Per-replicate averages of `f` over the first `n` retained states, replicate
/// `k` seeded with `base.seed + k`.
pub fn replicate_averages<T, F>(
    target: &T,
    base: &SamplerConfig,
    f: &F,
    m: usize,
    n: usize,
) -> Result<Vec<f64>, DiagnosticsError>
where
    T: TwoLevelTarget + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n == 0 {
        return Err(DiagnosticsError::InvalidArgument(
            "n must be positive".into(),
        ));
    }
    let n_iters = iterations_for_retained(n, base.burn_in_fraction, base.thinning);
    (0..m as u64)
        .into_par_iter()
        .map(|k| {
            let config = SamplerConfig {
                n_iters,
                seed: base.seed.wrapping_add(k),
                ..base.clone()
            };
            let trace = run_chain(target, &config)?;
            Ok(trace.states().take(n).map(f).sum::<f64>() / n as f64)
        })
        .collect()
}

/// Mean and SD across `m` replicate averages of `f`, for each chain length.
pub fn mc_estimate_experiment<T, F>(
    target: &T,
    base: &SamplerConfig,
    f: F,
    m: usize,
    n_list: &[usize],
) -> Result<Vec<ReplicateSummary>, DiagnosticsError>
where
    T: TwoLevelTarget + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    if m < 2 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "need at least 2 replicates, got {m}"
        )));
    }
    n_list
        .iter()
        .map(|&n| {
            let (mean, sd) = mean_sd(&replicate_averages(target, base, &f, m, n)?);
            Ok(ReplicateSummary { n, mean, sd })
        })
        .collect()
}

/// Replicated estimates of the probability of the level-`p` twisted region.
pub fn coverage_experiment(
    target: &BananaTarget,
    base: &SamplerConfig,
    p: f64,
    m: usize,
    n_list: &[usize],
) -> Result<Vec<ReplicateSummary>, DiagnosticsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "p must lie in (0, 1), got {p}"
        )));
    }
    let threshold = target.region_threshold(p);
    mc_estimate_experiment(
        target,
        base,
        |x| (target.twisted_distance_squared(x) <= threshold) as u8 as f64,
        m,
        n_list,
    )
}

/// Sample covariance of the retained states (`n - 1` denominator).
pub fn trace_covariance(trace: &Trace) -> Result<Matrix, DiagnosticsError> {
    let n = trace.len();
    if n < 2 {
        return Err(DiagnosticsError::TooShort { len: n, needed: 1 });
    }
    let d = trace.dim;
    let mut mean = vec![0.0; d];
    for x in trace.states() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n as f64;
        }
    }
    let mut cov = Matrix::zeros(d);
    let mut dev = vec![0.0; d];
    for x in trace.states() {
        for i in 0..d {
            dev[i] = x[i] - mean[i];
        }
        cov.add_outer(&dev, 1.0 / (n - 1) as f64);
    }
    Ok(cov)
}

/// First and second principal directions of a covariance matrix, each signed
/// so that its largest-magnitude entry is positive.
pub fn principal_projection(cov: &Matrix) -> Result<(Vec<f64>, Vec<f64>), DiagnosticsError> {
    let d = cov.dim();
    if d < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "principal directions need dimension at least 2".into(),
        ));
    }
    if cov.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }
    let sym = cov.symmetrized();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, sym.as_slice()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if eig.eigenvalues[order[0]] <= 0.0 {
        return Err(DiagnosticsError::DegenerateSeries);
    }
    let column = |j: usize| {
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        let norm = dot(&v, &v).sqrt();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
        let s = lead.signum() / norm;
        v.iter_mut().for_each(|c| *c *= s);
        v
    };
    Ok((column(order[0]), column(order[1])))
}
