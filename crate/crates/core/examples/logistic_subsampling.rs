//! Logistic regression on tall imbalanced data with a subsampled surrogate
//! likelihood: TSAM against AM on effective draws per minute.
//!
//! `cargo run --release --example logistic_subsampling -- [n_iters]`

use tsam::adaptation::default_config;
use tsam::cli::datasets::{generate_synthetic_logistic, DEFAULT_BETA};
use tsam::diagnostics::{edpm, Projection};
use tsam::linalg::SpdMatrix;
use tsam::samplers::{run_chain, KernelKind, SamplerConfig};
use tsam::targets::{LogisticTarget, TwoLevelTarget};

fn main() {
    let n_iters: usize = std::env::args()
        .nth(1)
        .map_or(10_000, |s| s.parse().expect("iteration count"));
    let data = generate_synthetic_logistic(41_188, Some(0.887), &DEFAULT_BETA, 7);
    let sub = LogisticTarget::random_zero_subsample(&data.y, 10_000, 11).unwrap();
    let target = LogisticTarget::new(
        &data.design(),
        &data.y,
        &sub,
        SpdMatrix::scaled_identity(11, 100.0),
        20.0,
    )
    .unwrap();
    println!(
        "{} ones, {} zeros, {} zeros in the surrogate",
        target.n_ones(),
        target.n_zeros(),
        target.subsample_size()
    );

    // Start at the mode with a Laplace-shaped initial covariance.
    let (mode, cov) = target.laplace_approximation();
    let mut adaptation = default_config(11, target.support());
    adaptation.c0 = SpdMatrix::new(cov.scaled(adaptation.s_d)).unwrap();
    adaptation.epsilon = 1e-10;
    let mut traces = Vec::new();
    for kernel in [KernelKind::Tsam, KernelKind::Am] {
        let mut config = SamplerConfig::new(kernel, adaptation.clone(), n_iters, 3);
        config.initial = Some(mode.clone());
        let trace = run_chain(&target, &config).unwrap();
        println!(
            "{kernel}: {:.1} s, {} expensive evaluations, acceptance {:.3}",
            trace.wall.as_secs_f64(),
            trace.counters.expensive_evals,
            trace.counters.acceptance_rate()
        );
        traces.push(trace);
    }
    let p = Projection::LogPosterior;
    let (a, b) = (edpm(&traces[0], &p).unwrap(), edpm(&traces[1], &p).unwrap());
    println!("EDPM tsam {a:.0}, am {b:.0}, REDPM {:.3}", a / b);
}
