//! Calibrating the Lotka–Volterra model to the 1900–1920 hare–lynx table,
//! with a monthly-grid solve screening a daily-grid solve.

use std::path::Path;

use tsam::adaptation::default_config;
use tsam::cli::datasets::load_lv_csv;
use tsam::linalg::SpdMatrix;
use tsam::ode::SolverGrid;
use tsam::samplers::{run_chain, KernelKind, SamplerConfig};
use tsam::targets::{LotkaVolterraTarget, LvPriors, TwoLevelTarget, LV_PARAM_NAMES};

fn main() {
    let data =
        load_lv_csv(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/hare_lynx.csv")).unwrap();
    let times = data.relative_times();
    let span = *times.last().unwrap();
    let fine = SolverGrid::new(0.0, span, 365, times.clone()).unwrap();
    let coarse = SolverGrid::new(0.0, span, 12, times).unwrap();
    // rates of the real cycle exceed the default uniform bounds
    let priors = LvPriors {
        alpha_max: 2.0,
        beta_max: 0.1,
        gamma_max: 2.0,
        delta_max: 0.1,
        ..LvPriors::default()
    };
    let target = LotkaVolterraTarget::new(data, fine, coarse, priors).unwrap();

    let mut adaptation = default_config(8, target.support());
    adaptation.c0 = SpdMatrix::from_diagonal(&[1e-4, 1e-7, 1e-4, 1e-7, 1e-3, 1e-3, 1.0, 0.1]);
    adaptation.epsilon = 1e-12;
    let mut config = SamplerConfig::new(KernelKind::Tsam, adaptation, 20_000, 1);
    config.initial = Some(vec![0.55, 0.028, 0.8, 0.024, 0.25, 0.25, 33.0, 6.0]);
    let trace = run_chain(&target, &config).unwrap();
    println!(
        "{:.1} s, {} fine solves for {} steps",
        trace.wall.as_secs_f64(),
        trace.counters.expensive_evals,
        trace.counters.steps
    );
    for (j, name) in LV_PARAM_NAMES.iter().enumerate() {
        let xs = trace.coordinate(j);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd =
            (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        println!("{name:>7}: {mean:.4} ± {sd:.4}");
    }
}
