//! Autocorrelation along the first principal component for MH, TSMH, AM and
//! TSAM, plus effective sample sizes.

use tsam::adaptation::default_config;
use tsam::diagnostics::{autocorrelation, ess, principal_projection};
use tsam::linalg::dot;
use tsam::samplers::{run_chain, KernelKind, SamplerConfig};
use tsam::targets::{ShiftedTTarget, TwoLevelTarget};

fn main() {
    let target = ShiftedTTarget::paper();
    let (pc, _) = principal_projection(&target.covariance()).unwrap();
    println!(
        "{:>5} {:>8} {:>8} {:>8} {:>8}",
        "kernel", "lag 1", "lag 20", "lag 50", "ESS"
    );
    for kernel in [
        KernelKind::Mh,
        KernelKind::Tsmh,
        KernelKind::Am,
        KernelKind::Tsam,
    ] {
        let config = SamplerConfig::new(
            kernel,
            default_config(target.dim(), target.support()),
            20_000,
            11,
        );
        let trace = run_chain(&target, &config).unwrap();
        let series: Vec<f64> = trace.states().map(|x| dot(x, &pc)).collect();
        let acf = autocorrelation(&series, 50).unwrap();
        println!(
            "{:>5} {:>8.3} {:>8.3} {:>8.3} {:>8.0}",
            kernel.name(),
            acf[1],
            acf[20],
            acf[50],
            ess(&series).unwrap()
        );
    }
}
