//! Coverage of the 68.3% region of the twisted Gaussian by TSAM chains of
//! increasing length, replicated over seeds.

use tsam::adaptation::default_config;
use tsam::diagnostics::coverage_experiment;
use tsam::samplers::{KernelKind, SamplerConfig};
use tsam::targets::{BananaTarget, TwoLevelTarget};

fn main() {
    let target = BananaTarget::paper();
    let base = SamplerConfig::new(
        KernelKind::Tsam,
        default_config(target.dim(), target.support()),
        1,
        1,
    );
    let rows = coverage_experiment(&target, &base, 0.683, 10, &[500, 2000, 5000, 20_000]).unwrap();
    println!("{:>6} {:>9} {:>8}", "n", "coverage", "sd");
    for r in rows {
        println!("{:>6} {:>9.4} {:>8.4}", r.n, r.mean, r.sd);
    }
}
