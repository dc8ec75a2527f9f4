//! Two-stage adaptive Metropolis on the truncated 8-d shifted t target,
//! screened by its Gaussian surrogate.

use tsam::adaptation::default_config;
use tsam::samplers::{run_chain, KernelKind, SamplerConfig};
use tsam::targets::{ShiftedTTarget, TwoLevelTarget};

fn main() {
    let target = ShiftedTTarget::paper();
    let config = SamplerConfig::new(
        KernelKind::Tsam,
        default_config(target.dim(), target.support()),
        50_000,
        1,
    );
    let trace = run_chain(&target, &config).unwrap();
    let c = trace.counters;
    println!(
        "{} retained of {} steps in {:.2} s",
        trace.len(),
        c.steps,
        trace.wall.as_secs_f64()
    );
    println!(
        "stage 1 accepted {:.1}%, stage 2 accepted {:.1}% of those",
        100.0 * c.stage1_accepts as f64 / c.steps as f64,
        100.0 * c.stage2_accepts as f64 / c.stage1_accepts as f64
    );
    println!(
        "expensive evaluations: {} (an AM chain would use {})",
        c.expensive_evals,
        c.steps + 1
    );
    for j in 0..target.dim() {
        let xs = trace.coordinate(j);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        println!(
            "  x_{}: mean {mean:7.3} (location {})",
            j + 1,
            target.location()[j]
        );
    }
}
