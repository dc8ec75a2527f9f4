//! The adaptive proposal covariance: fixed `C0` before `t0`, then
//! `s_d·cov + s_d·ε·I`, with the factor kept current by rank-one updates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tsam::adaptation::{default_config, AdaptationState};
use tsam::targets::SupportBox;

fn main() {
    let d = 3;
    let support = SupportBox::centered(&[0.0; 3], &[10.0; 3]).unwrap();
    let mut config = default_config(d, &support);
    config.t0 = 50;
    println!(
        "s_d = {:.4}, epsilon = {:.2e}, t0 = {}",
        config.s_d, config.epsilon, config.t0
    );

    let mut batched_config = config.clone();
    batched_config.update_period = 20;
    let mut every = AdaptationState::new(config).unwrap();
    let mut batched = AdaptationState::new(batched_config).unwrap();

    // K = 20 refreshes at multiples of 20, so the two agree at every printed step
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in 1..=200 {
        let z: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let x = [z[0], 0.5 * z[0] + z[1], 2.0 * z[2]];
        every.absorb(&x);
        batched.absorb(&x);
        if t % 40 == 0 {
            let gap = every
                .proposal_covariance()
                .sub(&batched.proposal_covariance())
                .max_abs();
            println!(
                "t = {t:3}: proposal diag {:?}, |K=1 − K=20| = {gap:.1e}",
                every
                    .proposal_covariance()
                    .diagonal()
                    .iter()
                    .map(|v| format!("{v:.3}"))
                    .collect::<Vec<_>>()
            );
        }
    }
    println!(
        "empirical covariance = {:?}",
        every.empirical_covariance().rows()
    );
}
