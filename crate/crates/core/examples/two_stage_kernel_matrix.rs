//! The frozen two-stage kernel on a grid: assembled explicitly, it leaves the
//! target invariant even though the surrogate is badly wrong.

use tsam::linalg::Matrix;
use tsam::samplers::discrete_two_stage_kernel;

fn main() {
    let n = 41;
    let xs: Vec<f64> = (0..n).map(|i| -4.0 + 0.2 * i as f64).collect();
    let log_pi: Vec<f64> = xs
        .iter()
        .map(|x| -x * x / 2.0 + (1.0 + (x - 1.0f64).powi(2)).ln())
        .collect();
    let log_star: Vec<f64> = xs.iter().map(|x| -(x + 1.0f64).powi(2) / 4.0).collect();
    // nearest-neighbour proposal; moves off the ends are rejected
    let q = Matrix::from_fn(n, |i, j| if i.abs_diff(j) == 1 { 0.5 } else { 0.0 });
    let k = discrete_two_stage_kernel(&log_pi, &log_star, &q);

    let z: f64 = log_pi.iter().map(|v| v.exp()).sum();
    let pi: Vec<f64> = log_pi.iter().map(|v| v.exp() / z).collect();
    let drift: f64 = (0..n)
        .map(|j| ((0..n).map(|i| pi[i] * k[(i, j)]).sum::<f64>() - pi[j]).abs())
        .sum();
    println!("|πK − π|₁ = {drift:.2e}");
    println!(
        "holding probabilities at the left end, centre, right end: {:.3} {:.3} {:.3}",
        k[(0, 0)],
        k[(20, 20)],
        k[(40, 40)]
    );
}
