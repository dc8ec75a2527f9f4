//! Cholesky factors, rank-one updates and Gaussian draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tsam::linalg::{cholesky, log_mvn_density, mvn_sample, rank_one_update, Matrix, SpdMatrix};

fn main() {
    let c = SpdMatrix::new(Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap()).unwrap();
    let r = cholesky(&c).unwrap();
    println!("L = {:?}", r.lower().rows());

    // O(d²) update of the factor of C + vvᵀ
    let v = [1.0, -0.5];
    let updated = rank_one_update(&r, &v);
    println!("factor of C + vvᵀ = {:?}", updated.lower().rows());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let mut acc = Matrix::zeros(2);
    for _ in 0..n {
        let x = mvn_sample(&[0.0, 0.0], &r, &mut rng);
        acc.add_outer(&x, 1.0 / n as f64);
    }
    println!("sample covariance of {n} draws = {:?}", acc.rows());
    println!(
        "log density at the mean = {:.6}",
        log_mvn_density(&[0.0, 0.0], &[0.0, 0.0], &c).unwrap()
    );
}
