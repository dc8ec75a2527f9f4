use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsam::adaptation::{default_scale, AdaptationConfig, AdaptationState};
use tsam::diagnostics::ess;
use tsam::linalg::{cholesky_matrix, rank_one_update, Matrix, SpdMatrix};
use tsam::samplers::{stage1_accept_prob, stage2_accept_prob};
use tsam::targets::{BananaTarget, SupportBox};

fn spd_from(entries: &[f64], d: usize, shift: f64) -> Matrix {
    let a = Matrix::from_fn(d, |i, j| entries[i * d + j]);
    let mut c = a.matmul(&a.transpose());
    c.add_to_diagonal(shift);
    c
}

fn min_eigenvalue(m: &Matrix) -> f64 {
    let d = m.dim();
    let e = SymmetricEigen::new(DMatrix::from_row_slice(d, d, m.symmetrized().as_slice()));
    e.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cholesky_recomposes(d in 1usize..9, entries in prop::collection::vec(-2.0f64..2.0, 64), shift in 0.01f64..3.0) {
        let c = spd_from(&entries, d, shift);
        let r = cholesky_matrix(&c).unwrap();
        prop_assert!(rel_err(&r.recompose(), &c) < 1e-10);
        prop_assert!((0..d).all(|i| r.lower()[(i, i)] > 0.0));
    }

    #[test]
    fn rank_one_update_matches_refactorization(
        d in 1usize..9,
        entries in prop::collection::vec(-2.0f64..2.0, 64),
        v in prop::collection::vec(-3.0f64..3.0, 8),
    ) {
        let c = spd_from(&entries, d, 0.5);
        let r = cholesky_matrix(&c).unwrap();
        let v = &v[..d];
        let updated = rank_one_update(&r, v);
        let mut target = c.clone();
        target.add_outer(v, 1.0);
        let direct = cholesky_matrix(&target).unwrap();
        prop_assert!(updated.lower().sub(direct.lower()).max_abs() < 1e-8);
    }

    #[test]
    fn adaptation_matches_batch_and_stays_well_posed(
        d in 1usize..6,
        points in prop::collection::vec(-10.0f64..10.0, 6 * 40),
        n in 2usize..40,
        t0 in 1usize..20,
        k in 1usize..8,
    ) {
        let s_d = default_scale(d);
        let eps = 1e-3;
        let mut st = AdaptationState::new(AdaptationConfig {
            c0: SpdMatrix::scaled_identity(d, s_d),
            t0,
            s_d,
            epsilon: eps,
            update_period: k,
        }).unwrap();
        let xs: Vec<&[f64]> = points.chunks(6).take(n).map(|c| &c[..d]).collect();
        for x in &xs {
            st.absorb(x);
        }
        let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let batch = Matrix::from_fn(d, |i, j| {
            xs.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (n - 1) as f64
        });
        let emp = st.empirical_covariance();
        prop_assert!(emp.sub(&batch).max_abs() <= 1e-10 * batch.max_abs().max(1.0));
        for (a, b) in st.mean().iter().zip(&mean) {
            prop_assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
        prop_assert!(min_eigenvalue(&st.proposal_covariance()) >= s_d * eps * (1.0 - 1e-6));
    }

    #[test]
    fn ess_is_bounded_by_length(series in prop::collection::vec(-100.0f64..100.0, 10..400)) {
        prop_assume!(series.iter().any(|&v| v != series[0]));
        let e = ess(&series).unwrap();
        prop_assert!(e > 0.0 && e <= series.len() as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn ess_is_affine_invariant(
        series in prop::collection::vec(-1.0f64..1.0, 20..300),
        scale in prop_oneof![0.001f64..1000.0, -1000.0f64..-0.001],
        shift in -1e3f64..1e3,
    ) {
        prop_assume!(series.iter().any(|&v| (v - series[0]).abs() > 1e-6));
        let moved: Vec<f64> = series.iter().map(|v| scale * v + shift).collect();
        let (a, b) = (ess(&series).unwrap(), ess(&moved).unwrap());
        prop_assert!((a - b).abs() <= 1e-6 * a);
    }

    #[test]
    fn acceptance_probabilities_are_probabilities(
        a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0, e in -50.0f64..50.0,
    ) {
        let p1 = stage1_accept_prob(a, b);
        let p2 = stage2_accept_prob(a, b, c, e);
        prop_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
        // surrogate equal to target
        prop_assert_eq!(stage2_accept_prob(a, b, a, b), 1.0);
        prop_assert_eq!(stage1_accept_prob(a, f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn twist_round_trips_and_regions_nest(
        x in prop::collection::vec(-20.0f64..20.0, 8),
        p in 0.01f64..0.98,
        dp in 0.0f64..0.01,
    ) {
        let t = BananaTarget::paper();
        let back = t.twist().inverse(&t.twist().apply(&x));
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        if t.region_indicator(&x, p) {
            prop_assert!(t.region_indicator(&x, p + dp));
        }
    }

    #[test]
    fn uniform_draws_stay_in_box(seed in any::<u64>(), half in prop::collection::vec(0.001f64..100.0, 1..6)) {
        let center = vec![1.5; half.len()];
        let b = SupportBox::centered(&center, &half).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            prop_assert!(b.contains(&b.sample_uniform(&mut rng)));
        }
    }
}
