mod common;

use icmh::codegen::{self, CodeLearnerConfig};
use icmh::data::seed;
use icmh::{RelaxedCodeMatrix, SimilarityMatrix};
use nalgebra::DMatrix;

#[test]
fn gradients_match_central_differences() {
    let (grad, value) = common::codegen_gradient_error(12);
    assert!(grad < 1e-5, "gradient relative error {grad:e}");
    assert!(value < 1e-12, "objective disagrees with the loop oracle: {value:e}");
}

#[test]
fn descent_is_monotone_and_bounded() {
    common::codegen_descent_is_sound(20).unwrap();
}

#[test]
fn quantized_codes_near_exhaustive_minimum() {
    let (ratio, notes) = common::brute_force_ratio();
    assert!(ratio <= 1.1, "{notes:?}");
}

#[test]
fn row_permutation_permutes_codes() {
    let labels = [0, 1, 2, 1, 0, 2, 2];
    let perm = [3, 0, 6, 1, 5, 2, 4];
    let cfg = CodeLearnerConfig { bits: 5, max_iters: 80, ..Default::default() };
    let mut rng = seed::rng(1);
    let a0 = common::uniform(7, 5, -1.0, 1.0, &mut rng);
    let b0 = common::uniform(7, 5, -1.0, 1.0, &mut rng);
    let plain = codegen::learn_base_from(&SimilarityMatrix::from_labels(&labels), a0.clone(), b0.clone(), &cfg).unwrap();
    let permuted_labels: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
    let moved = codegen::learn_base_from(
        &SimilarityMatrix::from_labels(&permuted_labels),
        a0.select_rows(&perm),
        b0.select_rows(&perm),
        &cfg,
    )
    .unwrap();
    let err = common::rel_err(moved.a.as_matrix(), &plain.a.as_matrix().select_rows(&perm));
    assert!(err < 1e-9, "{err:e}");
}

#[test]
fn incremental_keeps_exemplars_and_matches_oracle_objective() {
    let mut rng = seed::rng(4);
    let a_e = RelaxedCodeMatrix::new(common::uniform(4, 3, -1.0, 1.0, &mut rng)).unwrap();
    let b_e = RelaxedCodeMatrix::new(common::uniform(4, 3, -1.0, 1.0, &mut rng)).unwrap();
    let before = (common::bits_of(a_e.as_matrix()), common::bits_of(b_e.as_matrix()));
    let labels = [0, 0, 1, 1, 2, 2, 0];
    let s = SimilarityMatrix::from_labels(&labels);
    let cfg = CodeLearnerConfig { bits: 3, max_iters: 200, seed: 2, ..Default::default() };
    let new = codegen::learn_incremental(&s, &a_e, &b_e, 3, &cfg).unwrap();
    assert_eq!(before, (common::bits_of(a_e.as_matrix()), common::bits_of(b_e.as_matrix())));
    assert_eq!(new.a.rows(), 3);

    // fit term over all rows, pairing term over new rows only
    let full_a = a_e.vstack(&new.a).unwrap();
    let full_b = b_e.vstack(&new.b).unwrap();
    let fit = common::naive_code_objective(&labels, full_a.as_matrix(), full_b.as_matrix(), 0.0);
    let pair = (new.a.as_matrix() - new.b.as_matrix()).norm_squared();
    let lib = codegen::incremental_objective(&s, &a_e, &b_e, new.a.as_matrix(), new.b.as_matrix(), 1.0).unwrap();
    assert!((lib - (fit + pair)).abs() < 1e-10 * lib.max(1.0));
    assert!(new.objective_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn seeded_runs_repeat() {
    let s = SimilarityMatrix::from_labels(&[0, 1, 1, 2, 0]);
    let cfg = CodeLearnerConfig { bits: 8, max_iters: 50, seed: 17, ..Default::default() };
    assert_eq!(codegen::learn_base(&s, &cfg).unwrap(), codegen::learn_base(&s, &cfg).unwrap());
}

#[test]
fn invalid_inputs_are_rejected() {
    let s = SimilarityMatrix::from_labels(&[0, 1]);
    assert!(codegen::learn_base(&s, &CodeLearnerConfig { bits: 0, ..Default::default() }).is_err());
    assert!(codegen::learn_base(&s, &CodeLearnerConfig { rel_tol: 0.0, ..Default::default() }).is_err());
    let a = DMatrix::zeros(3, 2);
    assert!(codegen::objective(&s, &a, &a, 2, 1.0).is_err());
}
