//! Runs every program under `examples/`.

#[path = "../examples/synthetic_dataset.rs"]
mod synthetic_dataset;
#[path = "../examples/hash_codes.rs"]
mod hash_codes;
#[path = "../examples/ridge_hashing.rs"]
mod ridge_hashing;
#[path = "../examples/deep_hashing.rs"]
mod deep_hashing;
#[path = "../examples/retrieval_eval.rs"]
mod retrieval_eval;
#[path = "../examples/incremental_protocols.rs"]
mod incremental_protocols;

#[test]
fn synthetic_dataset_runs() {
    synthetic_dataset::run().unwrap();
}

#[test]
fn hash_codes_runs() {
    hash_codes::run().unwrap();
}

#[test]
fn ridge_hashing_runs() {
    ridge_hashing::run().unwrap();
}

#[test]
fn deep_hashing_runs() {
    deep_hashing::run().unwrap();
}

#[test]
fn retrieval_eval_runs() {
    retrieval_eval::run().unwrap();
}

#[test]
fn incremental_protocols_runs() {
    incremental_protocols::run().unwrap();
}
