//! Ridge-regression hash functions: a cross-validated base fit, then the
//! three proximal variants adapting it to a new class, then persistence.

use icmh::codegen::{self, CodeLearnerConfig};
use icmh::data::{self, SynthConfig};
use icmh::linfn::{self, CvConfig, IncrementalVariant};
use icmh::{persist, SimilarityMatrix};

pub fn run() -> anyhow::Result<()> {
    let data = data::generate_synthetic(&SynthConfig { class_count: 4, per_class: 40, ..Default::default() })?;
    let old_idx: Vec<usize> = (0..120).collect();
    let old = data.subset(&old_idx);

    let code_cfg = CodeLearnerConfig { bits: 16, max_iters: 200, ..Default::default() };
    let codes = codegen::learn_base(&SimilarityMatrix::from_labels(old.labels.as_slice()), &code_cfg)?;
    let cv = CvConfig::default();
    let choice = linfn::cross_validate(&old.x, codes.a.as_matrix(), &old.labels, None, &cv)?;
    let base = linfn::fit_base(&old.x, codes.a.as_matrix(), choice.lambda)?;
    println!("base fit: lambda {} (validation error {:.4})", choice.lambda, choice.score);

    // new class 3 arrives with five exemplars per old class
    let ex: Vec<usize> = (0..3).flat_map(|c| c * 40..c * 40 + 5).collect();
    let all_idx: Vec<usize> = ex.iter().copied().chain(120..160).collect();
    let batch = data.subset(&all_idx);
    let s_bar = SimilarityMatrix::from_labels(batch.labels.as_slice());
    let a_e = codes.a.select_rows(&ex);
    let b_e = codes.b.select_rows(&ex);
    let new = codegen::learn_incremental(&s_bar, &a_e, &b_e, 40, &code_cfg)?;
    let targets = a_e.vstack(&new.a)?;

    // the validation pool cannot draw more per class than the exemplars hold
    let cv = CvConfig { per_class_validation_count: 5, ..cv };
    for variant in IncrementalVariant::ALL {
        let c = linfn::cross_validate(&batch.x, targets.as_matrix(), &batch.labels, Some((&base, variant)), &cv)?;
        let f = linfn::fit_incremental(&batch.x, targets.as_matrix(), &base, c.lambda, c.gamma, variant)?;
        let drift = (&f.weights - &base.weights).norm() / base.weights.norm();
        println!("variant {variant}: lambda {} gamma {} relative weight change {drift:.3}", c.lambda, c.gamma);
    }

    let dir = std::env::temp_dir().join(format!("icmh-ridge-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let manifest = persist::save_linear(&dir, "base_x", &base)?;
    assert_eq!(persist::load_linear(&manifest)?, base);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
