//! Learn relaxed binary codes from label similarity, then extend them to new
//! samples while the codes of retained exemplars stay fixed.

use icmh::codegen::{self, CodeLearnerConfig};
use icmh::{quantize, SimilarityMatrix};

pub fn run() -> anyhow::Result<()> {
    let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let s = SimilarityMatrix::from_labels(&labels);
    let cfg = CodeLearnerConfig { bits: 16, max_iters: 300, seed: 5, ..Default::default() };
    let base = codegen::learn_base(&s, &cfg)?;
    println!(
        "base codes: objective {:.3} -> {:.3} in {} iterations",
        base.objective_trace[0],
        base.final_objective(),
        base.iterations()
    );

    let (ba, bb) = (quantize(&base.a), quantize(&base.b));
    let same = (0..ba.rows()).filter(|&i| ba.row(i) == bb.row(i)).count();
    println!("{same}/{} pairs share identical x/y codes", ba.rows());

    // keep two exemplars per old class, add ten samples of a new class 3
    let exemplars = [0, 3, 1, 4, 2, 5];
    let a_e = base.a.select_rows(&exemplars);
    let b_e = base.b.select_rows(&exemplars);
    let mut s_bar_labels: Vec<usize> = exemplars.iter().map(|&i| labels[i]).collect();
    s_bar_labels.extend([3; 10]);
    let s_bar = SimilarityMatrix::from_labels(&s_bar_labels);
    let new = codegen::learn_incremental(&s_bar, &a_e, &b_e, 10, &cfg.with_seed(6))?;
    println!(
        "incremental codes for {} new samples: objective {:.3} -> {:.3}",
        new.a.rows(),
        new.objective_trace[0],
        new.final_objective()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
