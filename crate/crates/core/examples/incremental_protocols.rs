//! The three class-incremental protocols side by side: retraining on all data,
//! a frozen first-phase model, and exemplar-based adaptation.

use icmh::codegen::CodeLearnerConfig;
use icmh::data::{self, SynthConfig};
use icmh::protocol::{run_protocol, ExperimentConfig, Method, PhasePlan, Protocol};

pub fn run() -> anyhow::Result<()> {
    let all = data::generate_synthetic(&SynthConfig { class_count: 6, per_class: 40, ..Default::default() })?;
    let (train, test) = data::train_test_split(&all, 0.7, 0)?;
    let plan = PhasePlan::shuffled(6, vec![2, 2, 2], vec![11, 12])?;
    let cfg = ExperimentConfig {
        codes: CodeLearnerConfig { bits: 16, max_iters: 200, ..Default::default() },
        samples_per_class: 5,
        ..Default::default()
    };
    let method: Method = "lr1".parse()?;
    println!("protocol  phase  classes  MAP@50  MAP@all");
    for protocol in Protocol::ALL {
        let run = run_protocol(&train, &test, &plan, protocol, method, &cfg)?;
        for r in &run.mean {
            println!(
                "{:<8}  {:>5}  {:>7}  {:.3}   {:.3}",
                protocol.tag(),
                r.phase,
                r.seen_classes,
                r.retrieval.average,
                r.hashing.average
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
