//! A small size experiment: simulate null networks, fit the same model,
//! and tabulate rejection frequencies per statistic and index. A desk-size
//! version of the full experiment harness (`mmsbm-gof experiment`).
//!
//! ```text
//! cargo run --release --example size_experiment
//! ```

use mmsbm_gof::experiment::{run_experiment, ExperimentSpec, ModelSpec};
use mmsbm_gof::gof::{StatKind, TestConfig};

fn main() -> mmsbm_gof::Result<()> {
    let spec = ExperimentSpec {
        name: "null size, K=3, D=20".into(),
        true_model: ModelSpec {
            k: 3,
            d: 20,
            lambda: 1.0,
            beta_diag: 10.0,
            beta_off: 1.0,
        },
        fitted: None,
        replicates: 10,
        stats: StatKind::ALL.to_vec(),
        m_indices: vec![1, 10, 50],
        test: TestConfig::paper_experiment(),
        master_seed: 20,
    };
    let out = std::env::temp_dir().join("mmsbm_gof_size_experiment");
    let result = run_experiment(&spec, &out)?;

    println!("{} ({} replicates)", spec.name, result.replicates_done);
    println!("stat   m=1    m=10   m=50");
    for (si, stat) in spec.stats.iter().enumerate() {
        println!(
            "{:5} {:5.2}  {:5.2}  {:5.2}",
            stat.name(),
            result.rates[si][0],
            result.rates[si][1],
            result.rates[si][2]
        );
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
