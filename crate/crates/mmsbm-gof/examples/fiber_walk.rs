//! Walk the fiber of a small table and compare the empirical distribution
//! with the exhaustively enumerated one.
//!
//! ```text
//! cargo run --release --example fiber_walk
//! ```

use std::collections::HashMap;

use mmsbm_gof::design::build_design;
use mmsbm_gof::fiber::{sample_fiber, WalkConfig};
use mmsbm_gof::markov::{enumerate_fiber, structural_basis};
use mmsbm_gof::mmsbm::MembershipRealization;
use mmsbm_gof::numeric::derive_stream;

fn main() -> mmsbm_gof::Result<()> {
    let mut rng = derive_stream(11, 0);
    let real = MembershipRealization::random(4, 2, &mut rng);
    let a = build_design(&real, 2)?;
    let u0: Vec<u32> = (0..a.table_len())
        .map(|_| (rng.next_f64() < 0.3) as u32)
        .collect();

    let fiber = enumerate_fiber(&a, &u0)?;
    let basis = structural_basis(&a);
    println!(
        "table over {} dyads, fiber holds {} tables, basis has {} moves",
        a.table_len(),
        fiber.len(),
        basis.len()
    );

    let cfg = WalkConfig {
        samples: 50_000,
        burn_in: 1000,
        thin: 8,
        ..WalkConfig::default()
    };
    let samples = sample_fiber(&u0, &basis, &cfg, &mut rng)?;
    let index: HashMap<&[u32], usize> = fiber
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_slice(), i))
        .collect();
    let mut counts = vec![0usize; fiber.len()];
    for s in &samples {
        counts[index[s.as_slice()]] += 1;
    }
    let tv = 0.5
        * counts
            .iter()
            .map(|&c| (c as f64 / cfg.samples as f64 - 1.0 / fiber.len() as f64).abs())
            .sum::<f64>();
    println!(
        "total-variation distance from uniform after {} samples: {tv:.4}",
        cfg.samples
    );
    Ok(())
}
