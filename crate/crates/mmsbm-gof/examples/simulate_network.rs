//! Draw a network from the generative model and summarize it.
//!
//! ```text
//! cargo run --release --example simulate_network
//! ```

use mmsbm_gof::mmsbm::{simulate_network, Hyperparams};
use mmsbm_gof::netio::emit_edge_list;
use mmsbm_gof::numeric::derive_stream;

fn main() -> mmsbm_gof::Result<()> {
    // Three blocks, sparse within-block ties (Beta(1,10)) and even-odds
    // between-block ties (Beta(1,1)).
    let hyper = Hyperparams::with_beta_pattern(3, 1.0, 10.0, 1.0)?;
    let mut rng = derive_stream(7, 0);
    let sim = simulate_network(&hyper, 12, &mut rng)?;

    println!(
        "simulated D={} network with {} edges (density {:.3})",
        sim.y.node_count(),
        sim.y.edge_count(),
        sim.y.edge_count() as f64 / sim.y.dyads().count() as f64
    );
    println!("block tie probabilities B:");
    for k in 0..3 {
        let row: Vec<String> = (0..3).map(|l| format!("{:.3}", sim.b[k * 3 + l])).collect();
        println!("  {}", row.join("  "));
    }
    println!("membership of node 0: {:?}", sim.theta[0]);
    println!("edge list:\n{}", emit_edge_list(&sim.y));
    Ok(())
}
