//! Fit the bundled monastery network by collapsed Gibbs sampling and look
//! at the posterior mean tie probabilities.
//!
//! ```text
//! cargo run --release --example fit_posterior
//! ```

use mmsbm_gof::mmsbm::{fit, GibbsSchedule, Hyperparams};
use mmsbm_gof::netio::load_sampson;
use mmsbm_gof::numeric::derive_stream;

fn main() -> mmsbm_gof::Result<()> {
    let y = load_sampson()?;
    let hyper = Hyperparams::with_beta_pattern(3, 1.0, 2.0, 1.0)?;
    let mut rng = derive_stream(42, 0);
    let summary = fit(&y, &hyper, GibbsSchedule::default(), 20, &mut rng)?;

    let dy = y.dyads();
    let (mut edge_p, mut non_p) = (Vec::new(), Vec::new());
    for idx in 0..dy.count() {
        let (i, j) = dy.pair(idx);
        if y.get(i, j) == 1 {
            edge_p.push(summary.p_hat[idx]);
        } else {
            non_p.push(summary.p_hat[idx]);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "fitted K=3 over {} retained sweeps; kept {} realizations",
        summary.draws_used,
        summary.realizations.len()
    );
    println!(
        "mean fitted tie probability at observed edges:     {:.3}",
        mean(&edge_p)
    );
    println!(
        "mean fitted tie probability at observed non-edges: {:.3}",
        mean(&non_p)
    );
    println!(
        "realizations taken at sweeps {:?} ...",
        &summary.realization_sweeps[..5.min(summary.realization_sweeps.len())]
    );
    Ok(())
}
