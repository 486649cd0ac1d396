//! Build a design matrix from a membership realization, produce its Markov
//! basis, and cross-check the construction against the toric-ideal
//! saturation engine.
//!
//! ```text
//! cargo run --release --example markov_basis
//! ```

use mmsbm_gof::design::build_design;
use mmsbm_gof::markov::{
    enumerate_fiber, kernel_lattice_basis, structural_basis, toric, toric_generators,
    verify_connectivity,
};
use mmsbm_gof::mmsbm::MembershipRealization;

fn main() -> mmsbm_gof::Result<()> {
    // Three nodes, two blocks, all four classes in play.
    let classes = [(0, 0), (0, 1), (1, 0), (1, 1), (0, 0), (1, 1)];
    let real = MembershipRealization::from_classes(3, 2, &classes)?;
    let a = build_design(&real, 2)?;

    println!("design matrix (dense):\n{}", a.to_dense_csv());

    let basis = structural_basis(&a);
    println!("structural Markov basis ({} moves):", basis.len());
    print!("{}", basis.to_lines());

    let kernel = kernel_lattice_basis(&a.to_dense())?;
    println!("\ninteger kernel rank: {}", kernel.len());

    let gens = toric_generators(&a.to_dense())?;
    println!("toric ideal generators ({}):", gens.len());
    for g in &gens {
        println!("  {g}");
    }

    let same = toric::same_ideal(&basis.to_binomials(), &gens, a.table_len())?;
    println!("\nstructural basis generates the same ideal: {same}");

    let u = [1, 0, 1, 0, 0, 1];
    let fiber = enumerate_fiber(&a, &u)?;
    let connected = verify_connectivity(&basis, &a, &u)?;
    println!(
        "fiber of {u:?} has {} tables; basis connects it: {connected}",
        fiber.len()
    );
    Ok(())
}
