//! Measure the two quantitative symmetriser properties over a sample pool
//! from the bounded-separation cone: the near-diagonal constant (smallest
//! eigenvalue of the diagonally rescaled symmetriser) and the family-wise
//! commutator constant (pool supremum of the commutator pencil ratio divided
//! by epsilon, compared across three decades of epsilon).
//!
//! The pool mixes magnitudes across four stratified decades. Sampling at a
//! single magnitude would leave each epsilon in a different regime and the
//! constants would drift instead of plateauing.

use quasisym::runner::{COMMUTATOR_EPS_GRID, PROPERTY_EPS_GRID, SEPARATION_BOUND};
use quasisym::symmetriser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let m = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pool = symmetriser::cone_pool(&mut rng, m, SEPARATION_BOUND, 4.0, 500);

    let near = symmetriser::near_diagonal_constant(&pool, &PROPERTY_EPS_GRID, SEPARATION_BOUND)
        .unwrap();
    println!(
        "near-diagonal constant c0 = {:.6}  over {} samples (pass {})",
        near.constant_estimate, near.samples, near.pass
    );

    let comm =
        symmetriser::commutator_family_constant(&pool, &COMMUTATOR_EPS_GRID, 8, &mut rng).unwrap();
    println!(
        "commutator constant C = {:.6}, spread across epsilons = {:.4} (pass {})",
        comm.constant_estimate, comm.worst_ratio, comm.pass
    );
    for (key, value) in &comm.details {
        if key.starts_with("constant_over_eps") {
            println!("  {key} = {value:.6}");
        }
    }
}
