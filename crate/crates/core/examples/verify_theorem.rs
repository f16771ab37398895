//! IBL rules on knowledge bases generated by an exact TransE model.
//!
//! Lattice models make every IBL rule hold with precision 1. Thresholded
//! models only approximate TransE, and some rule drops below 1.

use cible::rules::check_ibl_rules;
use cible::synth::{lattice_transe, thresholded_transe};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cible::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (n, r, d) in [(20, 1, 1), (50, 2, 2), (100, 3, 3)] {
        let exact = lattice_transe(n, r, d, &mut rng)?;
        println!("lattice {n}x{r} in {d}D\n{}\n", check_ibl_rules(&exact.kb));
    }
    let fuzzy = thresholded_transe(40, 2, 2, 0.6, &mut rng)?;
    println!("thresholded\n{}", check_ibl_rules(&fuzzy.kb));
    Ok(())
}
