//! Prototype distances with and without relation projections.
//!
//! TransE and RotatE compare entities the same way under every relation;
//! TransR and R-RotatE compare them through `W_r`.

use cible::synth::random_kb;
use cible::{ModelKind, ModelParams, ModelShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cible::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kb = random_kb(6, 3, 12, (0.0, 0.0), &mut rng)?;
    for kind in ModelKind::ALL {
        let shape = ModelShape {
            kind,
            n_entity: kb.num_entities(),
            n_relation: kb.num_relations(),
            dim: 8,
            norm: kind.default_norm(),
            gamma: 6.0,
        };
        let p = ModelParams::init(shape, 1.0, &mut rng)?;
        let d: Vec<String> = (0..kb.num_relations())
            .map(|r| format!("{:.3}", p.prototype_distance(0, 1, r)))
            .collect();
        println!("{:<9} d(e0, e1) per relation: {}", kind.name(), d.join(" "));
    }
    Ok(())
}
