//! Saves trained parameters, reloads them and checks the scores agree.

use cible::synth::random_kb;
use cible::{Checkpoint, ModelKind, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cible::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let kb = random_kb(40, 3, 300, (0.1, 0.1), &mut rng)?;
    let cfg = TrainConfig {
        model: ModelKind::TransR,
        dim: 16,
        epochs: 10,
        ..TrainConfig::default()
    };
    let params = cible::train(&kb, &cfg)?.params;
    let path = std::env::temp_dir().join("cible-example.ckpt");
    Checkpoint::new(params.clone(), Some(cfg.alpha)).save(&path)?;
    let back = Checkpoint::load(&path)?;
    let t = kb.test[0];
    println!(
        "score before {:.6}, after {:.6}, {} parameters, {}",
        params.score(t.head, t.relation, t.tail),
        back.params.score(t.head, t.relation, t.tail),
        back.params.param_count(),
        path.display()
    );
    Ok(())
}
