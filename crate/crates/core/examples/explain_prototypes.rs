//! Shows which training entities act as prototypes for a query.
//!
//! A short training run on kinship, then the top prototypes for
//! `(head, relation, ?)` with the facts that make them relevant.

use std::path::Path;

use cible::ible::{explain, Direction};
use cible::{KnowledgeBase, TrainConfig};

fn main() -> cible::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let kb = KnowledgeBase::load_dir(&root.join("data/kinship"))?;
    let cfg = TrainConfig {
        epochs: 5,
        eval_every: 0,
        ..TrainConfig::load(&root.join("configs/kinship.toml"))?
    };
    let params = cible::train(&kb, &cfg)?.params;

    for t in kb.test.iter().take(3) {
        let e = explain(&params, &kb, t.head, t.relation, Direction::Tail, 3);
        let (_, _, gold) = kb.vocab.decode(t);
        println!("gold answer {gold}");
        print!("{}", e.to_text());
        let e = explain(&params, &kb, t.tail, t.relation, Direction::Head, 3);
        print!("{}", e.to_text());
        println!();
    }
    Ok(())
}
