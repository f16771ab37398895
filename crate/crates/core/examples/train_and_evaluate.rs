//! Trains a model on a bundled dataset and reports filtered test metrics.
//!
//! ```text
//! cargo run --release --example train_and_evaluate -- umls 20
//! ```

use std::path::Path;

use cible::eval::evaluate_model;
use cible::{KnowledgeBase, RankingReport, Split, TrainConfig};

fn main() -> cible::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "umls".into());
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let kb = KnowledgeBase::load_dir(&root.join("data").join(&name))?;
    let mut cfg = TrainConfig::load(&root.join("configs").join(format!("{name}.toml")))?;
    if let Some(epochs) = args.next().and_then(|e| e.parse().ok()) {
        cfg.epochs = epochs;
    }
    let s = kb.stats();
    println!(
        "{name}: {} entities, {} relations, {}/{}/{} train/valid/test",
        s.entities, s.relations, s.train, s.valid, s.test
    );

    let out = cible::train(&kb, &cfg)?;
    if let Some(best) = out.best {
        println!("best valid MRR {:.4} at epoch {}", best.mrr, best.epoch);
    }
    let report = evaluate_model(&out.params, &kb, Split::Test, cfg.objective.scorer(cfg.alpha));
    println!("{}", RankingReport::table_header());
    println!("{}", report.table_row(&format!("{} {}", cfg.model, cfg.objective)));
    Ok(())
}
