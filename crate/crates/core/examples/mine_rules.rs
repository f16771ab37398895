//! Exhaustive Horn-rule mining up to length 3, split into IBL and other rules.

use std::path::Path;

use cible::rules::{mine_rules, write_rules_csv, KeepRules, RuleMode, DEFAULT_RANK_PRIOR};
use cible::KnowledgeBase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "kinship".into());
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let kb = KnowledgeBase::load_dir(&root.join("data").join(&name))?;
    let keep = KeepRules {
        mode: RuleMode::All,
        per_head: 2,
        min_support: 5,
        prior: DEFAULT_RANK_PRIOR,
    };
    let mined = mine_rules(&kb, 3, &keep)?;
    println!("{}", mined.quality);
    let mut out = std::io::stdout().lock();
    write_rules_csv(&mut out, &kb.vocab, &mined.rules[..mined.rules.len().min(20)], false)?;
    Ok(())
}
