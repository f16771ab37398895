//! Link prediction from mined rules alone: IBL rules against the rest.

use std::path::Path;

use cible::rules::{mine_rules, KeepRules, RuleMode, RuleScorer, DEFAULT_RANK_PRIOR};
use cible::{evaluate, KnowledgeBase, RankingReport, Split};

fn main() -> cible::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let kb = KnowledgeBase::load_dir(&root.join("data/umls"))?;
    println!("{}", RankingReport::table_header());
    for mode in [RuleMode::IblOnly, RuleMode::NonIblOnly, RuleMode::All] {
        let keep = KeepRules {
            mode,
            per_head: 50,
            min_support: 1,
            prior: DEFAULT_RANK_PRIOR,
        };
        let rules = mine_rules(&kb, 3, &keep)?.rules;
        let report = evaluate(&RuleScorer::new(&kb, &rules), &kb, Split::Test);
        println!("{}", report.table_row(mode.name()));
    }
    Ok(())
}
