//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The process exits 0 after
//! reporting unless `CIBLE_ACCEPTANCE_STRICT` is set, in which case any FAIL
//! makes it exit 1. `CIBLE_ACCEPTANCE_ONLY=1,4,7` restricts the run.

mod common;

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cible::eval::{evaluate, evaluate_model, RankingReport};
use cible::geometry::ModelKind;
use cible::kb::{KnowledgeBase, Split, Triple};
use cible::rules::{check_ibl_rules, mine_rules, KeepRules, RuleMode, RuleScorer, DEFAULT_RANK_PRIOR};
use cible::synth::{lattice_transe, random_kb, thresholded_transe};
use cible::train::gradcheck::{audit, GradCheckConfig};
use cible::train::{train, Objective, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRAIN_BUDGET_S: f64 = 30.0 * 60.0;
const MINING_BUDGET_S: f64 = 10.0 * 60.0;
const AUDIT_BUDGET_S: f64 = 60.0;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn dataset(name: &str) -> KnowledgeBase {
    KnowledgeBase::load_dir(&root().join("data").join(name)).expect("bundled dataset")
}

fn config(name: &str) -> TrainConfig {
    TrainConfig::load(&root().join("configs").join(format!("{name}.toml"))).expect("bundled config")
}

struct Trained {
    report: RankingReport,
    seconds: f64,
}

fn train_and_test(kb: &KnowledgeBase, cfg: &TrainConfig) -> Trained {
    let clock = Instant::now();
    let out = train(kb, cfg).expect("training runs");
    let report = evaluate_model(&out.params, kb, Split::Test, cfg.objective.scorer(cfg.alpha));
    Trained {
        report,
        seconds: clock.elapsed().as_secs_f64(),
    }
}

fn reproduction(name: &str, mrr_min: f64, h10_min: f64) -> (Verdict, Trained) {
    let kb = dataset(name);
    let cfg = config(name);
    let t = train_and_test(&kb, &cfg);
    let a = &t.report.all;
    let v = Verdict::new(
        a.mrr >= mrr_min && a.hits10 >= h10_min && t.seconds < TRAIN_BUDGET_S,
        format!(
            "{} {} on {name}: test MRR {:.3} (need >= {mrr_min}), H@10 {:.1} (need >= {:.0}), {:.0} s (limit {:.0} s)",
            cfg.model.name(),
            cfg.objective.name(),
            a.mrr,
            100.0 * a.hits10,
            100.0 * h10_min,
            t.seconds,
            TRAIN_BUDGET_S
        ),
    );
    (v, t)
}

fn umls(state: &mut State) -> Verdict {
    let (v, t) = reproduction("umls", 0.80, 0.94);
    state.umls = Some(t);
    v
}

fn kinship(_: &mut State) -> Verdict {
    reproduction("kinship", 0.67, 0.92).0
}

#[derive(Default)]
struct State {
    umls: Option<Trained>,
}

fn ablation(state: &mut State) -> Verdict {
    let kb = dataset("umls");
    let base = config("umls");
    let cible_mrr = state
        .umls
        .get_or_insert_with(|| train_and_test(&kb, &base))
        .report
        .all
        .mrr;
    let ible = train_and_test(&kb, &TrainConfig { objective: Objective::IbleCe, ..base.clone() });
    let rotate = train_and_test(
        &kb,
        &TrainConfig {
            model: ModelKind::RotatE,
            objective: Objective::Margin,
            ..base.clone()
        },
    );
    let (i, r) = (ible.report.all.mrr, rotate.report.all.mrr);
    Verdict::new(
        cible_mrr > i && cible_mrr > r,
        format!("UMLS test MRR: CIBLE {cible_mrr:.3}, IBLE alone {i:.3}, RotatE alone (margin) {r:.3}; need CIBLE strictly above both"),
    )
}

fn rule_quality(_: &mut State) -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    for name in ["kinship", "umls"] {
        let kb = dataset(name);
        let clock = Instant::now();
        let q = mine_rules(&kb, 3, &KeepRules::NONE).expect("mining runs").quality;
        let s = clock.elapsed().as_secs_f64();
        let ok = q.ibl.mean_precision > q.non_ibl.mean_precision && s < MINING_BUDGET_S;
        pass &= ok;
        let _ = write!(
            detail,
            "{name}: IBL precision {:.1}% (support {:.1}) vs non-IBL {:.1}% (support {:.1}), {s:.1} s; ",
            100.0 * q.ibl.mean_precision,
            q.ibl.mean_support,
            100.0 * q.non_ibl.mean_precision,
            q.non_ibl.mean_support
        );
    }
    Verdict::new(pass, format!("{detail}need IBL > non-IBL, < {MINING_BUDGET_S:.0} s each"))
}

fn rule_reasoner(_: &mut State) -> Verdict {
    let kb = dataset("umls");
    let mrr = |mode: RuleMode| {
        let keep = KeepRules {
            mode,
            per_head: 50,
            min_support: 1,
            prior: DEFAULT_RANK_PRIOR,
        };
        let rules = mine_rules(&kb, 3, &keep).expect("mining runs").rules;
        evaluate(&RuleScorer::new(&kb, &rules), &kb, Split::Test).all.mrr
    };
    let (ibl, non) = (mrr(RuleMode::IblOnly), mrr(RuleMode::NonIblOnly));
    Verdict::new(
        ibl > non,
        format!("UMLS rule reasoner test MRR, max_len 3, top 50 per head: ibl-only {ibl:.3} vs non-ibl-only {non:.3}"),
    )
}

fn theorem(_: &mut State) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut held = 0;
    let mut facts = 0;
    for _ in 0..20 {
        let n = rng.random_range(10..=100);
        let nr = rng.random_range(1..=4);
        let dim = rng.random_range(1..=3);
        let exact = lattice_transe(n, nr, dim, &mut rng).expect("lattice");
        let rep = check_ibl_rules(&exact.kb);
        facts += rep.facts;
        held += usize::from(rep.holds());
    }
    let mut broken = 0;
    for _ in 0..20 {
        let fuzzy = thresholded_transe(40, 2, 2, 0.6, &mut rng).expect("control");
        broken += usize::from(!check_ibl_rules(&fuzzy.kb).holds());
    }
    Verdict::new(
        held == 20 && broken == 20,
        format!("{held}/20 exact-TransE KBs ({facts} facts) with every IBL rule at precision 1.0; {broken}/20 negative controls with a rule below 1.0"),
    )
}

fn gradient_audit(_: &mut State) -> Verdict {
    let clock = Instant::now();
    let rows = audit(&[0, 1, 2], &GradCheckConfig::default()).expect("audit runs");
    let s = clock.elapsed().as_secs_f64();
    let worst = rows.iter().map(|r| r.report.max_rel_error).fold(0.0, f64::max);
    let checked: usize = rows.iter().map(|r| r.report.checked).sum();
    let skipped: usize = rows.iter().map(|r| r.report.skipped).sum();
    let covered = rows.iter().all(|r| r.report.checked > 0) && rows.len() == 4 * 3 * 3;
    Verdict::new(
        covered && worst < 1e-4 && s < AUDIT_BUDGET_S,
        format!("4 models x 3 objectives x 3 seeds: max relative error {worst:.2e} (need < 1e-4) over {checked} coordinates, {skipped} kink-adjacent skipped, {s:.1} s"),
    )
}

fn oracle_suites(_: &mut State) -> Verdict {
    let seeds = 120;
    common::oracles::ible_and_cible_match_naive_scorer(seeds);
    common::oracles::rule_stats_match_nested_loop_grounding(seeds);
    common::oracles::evaluate_matches_brute_force_ranking(seeds);
    common::oracles::kb_indexes_match_linear_scan(seeds);
    Verdict::new(
        true,
        format!("ible/cible scores (1e-9), rule_stats (exact), filtered ranks (exact), KB indexes: {seeds} seeds each, <= 50 entities"),
    )
}

fn consistency(_: &mut State) -> Verdict {
    let m = common::consistency::margin_optimum_minimises_ible_cross_entropy();
    let c = common::consistency::cible_training_saturates_scores();
    Verdict::new(
        true,
        format!(
            "margin loss {:.4} (floor −γ); IBLE CE {:.5} vs minimum {:.5}; max off-prototype I {:.1e}; CIBLE facts >= {:.4}, non-facts <= {:.4}",
            m.margin, m.ce, m.floor, m.max_other, c.min_fact, c.max_non_fact
        ),
    )
}

struct LargeSet {
    name: &'static str,
    dir_env: &'static str,
    dir: &'static str,
    entities: usize,
    relations: usize,
    train: usize,
}

const LARGE: [LargeSet; 2] = [
    LargeSet {
        name: "FB15k-237",
        dir_env: "CIBLE_FB15K237_DIR",
        dir: "fb15k-237",
        entities: 14_541,
        relations: 237,
        train: 272_115,
    },
    LargeSet {
        name: "WN18RR",
        dir_env: "CIBLE_WN18RR_DIR",
        dir: "wn18rr",
        entities: 40_943,
        relations: 11,
        train: 86_835,
    },
];

fn begin_training(kb: &KnowledgeBase) -> usize {
    let cfg = TrainConfig {
        dim: 200,
        max_steps: Some(2),
        eval_every: 0,
        ..TrainConfig::default()
    };
    train(kb, &cfg).expect("training starts").steps
}

fn write_tsv(path: &Path, triples: &[Triple]) {
    let mut s = String::new();
    for t in triples {
        let _ = writeln!(s, "e{}\tr{}\te{}", t.head, t.relation, t.tail);
    }
    std::fs::write(path, s).unwrap();
}

fn large_datasets(_: &mut State) -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    for set in &LARGE {
        let dir = std::env::var_os(set.dir_env)
            .map(PathBuf::from)
            .unwrap_or_else(|| root().join("data").join(set.dir));
        if dir.join("train.txt").is_file() {
            let kb = KnowledgeBase::load_dir(&dir).expect("dataset loads");
            let ok = kb.train.len() == set.train;
            let steps = begin_training(&kb);
            pass &= ok && steps == 2;
            let _ = write!(detail, "{}: {} train triples (expected {}), {steps} steps; ", set.name, kb.train.len(), set.train);
            continue;
        }
        pass = false;
        // Same-scale stand-in: exercises ingestion and the first steps only.
        let tmp = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let clock = Instant::now();
        let synth = random_kb(set.entities, set.relations, set.train, (0.0, 0.0), &mut rng).unwrap();
        write_tsv(&tmp.path().join("train.txt"), &synth.train);
        write_tsv(&tmp.path().join("valid.txt"), &synth.train[..100]);
        write_tsv(&tmp.path().join("test.txt"), &synth.train[..100]);
        let kb = KnowledgeBase::load_dir(tmp.path()).unwrap();
        let steps = begin_training(&kb);
        let _ = write!(
            detail,
            "{}: not present (set {} or add data/{}); same-scale synthetic stand-in loaded {} train triples and ran {steps} steps in {:.1} s; ",
            set.name,
            set.dir_env,
            set.dir,
            kb.train.len(),
            clock.elapsed().as_secs_f64()
        );
    }
    Verdict::new(pass, detail.trim_end_matches("; ").to_string())
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("CIBLE_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |i: usize| only.as_ref().is_none_or(|o| o.contains(&i));
    let mut state = State::default();
    let criteria: [(usize, &str, fn(&mut State) -> Verdict); 10] = [
        (1, "UMLS reproduction", umls),
        (2, "Kinship reproduction", kinship),
        (3, "Ablation ordering on UMLS", ablation),
        (4, "Rule-quality direction", rule_quality),
        (5, "Rule-reasoner direction", rule_reasoner),
        (6, "IBL rules on exact TransE", theorem),
        (7, "Gradient audit", gradient_audit),
        (8, "Oracle suites", oracle_suites),
        (9, "Margin/IBLE/CIBLE consistency", consistency),
        (10, "FB15k-237 / WN18RR load and train", large_datasets),
    ];
    let mut failed = 0;
    for (i, name, run) in criteria {
        if !wanted(i) {
            continue;
        }
        let v = catch_unwind(AssertUnwindSafe(|| run(&mut state))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!("{} [{i:>2}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {failed} criteria failed");
    if failed > 0 && std::env::var_os("CIBLE_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
