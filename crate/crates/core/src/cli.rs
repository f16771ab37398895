//! The `cible` command-line front end.
//!
//! Every flag can also be set through an environment variable named
//! `CIBLE_<FLAG>` (upper case, dashes as underscores), e.g. `CIBLE_DATA_DIR`.
//! Each command writes its outputs and a `manifest.json` under `--out-dir`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_model, RankingReport, ScorerKind};
use crate::geometry::ModelKind;
use crate::ible::{explain, Direction};
use crate::kb::{KnowledgeBase, Split, Triple};
use crate::rules::{
    aggregate_rule_quality, mine_rules, verify_theorem_iblrule, write_rules_csv, KeepRules,
    QualityConfig, RuleMode, RuleScorer,
};
use crate::synth;
use crate::train::gradcheck::{audit, GradCheckConfig};
use crate::train::{train, Objective, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "cible",
    version,
    about = "Instance-based knowledge base completion",
    args_override_self = true
)]
pub struct Cli {
    /// Worker threads; defaults to 1 for `train` and all cores otherwise.
    #[arg(long, global = true, env = "CIBLE_WORKERS")]
    pub workers: Option<usize>,

    /// Output directory for every artifact of the command.
    #[arg(long, global = true, env = "CIBLE_OUT_DIR", default_value = "cible-out")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write the best-validation checkpoint.
    Train(TrainArgs),
    /// Filtered link-prediction metrics of a checkpoint.
    Evaluate(EvaluateArgs),
    /// Top prototypes behind a query.
    Explain(ExplainArgs),
    /// Mine Horn rules and report per-class support and precision.
    MineRules(MineArgs),
    /// Finite-difference audit of the closed-form gradients.
    Gradcheck(GradcheckArgs),
    /// Check IBL rules on a sampled exact-TransE knowledge base.
    VerifyTheorem(TheoremArgs),
    /// Write a synthetic dataset directory.
    Synthesize(SynthArgs),
    /// Per-entity projected embeddings for one relation as CSV.
    ExportEmbeddings(ExportArgs),
    /// Repeat the command recorded in a manifest, writing into --out-dir.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory with train.txt, valid.txt and test.txt.
    #[arg(long, env = "CIBLE_DATA_DIR")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Flat TOML file of training hyperparameters.
    #[arg(long, env = "CIBLE_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "CIBLE_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "CIBLE_MODEL")]
    pub model: Option<ModelKind>,
    #[arg(long, env = "CIBLE_OBJECTIVE")]
    pub objective: Option<Objective>,
    #[arg(long, env = "CIBLE_EPOCHS")]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "CIBLE_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "CIBLE_SPLIT", default_value = "test")]
    pub split: Split,
    /// translational, ible or cible.
    #[arg(long, env = "CIBLE_SCORER", default_value = "cible")]
    pub scorer: String,
    /// Overrides the checkpoint's mixing weight.
    #[arg(long, env = "CIBLE_ALPHA")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "CIBLE_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "CIBLE_ENTITY")]
    pub entity: String,
    #[arg(long, env = "CIBLE_RELATION")]
    pub relation: String,
    /// `tail` explains (entity, relation, ?), `head` explains (?, relation, entity).
    #[arg(long, env = "CIBLE_DIRECTION", default_value = "tail")]
    pub direction: Direction,
    #[arg(long, env = "CIBLE_K", default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "CIBLE_MAX_RULE_LEN", default_value_t = 3)]
    pub max_rule_len: usize,
    /// Class of rules written to rules.csv: all, ibl-only or non-ibl-only.
    #[arg(long, env = "CIBLE_MODE", default_value = "all")]
    pub mode: RuleMode,
    /// Write inverses as `^-1` and conjunctions as `&`.
    #[arg(long, env = "CIBLE_ASCII")]
    pub ascii: bool,
    /// Rules written per head relation, best precision first.
    #[arg(long, env = "CIBLE_TOP_PER_HEAD", default_value_t = 50)]
    pub top_per_head: usize,
    #[arg(long, env = "CIBLE_MIN_SUPPORT", default_value_t = 1)]
    pub min_support: usize,
    /// Pseudo-count in the ranking `support / (body_count + prior)`.
    #[arg(long, env = "CIBLE_PRIOR", default_value_t = crate::rules::DEFAULT_RANK_PRIOR)]
    pub prior: f64,
    /// Average over a uniform sample of this many rules instead of all.
    #[arg(long, env = "CIBLE_SAMPLE")]
    pub sample: Option<usize>,
    #[arg(long, env = "CIBLE_ENTITY_CAP", default_value_t = crate::rules::DEFAULT_ENTITY_CAP)]
    pub entity_cap: usize,
    #[arg(long, env = "CIBLE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Also evaluate the kept rules as a reasoner on this split.
    #[arg(long, env = "CIBLE_EVALUATE")]
    pub evaluate: Option<Split>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, env = "CIBLE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of random knowledge bases.
    #[arg(long, env = "CIBLE_SEEDS", default_value_t = 3)]
    pub seeds: u64,
    #[arg(long, env = "CIBLE_STEP", default_value_t = 1e-4)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long, env = "CIBLE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "CIBLE_DIM", default_value_t = 2)]
    pub dim: usize,
    #[arg(long, env = "CIBLE_ENTITIES", default_value_t = 60)]
    pub entities: usize,
    #[arg(long, env = "CIBLE_RELATIONS", default_value_t = 4)]
    pub relations: usize,
    #[arg(long, env = "CIBLE_TRIALS", default_value_t = 20)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Lattice,
    Random,
    Chain,
    ExactFit,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, env = "CIBLE_KIND", value_enum, default_value = "random")]
    pub kind: SynthKind,
    #[arg(long, env = "CIBLE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "CIBLE_ENTITIES", default_value_t = 50)]
    pub entities: usize,
    #[arg(long, env = "CIBLE_RELATIONS", default_value_t = 4)]
    pub relations: usize,
    #[arg(long, env = "CIBLE_DIM", default_value_t = 2)]
    pub dim: usize,
    #[arg(long, env = "CIBLE_FACTS", default_value_t = 400)]
    pub facts: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "CIBLE_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "CIBLE_RELATION")]
    pub relation: String,
    /// Output file name inside --out-dir.
    #[arg(long, env = "CIBLE_OUT", default_value = "embeddings.csv")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// A manifest.json written by an earlier command.
    #[arg(long, env = "CIBLE_MANIFEST")]
    pub manifest: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one invocation, written as `manifest.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// `CIBLE_*` variables set at launch.
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    pub version: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub wall_seconds: f64,
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

fn dataset_inputs(dir: &Path) -> Result<Vec<FileDigest>> {
    ["train.txt", "valid.txt", "test.txt", "entities.dict", "relations.dict"]
        .iter()
        .map(|f| dir.join(f))
        .filter(|p| p.is_file())
        .map(|p| digest(&p))
        .collect()
}

struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl Run {
    fn output(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.output(name);
        fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.wall_seconds = self.clock.elapsed().as_secs_f64();
        self.manifest.outputs.push("manifest.json".into());
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn load_checkpoint_for(path: &Path, kb: &KnowledgeBase) -> Result<Checkpoint> {
    let ck = Checkpoint::load(path)?;
    let p = &ck.params;
    if p.n_entity() != kb.num_entities() || p.n_relation() != kb.num_relations() {
        return Err(Error::Compat(format!(
            "checkpoint has {} entities and {} relations, dataset has {} and {}",
            p.n_entity(),
            p.n_relation(),
            kb.num_entities(),
            kb.num_relations()
        )));
    }
    Ok(ck)
}

fn resolve_relation(kb: &KnowledgeBase, name: &str) -> Result<usize> {
    kb.vocab.relation_id(name).ok_or_else(|| {
        Error::Vocab(format!(
            "unknown relation {name:?}; did you mean {}?",
            kb.vocab.suggest_relations(name, 3).join(", ")
        ))
    })
}

fn resolve_entity(kb: &KnowledgeBase, name: &str) -> Result<usize> {
    kb.vocab.entity_id(name).ok_or_else(|| {
        Error::Vocab(format!(
            "unknown entity {name:?}; did you mean {}?",
            kb.vocab.suggest_entities(name, 3).join(", ")
        ))
    })
}

fn write_tsv(path: &Path, kb: &KnowledgeBase, triples: &[Triple]) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(f);
    for t in triples {
        let (h, r, t) = kb.vocab.decode(t);
        writeln!(w, "{h}\t{r}\t{t}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command; `Ok` carries the exit code (1 for a failed check).
pub fn run(cli: Cli, argv: Vec<String>) -> Result<i32> {
    if let Command::Rerun(a) = &cli.command {
        return rerun(&a.manifest, &cli.out_dir);
    }
    let is_train = matches!(cli.command, Command::Train(_));
    let workers = cli.workers.unwrap_or(if is_train { 1 } else { 0 });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(cli.out_dir.display().to_string(), e))?;
    let name = match &cli.command {
        Command::Train(_) => "train",
        Command::Evaluate(_) => "evaluate",
        Command::Explain(_) => "explain",
        Command::MineRules(_) => "mine-rules",
        Command::Gradcheck(_) => "gradcheck",
        Command::VerifyTheorem(_) => "verify-theorem",
        Command::Synthesize(_) => "synthesize",
        Command::ExportEmbeddings(_) => "export-embeddings",
        Command::Rerun(_) => unreachable!("handled above"),
    };
    let mut run = Run {
        out_dir: cli.out_dir.clone(),
        manifest: RunManifest {
            command: name.into(),
            argv,
            env: cible_env(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: None,
            workers: pool.current_num_threads(),
            config: Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_seconds: 0.0,
        },
        clock: Instant::now(),
    };
    let code = pool.install(|| match cli.command {
        Command::Train(a) => cmd_train(&mut run, a),
        Command::Evaluate(a) => cmd_evaluate(&mut run, a),
        Command::Explain(a) => cmd_explain(&mut run, a),
        Command::MineRules(a) => cmd_mine_rules(&mut run, a),
        Command::Gradcheck(a) => cmd_gradcheck(&mut run, a),
        Command::VerifyTheorem(a) => cmd_verify_theorem(&mut run, a),
        Command::Synthesize(a) => cmd_synthesize(&mut run, a),
        Command::ExportEmbeddings(a) => cmd_export_embeddings(&mut run, a),
        Command::Rerun(_) => unreachable!("handled above"),
    })?;
    run.finish()?;
    Ok(code)
}

fn cible_env() -> BTreeMap<String, String> {
    std::env::vars()
        .filter(|(k, _)| k.starts_with("CIBLE_") && k != "CIBLE_OUT_DIR")
        .collect()
}

fn rerun(manifest: &Path, out_dir: &Path) -> Result<i32> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest.display().to_string(), e))?;
    let m: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: not a run manifest: {e}", manifest.display())))?;
    if m.argv.is_empty() {
        return Err(Error::Data(format!("{}: empty argv", manifest.display())));
    }
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("CIBLE_")) {
        std::env::remove_var(k);
    }
    for (k, v) in &m.env {
        std::env::set_var(k, v);
    }
    let mut argv = m.argv;
    argv.push("--out-dir".into());
    argv.push(out_dir.display().to_string());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::Config(format!("recorded argv no longer parses: {e}")))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(Error::Config("a rerun manifest cannot be rerun".into()));
    }
    run(cli, argv)
}

fn cmd_train(run: &mut Run, a: TrainArgs) -> Result<i32> {
    let mut cfg = match &a.config {
        Some(p) => {
            run.manifest.inputs.push(digest(p)?);
            TrainConfig::load(p)?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.model {
        cfg.model = m;
    }
    if let Some(o) = a.objective {
        cfg.objective = o;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    let kb = KnowledgeBase::load_dir(&a.data.data_dir)?;
    run.manifest.inputs.extend(dataset_inputs(&a.data.data_dir)?);
    run.manifest.seed = Some(cfg.seed);
    run.manifest.config = serde_json::to_value(&cfg).expect("config serializes");
    let stats = kb.stats();
    println!(
        "{} entities, {} relations, {} / {} / {} triples",
        stats.entities, stats.relations, stats.train, stats.valid, stats.test
    );

    let outcome = train(&kb, &cfg)?;
    let alpha = (cfg.objective == Objective::CibleCe).then_some(cfg.alpha);
    let ck = Checkpoint::new(outcome.params.clone(), alpha);
    ck.save(&run.output("checkpoint.bin"))?;
    run.write("loss.csv", outcome.history.to_csv().as_bytes())?;
    run.write("config.toml", cfg.to_toml_string().as_bytes())?;

    let scorer = cfg.objective.scorer(cfg.alpha);
    let report = evaluate_model(&outcome.params, &kb, Split::Test, scorer);
    println!(
        "{} epochs, {} steps{}",
        outcome.epochs,
        outcome.steps,
        if outcome.stopped_early { " (early stop)" } else { "" }
    );
    if let Some(b) = outcome.best {
        println!("best valid MRR {:.4} at epoch {}", b.mrr, b.epoch);
    }
    println!("{}", RankingReport::table_header());
    println!("{}", report.table_row(&format!("{} test", scorer.name())));
    run.write(
        "train_summary.json",
        &json_bytes(&json!({
            "epochs": outcome.epochs,
            "steps": outcome.steps,
            "stopped_early": outcome.stopped_early,
            "negative_fallbacks": outcome.negative_fallbacks,
            "best": outcome.best,
            "validation": outcome.validation,
            "test": report,
            "scorer": scorer,
        })),
    )?;
    Ok(0)
}

fn cmd_evaluate(run: &mut Run, a: EvaluateArgs) -> Result<i32> {
    let kb = KnowledgeBase::load_dir(&a.data.data_dir)?;
    run.manifest.inputs.extend(dataset_inputs(&a.data.data_dir)?);
    run.manifest.inputs.push(digest(&a.checkpoint)?);
    let ck = load_checkpoint_for(&a.checkpoint, &kb)?;
    let kind = ScorerKind::parse(&a.scorer, a.alpha.or(ck.alpha))?;
    run.manifest.config = json!({ "split": a.split.to_string(), "scorer": kind });
    let report = evaluate_model(&ck.params, &kb, a.split, kind);
    println!("{report}");
    run.write("report.json", &json_bytes(&report))?;
    Ok(0)
}

fn cmd_explain(run: &mut Run, a: ExplainArgs) -> Result<i32> {
    let kb = KnowledgeBase::load_dir(&a.data.data_dir)?;
    run.manifest.inputs.extend(dataset_inputs(&a.data.data_dir)?);
    run.manifest.inputs.push(digest(&a.checkpoint)?);
    let ck = load_checkpoint_for(&a.checkpoint, &kb)?;
    let e = resolve_entity(&kb, &a.entity)?;
    let r = resolve_relation(&kb, &a.relation)?;
    run.manifest.config = json!({
        "entity": a.entity, "relation": a.relation, "direction": a.direction, "k": a.k,
    });
    let ex = explain(&ck.params, &kb, e, r, a.direction, a.k);
    let text = ex.to_text();
    print!("{text}");
    run.write("explanation.txt", text.as_bytes())?;
    run.write("explanation.json", &json_bytes(&ex))?;
    Ok(0)
}

fn cmd_mine_rules(run: &mut Run, a: MineArgs) -> Result<i32> {
    let kb = KnowledgeBase::load_dir(&a.data.data_dir)?;
    run.manifest.inputs.extend(dataset_inputs(&a.data.data_dir)?);
    run.manifest.seed = Some(a.seed);
    run.manifest.config = json!({
        "max_rule_len": a.max_rule_len, "mode": a.mode, "ascii": a.ascii,
        "top_per_head": a.top_per_head, "min_support": a.min_support, "prior": a.prior,
        "sample": a.sample, "entity_cap": a.entity_cap,
    });
    let keep = KeepRules {
        mode: a.mode,
        per_head: a.top_per_head,
        min_support: a.min_support,
        prior: a.prior,
    };
    let (quality, rules) = match a.sample {
        None if kb.num_entities() <= a.entity_cap => {
            let m = mine_rules(&kb, a.max_rule_len, &keep)?;
            (m.quality, m.rules)
        }
        _ => {
            let cfg = QualityConfig {
                max_len: a.max_rule_len,
                entity_cap: a.entity_cap,
                sample: a.sample,
                seed: a.seed,
            };
            (aggregate_rule_quality(&kb, &cfg)?, Vec::new())
        }
    };
    println!("{quality}");
    let mut csv = Vec::new();
    write_rules_csv(&mut csv, &kb.vocab, &rules, a.ascii).expect("in-memory write");
    run.write("rules.csv", &csv)?;
    let mut summary = json!({ "quality": quality, "rules_written": rules.len() });
    if let Some(split) = a.evaluate {
        let report = evaluate(&RuleScorer::new(&kb, &rules), &kb, split);
        println!("{}", RankingReport::table_header());
        println!("{}", report.table_row(&format!("rules ({})", a.mode)));
        summary["reasoner"] = serde_json::to_value(&report).expect("report serializes");
    }
    run.write("quality.json", &json_bytes(&summary))?;
    Ok(0)
}

fn cmd_gradcheck(run: &mut Run, a: GradcheckArgs) -> Result<i32> {
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    run.manifest.seed = Some(a.seed);
    run.manifest.config = json!({ "seeds": seeds, "step": a.step });
    let cfg = GradCheckConfig {
        step: a.step,
        max_coords: None,
    };
    let rows = audit(&seeds, &cfg)?;
    println!(
        "{:<10} {:<22} {:>5} {:>8} {:>8} {:>12}",
        "model", "objective", "seed", "checked", "skipped", "max rel err"
    );
    let mut worst: f64 = 0.0;
    for r in &rows {
        worst = worst.max(r.report.max_rel_error);
        println!(
            "{:<10} {:<22} {:>5} {:>8} {:>8} {:>12.3e}",
            r.model.name(),
            r.objective,
            r.seed,
            r.report.checked,
            r.report.skipped,
            r.report.max_rel_error
        );
    }
    let pass = worst < 1e-4;
    println!("max relative error {worst:.3e} ({})", if pass { "ok" } else { "FAILED" });
    run.write("gradcheck.json", &json_bytes(&rows))?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_verify_theorem(run: &mut Run, a: TheoremArgs) -> Result<i32> {
    run.manifest.seed = Some(a.seed);
    run.manifest.config = json!({
        "dim": a.dim, "entities": a.entities, "relations": a.relations, "trials": a.trials,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut reports = Vec::new();
    for _ in 0..a.trials {
        let rep = verify_theorem_iblrule(a.dim, a.entities, a.relations, &mut rng)?;
        println!("{rep}");
        reports.push(rep);
    }
    let all = reports.iter().all(|r| r.holds());
    println!(
        "{}",
        if all {
            "all IBL rules precision 1.0"
        } else {
            "some IBL rules fall below precision 1.0"
        }
    );
    run.write("theorem.json", &json_bytes(&reports))?;
    Ok(if all { 0 } else { 1 })
}

fn cmd_synthesize(run: &mut Run, a: SynthArgs) -> Result<i32> {
    run.manifest.seed = Some(a.seed);
    run.manifest.config = json!({
        "kind": a.kind, "entities": a.entities, "relations": a.relations,
        "dim": a.dim, "facts": a.facts,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let kb = match a.kind {
        SynthKind::Lattice => synth::lattice_transe(a.entities, a.relations, a.dim, &mut rng)?.kb,
        SynthKind::Random => synth::random_kb(a.entities, a.relations, a.facts, (0.1, 0.1), &mut rng)?,
        SynthKind::Chain => synth::chain_kb(a.entities)?,
        SynthKind::ExactFit => synth::exact_fit_kb()?,
    };
    for (file, split) in [("train.txt", Split::Train), ("valid.txt", Split::Valid), ("test.txt", Split::Test)] {
        let path = run.output(file);
        write_tsv(&path, &kb, kb.split(split))?;
    }
    let s = kb.stats();
    println!(
        "{} entities, {} relations, {} / {} / {} triples",
        s.entities, s.relations, s.train, s.valid, s.test
    );
    Ok(0)
}

fn cmd_export_embeddings(run: &mut Run, a: ExportArgs) -> Result<i32> {
    let kb = KnowledgeBase::load_dir(&a.data.data_dir)?;
    run.manifest.inputs.extend(dataset_inputs(&a.data.data_dir)?);
    run.manifest.inputs.push(digest(&a.checkpoint)?);
    let ck = load_checkpoint_for(&a.checkpoint, &kb)?;
    let r = resolve_relation(&kb, &a.relation)?;
    run.manifest.config = json!({ "relation": a.relation });
    let rows = ck.params.project_all(r);
    let mut out = String::new();
    for (e, row) in rows.outer_iter().enumerate() {
        out.push_str(&csv_name(kb.vocab.entity_name(e)));
        for x in row {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    run.write(&a.out, out.as_bytes())?;
    println!("{} rows of dimension {}", rows.nrows(), rows.ncols());
    Ok(0)
}

fn csv_name(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
