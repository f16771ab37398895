//! Horn rules over the inverse-augmented relation set.
//!
//! A rule `b1 ∧ … ∧ bk → head` (k ≤ 3) grounds on the path
//! `x -b1-> z1 -b2-> … -bk-> y`. Its body count is the number of distinct
//! endpoint pairs `(x, y)`, its support the number of those pairs that are
//! also training facts of the head, and its precision the ratio.
//!
//! IBL rules are the two length-3 templates
//! `rel1 ∧ rel1⁻¹ ∧ rel0 → rel0` and `rel0 ∧ rel1 ∧ rel1⁻¹ → rel0`.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::LinkScorer;
use crate::kb::{EntityId, KnowledgeBase, RelationId, Vocabulary};
use crate::synth::{lattice_transe, ExactTransE};

pub const MAX_RULE_LEN: usize = 3;
pub const DEFAULT_ENTITY_CAP: usize = 5000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Rule {
    pub body: Vec<RelationId>,
    pub head: RelationId,
    pub is_ibl: bool,
}

impl Rule {
    pub fn new(body: Vec<RelationId>, head: RelationId, vocab: &Vocabulary) -> Self {
        let is_ibl = classify_ibl(&body, head, vocab);
        Rule { body, head, is_ibl }
    }

    pub fn body_label(&self, vocab: &Vocabulary, ascii: bool) -> String {
        let sep = if ascii { "&" } else { "∧" };
        self.body
            .iter()
            .map(|&r| vocab.relation_label(r, ascii))
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn label(&self, vocab: &Vocabulary, ascii: bool) -> String {
        let arrow = if ascii { "->" } else { "→" };
        format!(
            "{} {arrow} {}",
            self.body_label(vocab, ascii),
            vocab.relation_label(self.head, ascii)
        )
    }
}

/// Whether `body → head` matches one of the IBL templates.
pub fn classify_ibl(body: &[RelationId], head: RelationId, vocab: &Vocabulary) -> bool {
    let [a, b, c] = body else { return false };
    let first = *b == vocab.inverse(*a) && *c == head;
    let second = *a == head && *c == vocab.inverse(*b);
    first || second
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleMode {
    All,
    IblOnly,
    NonIblOnly,
}

impl RuleMode {
    pub fn admits(self, is_ibl: bool) -> bool {
        match self {
            RuleMode::All => true,
            RuleMode::IblOnly => is_ibl,
            RuleMode::NonIblOnly => !is_ibl,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleMode::All => "all",
            RuleMode::IblOnly => "ibl-only",
            RuleMode::NonIblOnly => "non-ibl-only",
        }
    }
}

impl fmt::Display for RuleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(RuleMode::All),
            "ibl-only" | "ibl" => Ok(RuleMode::IblOnly),
            "non-ibl-only" | "non-ibl" => Ok(RuleMode::NonIblOnly),
            _ => Err(Error::Config(format!(
                "unknown rule mode {s:?} (expected all, ibl-only or non-ibl-only)"
            ))),
        }
    }
}

fn check_len(max_len: usize) -> Result<()> {
    if (1..=MAX_RULE_LEN).contains(&max_len) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "rule length must be between 1 and {MAX_RULE_LEN}, got {max_len}"
        )))
    }
}

/// Bodies of length `len` in lexicographic order.
fn bodies(n_rel: usize, len: usize) -> impl Iterator<Item = Vec<RelationId>> {
    let total = n_rel.pow(len as u32);
    (0..total).map(move |mut code| {
        let mut body = vec![0; len];
        for slot in body.iter_mut().rev() {
            *slot = code % n_rel;
            code /= n_rel;
        }
        body
    })
}

/// Every rule up to `max_len` admitted by `mode`, ordered by head, then body
/// length, then body.
pub fn enumerate_rules(vocab: &Vocabulary, max_len: usize, mode: RuleMode) -> Result<Vec<Rule>> {
    check_len(max_len)?;
    let n_rel = vocab.num_relations();
    let mut out = Vec::new();
    for head in 0..n_rel {
        for len in 1..=max_len {
            for body in bodies(n_rel, len) {
                let rule = Rule::new(body, head, vocab);
                if mode.admits(rule.is_ibl) {
                    out.push(rule);
                }
            }
        }
    }
    Ok(out)
}

/// Number of rules [`enumerate_rules`] would return for `mode = All`.
pub fn rule_count(n_relations: usize, max_len: usize) -> usize {
    (1..=max_len).map(|l| n_relations.pow(l as u32)).sum::<usize>() * n_relations
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RuleStats {
    pub support: usize,
    pub body_count: usize,
    /// `None` when the body never grounds.
    pub precision: Option<f64>,
}

impl RuleStats {
    pub fn new(support: usize, body_count: usize) -> Self {
        RuleStats {
            support,
            body_count,
            precision: (body_count > 0).then(|| support as f64 / body_count as f64),
        }
    }

    pub fn is_supported(&self) -> bool {
        self.body_count > 0
    }
}

/// Endpoints reachable from `x` along `body` in the augmented training set.
fn reach(kb: &KnowledgeBase, x: EntityId, body: &[RelationId], mark: &mut [bool]) -> Vec<EntityId> {
    let mut frontier = vec![x];
    for &r in body {
        let mut next = Vec::new();
        for &z in &frontier {
            for &y in kb.tails_of(z, r) {
                if !mark[y] {
                    mark[y] = true;
                    next.push(y);
                }
            }
        }
        for &y in &next {
            mark[y] = false;
        }
        frontier = next;
    }
    frontier
}

/// Support, body count and precision of one rule by path joins.
pub fn rule_stats(kb: &KnowledgeBase, rule: &Rule) -> RuleStats {
    let mut mark = vec![false; kb.num_entities()];
    let (mut support, mut body_count) = (0, 0);
    for x in 0..kb.num_entities() {
        let ys = reach(kb, x, &rule.body, &mut mark);
        body_count += ys.len();
        support += ys.iter().filter(|&&y| kb.is_train_fact(x, rule.head, y)).count();
    }
    RuleStats::new(support, body_count)
}

/// Dense boolean `n × n` matrix stored as row bitsets.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix {
            n,
            words,
            data: vec![0; n * words],
        }
    }

    fn of_relation(kb: &KnowledgeBase, r: RelationId) -> Self {
        let mut m = Self::zeros(kb.num_entities());
        for &(p, t) in kb.prototype_candidates(r) {
            m.data[p * m.words + t / 64] |= 1 << (t % 64);
        }
        m
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    fn product_into(&self, other: &BitMatrix, out: &mut BitMatrix) {
        let w = self.words;
        out.data.fill(0);
        for i in 0..self.n {
            let (lo, hi) = (i * w, (i + 1) * w);
            for (wi, &word) in self.data[lo..hi].iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let k = wi * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    for (o, b) in out.data[lo..hi].iter_mut().zip(other.row(k)) {
                        *o |= b;
                    }
                }
            }
        }
    }

    fn count(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn and_count(&self, other: &BitMatrix) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }
}

/// Running per-class aggregate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ClassQuality {
    pub rules: usize,
    /// Rules whose body grounds at least once.
    pub supported: usize,
    pub mean_support: f64,
    pub mean_precision: f64,
    #[serde(skip)]
    sum_support: f64,
    #[serde(skip)]
    sum_precision: f64,
}

impl ClassQuality {
    fn add(&mut self, stats: Option<RuleStats>) {
        self.rules += 1;
        if let Some(s) = stats.filter(RuleStats::is_supported) {
            self.supported += 1;
            self.sum_support += s.support as f64;
            self.sum_precision += s.precision.expect("supported");
        }
    }

    fn merge(&mut self, other: &ClassQuality) {
        self.rules += other.rules;
        self.supported += other.supported;
        self.sum_support += other.sum_support;
        self.sum_precision += other.sum_precision;
    }

    fn finish(&mut self) {
        if self.supported > 0 {
            self.mean_support = self.sum_support / self.supported as f64;
            self.mean_precision = self.sum_precision / self.supported as f64;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleQuality {
    pub max_len: usize,
    /// `false` when computed on a uniform rule subsample.
    pub exhaustive: bool,
    pub ibl: ClassQuality,
    pub non_ibl: ClassQuality,
}

impl fmt::Display for RuleQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>12} {:>10} {:>10} {:>10}",
            "class", "rules", "supported", "support", "precision"
        )?;
        for (name, c) in [("IBL", &self.ibl), ("non-IBL", &self.non_ibl)] {
            writeln!(
                f,
                "{:<10} {:>12} {:>10} {:>10.1} {:>9.1}%",
                name,
                c.rules,
                c.supported,
                c.mean_support,
                100.0 * c.mean_precision
            )?;
        }
        write!(
            f,
            "max_len {}, {}",
            self.max_len,
            if self.exhaustive { "exhaustive" } else { "sampled" }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QualityConfig {
    pub max_len: usize,
    /// Exhaustive grounding is refused above this many entities.
    pub entity_cap: usize,
    /// Uniform rule subsample size; `None` mines exhaustively.
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            max_len: MAX_RULE_LEN,
            entity_cap: DEFAULT_ENTITY_CAP,
            sample: None,
            seed: 0,
        }
    }
}

/// A rule with its statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoredRule {
    pub rule: Rule,
    pub stats: RuleStats,
}

impl ScoredRule {
    fn precision(&self) -> f64 {
        self.stats.precision.unwrap_or(0.0)
    }
}

/// Ranking used when keeping the best rules of a head: smoothed precision
/// `support / (body_count + prior)`, then support, both descending, then
/// rule order.
fn better(a: &ScoredRule, b: &ScoredRule, prior: f64) -> Ordering {
    let smoothed = |s: &ScoredRule| s.stats.support as f64 / (s.stats.body_count as f64 + prior);
    smoothed(b)
        .total_cmp(&smoothed(a))
        .then(b.stats.support.cmp(&a.stats.support))
        .then(a.rule.body.len().cmp(&b.rule.body.len()))
        .then(a.rule.body.cmp(&b.rule.body))
}

/// Which rules a mining pass keeps besides the class averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KeepRules {
    pub mode: RuleMode,
    /// Best rules kept per head relation; 0 keeps none.
    pub per_head: usize,
    pub min_support: usize,
    /// Pseudo-count added to the body count when ranking, so rules seen once
    /// do not outrank well-supported ones.
    pub prior: f64,
}

pub const DEFAULT_RANK_PRIOR: f64 = 20.0;

impl KeepRules {
    pub const NONE: KeepRules = KeepRules {
        mode: RuleMode::All,
        per_head: 0,
        min_support: 1,
        prior: DEFAULT_RANK_PRIOR,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MiningResult {
    pub quality: RuleQuality,
    /// Kept rules ordered by head, then rank.
    pub rules: Vec<ScoredRule>,
}

struct Partial {
    ibl: ClassQuality,
    non_ibl: ClassQuality,
    kept: Vec<Vec<ScoredRule>>,
}

impl Partial {
    fn new(n_rel: usize) -> Self {
        Partial {
            ibl: ClassQuality::default(),
            non_ibl: ClassQuality::default(),
            kept: vec![Vec::new(); n_rel],
        }
    }

    fn merge(&mut self, other: Partial, keep: &KeepRules) {
        self.ibl.merge(&other.ibl);
        self.non_ibl.merge(&other.non_ibl);
        for (mine, theirs) in self.kept.iter_mut().zip(other.kept) {
            mine.extend(theirs);
            prune(mine, keep);
        }
    }
}

fn prune(v: &mut Vec<ScoredRule>, keep: &KeepRules) {
    v.sort_by(|a, b| better(a, b, keep.prior));
    v.truncate(keep.per_head);
}

/// Exhaustive mining with boolean matrix products, sharing body prefixes.
/// Class averages cover every rule up to `max_len`; `keep` selects the
/// rules returned alongside, never including the tautology `r ⇒ r`.
pub fn mine_rules(kb: &KnowledgeBase, max_len: usize, keep: &KeepRules) -> Result<MiningResult> {
    check_len(max_len)?;
    let vocab = &kb.vocab;
    let n_rel = kb.num_relations();
    let mats: Vec<BitMatrix> = (0..n_rel).map(|r| BitMatrix::of_relation(kb, r)).collect();

    let visit = |part: &mut Partial, body: &[RelationId], m: &BitMatrix| {
        let body_count = m.count();
        for head in 0..n_rel {
            let is_ibl = classify_ibl(body, head, vocab);
            let stats = (body_count > 0).then(|| RuleStats::new(m.and_count(&mats[head]), body_count));
            if is_ibl {
                part.ibl.add(stats);
            } else {
                part.non_ibl.add(stats);
            }
            if let Some(s) = stats {
                let tautology = body == [head];
                if keep.per_head > 0 && !tautology && keep.mode.admits(is_ibl) && s.support >= keep.min_support {
                    let kept = &mut part.kept[head];
                    kept.push(ScoredRule {
                        rule: Rule {
                            body: body.to_vec(),
                            head,
                            is_ibl,
                        },
                        stats: s,
                    });
                    if kept.len() >= 4 * keep.per_head.max(64) {
                        prune(kept, keep);
                    }
                }
            }
        }
    };

    let partials: Vec<Partial> = (0..n_rel)
        .into_par_iter()
        .map(|r1| {
            let mut part = Partial::new(n_rel);
            visit(&mut part, &[r1], &mats[r1]);
            if max_len >= 2 {
                let mut m2 = BitMatrix::zeros(kb.num_entities());
                let mut m3 = BitMatrix::zeros(kb.num_entities());
                for r2 in 0..n_rel {
                    mats[r1].product_into(&mats[r2], &mut m2);
                    visit(&mut part, &[r1, r2], &m2);
                    if max_len >= 3 {
                        let empty = m2.count() == 0;
                        for r3 in 0..n_rel {
                            if empty {
                                m3.data.fill(0);
                            } else {
                                m2.product_into(&mats[r3], &mut m3);
                            }
                            visit(&mut part, &[r1, r2, r3], &m3);
                        }
                    }
                }
            }
            for kept in &mut part.kept {
                prune(kept, keep);
            }
            part
        })
        .collect();

    let mut total = Partial::new(n_rel);
    for p in partials {
        total.merge(p, keep);
    }
    total.ibl.finish();
    total.non_ibl.finish();
    Ok(MiningResult {
        quality: RuleQuality {
            max_len,
            exhaustive: true,
            ibl: total.ibl,
            non_ibl: total.non_ibl,
        },
        rules: total.kept.into_iter().flatten().collect(),
    })
}

/// Per-class average support and precision over supported rules.
pub fn aggregate_rule_quality(kb: &KnowledgeBase, cfg: &QualityConfig) -> Result<RuleQuality> {
    check_len(cfg.max_len)?;
    match cfg.sample {
        None => {
            if kb.num_entities() > cfg.entity_cap {
                return Err(Error::Config(format!(
                    "{} entities exceed the exhaustive grounding cap of {}; use sampling mode",
                    kb.num_entities(),
                    cfg.entity_cap
                )));
            }
            Ok(mine_rules(kb, cfg.max_len, &KeepRules::NONE)?.quality)
        }
        Some(size) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let rules = sample_rules(&kb.vocab, cfg.max_len, size, &mut rng)?;
            let stats: Vec<RuleStats> = rules.par_iter().map(|r| rule_stats(kb, r)).collect();
            let (mut ibl, mut non_ibl) = (ClassQuality::default(), ClassQuality::default());
            for (rule, s) in rules.iter().zip(stats) {
                if rule.is_ibl {
                    ibl.add(Some(s));
                } else {
                    non_ibl.add(Some(s));
                }
            }
            ibl.finish();
            non_ibl.finish();
            Ok(RuleQuality {
                max_len: cfg.max_len,
                exhaustive: false,
                ibl,
                non_ibl,
            })
        }
    }
}

/// `size` distinct rules drawn uniformly from all rules up to `max_len`,
/// in enumeration order.
pub fn sample_rules<R: Rng + ?Sized>(
    vocab: &Vocabulary,
    max_len: usize,
    size: usize,
    rng: &mut R,
) -> Result<Vec<Rule>> {
    check_len(max_len)?;
    let n_rel = vocab.num_relations();
    let per_head = rule_count(n_rel, max_len) / n_rel.max(1);
    let total = per_head * n_rel;
    let mut picks = sample(rng, total, size.min(total)).into_vec();
    picks.sort_unstable();
    Ok(picks
        .into_iter()
        .map(|code| {
            let (head, mut rest) = (code / per_head, code % per_head);
            let mut len = 1;
            while rest >= n_rel.pow(len as u32) {
                rest -= n_rel.pow(len as u32);
                len += 1;
            }
            let body = bodies(n_rel, len).nth(rest).expect("in range");
            Rule::new(body, head, vocab)
        })
        .collect())
}

/// Statistics of a set of rules.
pub fn score_rules(kb: &KnowledgeBase, rules: Vec<Rule>) -> Vec<ScoredRule> {
    let stats: Vec<RuleStats> = rules.par_iter().map(|r| rule_stats(kb, r)).collect();
    rules
        .into_iter()
        .zip(stats)
        .map(|(rule, stats)| ScoredRule { rule, stats })
        .collect()
}

pub fn write_rules_csv<W: Write>(
    mut w: W,
    vocab: &Vocabulary,
    rules: &[ScoredRule],
    ascii: bool,
) -> std::io::Result<()> {
    writeln!(w, "head,body,is_ibl,support,body_count,precision")?;
    for s in rules {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            csv_field(&vocab.relation_label(s.rule.head, ascii)),
            csv_field(&s.rule.body_label(vocab, ascii)),
            s.rule.is_ibl,
            s.stats.support,
            s.stats.body_count,
            s.stats.precision.map_or(String::new(), |p| p.to_string())
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `score(t) = Σ precision(rule) × #paths(h → t)` over rules with head `r`.
pub fn rule_rank(kb: &KnowledgeBase, ruleset: &[ScoredRule], h: EntityId, r: RelationId) -> Vec<f64> {
    let mut scores = vec![0.0; kb.num_entities()];
    for s in ruleset.iter().filter(|s| s.rule.head == r) {
        let p = s.precision();
        if p == 0.0 {
            continue;
        }
        for (t, c) in path_counts(kb, h, &s.rule.body).into_iter().enumerate() {
            scores[t] += p * c;
        }
    }
    scores
}

/// Number of body paths from `h` to every entity.
pub fn path_counts(kb: &KnowledgeBase, h: EntityId, body: &[RelationId]) -> Vec<f64> {
    let n = kb.num_entities();
    let mut cur = vec![0.0; n];
    cur[h] = 1.0;
    for &r in body {
        let mut next = vec![0.0; n];
        for (z, &c) in cur.iter().enumerate() {
            if c != 0.0 {
                for &y in kb.tails_of(z, r) {
                    next[y] += c;
                }
            }
        }
        cur = next;
    }
    cur
}

/// [`rule_rank`] as a [`LinkScorer`].
pub struct RuleScorer<'a> {
    kb: &'a KnowledgeBase,
    by_head: Vec<Vec<ScoredRule>>,
}

impl<'a> RuleScorer<'a> {
    pub fn new(kb: &'a KnowledgeBase, ruleset: &[ScoredRule]) -> Self {
        let mut by_head = vec![Vec::new(); kb.num_relations()];
        for s in ruleset {
            by_head[s.rule.head].push(s.clone());
        }
        RuleScorer { kb, by_head }
    }
}

impl LinkScorer for RuleScorer<'_> {
    fn score_tails(&self, r: RelationId, heads: &[EntityId]) -> Vec<Vec<f64>> {
        heads
            .iter()
            .map(|&h| rule_rank(self.kb, &self.by_head[r], h, r))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremReport {
    pub entities: usize,
    pub relations: usize,
    pub facts: usize,
    pub ibl_rules: usize,
    pub supported: usize,
    pub min_precision: Option<f64>,
    /// Supported IBL rules with precision below 1, as labels.
    pub violations: Vec<(String, f64)>,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} entities, {} relations, {} facts; {} IBL rules, {} supported; ",
            self.entities, self.relations, self.facts, self.ibl_rules, self.supported
        )?;
        if self.holds() {
            write!(f, "all IBL rules precision 1.0")
        } else {
            write!(
                f,
                "{} IBL rules below precision 1.0 (min {:.4})",
                self.violations.len(),
                self.min_precision.unwrap_or(0.0)
            )
        }
    }
}

/// Precision of every IBL rule on `kb`.
pub fn check_ibl_rules(kb: &KnowledgeBase) -> TheoremReport {
    let rules = enumerate_rules(&kb.vocab, MAX_RULE_LEN, RuleMode::IblOnly).expect("valid length");
    let scored = score_rules(kb, rules);
    let mut report = TheoremReport {
        entities: kb.num_entities(),
        relations: kb.vocab.num_base_relations(),
        facts: kb.train.len(),
        ibl_rules: scored.len(),
        supported: 0,
        min_precision: None,
        violations: Vec::new(),
    };
    for s in &scored {
        let Some(p) = s.stats.precision else { continue };
        report.supported += 1;
        report.min_precision = Some(report.min_precision.map_or(p, |m: f64| m.min(p)));
        if p < 1.0 {
            report.violations.push((s.rule.label(&kb.vocab, true), p));
        }
    }
    report
}

/// Samples an exact-TransE lattice knowledge base and checks that every IBL
/// rule holds on it.
pub fn verify_theorem_iblrule<R: Rng + ?Sized>(
    dim: usize,
    n_entity: usize,
    n_relation: usize,
    rng: &mut R,
) -> Result<TheoremReport> {
    if n_entity > 100 {
        return Err(Error::Config(format!(
            "theorem check is limited to 100 entities, got {n_entity}"
        )));
    }
    let ExactTransE { kb, .. } = lattice_transe(n_entity, n_relation, dim, rng)?;
    Ok(check_ibl_rules(&kb))
}
