//! Triple storage, vocabularies and the lookup indexes used by scoring,
//! training and filtered evaluation.
//!
//! Relations are stored in augmented form: every base relation `r` has a
//! synthetic inverse `r⁻¹` with id `n_base + r`. Head queries `(?, r, t)` are
//! answered as tail queries `(t, r⁻¹, ?)`, so everything downstream of this
//! module only deals with tail queries.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EntityId = usize;
pub type RelationId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub const fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

impl From<(EntityId, RelationId, EntityId)> for Triple {
    fn from((h, r, t): (EntityId, RelationId, EntityId)) -> Self {
        Triple::new(h, r, t)
    }
}

const INVERSE_SUFFIX: &str = "⁻¹";
const INVERSE_SUFFIX_ASCII: &str = "^-1";

/// Entity and relation name ↔ id bijections.
///
/// Only base relations are named in files; inverse ids are derived as
/// `num_base_relations() + r`, so the base relation set has to be complete
/// before any triple is augmented.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_index: HashMap<String, EntityId>,
    relation_index: HashMap<String, RelationId>,
    frozen: bool,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a frozen vocabulary from explicit name lists (ids are positions).
    pub fn from_names(
        entities: impl IntoIterator<Item = String>,
        relations: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        for name in entities {
            if vocab.entity_index.contains_key(&name) {
                return Err(Error::Vocab(format!("duplicate entity name {name:?}")));
            }
            vocab.intern_entity(&name)?;
        }
        for name in relations {
            if vocab.relation_index.contains_key(&name) {
                return Err(Error::Vocab(format!("duplicate relation name {name:?}")));
            }
            vocab.intern_relation(&name)?;
        }
        vocab.freeze();
        Ok(vocab)
    }

    /// Loads `id<TAB>name` dictionaries; the resulting vocabulary is frozen.
    pub fn from_dict_files(entities: &Path, relations: &Path) -> Result<Self> {
        Self::from_names(read_dict(entities)?, read_dict(relations)?)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_base_relations(&self) -> usize {
        self.relations.len()
    }

    /// Base plus inverse relations.
    pub fn num_relations(&self) -> usize {
        2 * self.relations.len()
    }

    pub fn inverse(&self, r: RelationId) -> RelationId {
        let n = self.relations.len();
        debug_assert!(r < 2 * n, "relation id {r} out of range");
        if r < n {
            r + n
        } else {
            r - n
        }
    }

    pub fn is_inverse(&self, r: RelationId) -> bool {
        r >= self.relations.len()
    }

    pub fn base_relation(&self, r: RelationId) -> RelationId {
        if self.is_inverse(r) {
            r - self.relations.len()
        } else {
            r
        }
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied()
    }

    /// Resolves a relation name; a trailing `⁻¹` or `^-1` selects the inverse.
    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        if let Some(&r) = self.relation_index.get(name) {
            return Some(r);
        }
        let base = name
            .strip_suffix(INVERSE_SUFFIX)
            .or_else(|| name.strip_suffix(INVERSE_SUFFIX_ASCII))?;
        self.relation_index.get(base).map(|&r| self.inverse(r))
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities[id]
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities
    }

    pub fn base_relation_names(&self) -> &[String] {
        &self.relations
    }

    pub fn relation_name(&self, id: RelationId) -> String {
        self.relation_label(id, false)
    }

    pub fn relation_label(&self, id: RelationId, ascii: bool) -> String {
        let base = &self.relations[self.base_relation(id)];
        if !self.is_inverse(id) {
            base.clone()
        } else if ascii {
            format!("{base}{INVERSE_SUFFIX_ASCII}")
        } else {
            format!("{base}{INVERSE_SUFFIX}")
        }
    }

    pub fn intern_entity(&mut self, name: &str) -> Result<EntityId> {
        if let Some(&id) = self.entity_index.get(name) {
            return Ok(id);
        }
        if self.frozen {
            return Err(Error::Vocab(format!("unknown entity {name:?}")));
        }
        let id = self.entities.len();
        self.entities.push(name.to_owned());
        self.entity_index.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn intern_relation(&mut self, name: &str) -> Result<RelationId> {
        if let Some(&id) = self.relation_index.get(name) {
            return Ok(id);
        }
        if self.frozen {
            return Err(Error::Vocab(format!("unknown relation {name:?}")));
        }
        let id = self.relations.len();
        self.relations.push(name.to_owned());
        self.relation_index.insert(name.to_owned(), id);
        Ok(id)
    }

    /// Decodes an integer triple back to names.
    pub fn decode(&self, t: &Triple) -> (String, String, String) {
        (
            self.entity_name(t.head).to_owned(),
            self.relation_name(t.relation),
            self.entity_name(t.tail).to_owned(),
        )
    }

    /// Entity names closest to `name` by edit distance, for error messages.
    pub fn suggest_entities(&self, name: &str, k: usize) -> Vec<String> {
        suggest(self.entities.iter(), name, k)
    }

    pub fn suggest_relations(&self, name: &str, k: usize) -> Vec<String> {
        suggest(self.relations.iter(), name, k)
    }
}

fn suggest<'a>(names: impl Iterator<Item = &'a String>, query: &str, k: usize) -> Vec<String> {
    let q = query.to_lowercase();
    let mut scored: Vec<(usize, &String)> = names
        .map(|n| (edit_distance(&q, &n.to_lowercase()), n))
        .collect();
    scored.sort();
    scored.into_iter().take(k).map(|(_, n)| n.clone()).collect()
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn read_dict(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(name), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(path, i + 1, "expected `id<TAB>name`"));
        };
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| parse_err(path, i + 1, format!("bad id {id:?}")))?;
        rows.push((id, name.to_owned()));
    }
    rows.sort();
    for (pos, (id, _)) in rows.iter().enumerate() {
        if *id != pos {
            return Err(Error::Data(format!(
                "{}: ids must be contiguous from 0 (missing {pos})",
                path.display()
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, n)| n).collect())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

/// Parses `head<TAB>relation<TAB>tail` lines from any reader.
///
/// `label` is only used in error messages.
pub fn parse_tsv<R: Read>(
    reader: R,
    label: &Path,
    mut vocab: Vocabulary,
) -> Result<(Vocabulary, Vec<Triple>)> {
    let mut triples = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(label.display().to_string(), e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                label,
                i + 1,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let at_line = |e: Error| match e {
            Error::Vocab(msg) => Error::Vocab(format!("{}:{}: {msg}", label.display(), i + 1)),
            other => other,
        };
        let h = vocab.intern_entity(fields[0]).map_err(at_line)?;
        let r = vocab.intern_relation(fields[1]).map_err(at_line)?;
        let t = vocab.intern_entity(fields[2]).map_err(at_line)?;
        triples.push(Triple::new(h, r, t));
    }
    Ok((vocab, triples))
}

/// Loads a TSV triple file. Without a vocabulary a fresh extendable one is
/// created; a frozen vocabulary rejects unknown names.
pub fn load_tsv(path: &Path, vocab: Option<Vocabulary>) -> Result<(Vocabulary, Vec<Triple>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_tsv(file, path, vocab.unwrap_or_default())
}

/// Returns every triple followed by its inverse `(t, r⁻¹, h)`.
pub fn augment_inverses(triples: &[Triple], vocab: &Vocabulary) -> Vec<Triple> {
    let mut out = Vec::with_capacity(2 * triples.len());
    for t in triples {
        out.push(*t);
        out.push(Triple::new(t.tail, vocab.inverse(t.relation), t.head));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}"))),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

/// Per-relation view of the (augmented) training facts.
#[derive(Clone, Debug, Default)]
pub struct RelationIndex {
    /// Distinct `(p, t)` pairs, sorted.
    pub pairs: Vec<(EntityId, EntityId)>,
    /// Distinct tails with their prototype heads (both ascending).
    pub by_tail: Vec<(EntityId, Vec<EntityId>)>,
    /// Distinct heads, ascending.
    pub heads: Vec<EntityId>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetStats {
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    pub vocab: Vocabulary,
    /// Splits as loaded (base relations only, duplicates kept).
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    train_augmented: Vec<Triple>,
    relations: Vec<RelationIndex>,
    train_tails: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    known_tails: HashMap<(EntityId, RelationId), Vec<EntityId>>,
}

impl KnowledgeBase {
    pub fn new(
        vocab: Vocabulary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        let (ne, nr) = (vocab.num_entities(), vocab.num_base_relations());
        for t in train.iter().chain(&valid).chain(&test) {
            if t.head >= ne || t.tail >= ne || t.relation >= nr {
                return Err(Error::Data(format!(
                    "triple {t:?} out of range for {ne} entities / {nr} relations"
                )));
            }
        }

        let train_augmented = augment_inverses(&train, &vocab);
        let mut relations = vec![RelationIndex::default(); vocab.num_relations()];
        let mut pair_sets: Vec<BTreeSet<(EntityId, EntityId)>> =
            vec![BTreeSet::new(); vocab.num_relations()];
        for t in &train_augmented {
            pair_sets[t.relation].insert((t.head, t.tail));
        }
        for (index, set) in relations.iter_mut().zip(pair_sets) {
            index.pairs = set.into_iter().collect();
            let mut by_tail: Vec<(EntityId, EntityId)> =
                index.pairs.iter().map(|&(p, t)| (t, p)).collect();
            by_tail.sort_unstable();
            for (t, p) in by_tail {
                match index.by_tail.last_mut() {
                    Some((last, protos)) if *last == t => protos.push(p),
                    _ => index.by_tail.push((t, vec![p])),
                }
            }
            index.heads = index.pairs.iter().map(|&(p, _)| p).collect();
            index.heads.dedup();
        }

        let train_tails = tail_index(&train_augmented);
        let all: Vec<Triple> = train.iter().chain(&valid).chain(&test).copied().collect();
        let known_tails = tail_index(&augment_inverses(&all, &vocab));

        Ok(KnowledgeBase {
            vocab,
            train,
            valid,
            test,
            train_augmented,
            relations,
            train_tails,
            known_tails,
        })
    }

    /// Builds a knowledge base with only a training split.
    pub fn from_train(vocab: Vocabulary, train: Vec<Triple>) -> Result<Self> {
        Self::new(vocab, train, Vec::new(), Vec::new())
    }

    /// Loads `train.txt`, `valid.txt` and `test.txt` from a directory.
    ///
    /// When `entities.dict` and `relations.dict` exist they pin the id
    /// assignment; otherwise ids follow first appearance, train first.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let split_path = |name: &str| -> Result<PathBuf> {
            let p = dir.join(name);
            if p.is_file() {
                Ok(p)
            } else {
                Err(Error::Data(format!("missing {name} in {}", dir.display())))
            }
        };
        let train_path = split_path("train.txt")?;
        let valid_path = split_path("valid.txt")?;
        let test_path = split_path("test.txt")?;

        let (ent_dict, rel_dict) = (dir.join("entities.dict"), dir.join("relations.dict"));
        let vocab = if ent_dict.is_file() && rel_dict.is_file() {
            Some(Vocabulary::from_dict_files(&ent_dict, &rel_dict)?)
        } else {
            None
        };
        let (vocab, train) = load_tsv(&train_path, vocab)?;
        let (vocab, valid) = load_tsv(&valid_path, Some(vocab))?;
        let (mut vocab, test) = load_tsv(&test_path, Some(vocab))?;
        vocab.freeze();
        Self::new(vocab, train, valid, test)
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    /// Number of relations including inverses.
    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            entities: self.num_entities(),
            relations: self.vocab.num_base_relations(),
            train: self.train.len(),
            valid: self.valid.len(),
            test: self.test.len(),
        }
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Training facts plus their inverses, in file order.
    pub fn train_augmented(&self) -> &[Triple] {
        &self.train_augmented
    }

    pub fn relation_index(&self, r: RelationId) -> &RelationIndex {
        &self.relations[r]
    }

    /// `{(p, t) | (p, r, t) ∈ D_train}` in ascending order.
    pub fn prototype_candidates(&self, r: RelationId) -> &[(EntityId, EntityId)] {
        &self.relations[r].pairs
    }

    /// Training tails of `(h, r)`, ascending.
    pub fn tails_of(&self, h: EntityId, r: RelationId) -> &[EntityId] {
        self.train_tails.get(&(h, r)).map_or(&[], Vec::as_slice)
    }

    /// All tails of `(h, r)` known in any split, ascending.
    pub fn filtered_mask(&self, h: EntityId, r: RelationId) -> &[EntityId] {
        self.known_tails.get(&(h, r)).map_or(&[], Vec::as_slice)
    }

    pub fn is_train_fact(&self, h: EntityId, r: RelationId, t: EntityId) -> bool {
        self.tails_of(h, r).binary_search(&t).is_ok()
    }

    pub fn is_known_fact(&self, h: EntityId, r: RelationId, t: EntityId) -> bool {
        self.filtered_mask(h, r).binary_search(&t).is_ok()
    }
}

fn tail_index(triples: &[Triple]) -> HashMap<(EntityId, RelationId), Vec<EntityId>> {
    let mut index: HashMap<(EntityId, RelationId), Vec<EntityId>> = HashMap::new();
    for t in triples {
        index.entry((t.head, t.relation)).or_default().push(t.tail);
    }
    for tails in index.values_mut() {
        tails.sort_unstable();
        tails.dedup();
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn toy() -> KnowledgeBase {
        // r = 0, s = 1; entities 0..4
        let vocab = Vocabulary::from_names(
            (0..4).map(|i| format!("e{i}")),
            ["r".to_string(), "s".to_string()],
        )
        .unwrap();
        let train = vec![
            Triple::new(0, 0, 1),
            Triple::new(2, 0, 1),
            Triple::new(0, 1, 3),
        ];
        KnowledgeBase::from_train(vocab, train).unwrap()
    }

    #[test]
    fn parse_reports_line_number() {
        let text = "a\tr\tb\n\nc\tr\n";
        let err = parse_tsv(Cursor::new(text), Path::new("x.txt"), Vocabulary::new()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn frozen_vocab_rejects_unknown() {
        let (mut vocab, _) =
            parse_tsv(Cursor::new("a\tr\tb\n"), Path::new("t"), Vocabulary::new()).unwrap();
        vocab.freeze();
        let err = parse_tsv(Cursor::new("a\tr\tc\n"), Path::new("v"), vocab).unwrap_err();
        assert!(matches!(err, Error::Vocab(_)), "{err}");
    }

    #[test]
    fn empty_input() {
        let (vocab, triples) =
            parse_tsv(Cursor::new(""), Path::new("e"), Vocabulary::new()).unwrap();
        assert!(triples.is_empty());
        assert_eq!(vocab.num_entities(), 0);
    }

    #[test]
    fn ids_follow_first_appearance() {
        let (vocab, triples) = parse_tsv(
            Cursor::new("b\tq\ta\na\tp\tc\n"),
            Path::new("t"),
            Vocabulary::new(),
        )
        .unwrap();
        assert_eq!(vocab.entity_id("b"), Some(0));
        assert_eq!(vocab.entity_id("a"), Some(1));
        assert_eq!(vocab.relation_id("p"), Some(1));
        assert_eq!(vocab.relation_id("q^-1"), Some(2));
        assert_eq!(vocab.relation_id("p⁻¹"), Some(3));
        assert_eq!(triples[1], Triple::new(1, 1, 2));
    }

    #[test]
    fn augment_definition() {
        let vocab = Vocabulary::from_names(["a".into(), "b".into()], ["r".into()]).unwrap();
        assert_eq!(vocab.inverse(0), 1);
        let out = augment_inverses(&[Triple::new(0, 0, 1)], &vocab);
        assert_eq!(out, vec![Triple::new(0, 0, 1), Triple::new(1, 1, 0)]);
        assert!(augment_inverses(&[], &vocab).is_empty());
    }

    #[test]
    fn toy_candidates_and_mask() {
        let kb = toy();
        assert_eq!(kb.prototype_candidates(0), &[(0, 1), (2, 1)]);
        assert_eq!(kb.filtered_mask(0, 0), &[1]);
        assert!(kb.filtered_mask(3, 0).is_empty());
        // s⁻¹ = 3
        assert_eq!(kb.prototype_candidates(3), &[(3, 0)]);
        // r⁻¹ has no (·, r⁻¹, 0) facts besides via inverse of r
        assert_eq!(kb.relation_index(0).by_tail, vec![(1, vec![0, 2])]);
    }

    #[test]
    fn relation_without_facts_has_no_candidates() {
        let vocab = Vocabulary::from_names(["a".into(), "b".into()], ["r".into(), "s".into()])
            .unwrap();
        let kb = KnowledgeBase::from_train(vocab, vec![Triple::new(0, 0, 1)]).unwrap();
        assert!(kb.prototype_candidates(1).is_empty());
    }

    #[test]
    fn duplicates_kept_in_lists_not_indexes() {
        let vocab = Vocabulary::from_names(["a".into(), "b".into()], ["r".into()]).unwrap();
        let t = Triple::new(0, 0, 1);
        let kb = KnowledgeBase::from_train(vocab, vec![t, t]).unwrap();
        assert_eq!(kb.train.len(), 2);
        assert_eq!(kb.prototype_candidates(0).len(), 1);
        assert_eq!(kb.tails_of(0, 0), &[1]);
    }

    #[test]
    fn suggestions_rank_by_edit_distance() {
        let vocab = Vocabulary::from_names(
            ["alice".into(), "bob".into(), "alicia".into()],
            ["r".into()],
        )
        .unwrap();
        assert_eq!(vocab.suggest_entities("alise", 2), vec!["alice", "alicia"]);
    }
}
