//! Uniform tail-corruption negative sampling.

use rand::Rng;

use crate::kb::{EntityId, KnowledgeBase, Triple};

/// Rejection attempts per negative before falling back to an unfiltered draw.
const MAX_REJECTIONS: usize = 64;

/// Positives in tail form with their sampled negative tails.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    pub positives: Vec<Triple>,
    /// `negatives[i]` corrupts the tail of `positives[i]`.
    pub negatives: Vec<Vec<EntityId>>,
}

impl Batch {
    pub fn new(positives: Vec<Triple>, negatives: Vec<Vec<EntityId>>) -> Self {
        assert_eq!(positives.len(), negatives.len());
        Batch {
            positives,
            negatives,
        }
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }
}

/// Result of one draw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Negatives {
    pub ids: Vec<EntityId>,
    /// Set when filtering had to be abandoned for this positive.
    pub fell_back: bool,
}

/// Draws `n` tails uniformly from the entity set. In filtered mode any tail
/// forming a known training fact with `(h, r)` is rejected; when that is
/// impossible or keeps failing the draw is repeated unfiltered.
pub fn sample_negatives<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    positive: &Triple,
    n: usize,
    filtered: bool,
    rng: &mut R,
) -> Negatives {
    let n_entity = kb.num_entities();
    let mut ids = Vec::with_capacity(n);
    if !filtered {
        ids.extend((0..n).map(|_| rng.random_range(0..n_entity)));
        return Negatives {
            ids,
            fell_back: false,
        };
    }
    let known = kb.tails_of(positive.head, positive.relation);
    if known.len() >= n_entity {
        ids.extend((0..n).map(|_| rng.random_range(0..n_entity)));
        return Negatives {
            ids,
            fell_back: true,
        };
    }
    let mut fell_back = false;
    for _ in 0..n {
        let mut pick = None;
        for _ in 0..MAX_REJECTIONS {
            let e = rng.random_range(0..n_entity);
            if known.binary_search(&e).is_err() {
                pick = Some(e);
                break;
            }
        }
        let e = pick.unwrap_or_else(|| {
            fell_back = true;
            rng.random_range(0..n_entity)
        });
        ids.push(e);
    }
    Negatives { ids, fell_back }
}

/// Stateful sampler that counts fallbacks.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    pub n: usize,
    pub filtered: bool,
    pub fallbacks: u64,
}

impl NegativeSampler {
    pub fn new(n: usize, filtered: bool) -> Self {
        NegativeSampler {
            n,
            filtered,
            fallbacks: 0,
        }
    }

    pub fn batch<R: Rng + ?Sized>(
        &mut self,
        kb: &KnowledgeBase,
        positives: &[Triple],
        rng: &mut R,
    ) -> Batch {
        let negatives = positives
            .iter()
            .map(|p| {
                let s = sample_negatives(kb, p, self.n, self.filtered, rng);
                self.fallbacks += u64::from(s.fell_back);
                s.ids
            })
            .collect();
        Batch::new(positives.to_vec(), negatives)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Vocabulary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kb(triples: &[(usize, usize, usize)], n_ent: usize) -> KnowledgeBase {
        let ents: Vec<String> = (0..n_ent).map(|i| format!("e{i}")).collect();
        let vocab = Vocabulary::from_names(ents, vec!["r".to_string()]).unwrap();
        let train = triples.iter().map(|&t| Triple::from(t)).collect();
        KnowledgeBase::from_train(vocab, train).unwrap()
    }

    #[test]
    fn saturated_query_falls_back() {
        let kb = kb(&[(0, 0, 0), (0, 0, 1)], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_negatives(&kb, &Triple::new(0, 0, 1), 5, true, &mut rng);
        assert!(s.fell_back);
        assert_eq!(s.ids.len(), 5);
    }

    #[test]
    fn filtered_draws_avoid_known_tails() {
        let kb = kb(&[(0, 0, 1), (0, 0, 2)], 6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_negatives(&kb, &Triple::new(0, 0, 1), 200, true, &mut rng);
        assert!(!s.fell_back);
        assert!(s.ids.iter().all(|&e| e != 1 && e != 2 && e < 6));
    }

    #[test]
    fn seeded_draws_repeat() {
        let kb = kb(&[(0, 0, 1)], 20);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            NegativeSampler::new(8, true).batch(&kb, &kb.train_augmented().to_vec(), &mut rng)
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }
}
