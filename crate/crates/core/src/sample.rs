//! Seeded reservoir sampling of kept records for manual quality review.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CorpusRecord;
use crate::util::stable_hash64;

pub const DEFAULT_REVIEW_SAMPLE: usize = 100;

/// Algorithm R over a stream. Each of the `seen` items ends up in the
/// sample with probability `capacity / seen`.
#[derive(Debug, Clone)]
pub struct Reservoir<T> {
    capacity: usize,
    seen: u64,
    items: Vec<(u64, T)>,
    rng: ChaCha8Rng,
}

impl<T> Reservoir<T> {
    pub fn new(capacity: usize, rng: ChaCha8Rng) -> Self {
        Self {
            capacity,
            seen: 0,
            items: Vec::with_capacity(capacity),
            rng,
        }
    }

    pub fn push(&mut self, item: T) {
        let position = self.seen;
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push((position, item));
        } else {
            let j = self.rng.random_range(0..self.seen);
            if (j as usize) < self.capacity {
                self.items[j as usize] = (position, item);
            }
        }
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Sampled items in stream order.
    pub fn into_sorted(mut self) -> Vec<T> {
        self.items.sort_by_key(|(p, _)| *p);
        self.items.into_iter().map(|(_, t)| t).collect()
    }
}

/// Per-language generator: one ChaCha stream per language under `seed`, so
/// adding a language never perturbs another language's sample.
pub fn lang_rng(seed: u64, lang: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stable_hash64(&[lang.as_bytes()]));
    rng
}

/// Uniform sample of `min(n, kept)` records per language, in stream order.
pub fn sample_for_review<I>(kept: I, n: usize, seed: u64) -> BTreeMap<String, Vec<CorpusRecord>>
where
    I: IntoIterator<Item = CorpusRecord>,
{
    assert!(n >= 1, "sample size must be at least 1");
    let mut reservoirs: BTreeMap<String, Reservoir<CorpusRecord>> = BTreeMap::new();
    for rec in kept {
        reservoirs
            .entry(rec.lang.clone())
            .or_insert_with(|| Reservoir::new(n, lang_rng(seed, &rec.lang)))
            .push(rec);
    }
    reservoirs
        .into_iter()
        .map(|(lang, r)| (lang, r.into_sorted()))
        .collect()
}
