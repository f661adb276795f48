#![allow(dead_code)]

use frugal::corpus::{build_corpus, Corpus, PreprocessConfig, RawDocument};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONSONANTS: &[u8] = b"bcdfghjklmnpqrstvwxz";

/// Twenty pseudo-words sharing `prefix`; none is changed by stemming or
/// stop-word removal.
pub fn word_family(prefix: &str) -> Vec<String> {
    CONSONANTS
        .iter()
        .map(|&c| format!("{prefix}{}x", c as char))
        .collect()
}

/// Documents each drawn from one of two disjoint 20-word vocabularies.
/// Vocabulary A documents are severe with probability `agreement`, the
/// others with probability `1 - agreement`.
pub fn synthetic_raw(n: usize, agreement: f64, seed: u64) -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = word_family("qa");
    let b = word_family("qo");
    (0..n)
        .map(|i| {
            let from_a = rng.gen_bool(0.6);
            let words = if from_a { &a } else { &b };
            let len = rng.gen_range(20..=40);
            let text: Vec<&str> = (0..len).map(|_| words.choose(&mut rng).unwrap().as_str()).collect();
            let severe = rng.gen_bool(if from_a { agreement } else { 1.0 - agreement });
            RawDocument::new(format!("d{i:04}"), text.join(" "), if severe { "severe" } else { "minor" })
        })
        .collect()
}

pub fn synthetic_corpus(n: usize, agreement: f64, seed: u64) -> Corpus {
    build_corpus(&synthetic_raw(n, agreement, seed), &PreprocessConfig::default()).unwrap()
}

/// A corpus of short random documents over a small pool of words.
pub fn random_corpus(n_docs: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = word_family("zu");
    let raw: Vec<RawDocument> = (0..n_docs)
        .map(|i| {
            let len = rng.gen_range(1..=15);
            let text: Vec<&str> = (0..len).map(|_| pool[rng.gen_range(0..pool.len())].as_str()).collect();
            let severity = if i % 2 == 0 { "1" } else { "2" };
            RawDocument::new(format!("r{i}"), text.join(" "), severity)
        })
        .collect();
    build_corpus(&raw, &PreprocessConfig::default()).unwrap()
}
