mod common;

use std::sync::atomic::AtomicUsize;

use frugal::corpus::{build_corpus, PreprocessConfig, RawDocument};
use frugal::features::{lda_fit, LdaConfig};
use frugal::tuner::{stability_of_models, stability_score, tune_for_stability, Candidate, DeConfig, StabilityConfig};

fn stability(runs: usize, seed: u64) -> StabilityConfig {
    StabilityConfig { runs, iterations: 100, seed }
}

#[test]
fn single_topic_is_fully_stable() {
    let raw: Vec<RawDocument> = (0..10)
        .map(|i| RawDocument::new(format!("d{i}"), "packet packet packet buffer overflow", "1"))
        .collect();
    let corpus = build_corpus(&raw, &PreprocessConfig::default()).unwrap();
    let score = stability_score(&corpus, &Candidate::new(1, 0.1, 0.01), &stability(3, 1), None).unwrap();
    assert_eq!(score, 9.0);
}

#[test]
fn identical_runs_score_nine() {
    let corpus = common::synthetic_corpus(60, 0.9, 2);
    let model = lda_fit(&corpus, &LdaConfig { iterations: 50, ..LdaConfig::new(6).with_seed(8) }).unwrap();
    assert_eq!(stability_of_models(&[model.clone(), model]).unwrap(), 9.0);
}

#[test]
fn planted_topic_count_is_more_stable() {
    for seed in 0..5 {
        let corpus = common::synthetic_corpus(50, 0.9, 100 + seed);
        let planted = stability_score(&corpus, &Candidate::new(2, 0.5, 0.01), &stability(4, seed), None).unwrap();
        let mismatched = stability_score(&corpus, &Candidate::new(25, 0.5, 0.01), &stability(4, seed), None).unwrap();
        assert!(planted >= mismatched, "seed {seed}: K=2 {planted} < K=25 {mismatched}");
    }
}

#[test]
fn fit_count_and_determinism() {
    let corpus = common::synthetic_corpus(40, 0.9, 3);
    let de = DeConfig { np: 4, generations: 2, seed: 5, ..DeConfig::default() };
    let st = StabilityConfig { runs: 3, iterations: 20, seed: 6 };
    let (outcome, fits) = tune_for_stability(&corpus, &de, &st).unwrap();
    assert_eq!(fits, de.np * (de.generations + 1) * st.runs);
    assert_eq!(outcome.evaluations, de.np * (de.generations + 1));
    assert!(outcome.best_by_generation.windows(2).all(|w| w[1] >= w[0]));
    assert!(outcome.best.k <= corpus.vocab_size());

    let (again, _) = tune_for_stability(&corpus, &de, &st).unwrap();
    assert_eq!(again.best, outcome.best);
    assert_eq!(again.trace, outcome.trace);

    let counter = AtomicUsize::new(0);
    stability_score(&corpus, &outcome.best, &st, Some(&counter)).unwrap();
    assert_eq!(counter.into_inner(), st.runs);
}
