//! Collapsed Gibbs sampling for latent Dirichlet allocation.

use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{topic_feature_names, FeatureKind, FeatureMatrix};
use crate::corpus::{Corpus, Document};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Document-topic Dirichlet prior.
    pub alpha: f64,
    /// Topic-word Dirichlet prior.
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 50/K`, `beta = 0.01`, 200 sweeps.
    pub fn new(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            iterations: 200,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("LDA needs K >= 1".into()));
        }
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(Error::Config(format!(
                "LDA priors must be positive (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if self.iterations < 1 {
            return Err(Error::Config("LDA needs at least one Gibbs sweep".into()));
        }
        Ok(())
    }
}

/// Sampler state. `lda_fit` drives it for `iterations` sweeps; tests can step
/// it manually to observe per-sweep invariants.
pub struct LdaSampler {
    cfg: LdaConfig,
    v: usize,
    docs: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
    // D x K
    doc_topic: Vec<u32>,
    // V x K, word-major
    word_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl LdaSampler {
    pub fn new(docs: Vec<Vec<u32>>, vocab_size: usize, cfg: LdaConfig) -> Result<Self> {
        cfg.validate()?;
        if vocab_size == 0 {
            return Err(Error::Config("LDA needs a non-empty vocabulary".into()));
        }
        if docs.iter().all(Vec::is_empty) {
            return Err(Error::Config("LDA needs at least one non-empty document".into()));
        }
        if let Some(&bad) = docs.iter().flatten().find(|&&t| t as usize >= vocab_size) {
            return Err(Error::Config(format!("token id {bad} outside vocabulary of {vocab_size}")));
        }
        let k = cfg.k;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut doc_topic = vec![0u32; docs.len() * k];
        let mut word_topic = vec![0u32; vocab_size * k];
        let mut topic_totals = vec![0u32; k];
        let assignments = docs
            .iter()
            .enumerate()
            .map(|(d, tokens)| {
                tokens
                    .iter()
                    .map(|&w| {
                        let z = rng.gen_range(0..k);
                        doc_topic[d * k + z] += 1;
                        word_topic[w as usize * k + z] += 1;
                        topic_totals[z] += 1;
                        z as u32
                    })
                    .collect()
            })
            .collect();
        Ok(LdaSampler {
            cfg,
            v: vocab_size,
            docs,
            assignments,
            doc_topic,
            word_topic,
            topic_totals,
            rng,
            weights: vec![0.0; k],
        })
    }

    /// One full pass resampling every token's topic from
    /// `(n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)`.
    pub fn sweep(&mut self) {
        let k = self.cfg.k;
        let alpha = self.cfg.alpha;
        let beta = self.cfg.beta;
        let v_beta = self.v as f64 * beta;
        for d in 0..self.docs.len() {
            let dt = &mut self.doc_topic[d * k..(d + 1) * k];
            for (i, &w) in self.docs[d].iter().enumerate() {
                let old = self.assignments[d][i] as usize;
                let wt = &mut self.word_topic[w as usize * k..(w as usize + 1) * k];
                dt[old] -= 1;
                wt[old] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (dt[t] as f64 + alpha) * (wt[t] as f64 + beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.weights.partition_point(|&c| c <= u).min(k - 1);

                dt[new] += 1;
                wt[new] += 1;
                self.topic_totals[new] += 1;
                self.assignments[d][i] = new as u32;
            }
        }
    }

    /// Checks count conservation; returns a description of the first
    /// violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let k = self.cfg.k;
        let total_tokens: usize = self.docs.iter().map(Vec::len).sum();
        for (d, tokens) in self.docs.iter().enumerate() {
            let s: u32 = self.doc_topic[d * k..(d + 1) * k].iter().sum();
            if s as usize != tokens.len() {
                return Err(format!("doc {d}: topic counts sum to {s}, length {}", tokens.len()));
            }
        }
        let word_sum: u64 = self.word_topic.iter().map(|&c| c as u64).sum();
        if word_sum as usize != total_tokens {
            return Err(format!("topic-word counts sum to {word_sum}, tokens {total_tokens}"));
        }
        for t in 0..k {
            let col: u32 = (0..self.v).map(|w| self.word_topic[w * k + t]).sum();
            if col != self.topic_totals[t] {
                return Err(format!("topic {t}: total {} != column sum {col}", self.topic_totals[t]));
            }
        }
        Ok(())
    }

    pub fn doc_topic_probabilities(&self) -> Vec<Vec<f64>> {
        let k = self.cfg.k;
        let k_alpha = k as f64 * self.cfg.alpha;
        self.docs
            .iter()
            .enumerate()
            .map(|(d, tokens)| {
                let denom = tokens.len() as f64 + k_alpha;
                self.doc_topic[d * k..(d + 1) * k]
                    .iter()
                    .map(|&c| (c as f64 + self.cfg.alpha) / denom)
                    .collect()
            })
            .collect()
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn into_model(self, vocabulary: Vec<String>) -> TopicModel {
        let k = self.cfg.k;
        let doc_topic = self.doc_topic_probabilities();
        let topic_word_counts = (0..k)
            .map(|t| (0..self.v).map(|w| self.word_topic[w * k + t]).collect())
            .collect();
        TopicModel {
            config: self.cfg,
            vocabulary,
            topic_word_counts,
            doc_topic,
            phi: OnceLock::new(),
        }
    }
}

/// A fitted LDA model. Immutable once built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub vocabulary: Vec<String>,
    /// K rows of V counts.
    pub topic_word_counts: Vec<Vec<u32>>,
    /// Training documents' topic probabilities.
    pub doc_topic: Vec<Vec<f64>>,
    #[serde(skip)]
    phi: OnceLock<Vec<f64>>,
}

impl PartialEq for TopicModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.vocabulary == other.vocabulary
            && self.topic_word_counts == other.topic_word_counts
            && self.doc_topic == other.doc_topic
    }
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Frozen `(n_kw + beta) / (n_k + V beta)`, word-major.
    fn phi(&self) -> &[f64] {
        self.phi.get_or_init(|| {
            let k = self.k();
            let v = self.vocab_size();
            let beta = self.config.beta;
            let totals: Vec<f64> = self
                .topic_word_counts
                .iter()
                .map(|row| row.iter().map(|&c| c as f64).sum::<f64>() + v as f64 * beta)
                .collect();
            let mut phi = vec![0.0; v * k];
            for (t, row) in self.topic_word_counts.iter().enumerate() {
                for (w, &c) in row.iter().enumerate() {
                    phi[w * k + t] = (c as f64 + beta) / totals[t];
                }
            }
            phi
        })
    }

    /// Training-document topic features.
    pub fn training_features(&self, doc_ids: Vec<String>) -> FeatureMatrix {
        FeatureMatrix::from_rows(
            FeatureKind::Topic,
            self.doc_topic.clone(),
            topic_feature_names(self.k()),
            doc_ids,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::report::write_atomic(path, serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<TopicModel> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn lda_fit(corpus: &Corpus, cfg: &LdaConfig) -> Result<TopicModel> {
    lda_fit_docs(&corpus.documents, corpus.vocabulary.terms(), cfg)
}

pub fn lda_fit_docs(docs: &[Document], vocabulary: &[String], cfg: &LdaConfig) -> Result<TopicModel> {
    let tokens = docs.iter().map(|d| d.token_ids.clone()).collect();
    let mut sampler = LdaSampler::new(tokens, vocabulary.len(), *cfg)?;
    for _ in 0..cfg.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model(vocabulary.to_vec()))
}

/// Fold-in inference for an unseen document: only its own assignments are
/// resampled, topic-word counts stay frozen. Token ids outside the model
/// vocabulary are skipped.
pub fn lda_transform(model: &TopicModel, doc: &Document, fold_in_iterations: usize, seed: u64) -> Vec<f64> {
    let k = model.k();
    let alpha = model.config.alpha;
    let v = model.vocab_size();
    let tokens: Vec<usize> = doc
        .token_ids
        .iter()
        .map(|&t| t as usize)
        .filter(|&t| t < v)
        .collect();
    if tokens.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let phi = model.phi();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = tokens
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            counts[t] += 1;
            t
        })
        .collect();
    let mut weights = vec![0.0; k];
    for _ in 0..fold_in_iterations {
        for (i, &w) in tokens.iter().enumerate() {
            counts[z[i]] -= 1;
            let row = &phi[w * k..(w + 1) * k];
            let mut total = 0.0;
            for t in 0..k {
                total += (counts[t] as f64 + alpha) * row[t];
                weights[t] = total;
            }
            let u = rng.gen::<f64>() * total;
            let new = weights.partition_point(|&c| c <= u).min(k - 1);
            counts[new] += 1;
            z[i] = new;
        }
    }
    let denom = tokens.len() as f64 + k as f64 * alpha;
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

/// The `n` most frequent terms of a topic, ties broken by ascending term id.
/// Asking for more than V terms returns all V.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>> {
    let row = model.topic_word_counts.get(topic).ok_or_else(|| {
        Error::Config(format!("topic {topic} out of range for K={}", model.k()))
    })?;
    let mut ids: Vec<usize> = (0..row.len()).collect();
    ids.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
    Ok(ids
        .into_iter()
        .take(n)
        .map(|i| model.vocabulary[i].clone())
        .collect())
}
