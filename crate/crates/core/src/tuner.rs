//! LDADE: differential evolution over LDA's (K, alpha, beta), scored by
//! topic stability across reshuffled runs or by a caller-supplied
//! validation hook.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::features::{lda_fit_docs, top_words, LdaConfig, TopicModel};
use crate::{derive_seed, Error, Result};

/// Largest `n` for top-n word overlap; also the upper end of the score.
pub const MAX_TOP_N: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub k: (usize, usize),
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            k: (10, 100),
            alpha: (1e-3, 1.0),
            beta: (1e-3, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub np: usize,
    pub f: f64,
    pub cr: f64,
    pub generations: usize,
    pub bounds: Bounds,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            np: 10,
            f: 0.7,
            cr: 0.3,
            generations: 3,
            bounds: Bounds::default(),
            seed: 0,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.np < 4 {
            return Err(Error::Config(format!("DE population must be >= 4, got {}", self.np)));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(Error::Config(format!("DE weight f must be in (0,2], got {}", self.f)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::Config(format!("DE crossover must be in [0,1], got {}", self.cr)));
        }
        let b = &self.bounds;
        if b.k.0 < 1 || b.k.0 > b.k.1 {
            return Err(Error::Config(format!("bad K bounds {:?}", b.k)));
        }
        for (name, (lo, hi)) in [("alpha", b.alpha), ("beta", b.beta)] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::Config(format!("bad {name} bounds ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub fitness: f64,
}

impl Candidate {
    pub fn new(k: usize, alpha: f64, beta: f64) -> Self {
        Candidate {
            k,
            alpha,
            beta,
            fitness: f64::NEG_INFINITY,
        }
    }

    pub fn lda_config(&self, iterations: usize, seed: u64) -> LdaConfig {
        LdaConfig {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            iterations,
            seed,
        }
    }

    fn from_vector(v: [f64; 3], bounds: &Bounds) -> Self {
        Candidate::new(
            (v[0].round() as i64).clamp(bounds.k.0 as i64, bounds.k.1 as i64) as usize,
            v[1].clamp(bounds.alpha.0, bounds.alpha.1),
            v[2].clamp(bounds.beta.0, bounds.beta.1),
        )
    }

    fn vector(&self) -> [f64; 3] {
        [self.k as f64, self.alpha, self.beta]
    }

    pub fn within(&self, bounds: &Bounds) -> bool {
        (bounds.k.0..=bounds.k.1).contains(&self.k)
            && (bounds.alpha.0..=bounds.alpha.1).contains(&self.alpha)
            && (bounds.beta.0..=bounds.beta.1).contains(&self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub candidate: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct DeOutcome {
    pub best: Candidate,
    /// Best fitness in the population after each generation (index 0 is the
    /// initial population).
    pub best_by_generation: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

/// DE/rand/1/bin. Trial vectors of a generation are built sequentially from
/// the seeded generator, evaluated (possibly concurrently), then selected in
/// index order; a trial replaces its target only if strictly fitter.
pub fn de_optimize<F>(cfg: &DeConfig, fitness: F) -> Result<DeOutcome>
where
    F: Fn(&Candidate) -> f64 + Sync,
{
    cfg.validate()?;
    let b = &cfg.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let evaluate = |cands: Vec<Candidate>| -> Vec<Candidate> {
        cands
            .into_par_iter()
            .map(|mut c| {
                c.fitness = fitness(&c);
                c
            })
            .collect()
    };

    let initial: Vec<Candidate> = (0..cfg.np)
        .map(|_| {
            Candidate::new(
                rng.gen_range(b.k.0..=b.k.1),
                rng.gen_range(b.alpha.0..=b.alpha.1),
                rng.gen_range(b.beta.0..=b.beta.1),
            )
        })
        .collect();
    let mut population = evaluate(initial);
    let mut trace = Vec::new();
    let record = |generation: usize, cands: &[Candidate], trace: &mut Vec<TraceRow>| {
        for (i, c) in cands.iter().enumerate() {
            trace.push(TraceRow {
                generation,
                candidate: i,
                k: c.k,
                alpha: c.alpha,
                beta: c.beta,
                fitness: c.fitness,
            });
        }
    };
    record(0, &population, &mut trace);
    let mut evaluations = cfg.np;
    let mut best_by_generation = vec![best_of(&population).fitness];

    for generation in 1..=cfg.generations {
        let trials: Vec<Candidate> = (0..cfg.np)
            .map(|i| {
                let others = pick_three(&mut rng, cfg.np, i);
                let (a, bv, c) = (
                    population[others[0]].vector(),
                    population[others[1]].vector(),
                    population[others[2]].vector(),
                );
                let target = population[i].vector();
                let forced = rng.gen_range(0..3);
                let mut trial = target;
                for j in 0..3 {
                    if j == forced || rng.gen::<f64>() < cfg.cr {
                        trial[j] = a[j] + cfg.f * (bv[j] - c[j]);
                    }
                }
                Candidate::from_vector(trial, b)
            })
            .collect();
        let trials = evaluate(trials);
        evaluations += trials.len();
        record(generation, &trials, &mut trace);
        for (i, trial) in trials.into_iter().enumerate() {
            if trial.fitness > population[i].fitness {
                population[i] = trial;
            }
        }
        best_by_generation.push(best_of(&population).fitness);
    }

    Ok(DeOutcome {
        best: best_of(&population),
        best_by_generation,
        trace,
        evaluations,
    })
}

fn best_of(population: &[Candidate]) -> Candidate {
    let mut best = population[0];
    for c in &population[1..] {
        if c.fitness > best.fitness {
            best = *c;
        }
    }
    best
}

fn pick_three(rng: &mut ChaCha8Rng, np: usize, exclude: usize) -> [usize; 3] {
    let mut out = [usize::MAX; 3];
    let mut n = 0;
    while n < 3 {
        let c = rng.gen_range(0..np);
        if c != exclude && !out[..n].contains(&c) {
            out[n] = c;
            n += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    /// LDA runs per candidate, each on a differently shuffled document order.
    pub runs: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            runs: 5,
            iterations: 200,
            seed: 0,
        }
    }
}

/// Topic stability in `[0, 9]`: fit LDA `runs` times on reshuffled document
/// orders and measure how many topics keep their top words across runs.
///
/// `fits` (when given) is incremented once per LDA fit.
pub fn stability_score(
    corpus: &Corpus,
    cand: &Candidate,
    cfg: &StabilityConfig,
    fits: Option<&AtomicUsize>,
) -> Result<f64> {
    if cfg.runs < 2 {
        return Err(Error::Config("stability needs at least two runs".into()));
    }
    if cand.k > corpus.vocab_size() {
        return Err(Error::Config(format!(
            "K={} exceeds vocabulary size {}",
            cand.k,
            corpus.vocab_size()
        )));
    }
    let mut models = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let run_seed = derive_seed(cfg.seed, run as u64);
        let mut docs: Vec<Document> = corpus.documents.clone();
        docs.shuffle(&mut ChaCha8Rng::seed_from_u64(run_seed));
        let lda = cand.lda_config(cfg.iterations, derive_seed(run_seed, 1));
        models.push(lda_fit_docs(&docs, corpus.vocabulary.terms(), &lda)?);
        if let Some(counter) = fits {
            counter.fetch_add(1, Ordering::Relaxed);
        }
    }
    stability_of_models(&models)
}

/// The stability score of an already fitted set of runs.
pub fn stability_of_models(models: &[TopicModel]) -> Result<f64> {
    let k = models.first().map_or(0, TopicModel::k);
    if models.len() < 2 || k == 0 {
        return Err(Error::Config("stability needs at least two fitted runs".into()));
    }
    let tops: Vec<Vec<Vec<String>>> = models
        .iter()
        .map(|m| (0..k).map(|t| top_words(m, t, MAX_TOP_N)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let vocab = tops[0].iter().map(Vec::len).min().unwrap_or(0);
    let mut total = 0.0;
    for n in 1..=MAX_TOP_N {
        let n = n.min(vocab);
        let needed = (0.9 * n as f64).floor() as usize;
        let mut per_pair = Vec::new();
        for a in 0..tops.len() {
            for b in a + 1..tops.len() {
                per_pair.push(matched_topics(&tops[a], &tops[b], n, needed) as f64);
            }
        }
        total += crate::stats::median(&per_pair);
    }
    let mean = total / MAX_TOP_N as f64;
    Ok(MAX_TOP_N as f64 * mean / k as f64)
}

/// Greedy one-to-one matching of topics by top-n overlap; counts matched
/// pairs whose overlap reaches `needed`.
fn matched_topics(a: &[Vec<String>], b: &[Vec<String>], n: usize, needed: usize) -> usize {
    let k = a.len();
    let mut overlap = vec![0usize; k * k];
    for i in 0..k {
        let ai = &a[i][..n.min(a[i].len())];
        for j in 0..k {
            let bj = &b[j][..n.min(b[j].len())];
            overlap[i * k + j] = ai.iter().filter(|w| bj.contains(w)).count();
        }
    }
    let mut used_a = vec![false; k];
    let mut used_b = vec![false; k];
    let mut matched = 0;
    for _ in 0..k {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in (0..k).filter(|&i| !used_a[i]) {
            for j in (0..k).filter(|&j| !used_b[j]) {
                let o = overlap[i * k + j];
                if best.map_or(true, |(bo, _, _)| o > bo) {
                    best = Some((o, i, j));
                }
            }
        }
        let Some((o, i, j)) = best else { break };
        used_a[i] = true;
        used_b[j] = true;
        if o >= needed {
            matched += 1;
        }
    }
    matched
}

/// Clamps the K bounds so no candidate asks for more topics than terms.
pub fn bounds_for(corpus: &Corpus, bounds: &Bounds) -> Bounds {
    let v = corpus.vocab_size().max(1);
    let hi = bounds.k.1.min(v);
    Bounds {
        k: (bounds.k.0.min(hi), hi),
        ..*bounds
    }
}

/// Tunes LDA for stability on `corpus`. Returns the DE outcome and the
/// number of LDA fits it took.
pub fn tune_for_stability(corpus: &Corpus, de: &DeConfig, stability: &StabilityConfig) -> Result<(DeOutcome, usize)> {
    let cfg = DeConfig {
        bounds: bounds_for(corpus, &de.bounds),
        ..*de
    };
    let fits = AtomicUsize::new(0);
    let outcome = de_optimize(&cfg, |cand| {
        match stability_score(corpus, cand, stability, Some(&fits)) {
            Ok(score) => score,
            Err(e) => {
                log::warn!("stability evaluation failed for {cand:?}: {e}");
                f64::NEG_INFINITY
            }
        }
    })?;
    Ok((outcome, fits.load(Ordering::Relaxed)))
}

/// CSV `generation,candidate,K,alpha,beta,fitness`.
pub fn write_trace<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generation", "candidate", "K", "alpha", "beta", "fitness"])?;
    for row in trace {
        w.write_record([
            row.generation.to_string(),
            row.candidate.to_string(),
            row.k.to_string(),
            row.alpha.to_string(),
            row.beta.to_string(),
            row.fitness.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
