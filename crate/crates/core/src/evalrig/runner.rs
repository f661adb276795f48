use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{fit_method, ConfusionMatrix, FoldPlan, Method, RigConfig, RunRecord, TrainingSplit};
use crate::corpus::Corpus;
use crate::{derive_seed, Error, Goal, Result};

/// Fits `method` for one (repeat, fold) cell and scores the held-out bin.
/// Tuned methods hold out one more bin of the training data for
/// validation. Returns `None` when the training data has a single class.
pub fn score_fold(
    corpus: &Corpus,
    method: Method,
    plan: &FoldPlan,
    repeat: usize,
    fold: usize,
    goal: Goal,
    cfg: &RigConfig,
) -> Result<Option<(ConfusionMatrix, Duration)>> {
    let started = Instant::now();
    let test = plan.bin(repeat, fold);
    let train = plan.complement(repeat, fold);
    let split = if method.is_tuned() {
        let validation_bin = (fold + 1) % plan.bins;
        let validation = plan.bin(repeat, validation_bin);
        TrainingSplit {
            fit: train.into_iter().filter(|i| !validation.contains(i)).collect(),
            validation,
        }
    } else {
        TrainingSplit {
            fit: train,
            validation: Vec::new(),
        }
    };
    let seed = derive_seed(cfg.seed, (repeat * 10_000 + fold) as u64);
    let fitted = match fit_method(corpus, method, &split, goal, cfg, seed) {
        Ok(f) => f,
        Err(Error::DegenerateFold(why)) => {
            log::warn!("skipping {method} repeat {repeat} fold {fold}: {why}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let cm = fitted.score(corpus, &test)?;
    Ok(Some((cm, started.elapsed())))
}

fn record(dataset: &str, method: Method, repeat: usize, fold: usize, metric: Goal, cm: &ConfusionMatrix, t: Duration) -> RunRecord {
    RunRecord {
        dataset: dataset.to_string(),
        method: method.name(),
        repeat,
        fold,
        metric,
        value: cm.score(metric),
        runtime_ms: t.as_secs_f64() * 1000.0,
    }
}

fn cells(plan: &FoldPlan) -> Vec<(usize, usize)> {
    (0..plan.repeats)
        .flat_map(|r| (0..plan.bins).map(move |f| (r, f)))
        .collect()
}

fn sort_records(records: &mut [RunRecord], methods: &[Method]) {
    let order = |name: &str| methods.iter().position(|m| m.name() == name).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        (order(&a.method), a.repeat, a.fold, a.metric).cmp(&(order(&b.method), b.repeat, b.fold, b.metric))
    });
}

/// Runs every method on every (repeat, fold) cell with classifiers trained
/// for `goal`, emitting a precision and a recall record per cell.
pub fn run_matrix(
    dataset: &str,
    corpus: &Corpus,
    methods: &[Method],
    plan: &FoldPlan,
    goal: Goal,
    cfg: &RigConfig,
) -> Result<Vec<RunRecord>> {
    check_plan(corpus, plan)?;
    let per_cell: Vec<Vec<RunRecord>> = cells(plan)
        .into_par_iter()
        .map(|(r, f)| {
            let mut out = Vec::new();
            for &m in methods {
                if let Some((cm, t)) = score_fold(corpus, m, plan, r, f, goal, cfg)? {
                    for metric in [Goal::Precision, Goal::Recall] {
                        out.push(record(dataset, m, r, f, metric, &cm, t));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<RunRecord> = per_cell.into_iter().flatten().collect();
    sort_records(&mut records, methods);
    Ok(records)
}

/// Like [`run_matrix`], but each metric is scored by classifiers trained
/// for that metric. Methods whose model ignores the goal are fitted once.
pub fn run_matrix_per_metric(
    dataset: &str,
    corpus: &Corpus,
    methods: &[Method],
    plan: &FoldPlan,
    cfg: &RigConfig,
) -> Result<Vec<RunRecord>> {
    check_plan(corpus, plan)?;
    let per_cell: Vec<Vec<RunRecord>> = cells(plan)
        .into_par_iter()
        .map(|(r, f)| {
            let mut out = Vec::new();
            for &m in methods {
                if m.depends_on_goal(cfg.tuning) {
                    for metric in [Goal::Precision, Goal::Recall] {
                        if let Some((cm, t)) = score_fold(corpus, m, plan, r, f, metric, cfg)? {
                            out.push(record(dataset, m, r, f, metric, &cm, t));
                        }
                    }
                } else if let Some((cm, t)) = score_fold(corpus, m, plan, r, f, Goal::Precision, cfg)? {
                    for metric in [Goal::Precision, Goal::Recall] {
                        out.push(record(dataset, m, r, f, metric, &cm, t));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<RunRecord> = per_cell.into_iter().flatten().collect();
    sort_records(&mut records, methods);
    Ok(records)
}

fn check_plan(corpus: &Corpus, plan: &FoldPlan) -> Result<()> {
    if plan.n_docs() != corpus.len() {
        return Err(Error::Config(format!(
            "fold plan covers {} documents, corpus has {}",
            plan.n_docs(),
            corpus.len()
        )));
    }
    Ok(())
}
