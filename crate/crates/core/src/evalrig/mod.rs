//! Experiment harness: repeated stratified cross-validation, confusion
//! matrix metrics, and the method matrix.

mod methods;
mod runner;

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{derive_seed, Error, Goal, Result};

pub use methods::{fit_method, Fitted, FittedModel, Method, RigConfig, TrainingSplit, TuningMode};
pub use runner::{run_matrix, run_matrix_per_metric, score_fold};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `TP / (TP + FN)`, 0 when undefined.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `TP / (TP + FP)`, 0 when undefined.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn score(&self, goal: Goal) -> f64 {
        match goal {
            Goal::Precision => self.precision(),
            Goal::Recall => self.recall(),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    Metrics {
        precision: cm.precision(),
        recall: cm.recall(),
    }
}

/// Bin assignment of every document, for each repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub repeats: usize,
    pub bins: usize,
    /// `assignments[repeat][doc]` is the document's bin.
    pub assignments: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn bin(&self, repeat: usize, bin: usize) -> Vec<usize> {
        self.assignments[repeat]
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b == bin)
            .map(|(i, _)| i)
            .collect()
    }

    /// Every document outside `bin`.
    pub fn complement(&self, repeat: usize, bin: usize) -> Vec<usize> {
        self.assignments[repeat]
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b != bin)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_docs(&self) -> usize {
        self.assignments.first().map_or(0, Vec::len)
    }
}

/// Per repeat, shuffles each class and deals it round-robin into the bins;
/// negatives continue dealing where positives stopped, so bin sizes differ by
/// at most one.
pub fn stratified_folds(labels: &[bool], repeats: usize, bins: usize, seed: u64) -> Result<FoldPlan> {
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if positives.len() < bins || negatives.len() < bins {
        return Err(Error::CannotStratify(format!(
            "{} positive / {} negative documents for {bins} bins",
            positives.len(),
            negatives.len()
        )));
    }
    let assignments = (0..repeats)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let mut pos = positives.clone();
            let mut neg = negatives.clone();
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let mut bins_of = vec![0usize; labels.len()];
            for (slot, &doc) in pos.iter().chain(neg.iter()).enumerate() {
                bins_of[doc] = slot % bins;
            }
            bins_of
        })
        .collect();
    Ok(FoldPlan {
        repeats,
        bins,
        assignments,
        seed,
    })
}

/// One measurement: a method's score on one held-out bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub method: String,
    pub repeat: usize,
    pub fold: usize,
    pub metric: Goal,
    pub value: f64,
    pub runtime_ms: f64,
}

/// CSV `dataset,method,repeat,fold,metric,value,runtime_ms`.
pub fn write_records<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(["dataset", "method", "repeat", "fold", "metric", "value", "runtime_ms"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
