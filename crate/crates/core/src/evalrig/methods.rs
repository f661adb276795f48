use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ConfusionMatrix;
use crate::corpus::{Corpus, Document, TermMap};
use crate::features::{lda_fit, lda_transform, FeatureKind, FeatureMatrix, LdaConfig, TfidfModel, TopicModel};
use crate::fft::{train_best, FrugalTree, DEFAULT_DEPTH};
use crate::svm::{svm_fit, LinearModel, SvmParams};
use crate::tuner::{self, Candidate, DeConfig, StabilityConfig};
use crate::{derive_seed, Error, Goal, Result};

/// A feature extractor + classifier pairing from the comparison matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    TfidfSvm,
    /// LDA with a fixed topic count feeding a frugal tree.
    LdaFft(usize),
    LdadeSvm,
    LdadeFft,
}

impl Method {
    /// The seven methods compared by default.
    pub fn standard() -> Vec<Method> {
        vec![
            Method::TfidfSvm,
            Method::LdaFft(10),
            Method::LdaFft(25),
            Method::LdaFft(50),
            Method::LdaFft(100),
            Method::LdadeSvm,
            Method::LdadeFft,
        ]
    }

    /// Identifier used in files and on the command line.
    pub fn name(&self) -> String {
        match self {
            Method::TfidfSvm => "tfidf_svm".into(),
            Method::LdaFft(k) => format!("fft_k{k}"),
            Method::LdadeSvm => "ldade_svm".into(),
            Method::LdadeFft => "ldade_fft".into(),
        }
    }

    /// Label used in reports, e.g. `10_FFT`.
    pub fn label(&self) -> String {
        match self {
            Method::TfidfSvm => "TFIDF_SVM".into(),
            Method::LdaFft(k) => format!("{k}_FFT"),
            Method::LdadeSvm => "LDADE_SVM".into(),
            Method::LdadeFft => "LDADE_FFT".into(),
        }
    }

    pub fn is_tuned(&self) -> bool {
        matches!(self, Method::LdadeSvm | Method::LdadeFft)
    }

    /// Whether the fitted model changes with the target metric.
    pub fn depends_on_goal(&self, tuning: TuningMode) -> bool {
        match self {
            Method::TfidfSvm => false,
            Method::LdaFft(_) | Method::LdadeFft => true,
            Method::LdadeSvm => tuning == TuningMode::Validation,
        }
    }

    fn stream(&self) -> u64 {
        match self {
            Method::TfidfSvm => 1,
            Method::LdadeSvm => 2,
            Method::LdadeFft => 3,
            Method::LdaFft(k) => 1000 + *k as u64,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "tfidf_svm" => return Ok(Method::TfidfSvm),
            "ldade_svm" => return Ok(Method::LdadeSvm),
            "ldade_fft" => return Ok(Method::LdadeFft),
            _ => {}
        }
        s.strip_prefix("fft_k")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .map(Method::LdaFft)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// What LDADE's differential evolution maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuningMode {
    /// Topic stability of LDA on the training bins.
    Stability,
    /// The goal metric of the downstream classifier on the validation bin.
    Validation,
}

impl FromStr for TuningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stability" | "rn" => Ok(TuningMode::Stability),
            "validation" | "classification" => Ok(TuningMode::Validation),
            other => Err(Error::Config(format!("unknown tuning mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    pub lda_iterations: usize,
    pub fold_in_iterations: usize,
    pub svm: SvmParams,
    pub fft_depth: usize,
    pub de: DeConfig,
    pub stability: StabilityConfig,
    pub tuning: TuningMode,
    pub seed: u64,
}

impl Default for RigConfig {
    fn default() -> Self {
        RigConfig {
            lda_iterations: 200,
            fold_in_iterations: 50,
            svm: SvmParams::default(),
            fft_depth: DEFAULT_DEPTH,
            de: DeConfig::default(),
            stability: StabilityConfig::default(),
            tuning: TuningMode::Stability,
            seed: 1,
        }
    }
}

/// Documents (by corpus index) used to fit, and for tuned methods the
/// validation documents DE may score against.
#[derive(Debug, Clone, Default)]
pub struct TrainingSplit {
    pub fit: Vec<usize>,
    pub validation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedModel {
    TfidfSvm { tfidf: TfidfModel, svm: LinearModel },
    TopicFft { lda: TopicModel, tree: FrugalTree },
    TopicSvm { lda: TopicModel, svm: LinearModel },
}

/// A trained method, able to score documents of the parent corpus.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub method: Method,
    pub model: FittedModel,
    pub tuned: Option<Candidate>,
    term_map: TermMap,
    fold_in_iterations: usize,
    seed: u64,
}

impl Fitted {
    /// `doc_index` only seeds fold-in sampling so results do not depend on
    /// scoring order.
    pub fn predict(&self, doc: &Document, doc_index: usize) -> Result<bool> {
        let local = self.term_map.project(doc);
        let doc_seed = derive_seed(self.seed, doc_index as u64);
        predict_local(&self.model, &local, self.fold_in_iterations, doc_seed)
    }

    pub fn score(&self, corpus: &Corpus, indices: &[usize]) -> Result<ConfusionMatrix> {
        let mut cm = ConfusionMatrix::default();
        for &i in indices {
            let doc = &corpus.documents[i];
            cm.record(self.predict(doc, i)?, doc.label);
        }
        Ok(cm)
    }
}

fn predict_local(model: &FittedModel, doc: &Document, fold_in: usize, seed: u64) -> Result<bool> {
    match model {
        FittedModel::TfidfSvm { tfidf, svm } => svm.predict(&tfidf.transform(doc)),
        FittedModel::TopicFft { lda, tree } => tree.predict(&lda_transform(lda, doc, fold_in, seed)),
        FittedModel::TopicSvm { lda, svm } => svm.predict(&lda_transform(lda, doc, fold_in, seed)),
    }
}

fn topic_training(lda: &TopicModel, sub: &Corpus) -> (FeatureMatrix, Vec<bool>) {
    let ids = sub.documents.iter().map(|d| d.id.clone()).collect();
    (lda.training_features(ids), sub.labels())
}

fn fit_classifier(
    lda: TopicModel,
    sub: &Corpus,
    use_fft: bool,
    goal: Goal,
    cfg: &RigConfig,
    seed: u64,
) -> Result<FittedModel> {
    let (x, y) = topic_training(&lda, sub);
    Ok(if use_fft {
        FittedModel::TopicFft {
            tree: train_best(&x, &y, cfg.fft_depth, goal)?,
            lda,
        }
    } else {
        FittedModel::TopicSvm {
            svm: svm_fit(&x, &y, &SvmParams { seed, ..cfg.svm })?,
            lda,
        }
    })
}

/// Fits `method` on `split.fit` only. Test documents are never seen here.
pub fn fit_method(
    corpus: &Corpus,
    method: Method,
    split: &TrainingSplit,
    goal: Goal,
    cfg: &RigConfig,
    seed: u64,
) -> Result<Fitted> {
    let seed = derive_seed(seed, method.stream());
    let (sub, term_map) = corpus.subset(&split.fit);
    let positives = sub.documents.iter().filter(|d| d.label).count();
    if positives == 0 || positives == sub.len() {
        return Err(Error::DegenerateFold(format!(
            "{} training documents, {positives} positive",
            sub.len()
        )));
    }
    let lda_cfg = |k: usize| LdaConfig {
        iterations: cfg.lda_iterations,
        seed: derive_seed(seed, 11),
        ..LdaConfig::new(k)
    };

    let mut tuned = None;
    let model = match method {
        Method::TfidfSvm => {
            let tfidf = TfidfModel::fit(&sub);
            let x = tfidf.transform_all(&sub.documents);
            debug_assert_eq!(x.kind, FeatureKind::Tfidf);
            let svm = svm_fit(&x, &sub.labels(), &SvmParams { seed, ..cfg.svm })?;
            FittedModel::TfidfSvm { tfidf, svm }
        }
        Method::LdaFft(k) => {
            let lda = lda_fit(&sub, &lda_cfg(k))?;
            fit_classifier(lda, &sub, true, goal, cfg, seed)?
        }
        Method::LdadeSvm | Method::LdadeFft => {
            let use_fft = method == Method::LdadeFft;
            let validation: Vec<(usize, Document)> = split
                .validation
                .iter()
                .map(|&i| (i, term_map.project(&corpus.documents[i])))
                .collect();
            let best = tune(&sub, &validation, use_fft, goal, cfg, seed)?;
            tuned = Some(best);
            let lda = lda_fit(&sub, &best.lda_config(cfg.lda_iterations, derive_seed(seed, 13)))?;
            fit_classifier(lda, &sub, use_fft, goal, cfg, seed)?
        }
    };
    Ok(Fitted {
        method,
        model,
        tuned,
        term_map,
        fold_in_iterations: cfg.fold_in_iterations,
        seed: derive_seed(seed, 17),
    })
}

fn tune(
    sub: &Corpus,
    validation: &[(usize, Document)],
    use_fft: bool,
    goal: Goal,
    cfg: &RigConfig,
    seed: u64,
) -> Result<Candidate> {
    let de = DeConfig {
        seed: derive_seed(seed, 21),
        ..cfg.de
    };
    match cfg.tuning {
        TuningMode::Stability => {
            let stability = StabilityConfig {
                seed: derive_seed(seed, 22),
                ..cfg.stability
            };
            Ok(tuner::tune_for_stability(sub, &de, &stability)?.0.best)
        }
        TuningMode::Validation => {
            if validation.is_empty() {
                return Err(Error::Config("validation tuning needs a validation bin".into()));
            }
            let de = DeConfig {
                bounds: tuner::bounds_for(sub, &de.bounds),
                ..de
            };
            let eval = |cand: &Candidate| -> Result<f64> {
                let lda = lda_fit(sub, &cand.lda_config(cfg.lda_iterations, derive_seed(seed, 23)))?;
                let model = fit_classifier(lda, sub, use_fft, goal, cfg, seed)?;
                let mut cm = ConfusionMatrix::default();
                for (i, doc) in validation {
                    let doc_seed = derive_seed(seed, *i as u64);
                    cm.record(predict_local(&model, doc, cfg.fold_in_iterations, doc_seed)?, doc.label);
                }
                Ok(cm.score(goal))
            };
            let outcome = tuner::de_optimize(&de, |cand| {
                eval(cand).unwrap_or_else(|e| {
                    log::warn!("validation fitness failed for {cand:?}: {e}");
                    f64::NEG_INFINITY
                })
            })?;
            Ok(outcome.best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::standard() {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::LdaFft(10).label(), "10_FFT");
        assert!("fft_k0".parse::<Method>().is_err());
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn goal_dependence() {
        assert!(!Method::TfidfSvm.depends_on_goal(TuningMode::Validation));
        assert!(Method::LdaFft(10).depends_on_goal(TuningMode::Stability));
        assert!(!Method::LdadeSvm.depends_on_goal(TuningMode::Stability));
        assert!(Method::LdadeSvm.depends_on_goal(TuningMode::Validation));
    }
}
