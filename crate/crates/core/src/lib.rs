//! Interpretable text analytics for bug-report severity prediction.
//!
//! The pipeline turns raw reports into a preprocessed [`corpus::Corpus`],
//! extracts TF-IDF or LDA topic features ([`features`]), and classifies with
//! either a fast-and-frugal tree ([`fft`]) or a linear margin baseline
//! ([`svm`]). [`tuner`] searches LDA hyperparameters with differential
//! evolution, [`evalrig`] runs repeated stratified cross-validation and
//! [`stats`] ranks the methods with Scott-Knott and A12.

pub mod corpus;
pub mod error;
pub mod evalrig;
pub mod features;
pub mod fft;
pub mod report;
pub mod stats;
pub mod svm;
pub mod tuner;

mod seed;

pub use error::{Error, Result};
pub use seed::derive_seed;

/// Metric a classifier is trained to maximise and a run is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    Precision,
    Recall,
}

impl Goal {
    pub fn as_str(self) -> &'static str {
        match self {
            Goal::Precision => "precision",
            Goal::Recall => "recall",
        }
    }
}

impl std::fmt::Display for Goal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Goal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "precision" | "prec" => Ok(Goal::Precision),
            "recall" | "pd" => Ok(Goal::Recall),
            other => Err(Error::Config(format!("unknown goal metric '{other}'"))),
        }
    }
}
