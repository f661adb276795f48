//! Numeric feature extraction: TF-IDF term weights and LDA topic
//! probabilities.

mod lda;
mod tfidf;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

pub use lda::{lda_fit, lda_fit_docs, lda_transform, top_words, LdaConfig, LdaSampler, TopicModel};
pub use tfidf::{tfidf, TfidfModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Tfidf,
    Topic,
}

/// Dense documents-by-features matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    pub n_docs: usize,
    pub n_features: usize,
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
    pub doc_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn from_rows(
        kind: FeatureKind,
        rows: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        doc_ids: Vec<String>,
    ) -> Self {
        let n_features = feature_names.len();
        let n_docs = rows.len();
        let mut values = Vec::with_capacity(n_docs * n_features);
        for row in rows {
            assert_eq!(row.len(), n_features, "ragged feature rows");
            values.extend(row);
        }
        FeatureMatrix {
            kind,
            n_docs,
            n_features,
            values,
            feature_names,
            doc_ids,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn get(&self, doc: usize, feature: usize) -> f64 {
        self.values[doc * self.n_features + feature]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_docs).map(move |i| self.row(i))
    }

    /// CSV with header `doc_id,f0..f{n-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["doc_id".to_string()];
        header.extend((0..self.n_features).map(|j| format!("f{j}")));
        w.write_record(&header)?;
        for i in 0..self.n_docs {
            let mut rec = vec![self.doc_ids.get(i).cloned().unwrap_or_else(|| i.to_string())];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        crate::report::write_atomic(path, &buf)
    }
}

/// Display names for topic columns: `topic 1` .. `topic K`.
pub fn topic_feature_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("topic {i}")).collect()
}
