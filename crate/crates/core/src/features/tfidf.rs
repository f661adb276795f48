use serde::{Deserialize, Serialize};

use super::{FeatureKind, FeatureMatrix};
use crate::corpus::{Corpus, Document};

/// Inverse document frequencies learned from one corpus, applied to any
/// document expressed in that corpus's vocabulary.
///
/// Score for term `t` in document `i` is `(count_i(t) / len_i) * ln(D / df(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub idf: Vec<f64>,
    pub terms: Vec<String>,
}

impl TfidfModel {
    pub fn fit(corpus: &Corpus) -> Self {
        let d = corpus.vocabulary.total_docs() as f64;
        let idf = corpus
            .vocabulary
            .doc_freqs()
            .iter()
            .map(|&df| (d / df as f64).ln())
            .collect();
        TfidfModel {
            idf,
            terms: corpus.vocabulary.terms().to_vec(),
        }
    }

    pub fn transform(&self, doc: &Document) -> Vec<f64> {
        let mut row = vec![0.0; self.idf.len()];
        let len = doc.token_ids.len();
        if len == 0 {
            return row;
        }
        let mut counts = vec![0u32; self.idf.len()];
        for &t in &doc.token_ids {
            if let Some(c) = counts.get_mut(t as usize) {
                *c += 1;
            }
        }
        for (t, &c) in counts.iter().enumerate() {
            if c > 0 {
                row[t] = (c as f64 / len as f64) * self.idf[t];
            }
        }
        row
    }

    pub fn transform_all<'a>(&self, docs: impl IntoIterator<Item = &'a Document>) -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        for doc in docs {
            rows.push(self.transform(doc));
            ids.push(doc.id.clone());
        }
        FeatureMatrix::from_rows(FeatureKind::Tfidf, rows, self.terms.clone(), ids)
    }
}

pub fn tfidf(corpus: &Corpus) -> FeatureMatrix {
    TfidfModel::fit(corpus).transform_all(&corpus.documents)
}
