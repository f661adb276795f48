//! Raw report ingestion, preprocessing (tokenize, stop-word removal,
//! stemming), vocabulary construction and binary label assignment.

mod porter;
mod text;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use porter::stem;
pub use text::{remove_stopwords, tokenize, StopWords};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub severity: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>, severity: impl Into<String>) -> Self {
        RawDocument {
            id: id.into(),
            text: text.into(),
            severity: severity.into(),
        }
    }
}

/// Bijection between term strings and dense ids, with document frequencies.
///
/// Ids follow lexicographic term order, so any sub-vocabulary keeps the
/// relative order of its terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    doc_freq: Vec<u32>,
    total_docs: usize,
    total_terms: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    total_docs: usize,
    total_terms: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_parts(r.terms, r.doc_freq, r.total_docs, r.total_terms)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
            total_docs: v.total_docs,
            total_terms: v.total_terms,
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>, total_docs: usize, total_terms: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            terms,
            index,
            doc_freq,
            total_docs,
            total_terms,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn doc_freqs(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    pub fn total_terms(&self) -> usize {
        self.total_terms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub token_ids: Vec<u32>,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub positive_class: String,
    pub positive_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopwords: StopWords,
    /// Terms found in fewer documents than this are dropped. 1 keeps all.
    pub min_doc_freq: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: StopWords::default(),
            min_doc_freq: 1,
        }
    }
}

/// Picks the most frequent severity as the positive class; ties go to the
/// lexicographically smallest severity string.
pub fn binarize_labels(severity_counts: &BTreeMap<String, usize>) -> Result<String> {
    let mut best: Option<(&String, usize)> = None;
    for (severity, &count) in severity_counts {
        if best.map_or(true, |(_, c)| count > c) {
            best = Some((severity, count));
        }
    }
    best.map(|(s, _)| s.clone()).ok_or(Error::NoLabels)
}

/// Tokenize, drop stop words, then stem.
pub fn preprocess(text: &str, stopwords: &StopWords) -> Vec<String> {
    remove_stopwords(tokenize(text), stopwords)
        .iter()
        .map(|t| stem(t))
        .collect()
}

pub fn build_corpus(raw: &[RawDocument], cfg: &PreprocessConfig) -> Result<Corpus> {
    if raw.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut seen = HashSet::new();
    for doc in raw {
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::DuplicateId(doc.id.clone()));
        }
    }

    let mut severity_counts = BTreeMap::new();
    for doc in raw {
        *severity_counts.entry(doc.severity.clone()).or_insert(0usize) += 1;
    }
    let positive_class = binarize_labels(&severity_counts)?;

    let token_lists: Vec<Vec<String>> = raw
        .iter()
        .map(|d| preprocess(&d.text, &cfg.stopwords))
        .collect();

    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for tokens in &token_lists {
        let unique: HashSet<&str> = tokens.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let min_df = cfg.min_doc_freq.max(1) as u32;
    let (terms, doc_freq): (Vec<String>, Vec<u32>) = df
        .into_iter()
        .filter(|&(_, f)| f >= min_df)
        .map(|(t, f)| (t.to_string(), f))
        .unzip();
    let mut vocabulary = Vocabulary::from_parts(terms, doc_freq, raw.len(), 0);

    let documents: Vec<Document> = raw
        .iter()
        .zip(&token_lists)
        .map(|(d, tokens)| Document {
            id: d.id.clone(),
            token_ids: tokens.iter().filter_map(|t| vocabulary.id(t)).collect(),
            label: d.severity == positive_class,
        })
        .collect();
    vocabulary.total_terms = documents.iter().map(|d| d.token_ids.len()).sum();

    let positives = documents.iter().filter(|d| d.label).count();
    Ok(Corpus {
        positive_fraction: positives as f64 / documents.len() as f64,
        documents,
        vocabulary,
        positive_class,
    })
}

/// Maps term ids of a parent corpus onto a sub-corpus vocabulary.
#[derive(Debug, Clone)]
pub struct TermMap {
    map: Vec<Option<u32>>,
}

impl TermMap {
    /// Re-expresses a parent-corpus document in the sub-vocabulary; terms
    /// the sub-vocabulary never saw are dropped.
    pub fn project(&self, doc: &Document) -> Document {
        Document {
            id: doc.id.clone(),
            token_ids: doc
                .token_ids
                .iter()
                .filter_map(|&t| self.map.get(t as usize).copied().flatten())
                .collect(),
            label: doc.label,
        }
    }
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// One-line summary: documents, vocabulary size, percentage severe.
    pub fn summary(&self) -> String {
        format!(
            "{} documents, {} terms, {:.0}% severe",
            self.len(),
            self.vocab_size(),
            self.positive_fraction * 100.0
        )
    }

    /// Builds a corpus over the given documents only, with a vocabulary
    /// (and document frequencies) restricted to the terms they contain.
    pub fn subset(&self, indices: &[usize]) -> (Corpus, TermMap) {
        let v = self.vocab_size();
        let mut df = vec![0u32; v];
        let mut marker = vec![usize::MAX; v];
        for (pos, &i) in indices.iter().enumerate() {
            for &t in &self.documents[i].token_ids {
                let t = t as usize;
                if marker[t] != pos {
                    marker[t] = pos;
                    df[t] += 1;
                }
            }
        }
        let mut map = vec![None; v];
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for (old, &f) in df.iter().enumerate() {
            if f > 0 {
                map[old] = Some(terms.len() as u32);
                terms.push(self.vocabulary.terms[old].clone());
                doc_freq.push(f);
            }
        }
        let term_map = TermMap { map };
        let documents: Vec<Document> = indices
            .iter()
            .map(|&i| term_map.project(&self.documents[i]))
            .collect();
        let total_terms = documents.iter().map(|d| d.token_ids.len()).sum();
        let positives = documents.iter().filter(|d| d.label).count();
        let corpus = Corpus {
            positive_fraction: if documents.is_empty() {
                0.0
            } else {
                positives as f64 / documents.len() as f64
            },
            vocabulary: Vocabulary::from_parts(terms, doc_freq, indices.len(), total_terms),
            documents,
            positive_class: self.positive_class.clone(),
        };
        (corpus, term_map)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::report::write_atomic(path, serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Corpus> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Reads an `id,text,severity` CSV (header row required, RFC 4180 quoting).
pub fn read_raw_csv(path: &Path) -> Result<Vec<RawDocument>> {
    let file = std::fs::File::open(path)?;
    read_raw_csv_from(file, path)
}

pub fn read_raw_csv_from<R: Read>(reader: R, path: &Path) -> Result<Vec<RawDocument>> {
    let input_err = |line: u64, message: String| Error::Input {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| input_err(line_of(&e), e.to_string()))?
        .clone();
    let mut cols = [None; 3];
    for (i, h) in headers.iter().enumerate() {
        let slot = match h.trim() {
            "id" => 0,
            "text" => 1,
            "severity" => 2,
            other => return Err(input_err(1, format!("unknown column '{other}'"))),
        };
        if cols[slot].replace(i).is_some() {
            return Err(input_err(1, format!("repeated column '{}'", h.trim())));
        }
    }
    let [Some(id_col), Some(text_col), Some(sev_col)] = cols else {
        return Err(input_err(1, "header must contain id,text,severity".into()));
    };

    let mut docs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| input_err(line_of(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            record
                .get(i)
                .map(str::to_string)
                .ok_or_else(|| input_err(line, format!("missing field {i}")))
        };
        docs.push(RawDocument {
            id: field(id_col)?,
            text: field(text_col)?,
            severity: field(sev_col)?.trim().to_string(),
        });
    }
    Ok(docs)
}

fn line_of(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(texts: &[&str]) -> Vec<RawDocument> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| RawDocument::new(format!("d{i}"), *t, if i % 2 == 0 { "3" } else { "4" }))
            .collect()
    }

    #[test]
    fn binarize_examples() {
        let m: BTreeMap<String, usize> =
            [("3".into(), 50), ("4".into(), 40), ("2".into(), 10)].into_iter().collect();
        assert_eq!(binarize_labels(&m).unwrap(), "3");
        let m: BTreeMap<String, usize> = [("b".into(), 5), ("a".into(), 5)].into_iter().collect();
        assert_eq!(binarize_labels(&m).unwrap(), "a");
        assert!(matches!(binarize_labels(&BTreeMap::new()), Err(Error::NoLabels)));
    }

    #[test]
    fn all_stopword_document() {
        let c = build_corpus(&raw(&["the the the"]), &PreprocessConfig::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.documents[0].token_ids.is_empty());
        assert_eq!(c.vocab_size(), 0);
        assert_eq!(c.vocabulary.total_terms(), 0);
    }

    #[test]
    fn two_document_counts() {
        let c = build_corpus(&raw(&["packet error", "packet loss"]), &PreprocessConfig::default())
            .unwrap();
        assert_eq!(c.vocab_size(), 3);
        let packet = c.vocabulary.id("packet").unwrap();
        assert_eq!(c.vocabulary.doc_freq(packet), 2);
        assert_eq!(c.vocabulary.total_terms(), 4);
        assert_eq!(c.vocabulary.terms(), &["error", "loss", "packet"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_corpus(&[], &PreprocessConfig::default()),
            Err(Error::NoDocuments)
        ));
        let dup = vec![RawDocument::new("x", "a", "1"), RawDocument::new("x", "b", "1")];
        match build_corpus(&dup, &PreprocessConfig::default()) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn min_doc_freq_prunes() {
        let cfg = PreprocessConfig {
            min_doc_freq: 2,
            ..Default::default()
        };
        let c = build_corpus(&raw(&["packet error", "packet loss"]), &cfg).unwrap();
        assert_eq!(c.vocabulary.terms(), &["packet"]);
        assert_eq!(c.vocabulary.total_terms(), 2);
    }

    #[test]
    fn positive_fraction_and_labels() {
        let docs = vec![
            RawDocument::new("a", "x", "3"),
            RawDocument::new("b", "x", "3"),
            RawDocument::new("c", "x", "4"),
        ];
        let c = build_corpus(&docs, &PreprocessConfig::default()).unwrap();
        assert_eq!(c.positive_class, "3");
        assert_eq!(c.labels(), vec![true, true, false]);
        assert!((c.positive_fraction - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn subset_reindexes() {
        let c = build_corpus(
            &raw(&["packet error", "packet loss", "buffer overflow"]),
            &PreprocessConfig::default(),
        )
        .unwrap();
        let (sub, map) = c.subset(&[0, 1]);
        assert_eq!(sub.vocabulary.terms(), &["error", "loss", "packet"]);
        assert_eq!(sub.vocabulary.total_docs(), 2);
        let projected = map.project(&c.documents[2]);
        assert!(projected.token_ids.is_empty());
    }

    #[test]
    fn csv_parsing() {
        let data = "id,text,severity\n1,\"multi\nline, text\",3\n2,plain,4\n";
        let docs = read_raw_csv_from(data.as_bytes(), Path::new("x.csv")).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].text, "multi\nline, text");

        let bad = "id,text,severity,extra\n1,a,3,z\n";
        let err = read_raw_csv_from(bad.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(err.to_string().contains("unknown column"), "{err}");

        let ragged = "id,text,severity\n1,a,3\n2,b\n";
        let err = read_raw_csv_from(ragged.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(err.to_string().contains("x.csv:3"), "{err}");
    }
}
