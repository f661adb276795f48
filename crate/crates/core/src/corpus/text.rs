use std::collections::HashSet;
use std::path::Path;

use crate::Result;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Splits on every non-alphabetic character, lowercases, and drops tokens
/// shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphabetic())
        .filter(|t| t.len() >= 2)
        .map(|t| t.to_ascii_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    /// Parses one lowercase word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|w| !w.is_empty())
            .map(|w| w.to_ascii_lowercase())
            .collect();
        StopWords { words }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn empty() -> Self {
        StopWords {
            words: HashSet::new(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopWords {
    /// The bundled 127-word English list.
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

pub fn remove_stopwords(tokens: Vec<String>, stopwords: &StopWords) -> Vec<String> {
    tokens.into_iter().filter(|t| !stopwords.contains(t)).collect()
}
