use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::LdaError;

/// Token <-> id map with ids in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    /// Maps documents to ids, dropping unknown tokens. Returns the dropped count.
    pub fn encode<S: AsRef<str>>(&self, docs: &[Vec<S>]) -> (Vec<Vec<u32>>, usize) {
        let mut dropped = 0;
        let encoded = docs
            .iter()
            .map(|d| {
                d.iter()
                    .filter_map(|t| {
                        let id = self.id(t.as_ref());
                        if id.is_none() {
                            dropped += 1;
                        }
                        id
                    })
                    .collect()
            })
            .collect();
        (encoded, dropped)
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        let mut v = Vocabulary { words: Vec::with_capacity(words.len()), ids: HashMap::new() };
        for w in &words {
            v.insert(w);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

/// Builds the vocabulary and the id-encoded documents.
pub fn build_vocab<S: AsRef<str>>(docs: &[Vec<S>]) -> Result<(Vocabulary, Vec<Vec<u32>>), LdaError> {
    let mut vocab = Vocabulary { words: Vec::new(), ids: HashMap::new() };
    let encoded: Vec<Vec<u32>> = docs.iter().map(|d| d.iter().map(|t| vocab.insert(t.as_ref())).collect()).collect();
    if vocab.is_empty() {
        return Err(LdaError::EmptyCorpus);
    }
    Ok((vocab, encoded))
}
