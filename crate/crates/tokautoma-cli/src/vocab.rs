//! Token vocabulary for the integer id stream mode: a JSON array of token
//! texts whose index is the id.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("not a JSON array of strings: {0}")]
    Json(#[from] serde_json::Error),
    #[error("id {id} is empty")]
    EmptyToken { id: usize },
    #[error("id {id} repeats token `{token}`")]
    Duplicate { id: usize, token: String },
}

/// Dense bijection between token texts and ids starting at 0.
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_json(text: &str) -> Result<Vocab, VocabError> {
        let tokens: Vec<String> = serde_json::from_str(text)?;
        let mut ids = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(VocabError::EmptyToken { id });
            }
            if ids.insert(token.clone(), id).is_some() {
                return Err(VocabError::Duplicate { id, token: token.clone() });
            }
        }
        Ok(Vocab { tokens, ids })
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
