use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::tokenize::tokenize;

pub const OOV_TOKEN: &str = "<unk>";
pub const OOV_ID: usize = 0;

/// Token table for the self-contained text encoder. Id 0 is reserved for
/// out-of-vocabulary tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Sorted set of every token in `texts`, after the OOV entry.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set = BTreeSet::new();
        for t in texts {
            if let Ok(toks) = tokenize(t) {
                set.extend(toks);
            }
        }
        let mut tokens = vec![OOV_TOKEN.to_string()];
        tokens.extend(set.into_iter().filter(|t| t != OOV_TOKEN));
        Vocabulary::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV_ID)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}
