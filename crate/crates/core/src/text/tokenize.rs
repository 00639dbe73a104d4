use crate::error::{Error, Result};

/// Lowercases, drops punctuation and splits on whitespace.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    let tokens: Vec<String> = cleaned.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err(Error::Invalid("empty caption".into()));
    }
    Ok(tokens)
}

/// Canonical form used for deduplication: tokens joined by single spaces.
pub fn normalize(text: &str) -> Result<String> {
    Ok(tokenize(text)?.join(" "))
}
