use std::fmt;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Typed participant variable standing in for a person mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PersonVar {
    X,
    Y,
    Z,
}

impl PersonVar {
    pub fn canonical(self) -> &'static str {
        match self {
            PersonVar::X => "PersonX",
            PersonVar::Y => "PersonY",
            PersonVar::Z => "PersonZ",
        }
    }
}

/// One normalized event token: a lowercase word, a typed person variable,
/// or a blank placeholder for an uninstantiated argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventToken {
    Word(String),
    Person(PersonVar),
    Blank,
}

/// Surface form used when writing tokens back out.
pub const BLANK_TEXT: &str = "___";

impl fmt::Display for EventToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventToken::Word(w) => f.write_str(w),
            EventToken::Person(p) => f.write_str(p.canonical()),
            EventToken::Blank => f.write_str(BLANK_TEXT),
        }
    }
}

/// A normalized event phrase. Construction guarantees lowercase words,
/// atomic person variables, and atomic blanks.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventPhrase {
    tokens: Vec<EventToken>,
}

impl EventPhrase {
    /// Normalize a raw token list: lowercase words, fold person variables
    /// into typed tokens, map underscore runs to blanks, detach punctuation.
    pub fn normalize<S: AsRef<str>>(raw: &[S]) -> Result<Self, CorpusError> {
        let mut tokens = Vec::new();
        for chunk in raw {
            for piece in split_punctuation(chunk.as_ref()) {
                if let Some(tok) = classify(&piece) {
                    tokens.push(tok);
                }
            }
        }
        // punctuation-only input carries no event content
        let has_content = tokens.iter().any(|t| match t {
            EventToken::Person(_) => true,
            EventToken::Blank => false,
            EventToken::Word(w) => w.chars().any(|c| c.is_alphanumeric()),
        });
        if !has_content {
            return Err(CorpusError::EmptyEvent);
        }
        Ok(EventPhrase { tokens })
    }

    /// Normalize a whitespace-separated event string.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let raw: Vec<&str> = text.split_whitespace().collect();
        Self::normalize(&raw)
    }

    pub fn tokens(&self) -> &[EventToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Distinct person variables mentioned, in first-appearance order.
    pub fn person_vars(&self) -> Vec<PersonVar> {
        let mut seen = Vec::new();
        for t in &self.tokens {
            if let EventToken::Person(p) = t {
                if !seen.contains(p) {
                    seen.push(*p);
                }
            }
        }
        seen
    }

    pub fn has_blank(&self) -> bool {
        self.tokens.iter().any(|t| matches!(t, EventToken::Blank))
    }

    /// Events with no person variable whose subject is "it" (weather-style
    /// events annotated only for others' reactions).
    pub fn is_it_event(&self) -> bool {
        self.person_vars().is_empty()
            && matches!(&self.tokens[0], EventToken::Word(w) if w == "it")
    }

    /// Canonical space-joined surface form.
    pub fn text(&self) -> String {
        let parts: Vec<String> = self.tokens.iter().map(|t| t.to_string()).collect();
        parts.join(" ")
    }
}

impl fmt::Display for EventPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

fn classify(piece: &str) -> Option<EventToken> {
    if piece.is_empty() {
        return None;
    }
    if piece.len() >= 2 && piece.chars().all(|c| c == '_') {
        return Some(EventToken::Blank);
    }
    match piece.to_lowercase().as_str() {
        "personx" => Some(EventToken::Person(PersonVar::X)),
        "persony" => Some(EventToken::Person(PersonVar::Y)),
        "personz" => Some(EventToken::Person(PersonVar::Z)),
        lower => Some(EventToken::Word(lower.to_string())),
    }
}

/// Detach leading and trailing punctuation into separate tokens; interior
/// punctuation (apostrophes, hyphens) stays attached.
fn split_punctuation(chunk: &str) -> Vec<String> {
    let is_punct = |c: char| c.is_ascii_punctuation() && c != '_';
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    let mut end = chars.len();
    let mut lead = Vec::new();
    let mut trail = Vec::new();
    while start < end && is_punct(chars[start]) {
        lead.push(chars[start].to_string());
        start += 1;
    }
    while end > start && is_punct(chars[end - 1]) {
        trail.push(chars[end - 1].to_string());
        end -= 1;
    }
    trail.reverse();
    let mut out = lead;
    if start < end {
        out.push(chars[start..end].iter().collect());
    }
    out.extend(trail);
    out
}

/// Render normalized token strings for target sequences: same tokenizer as
/// events, applied to annotation text.
pub fn tokenize_text(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        for piece in split_punctuation(chunk) {
            if let Some(tok) = classify(&piece) {
                out.push(tok.to_string());
            }
        }
    }
    out
}
