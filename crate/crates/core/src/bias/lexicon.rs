use std::collections::BTreeSet;
use std::path::Path;

use super::BiasError;

/// One lexicon entry: a literal word or a stem with a trailing wildcard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LexEntry {
    Literal(String),
    Stem(String),
}

impl LexEntry {
    /// Literal entries match exactly. A stem matches any token it prefixes;
    /// a final "y" is folded to "i" before the prefix test so one stem
    /// covers inflection families ("happi*" takes happy / happily /
    /// happiness, not "happens").
    pub fn matches(&self, token: &str) -> bool {
        match self {
            LexEntry::Literal(w) => token == w,
            LexEntry::Stem(s) => {
                if token.starts_with(s.as_str()) {
                    return true;
                }
                match token.strip_suffix('y') {
                    Some(base) => format!("{base}i").starts_with(s.as_str()),
                    None => false,
                }
            }
        }
    }
}

/// Category lexicon: named blocks of lowercase entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    categories: Vec<(String, Vec<LexEntry>)>,
}

impl Lexicon {
    /// Parse the `[CategoryName]` block format, one entry per line; `*` is
    /// legal only as the final character. Reports the offending line number.
    pub fn parse(content: &str) -> Result<Self, BiasError> {
        let mut categories: Vec<(String, Vec<LexEntry>)> = Vec::new();
        let mut seen_in_current: BTreeSet<String> = BTreeSet::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| BiasError::LexiconParse {
                        line: lineno,
                        message: format!("unterminated category header {line:?}"),
                    })?
                    .trim();
                if name.is_empty() {
                    return Err(BiasError::LexiconParse {
                        line: lineno,
                        message: "empty category name".into(),
                    });
                }
                if let Some((prev, entries)) = categories.last() {
                    if entries.is_empty() {
                        return Err(BiasError::LexiconParse {
                            line: lineno,
                            message: format!("category {prev:?} has no entries"),
                        });
                    }
                }
                categories.push((name.to_string(), Vec::new()));
                seen_in_current.clear();
                continue;
            }
            let (name, entries) = categories.last_mut().ok_or_else(|| BiasError::LexiconParse {
                line: lineno,
                message: format!("entry {line:?} appears before any [Category] header"),
            })?;
            let entry_text = line.to_lowercase();
            if entry_text.chars().rev().skip(1).any(|c| c == '*') {
                return Err(BiasError::LexiconParse {
                    line: lineno,
                    message: format!("wildcard must be the final character: {line:?}"),
                });
            }
            if !seen_in_current.insert(entry_text.clone()) {
                return Err(BiasError::LexiconParse {
                    line: lineno,
                    message: format!("duplicate entry {line:?} in category {name:?}"),
                });
            }
            let entry = match entry_text.strip_suffix('*') {
                Some("") => {
                    return Err(BiasError::LexiconParse {
                        line: lineno,
                        message: "bare * entry".into(),
                    })
                }
                Some(stem) => LexEntry::Stem(stem.to_string()),
                None => LexEntry::Literal(entry_text),
            };
            entries.push(entry);
        }
        match categories.last() {
            None => Err(BiasError::LexiconParse {
                line: content.lines().count(),
                message: "lexicon defines no categories".into(),
            }),
            Some((name, entries)) if entries.is_empty() => Err(BiasError::LexiconParse {
                line: content.lines().count(),
                message: format!("category {name:?} has no entries"),
            }),
            Some(_) => Ok(Lexicon { categories }),
        }
    }

    pub fn load(path: &Path) -> Result<Self, BiasError> {
        let content = std::fs::read_to_string(path).map_err(|e| BiasError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&content)
    }

    pub fn category_names(&self) -> Vec<&str> {
        self.categories.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Per-category proportion of tokens matching any entry. A token counts
    /// once per category no matter how many entries it matches. Empty token
    /// lists score zero everywhere.
    pub fn score_text(&self, tokens: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.categories.len()];
        if tokens.is_empty() {
            return scores;
        }
        for (ci, (_, entries)) in self.categories.iter().enumerate() {
            let matching = tokens
                .iter()
                .filter(|tok| entries.iter().any(|e| e.matches(tok)))
                .count();
            scores[ci] = matching as f64 / tokens.len() as f64;
        }
        scores
    }
}
