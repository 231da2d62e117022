use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::records::AnnotationRecord;
use super::CorpusError;

pub type TokenId = usize;
pub type NgramId = usize;

/// Reserved ids at the front of the unigram space.
pub const UNK_ID: TokenId = 0;
pub const EOS_ID: TokenId = 1;
pub const BLANK_ID: TokenId = 2;
pub const PERSON_X_ID: TokenId = 3;
pub const PERSON_Y_ID: TokenId = 4;
pub const PERSON_Z_ID: TokenId = 5;

pub const RESERVED_TOKENS: [&str; 6] = ["<unk>", "</s>", "___", "PersonX", "PersonY", "PersonZ"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabThresholds {
    /// Unigrams are admitted at frequency >= this.
    pub unigram_min: u64,
    /// Bigrams/trigrams are admitted at frequency >= this
    /// ("appear more than five times" = 6).
    pub ngram_min: u64,
}

impl Default for VocabThresholds {
    fn default() -> Self {
        VocabThresholds {
            unigram_min: 2,
            ngram_min: 6,
        }
    }
}

/// Output spaces for the decoders: a unigram space (sequence decoding emits
/// one unigram per step) and a {1,2,3}-gram space that extends it (one
/// n-gram classifier target per response). Unigram ids double as n-gram ids.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    higher_grams: Vec<String>,
    token_freq: Vec<u64>,
    higher_freq: Vec<u64>,
    thresholds: VocabThresholds,
    #[serde(skip)]
    token_index: HashMap<String, TokenId>,
    #[serde(skip)]
    ngram_index: HashMap<String, NgramId>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
            && self.higher_grams == other.higher_grams
            && self.thresholds == other.thresholds
    }
}

impl Vocabulary {
    fn from_parts(
        tokens: Vec<String>,
        higher_grams: Vec<String>,
        token_freq: Vec<u64>,
        higher_freq: Vec<u64>,
        thresholds: VocabThresholds,
    ) -> Self {
        let mut v = Vocabulary {
            tokens,
            higher_grams,
            token_freq,
            higher_freq,
            thresholds,
            token_index: HashMap::new(),
            ngram_index: HashMap::new(),
        };
        v.rebuild_index();
        v
    }

    fn rebuild_index(&mut self) {
        self.token_index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        self.ngram_index = self
            .higher_grams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), self.tokens.len() + i))
            .collect();
    }

    pub fn unigram_count(&self) -> usize {
        self.tokens.len()
    }

    /// Size of the full {1,2,3}-gram output space.
    pub fn ngram_count(&self) -> usize {
        self.tokens.len() + self.higher_grams.len()
    }

    pub fn thresholds(&self) -> VocabThresholds {
        self.thresholds
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id]
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.token_index.get(token).copied()
    }

    pub fn token_id_or_unk(&self, token: &str) -> TokenId {
        self.token_id(token).unwrap_or(UNK_ID)
    }

    /// Text of any id in the {1,2,3}-gram space.
    pub fn ngram(&self, id: NgramId) -> &str {
        if id < self.tokens.len() {
            &self.tokens[id]
        } else {
            &self.higher_grams[id - self.tokens.len()]
        }
    }

    pub fn ngram_id(&self, text: &str) -> Option<NgramId> {
        if let Some(&id) = self.token_index.get(text) {
            return Some(id);
        }
        self.ngram_index.get(text).copied()
    }

    pub fn token_frequency(&self, token: &str) -> u64 {
        self.token_id(token).map(|i| self.token_freq[i]).unwrap_or(0)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.token_id_or_unk(t)).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.tokens[i].clone()).collect()
    }

    /// N-gram-space id of a full response, if the response is 1-3 tokens
    /// long and every piece was admitted.
    pub fn response_ngram_id(&self, response: &[String]) -> Option<NgramId> {
        if response.is_empty() || response.len() > 3 {
            return None;
        }
        self.ngram_id(&response.join(" "))
    }

    /// Content hash covering ids, tokens, and thresholds; checkpoints store
    /// it so stale vocab/model pairings are rejected.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        let mut buf = String::new();
        writeln!(
            buf,
            "u_min={} n_min={}",
            self.thresholds.unigram_min, self.thresholds.ngram_min
        )
        .expect("string write");
        hasher.update(buf.as_bytes());
        for t in &self.tokens {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(b"--\n");
        for g in &self.higher_grams {
            hasher.update(g.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest.iter().fold(String::new(), |mut acc, b| {
            write!(acc, "{b:02x}").expect("string write");
            acc
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vocabulary serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        let mut v: Vocabulary =
            serde_json::from_str(json).map_err(|e| CorpusError::VocabFile(e.to_string()))?;
        v.rebuild_index();
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        std::fs::write(path, self.to_json()).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let json = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&json)
    }
}

/// Count unigrams over event and response tokens, and bigrams/trigrams over
/// response sequences, then admit by threshold. Ids are dense: reserved
/// tokens first, then admitted unigrams by (frequency desc, lexicographic),
/// then admitted higher-order n-grams in the same order.
pub fn build_vocab(
    train_records: &[AnnotationRecord],
    thresholds: VocabThresholds,
) -> Result<Vocabulary, CorpusError> {
    let valid: Vec<&AnnotationRecord> = train_records.iter().filter(|r| r.valid).collect();
    if valid.is_empty() {
        return Err(CorpusError::EmptyTrainingSet);
    }

    let mut unigrams: HashMap<String, u64> = HashMap::new();
    let mut highers: HashMap<String, u64> = HashMap::new();
    for rec in &valid {
        for tok in rec.event.tokens() {
            *unigrams.entry(tok.to_string()).or_insert(0) += 1;
        }
        for (_, responses) in rec.responses.iter() {
            for seq in responses {
                for tok in seq {
                    *unigrams.entry(tok.clone()).or_insert(0) += 1;
                }
                for n in 2..=3usize {
                    for window in seq.windows(n) {
                        *highers.entry(window.join(" ")).or_insert(0) += 1;
                    }
                }
            }
        }
    }

    let admit = |counts: &HashMap<String, u64>, min: u64, skip_reserved: bool| {
        let mut admitted: Vec<(String, u64)> = counts
            .iter()
            .filter(|(tok, &c)| {
                c >= min && !(skip_reserved && RESERVED_TOKENS.contains(&tok.as_str()))
            })
            .map(|(t, &c)| (t.clone(), c))
            .collect();
        admitted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        admitted
    };

    let admitted_unigrams = admit(&unigrams, thresholds.unigram_min, true);
    let admitted_highers = admit(&highers, thresholds.ngram_min, false);

    let mut tokens: Vec<String> = RESERVED_TOKENS.iter().map(|s| s.to_string()).collect();
    let mut token_freq: Vec<u64> = RESERVED_TOKENS
        .iter()
        .map(|t| unigrams.get(*t).copied().unwrap_or(0))
        .collect();
    for (t, c) in admitted_unigrams {
        tokens.push(t);
        token_freq.push(c);
    }
    let (higher_grams, higher_freq): (Vec<String>, Vec<u64>) =
        admitted_highers.into_iter().unzip();

    Ok(Vocabulary::from_parts(
        tokens,
        higher_grams,
        token_freq,
        higher_freq,
        thresholds,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::event::EventPhrase;
    use crate::corpus::records::{PerTask, Source};

    fn record(event: &str, xintent: &[&str], xreact: &[&str], oreact: &[&str]) -> AnnotationRecord {
        AnnotationRecord::new(
            EventPhrase::parse(event).unwrap(),
            Source::RocStory,
            true,
            true,
            PerTask {
                xintent: xintent.iter().map(|s| s.to_string()).collect(),
                xreact: xreact.iter().map(|s| s.to_string()).collect(),
                oreact: oreact.iter().map(|s| s.to_string()).collect(),
            },
        )
    }

    #[test]
    fn frequency_thresholds_are_exact() {
        // "twice" appears twice (admitted), "once" once (excluded);
        // bigram "very happy" appears six times (admitted),
        // "fairly happy" five times (excluded)
        let mut records = vec![record(
            "PersonX says twice and once",
            &["to say twice"],
            &[],
            &[],
        )];
        for _ in 0..6 {
            records.push(record("PersonX smiles", &[], &["very happy"], &[]));
        }
        for _ in 0..5 {
            records.push(record("PersonX grins", &[], &["fairly happy"], &[]));
        }
        let vocab = build_vocab(&records, VocabThresholds::default()).unwrap();
        assert!(vocab.token_id("twice").is_some());
        assert!(vocab.token_id("once").is_none());
        assert!(vocab.ngram_id("very happy").is_some());
        assert!(vocab.ngram_id("fairly happy").is_none());
    }

    #[test]
    fn ngram_space_is_superset_of_unigrams() {
        let records: Vec<_> = (0..6)
            .map(|_| record("PersonX bakes bread", &["to eat"], &["proud"], &["none"]))
            .collect();
        let vocab = build_vocab(&records, VocabThresholds::default()).unwrap();
        for id in 0..vocab.unigram_count() {
            assert_eq!(vocab.ngram_id(vocab.token(id)), Some(id));
        }
        assert!(vocab.ngram_count() >= vocab.unigram_count());
    }

    #[test]
    fn ids_are_deterministic_across_builds() {
        let records: Vec<_> = (0..4)
            .map(|i| {
                record(
                    if i % 2 == 0 {
                        "PersonX bakes bread"
                    } else {
                        "PersonX writes a letter"
                    },
                    &["to share"],
                    &["proud", "happy"],
                    &["none"],
                )
            })
            .collect();
        let a = build_vocab(&records, VocabThresholds::default()).unwrap();
        let b = build_vocab(&records, VocabThresholds::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(
            build_vocab(&[], VocabThresholds::default()),
            Err(CorpusError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn json_round_trip_preserves_ids_and_fingerprint() {
        let records: Vec<_> = (0..3)
            .map(|_| record("PersonX sings a song", &["to perform"], &["happy"], &["none"]))
            .collect();
        let vocab = build_vocab(&records, VocabThresholds::default()).unwrap();
        let back = Vocabulary::from_json(&vocab.to_json()).unwrap();
        assert_eq!(vocab, back);
        assert_eq!(vocab.fingerprint(), back.fingerprint());
        assert_eq!(back.token_id("happy"), vocab.token_id("happy"));
    }
}
