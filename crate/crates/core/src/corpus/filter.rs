use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use super::event::{EventPhrase, EventToken};
use super::records::Source;
use super::CorpusError;

/// Stopword and phrasal-verb inventories used by the content-word filter.
/// The shipped defaults are versioned with the crate; callers may load
/// their own one-entry-per-line files.
#[derive(Clone, Debug, Default)]
pub struct WordLists {
    stopwords: HashSet<String>,
    /// Each phrasal verb as its token sequence, e.g. ["get", "up"].
    phrasal_verbs: Vec<Vec<String>>,
}

impl WordLists {
    pub fn new(stopwords: HashSet<String>, mut phrasal_verbs: Vec<Vec<String>>) -> Self {
        // longest-first so spans match greedily
        phrasal_verbs.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        WordLists {
            stopwords,
            phrasal_verbs,
        }
    }

    /// Lists shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_contents(
            include_str!("../../data/stopwords.txt"),
            include_str!("../../data/phrasal_verbs.txt"),
        )
    }

    pub fn from_contents(stopwords: &str, phrasal_verbs: &str) -> Self {
        let stops = parse_lines(stopwords).into_iter().collect();
        let phrasals = parse_lines(phrasal_verbs)
            .into_iter()
            .map(|line| line.split_whitespace().map(|t| t.to_string()).collect())
            .collect();
        Self::new(stops, phrasals)
    }

    pub fn from_files(stopwords: &Path, phrasal_verbs: &Path) -> Result<Self, CorpusError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| CorpusError::Io {
                path: p.display().to_string(),
                source: e,
            })
        };
        Ok(Self::from_contents(&read(stopwords)?, &read(phrasal_verbs)?))
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }
}

fn parse_lines(content: &str) -> Vec<String> {
    content
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Outcome of the content-word filter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FilterDecision {
    Accept { content_words: usize },
    Reject { content_words: usize, reason: String },
}

impl FilterDecision {
    pub fn accepted(&self) -> bool {
        matches!(self, FilterDecision::Accept { .. })
    }
}

/// Keep events with at least two and less than five content words, where
/// content words exclude stopwords, person tags, and blanks, and a listed
/// phrasal verb spans count as a single content word.
pub fn content_word_filter(event: &EventPhrase, lists: &WordLists) -> FilterDecision {
    let count = count_content_words(event, lists);
    if count < 2 {
        FilterDecision::Reject {
            content_words: count,
            reason: format!("{count} content word(s); need at least two"),
        }
    } else if count >= 5 {
        FilterDecision::Reject {
            content_words: count,
            reason: format!("{count} content words; need less than five"),
        }
    } else {
        FilterDecision::Accept {
            content_words: count,
        }
    }
}

fn count_content_words(event: &EventPhrase, lists: &WordLists) -> usize {
    let tokens = event.tokens();
    let mut count = 0;
    let mut i = 0;
    while i < tokens.len() {
        if let Some(span) = phrasal_match_at(tokens, i, lists) {
            count += 1;
            i += span;
            continue;
        }
        if let EventToken::Word(w) = &tokens[i] {
            if !lists.is_stopword(w) && w.chars().any(|c| c.is_alphanumeric()) {
                count += 1;
            }
        }
        i += 1;
    }
    count
}

fn phrasal_match_at(tokens: &[EventToken], at: usize, lists: &WordLists) -> Option<usize> {
    'outer: for phrasal in &lists.phrasal_verbs {
        if at + phrasal.len() > tokens.len() || phrasal.is_empty() {
            continue;
        }
        for (offset, lemma) in phrasal.iter().enumerate() {
            match &tokens[at + offset] {
                EventToken::Word(w) if inflection_matches(w, lemma) => {}
                _ => continue 'outer,
            }
        }
        return Some(phrasal.len());
    }
    None
}

/// Light verb-inflection folding so "gets up" matches the listed lemma
/// "get up". Handles -s/-es/-ed/-ing with final-consonant doubling.
fn inflection_matches(token: &str, lemma: &str) -> bool {
    if token == lemma {
        return true;
    }
    for suffix in ["s", "es", "ed", "ing"] {
        if let Some(base) = token.strip_suffix(suffix) {
            if base == lemma {
                return true;
            }
            // doubled final consonant: "getting" -> "gett" -> "get"
            let chars: Vec<char> = base.chars().collect();
            if chars.len() >= 2 && chars[chars.len() - 1] == chars[chars.len() - 2] {
                let undoubled: String = chars[..chars.len() - 1].iter().collect();
                if undoubled == lemma {
                    return true;
                }
            }
            // dropped final e: "making" -> "mak" -> "make"
            let restored = format!("{base}e");
            if restored == lemma {
                return true;
            }
        }
    }
    false
}

/// Corpus-specific selection thresholds for externally supplied candidate
/// event lists: a minimum occurrence count and/or a top-N cap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CandidateThresholds {
    pub min_frequency: Option<u64>,
    pub top_n: Option<usize>,
}

/// Select candidate events for annotation: apply the content-word filter,
/// then the frequency threshold, then keep the top N by (frequency desc,
/// text asc). Input is (event, occurrence count) as extracted upstream.
pub fn filter_candidates(
    candidates: &[(EventPhrase, u64)],
    lists: &WordLists,
    thresholds: CandidateThresholds,
) -> Vec<EventPhrase> {
    let mut kept: Vec<(&EventPhrase, u64)> = candidates
        .iter()
        .filter(|(event, freq)| {
            content_word_filter(event, lists).accepted()
                && thresholds.min_frequency.map(|m| *freq >= m).unwrap_or(true)
        })
        .map(|(e, f)| (e, *f))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.text().cmp(&b.0.text())));
    if let Some(n) = thresholds.top_n {
        kept.truncate(n);
    }
    kept.into_iter().map(|(e, _)| e.clone()).collect()
}

/// Analysis subsets an event can belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubsetTag {
    /// Contains a non-instantiated (blank) argument.
    Blank,
    /// Mentions two or more distinct person variables.
    TwoPlusPeople,
    /// Drawn from the idiom list.
    Idiom,
}

impl SubsetTag {
    pub const ALL: [SubsetTag; 3] = [SubsetTag::Blank, SubsetTag::TwoPlusPeople, SubsetTag::Idiom];

    pub fn name(self) -> &'static str {
        match self {
            SubsetTag::Blank => "Blank",
            SubsetTag::TwoPlusPeople => "2+People",
            SubsetTag::Idiom => "Idiom",
        }
    }
}

/// Tags are functions of the event tokens and the source only.
pub fn subset_tags(event: &EventPhrase, source: Source) -> BTreeSet<SubsetTag> {
    let mut tags = BTreeSet::new();
    if event.has_blank() {
        tags.insert(SubsetTag::Blank);
    }
    if event.person_vars().len() >= 2 {
        tags.insert(SubsetTag::TwoPlusPeople);
    }
    if source == Source::Idioms {
        tags.insert(SubsetTag::Idiom);
    }
    tags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lists() -> WordLists {
        WordLists::shipped()
    }

    #[test]
    fn accepts_two_content_words() {
        let e = EventPhrase::parse("PersonX eats ___ for dinner").unwrap();
        let d = content_word_filter(&e, &lists());
        assert_eq!(d, FilterDecision::Accept { content_words: 2 });
    }

    #[test]
    fn phrasal_verb_counts_once() {
        // with an empty stopword list, "gets up" would be two content
        // words; the phrasal entry collapses it to one
        let custom = WordLists::new(
            HashSet::new(),
            vec![vec!["get".to_string(), "up".to_string()]],
        );
        let e = EventPhrase::parse("PersonX gets up").unwrap();
        match content_word_filter(&e, &custom) {
            FilterDecision::Reject { content_words, .. } => assert_eq!(content_words, 1),
            other => panic!("expected reject, got {other:?}"),
        }
        // shipped lists agree
        assert!(!content_word_filter(&e, &lists()).accepted());
    }

    #[test]
    fn five_content_words_is_rejected() {
        let e = EventPhrase::parse("PersonX paints huge bright murals downtown").unwrap();
        match content_word_filter(&e, &lists()) {
            FilterDecision::Reject { content_words, reason } => {
                assert_eq!(content_words, 5);
                assert!(reason.contains("less than five"));
            }
            other => panic!("expected reject, got {other:?}"),
        }
    }

    #[test]
    fn inflection_folding() {
        assert!(inflection_matches("gets", "get"));
        assert!(inflection_matches("getting", "get"));
        assert!(inflection_matches("watched", "watch"));
        assert!(inflection_matches("making", "make"));
        assert!(!inflection_matches("got", "get"));
    }

    #[test]
    fn candidate_selection_applies_both_threshold_kinds() {
        let event = |text: &str| EventPhrase::parse(text).unwrap();
        let candidates = vec![
            (event("PersonX bakes bread"), 120),
            (event("PersonX eats pasta for dinner"), 80),
            (event("PersonX sings a song"), 4),
            // one content word: filtered regardless of frequency
            (event("PersonX sleeps"), 900),
        ];
        let picked = filter_candidates(
            &candidates,
            &lists(),
            CandidateThresholds {
                min_frequency: Some(5),
                top_n: Some(2),
            },
        );
        let texts: Vec<String> = picked.iter().map(|e| e.text()).collect();
        assert_eq!(
            texts,
            vec!["PersonX bakes bread", "PersonX eats pasta for dinner"]
        );

        // no thresholds: only the content-word filter applies
        let all = filter_candidates(&candidates, &lists(), CandidateThresholds::default());
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn subset_tags_by_definition() {
        let blank = EventPhrase::parse("PersonX eats ___").unwrap();
        assert_eq!(
            subset_tags(&blank, Source::RocStory),
            BTreeSet::from([SubsetTag::Blank])
        );

        let two = EventPhrase::parse("PersonX punches PersonY").unwrap();
        assert_eq!(
            subset_tags(&two, Source::Ngrams),
            BTreeSet::from([SubsetTag::TwoPlusPeople])
        );

        let idiom = EventPhrase::parse("PersonX kicks the bucket").unwrap();
        assert_eq!(
            subset_tags(&idiom, Source::Idioms),
            BTreeSet::from([SubsetTag::Idiom])
        );

        let repeat = EventPhrase::parse("PersonX hugs PersonX").unwrap();
        assert!(subset_tags(&repeat, Source::RocStory).is_empty());
    }
}
