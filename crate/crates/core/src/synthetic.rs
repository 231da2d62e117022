//! Seeded toy corpora, casts, and embedding files. Events map to targets
//! through a fixed verb table, so small models can overfit them and tests
//! can rely on known structure without the released dataset.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotationRecord, EventPhrase, PerTask, Source};

/// verb -> (intent, agent reaction, others' reaction)
const VERBS: [(&str, &str, &str, &str); 12] = [
    ("bakes", "eat", "proud", "grateful"),
    ("cooks", "eat", "full", "grateful"),
    ("eats", "eat", "full", "none"),
    ("serves", "share", "helpful", "grateful"),
    ("fights", "win", "angry", "scared"),
    ("punches", "win", "angry", "hurt"),
    ("threatens", "win", "powerful", "scared"),
    ("hugs", "comfort", "warm", "loved"),
    ("reads", "learn", "calm", "none"),
    ("writes", "share", "proud", "none"),
    ("sings", "perform", "happy", "happy"),
    ("paints", "create", "proud", "none"),
];

const OBJECTS: [&str; 14] = [
    "pasta", "bread", "cake", "soup", "book", "letter", "song", "picture", "house", "car",
    "garden", "story", "poem", "guitar",
];

const SOURCES: [Source; 4] = [
    Source::RocStory,
    Source::Ngrams,
    Source::Spinn3r,
    Source::Idioms,
];

fn event_text(i: usize) -> (String, usize) {
    let template = i % 4;
    let verb_idx = (i / 4) % VERBS.len();
    let obj = OBJECTS[(i / (4 * VERBS.len())) % OBJECTS.len()];
    let verb = VERBS[verb_idx].0;
    let text = match template {
        0 => format!("PersonX {verb} {obj}"),
        1 => format!("PersonX {verb} ___ with {obj}"),
        2 => format!("PersonX {verb} PersonY near {obj}"),
        _ => format!("PersonX {verb} the {obj}"),
    };
    (text, verb_idx)
}

/// Deterministic corpus of `n` unique events, one annotation each, with a
/// single response per task. Every token appears at least twice once
/// `n >= VERBS.len() * 2`, so default vocabulary thresholds keep them.
pub fn corpus(n: usize, seed: u64) -> Vec<AnnotationRecord> {
    corpus_with(n, seed, false)
}

/// Like [`corpus`], but responses may hold 2-3 entries per task; useful for
/// expansion-count tests.
pub fn corpus_multi_response(n: usize, seed: u64) -> Vec<AnnotationRecord> {
    corpus_with(n, seed, true)
}

fn corpus_with(n: usize, seed: u64, multi: bool) -> Vec<AnnotationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extras = ["glad", "tired", "busy", "quiet"];
    (0..n)
        .map(|i| {
            let (text, verb_idx) = event_text(i);
            let (_, intent, xreact, oreact) = VERBS[verb_idx];
            let mut responses = PerTask {
                xintent: vec![format!("to {intent}")],
                xreact: vec![xreact.to_string()],
                oreact: vec![oreact.to_string()],
            };
            if multi {
                if rng.random_bool(0.5) {
                    responses
                        .xreact
                        .push(extras[rng.random_range(0..extras.len())].to_string());
                }
                if rng.random_bool(0.3) {
                    responses
                        .xintent
                        .push(format!("to be {}", extras[rng.random_range(0..extras.len())]));
                }
            }
            AnnotationRecord::new(
                EventPhrase::parse(&text).expect("generated events parse"),
                SOURCES[i % SOURCES.len()],
                true,
                true,
                responses,
            )
        })
        .collect()
}

/// Three annotation rows per event over a small cooking-vs-fighting event
/// set; the planted signal for the bias pipeline. Responses are drawn
/// from wide per-class pools so an overfit model fills its entire top-10
/// with in-class words: eating-related for cooking events, anger-related
/// for fighting events.
pub fn rigged_corpus(seed: u64) -> Vec<AnnotationRecord> {
    let events = [
        ("PersonX bakes bread", true),
        ("PersonX cooks pasta", true),
        ("PersonX eats cake", true),
        ("PersonX serves soup", true),
        ("PersonX fights PersonY", false),
        ("PersonX punches PersonY", false),
        ("PersonX threatens PersonY", false),
        ("PersonX fights the crowd", false),
    ];
    // at least ten distinct targets per (class, task) pool, so an overfit
    // model fills its whole top-10 with in-class words
    let cooking_intents = [
        "to eat", "to eat food", "to eat dinner", "to cook dinner", "to cook food",
        "to bake bread", "to eat pasta", "to eat cake", "to serve soup", "to cook pasta",
        "to serve food", "to eat soup",
    ];
    let cooking_reactions = [
        "full", "hungry", "happy", "proud", "warm", "glad", "good", "calm", "grateful",
        "helpful",
    ];
    let cooking_oreacts = [
        "grateful", "full", "happy", "hungry", "glad", "warm", "loved", "good", "calm",
        "peaceful",
    ];
    let fighting_intents = [
        "to win", "to fight", "to fight PersonY", "to threaten PersonY", "to punch PersonY",
        "to win the fight", "to fight the crowd", "to threaten the crowd", "to punch the crowd",
        "to win the crowd",
    ];
    let fighting_reactions = [
        "angry", "mad", "furious", "scared", "hurt", "bad", "worried", "anxious", "sad",
        "afraid",
    ];
    let fighting_oreacts = [
        "scared", "hurt", "sad", "afraid", "angry", "worried", "anxious", "bad", "mad",
        "furious",
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |pool: &[&str], n: usize| -> Vec<String> {
        let mut chosen: Vec<String> = Vec::new();
        while chosen.len() < n.min(pool.len()) {
            let cand = pool[rng.random_range(0..pool.len())].to_string();
            if !chosen.contains(&cand) {
                chosen.push(cand);
            }
        }
        chosen
    };
    let mut records = Vec::new();
    for (text, cooking) in events {
        for _ in 0..3 {
            let responses = if cooking {
                PerTask {
                    xintent: pick(&cooking_intents, 2),
                    xreact: pick(&cooking_reactions, 2),
                    oreact: pick(&cooking_oreacts, 2),
                }
            } else {
                PerTask {
                    xintent: pick(&fighting_intents, 2),
                    xreact: pick(&fighting_reactions, 2),
                    oreact: pick(&fighting_oreacts, 2),
                }
            };
            records.push(AnnotationRecord::new(
                EventPhrase::parse(text).expect("generated events parse"),
                Source::RocStory,
                true,
                true,
                responses,
            ));
        }
    }
    records
}

/// One character of a synthetic cast.
#[derive(Clone, Debug, PartialEq)]
pub struct CastMember {
    pub id: String,
    pub gender: String,
    pub word_count: u64,
    pub events: Vec<String>,
}

/// Cast whose female characters mostly perform cooking events and male
/// characters mostly fighting events (85/15 mix, so the classes are not
/// perfectly separable).
pub fn cast(characters: usize, seed: u64) -> Vec<CastMember> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cooking = [
        "PersonX bakes bread",
        "PersonX cooks pasta",
        "PersonX eats cake",
        "PersonX serves soup",
    ];
    let fighting = [
        "PersonX fights PersonY",
        "PersonX punches PersonY",
        "PersonX threatens PersonY",
        "PersonX fights the crowd",
    ];
    (0..characters)
        .map(|i| {
            let female = i % 2 == 0;
            let gender = if female { "female" } else { "male" };
            let n_events = rng.random_range(2..=4);
            let events = (0..n_events)
                .map(|_| {
                    let aligned = rng.random_bool(0.85);
                    let pool = if female == aligned { &cooking } else { &fighting };
                    pool[rng.random_range(0..pool.len())].to_string()
                })
                .collect();
            CastMember {
                id: format!("char{i:04}"),
                gender: gender.to_string(),
                word_count: rng.random_range(200..5_000),
                events,
            }
        })
        .collect()
}

/// Character events TSV in the bias-pipeline schema:
/// `character_id  gender  scene_word_count  event`, one row per event.
pub fn render_cast_tsv(members: &[CastMember]) -> String {
    let mut out = String::from("character_id\tgender\tscene_word_count\tevent\n");
    for m in members {
        for event in &m.events {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", m.id, m.gender, m.word_count, event);
        }
    }
    out
}

/// Distinct seeded embedding vectors for every token of a record set,
/// rendered in the text embedding-file format.
pub fn render_embedding_file(records: &[AnnotationRecord], dim: usize, seed: u64) -> String {
    let mut tokens: Vec<String> = Vec::new();
    let push = |t: String, tokens: &mut Vec<String>| {
        if !tokens.contains(&t) {
            tokens.push(t);
        }
    };
    for rec in records {
        for tok in rec.event.tokens() {
            push(tok.to_string(), &mut tokens);
        }
        for (_, responses) in rec.responses.iter() {
            for seq in responses {
                for tok in seq {
                    push(tok.clone(), &mut tokens);
                }
            }
        }
    }
    push("none".to_string(), &mut tokens);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for token in tokens {
        let _ = write!(out, "{token}");
        for _ in 0..dim {
            let _ = write!(out, " {:.6}", rng.random_range(-0.5..0.5));
        }
        out.push('\n');
    }
    out
}

/// Demonstration lexicon shipped with the crate (category blocks with stem
/// wildcards). Users supply a full dictionary themselves for real analyses.
pub fn demo_lexicon() -> &'static str {
    include_str!("../data/demo_lexicon.txt")
}

pub fn write_file(path: &Path, content: &str) -> std::io::Result<()> {
    std::fs::write(path, content)
}
