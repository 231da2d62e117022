//! Evaluation surface: average cross-entropy, recall@k, subset breakdowns,
//! and precision@10 over human-rating files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    subset_tags, AnnotationRecord, PerTask, SubsetTag, Task, TokenId, EOS_ID,
};
use crate::inference::{InferenceConfig, RankedCandidate};
use crate::model::{
    decode_ngram, sequence_nll, DecoderVars, ModelError, ReadyModel,
};
use crate::numerics::{Real, Tape};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("split {0:?} holds no valid annotations")]
    EmptySplit(String),
    #[error("human ratings for event {event:?}, task {task}: ranks must be 1..=10, got {found:?}")]
    MissingRanks {
        event: String,
        task: Task,
        found: Vec<usize>,
    },
    #[error("human rating file {path}: line {line}: {message}")]
    RatingParse {
        path: String,
        line: usize,
        message: String,
    },
}

/// Per-task metric block.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskEval {
    pub cross_entropy: f64,
    /// Percentage of gold responses found in the top-k candidates.
    pub recall_at_k: f64,
    pub responses: usize,
    /// Responses with no n-gram-space target (n-gram setup only).
    pub skipped_ngram: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub name: String,
    pub events: usize,
    /// Absent (None) when the subset is empty.
    pub recall: PerTask<Option<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub k: usize,
    pub tasks: PerTask<TaskEval>,
    /// Mean of the three per-task cross-entropies.
    pub average_cross_entropy: f64,
    pub events: usize,
    pub annotations: usize,
    pub subsets: Vec<SubsetRow>,
    /// Conventions this report uses (multi-response counting, sequence
    /// cross-entropy granularity).
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalConfig {
    pub k: usize,
    pub inference: InferenceConfig,
    pub with_subsets: bool,
    pub max_target_len: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 10,
            inference: InferenceConfig::default(),
            with_subsets: false,
            max_target_len: 10,
        }
    }
}

struct ResponseOutcome {
    /// Teacher-forced NLL (sequence: summed over steps; n-gram: -ln p).
    nll: Option<f64>,
    /// 1-based rank of the exact match among decoded candidates.
    hit_rank: Option<usize>,
}

struct EventOutcome {
    tags: BTreeSet<SubsetTag>,
    responses: PerTask<Vec<ResponseOutcome>>,
}

/// Evaluate a split: per-task cross-entropy and recall@k, optionally with
/// per-subset recall rows. Metrics are averages over annotation responses,
/// each response counted as an independent trial.
pub fn evaluate<T: Real>(
    model: &ReadyModel<T>,
    records: &[AnnotationRecord],
    split_name: &str,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let valid: Vec<&AnnotationRecord> = records.iter().filter(|r| r.valid).collect();
    if valid.is_empty() {
        return Err(EvalError::EmptySplit(split_name.to_string()));
    }

    // group annotation rows by event so each event is decoded once
    let mut by_event: BTreeMap<String, Vec<&AnnotationRecord>> = BTreeMap::new();
    for rec in &valid {
        by_event.entry(rec.event.text()).or_default().push(rec);
    }

    let mut outcomes: Vec<EventOutcome> = Vec::new();
    for recs in by_event.values() {
        outcomes.push(evaluate_event(model, recs, config)?);
    }

    let mut report = EvalReport {
        split: split_name.to_string(),
        k: config.k,
        events: by_event.len(),
        annotations: valid.len(),
        notes: vec![
            "each annotation response is an independent recall trial".into(),
            "sequence cross-entropy is per response, summed over time steps".into(),
        ],
        ..EvalReport::default()
    };

    for task in Task::ALL {
        let mut nll_sum = 0.0;
        let mut nll_count = 0usize;
        let mut hits = 0usize;
        let mut trials = 0usize;
        let mut skipped = 0usize;
        for outcome in &outcomes {
            for resp in outcome.responses.get(task) {
                trials += 1;
                match resp.nll {
                    Some(v) => {
                        nll_sum += v;
                        nll_count += 1;
                    }
                    None => skipped += 1,
                }
                if resp.hit_rank.map(|r| r <= config.k).unwrap_or(false) {
                    hits += 1;
                }
            }
        }
        *report.tasks.get_mut(task) = TaskEval {
            cross_entropy: if nll_count > 0 { nll_sum / nll_count as f64 } else { f64::NAN },
            recall_at_k: 100.0 * hits as f64 / trials.max(1) as f64,
            responses: trials,
            skipped_ngram: skipped,
        };
    }
    report.average_cross_entropy = Task::ALL
        .iter()
        .map(|&t| report.tasks.get(t).cross_entropy)
        .sum::<f64>()
        / 3.0;

    if config.with_subsets {
        report.subsets = subset_rows(&outcomes, config.k);
    }
    Ok(report)
}

fn subset_rows(outcomes: &[EventOutcome], k: usize) -> Vec<SubsetRow> {
    let mut rows = Vec::new();
    let full = recall_over(outcomes.iter().collect::<Vec<_>>().as_slice(), k);
    rows.push(SubsetRow {
        name: "Full".into(),
        events: outcomes.len(),
        recall: full.map(|_, v| Some(*v)),
    });
    for tag in SubsetTag::ALL {
        let members: Vec<&EventOutcome> =
            outcomes.iter().filter(|o| o.tags.contains(&tag)).collect();
        let recall = if members.is_empty() {
            PerTask::default().map(|_, _: &Option<f64>| None)
        } else {
            recall_over(&members, k).map(|_, v| Some(*v))
        };
        rows.push(SubsetRow {
            name: tag.name().to_string(),
            events: members.len(),
            recall,
        });
    }
    rows
}

fn recall_over(outcomes: &[&EventOutcome], k: usize) -> PerTask<f64> {
    let mut out = PerTask::default();
    for task in Task::ALL {
        let mut hits = 0usize;
        let mut trials = 0usize;
        for outcome in outcomes {
            for resp in outcome.responses.get(task) {
                trials += 1;
                if resp.hit_rank.map(|r| r <= k).unwrap_or(false) {
                    hits += 1;
                }
            }
        }
        *out.get_mut(task) = 100.0 * hits as f64 / trials.max(1) as f64;
    }
    out
}

fn evaluate_event<T: Real>(
    model: &ReadyModel<T>,
    records: &[&AnnotationRecord],
    config: &EvalConfig,
) -> Result<EventOutcome, EvalError> {
    let first = records[0];
    let event_ids: Vec<TokenId> = first
        .event
        .tokens()
        .iter()
        .map(|t| model.vocab.token_id_or_unk(&t.to_string()))
        .collect();

    let mut infer_cfg = config.inference;
    infer_cfg.top_k = config.k;
    let candidates = model.top_candidates(&event_ids, &infer_cfg)?;

    let mut tape = Tape::new();
    let vars = model.params.register(&mut tape, false);
    let h_e = crate::model::encode(
        &mut tape,
        vars.embeddings,
        &vars.encoder,
        &model.params.meta.encoder,
        &event_ids,
    )?;

    let mut responses: PerTask<Vec<ResponseOutcome>> = PerTask::default();
    for rec in records {
        for task in Task::ALL {
            for response in rec.responses.get(task) {
                let nll = response_nll(model, &mut tape, &vars, h_e, task, response, config)?;
                let hit_rank = find_match(candidates.get(task), response);
                responses.get_mut(task).push(ResponseOutcome { nll, hit_rank });
            }
        }
    }
    Ok(EventOutcome {
        tags: subset_tags(&first.event, first.source),
        responses,
    })
}

fn response_nll<T: Real>(
    model: &ReadyModel<T>,
    tape: &mut Tape<T>,
    vars: &crate::model::ModelVars,
    h_e: crate::numerics::Var,
    task: Task,
    response: &[String],
    config: &EvalConfig,
) -> Result<Option<f64>, EvalError> {
    match &vars.decoder {
        DecoderVars::Ngram(heads) => {
            match model.vocab.response_ngram_id(response) {
                None => Ok(None),
                Some(gold) => {
                    let dist = decode_ngram(tape, h_e, heads.get(task))?;
                    let loss = tape.cross_entropy(dist, gold).map_err(ModelError::from)?;
                    Ok(Some(tape.value(loss).item().as_f64()))
                }
            }
        }
        DecoderVars::Sequence(heads) => {
            let mut ids: Vec<TokenId> = response
                .iter()
                .take(config.max_target_len)
                .map(|t| model.vocab.token_id_or_unk(t))
                .collect();
            ids.push(EOS_ID);
            let loss = sequence_nll(tape, vars.embeddings, heads.get(task), h_e, &ids)?;
            Ok(Some(tape.value(loss).item().as_f64()))
        }
    }
}

/// Exact token-sequence match against ranked candidates (1-based rank).
fn find_match(candidates: &[RankedCandidate], response: &[String]) -> Option<usize> {
    candidates
        .iter()
        .position(|c| c.tokens == response)
        .map(|i| i + 1)
}

// ---------------------------------------------------------------------
// Human-rating precision

/// Ratings for exported candidates: which raters marked each (event, task,
/// rank) sensible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HumanRatings {
    /// (event_id, task) -> rank -> (candidate text, rater ids)
    entries: BTreeMap<(String, Task), BTreeMap<usize, (String, BTreeSet<String>)>>,
}

impl HumanRatings {
    pub fn insert(
        &mut self,
        event_id: &str,
        task: Task,
        rank: usize,
        candidate: &str,
        raters: BTreeSet<String>,
    ) {
        self.entries
            .entry((event_id.to_string(), task))
            .or_default()
            .insert(rank, (candidate.to_string(), raters));
    }

    pub fn events(&self) -> BTreeSet<String> {
        self.entries.keys().map(|(e, _)| e.clone()).collect()
    }
}

/// TSV with columns `event_id  task  rank  candidate_text  rater_ids`
/// (rater ids comma-separated, empty while unrated).
pub fn load_human_ratings(path: &Path) -> Result<HumanRatings, EvalError> {
    let content = std::fs::read_to_string(path).map_err(|e| EvalError::RatingParse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut ratings = HumanRatings::default();
    for (idx, line) in content.lines().enumerate() {
        if idx == 0 && line.starts_with("event_id") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 5 {
            return Err(EvalError::RatingParse {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!("expected 5 tab-separated columns, got {}", parts.len()),
            });
        }
        let task = Task::from_name(parts[1]).ok_or_else(|| EvalError::RatingParse {
            path: path.display().to_string(),
            line: idx + 1,
            message: format!("unknown task {:?}", parts[1]),
        })?;
        let rank: usize = parts[2].parse().map_err(|_| EvalError::RatingParse {
            path: path.display().to_string(),
            line: idx + 1,
            message: format!("bad rank {:?}", parts[2]),
        })?;
        let raters: BTreeSet<String> = parts[4]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        ratings.insert(parts[0], task, rank, parts[3], raters);
    }
    Ok(ratings)
}

/// Average number of top-10 candidates per event that at least
/// `rater_threshold` raters marked sensible. Every (event, task) must carry
/// exactly ranks 1..=10.
pub fn precision_at_10(
    ratings: &HumanRatings,
    rater_threshold: usize,
) -> Result<(PerTask<f64>, f64), EvalError> {
    let mut sums: PerTask<f64> = PerTask::default();
    let mut counts: PerTask<usize> = PerTask::default();
    for ((event, task), ranks) in &ratings.entries {
        let found: Vec<usize> = ranks.keys().copied().collect();
        if found != (1..=10).collect::<Vec<_>>() {
            return Err(EvalError::MissingRanks {
                event: event.clone(),
                task: *task,
                found,
            });
        }
        let sensible = ranks
            .values()
            .filter(|(_, raters)| raters.len() >= rater_threshold)
            .count();
        *sums.get_mut(*task) += sensible as f64;
        *counts.get_mut(*task) += 1;
    }
    let per_task = sums.map(|task, sum| {
        let n = *counts.get(task);
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    });
    let present: Vec<f64> = Task::ALL
        .iter()
        .map(|&t| *per_task.get(t))
        .filter(|v| v.is_finite())
        .collect();
    let overall = present.iter().sum::<f64>() / present.len().max(1) as f64;
    Ok((per_task, overall))
}

/// Deterministically sample events and write their top-10 candidates per
/// task as an unrated template in the human-rating schema.
pub fn export_human_eval<T: Real>(
    model: &ReadyModel<T>,
    records: &[AnnotationRecord],
    n_events: usize,
    seed: u64,
    config: &InferenceConfig,
) -> Result<(String, bool), EvalError> {
    let mut events: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in records.iter().filter(|r| r.valid) {
        let text = rec.event.text();
        if seen.insert(text.clone()) {
            events.push(text);
        }
    }
    let clamped = n_events > events.len();
    let take = n_events.min(events.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    events.shuffle(&mut rng);
    events.truncate(take);

    let mut out = String::from("event_id\ttask\trank\tcandidate_text\trater_ids\n");
    let mut infer_cfg = *config;
    infer_cfg.top_k = 10;
    for event in &events {
        let result = model.predict(event, &infer_cfg)?;
        for task in Task::ALL {
            for (rank, cand) in result.candidates.get(task).iter().enumerate() {
                writeln!(out, "{event}\t{task}\t{}\t{}\t", rank + 1, cand.text())
                    .expect("string write");
            }
        }
    }
    Ok((out, clamped))
}

// ---------------------------------------------------------------------
// Rendering

/// Human-readable table plus machine-readable key-value lines.
pub fn render_report(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "split: {}  (events {}, annotations {})", report.split, report.events, report.annotations);
    let _ = writeln!(
        s,
        "{:<12} {:>14} {:>14}",
        "task",
        "cross-entropy",
        format!("recall@{} (%)", report.k)
    );
    for task in Task::ALL {
        let m = report.tasks.get(task);
        let _ = writeln!(
            s,
            "{:<12} {:>14.4} {:>14.1}",
            task.label(),
            m.cross_entropy,
            m.recall_at_k
        );
    }
    let _ = writeln!(s, "{:<12} {:>14.4}", "average", report.average_cross_entropy);
    if !report.subsets.is_empty() {
        let _ = writeln!(s, "\nsubset recall@{} (%):", report.k);
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>10} {:>10} {:>10}",
            "subset", "events", "Intent", "XReact", "OReact"
        );
        for row in &report.subsets {
            let cell = |v: &Option<f64>| match v {
                Some(x) => format!("{x:.1}"),
                None => "absent".to_string(),
            };
            let _ = writeln!(
                s,
                "{:<12} {:>8} {:>10} {:>10} {:>10}",
                row.name,
                row.events,
                cell(row.recall.get(Task::XIntent)),
                cell(row.recall.get(Task::XReact)),
                cell(row.recall.get(Task::OReact)),
            );
        }
    }
    for note in &report.notes {
        let _ = writeln!(s, "# {note}");
    }
    s.push('\n');
    s.push_str(&render_kv(report));
    s
}

/// Stable `key value` lines for scripts.
pub fn render_kv(report: &EvalReport) -> String {
    let mut s = String::new();
    let p = &report.split;
    for task in Task::ALL {
        let m = report.tasks.get(task);
        let _ = writeln!(s, "{p}.{}.cross_entropy {:.6}", task.name(), m.cross_entropy);
        let _ = writeln!(s, "{p}.{}.recall_at_{} {:.6}", task.name(), report.k, m.recall_at_k);
        let _ = writeln!(s, "{p}.{}.responses {}", task.name(), m.responses);
        if m.skipped_ngram > 0 {
            let _ = writeln!(s, "{p}.{}.skipped_ngram {}", task.name(), m.skipped_ngram);
        }
    }
    let _ = writeln!(s, "{p}.average_cross_entropy {:.6}", report.average_cross_entropy);
    for row in &report.subsets {
        for task in Task::ALL {
            if let Some(v) = row.recall.get(task) {
                let _ = writeln!(
                    s,
                    "{p}.subset.{}.{}.recall_at_{} {:.6}",
                    row.name,
                    task.name(),
                    report.k,
                    v
                );
            }
        }
    }
    s
}
