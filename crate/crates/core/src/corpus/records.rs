use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::event::{tokenize_text, EventPhrase};
use super::CorpusError;

/// Origin corpus of an extracted event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    RocStory,
    Ngrams,
    Spinn3r,
    Idioms,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::RocStory => "rocstory",
            Source::Ngrams => "ngrams",
            Source::Spinn3r => "spinn3r",
            Source::Idioms => "idioms",
        }
    }

    /// Lenient mapping for upstream source labels.
    pub fn from_label(label: &str) -> Option<Source> {
        let l = label.to_lowercase();
        if l.contains("roc") {
            Some(Source::RocStory)
        } else if l.contains("gram") {
            Some(Source::Ngrams)
        } else if l.contains("spinn") {
            Some(Source::Spinn3r)
        } else if l.contains("idiom") || l.contains("wiktionary") {
            Some(Source::Idioms)
        } else {
            None
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three inference targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    XIntent,
    XReact,
    OReact,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::XIntent, Task::XReact, Task::OReact];

    pub fn name(self) -> &'static str {
        match self {
            Task::XIntent => "xintent",
            Task::XReact => "xreact",
            Task::OReact => "oreact",
        }
    }

    pub fn from_name(name: &str) -> Option<Task> {
        match name.to_lowercase().as_str() {
            "xintent" | "intent" => Some(Task::XIntent),
            "xreact" => Some(Task::XReact),
            "oreact" => Some(Task::OReact),
            _ => None,
        }
    }

    /// Report column label.
    pub fn label(self) -> &'static str {
        match self {
            Task::XIntent => "Intent",
            Task::XReact => "XReact",
            Task::OReact => "OReact",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per task.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerTask<T> {
    pub xintent: T,
    pub xreact: T,
    pub oreact: T,
}

impl<T> PerTask<T> {
    pub fn get(&self, task: Task) -> &T {
        match task {
            Task::XIntent => &self.xintent,
            Task::XReact => &self.xreact,
            Task::OReact => &self.oreact,
        }
    }

    pub fn get_mut(&mut self, task: Task) -> &mut T {
        match task {
            Task::XIntent => &mut self.xintent,
            Task::XReact => &mut self.xreact,
            Task::OReact => &mut self.oreact,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Task, &T) -> U) -> PerTask<U> {
        PerTask {
            xintent: f(Task::XIntent, &self.xintent),
            xreact: f(Task::XReact, &self.xreact),
            oreact: f(Task::OReact, &self.oreact),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Task, &T)> {
        Task::ALL.iter().map(move |&t| (t, self.get(t)))
    }
}

/// One crowdworker's annotation of one event: validity and intentionality
/// flags plus up to three free responses per mental-state task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub event: EventPhrase,
    pub source: Source,
    pub valid: bool,
    pub intentional: bool,
    /// Responses as normalized token sequences. Invalid records carry none;
    /// valid records materialize empty slots as `["none"]`.
    pub responses: PerTask<Vec<Vec<String>>>,
}

impl AnnotationRecord {
    pub fn new(
        event: EventPhrase,
        source: Source,
        valid: bool,
        intentional: bool,
        raw_responses: PerTask<Vec<String>>,
    ) -> Self {
        let responses = if valid {
            raw_responses.map(|task, list| {
                let mut seqs: Vec<Vec<String>> = list
                    .iter()
                    .map(|r| preprocess_target(r, task))
                    .collect();
                if seqs.is_empty() {
                    seqs.push(vec!["none".to_string()]);
                }
                seqs
            })
        } else {
            PerTask::default()
        };
        AnnotationRecord {
            event,
            source,
            valid,
            intentional,
            responses,
        }
    }
}

/// Normalize one free response into target tokens: tokenize like events,
/// strip a leading "to" / "to be" from intents, and materialize empty
/// responses as the single token "none".
pub fn preprocess_target(raw: &str, task: Task) -> Vec<String> {
    let mut tokens = tokenize_text(raw);
    if task == Task::XIntent {
        if tokens.len() >= 2 && tokens[0] == "to" && tokens[1] == "be" {
            tokens.drain(0..2);
        } else if !tokens.is_empty() && tokens[0] == "to" {
            tokens.remove(0);
        }
    }
    if tokens.is_empty() || tokens == ["none"] || tokens == ["na"] {
        return vec!["none".to_string()];
    }
    tokens
}

/// Corpus file formats accepted by [`load_corpus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// Internal source of truth: TSV with header
    /// `source event valid intentional xintent xreact oreact`.
    CanonicalTsv,
    /// Adapter for the released corpus CSV
    /// (`Source,Event,Xintent,Xemotion,Otheremotion,...`).
    ReleasedCsv,
}

#[derive(Clone, Debug)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<AnnotationRecord>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    match format {
        CorpusFormat::CanonicalTsv => parse_rows(path, csv_reader(file, b'\t'), parse_canonical_row),
        CorpusFormat::ReleasedCsv => parse_rows(path, csv_reader(file, b','), parse_released_row),
    }
}

fn csv_reader(file: File, delimiter: u8) -> csv::Reader<File> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(file)
}

fn parse_rows(
    path: &Path,
    mut reader: csv::Reader<File>,
    parse: impl Fn(&csv::StringRecord, &csv::StringRecord) -> Result<AnnotationRecord, String>,
) -> Result<Vec<AnnotationRecord>, CorpusError> {
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })?
        .clone();
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for result in reader.records() {
        match result {
            Ok(row) => {
                let line = row.position().map(|p| p.line()).unwrap_or(0);
                match parse(&headers, &row) {
                    Ok(rec) => records.push(rec),
                    Err(msg) => issues.push(RowIssue { line, message: msg }),
                }
            }
            Err(e) => issues.push(RowIssue {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            }),
        }
    }
    if !issues.is_empty() {
        return Err(CorpusError::Malformed {
            path: path.display().to_string(),
            issues,
        });
    }
    Ok(records)
}

fn parse_json_list(cell: &str) -> Result<Vec<String>, String> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    serde_json::from_str::<Vec<String>>(trimmed)
        .map_err(|e| format!("invalid JSON string array {trimmed:?}: {e}"))
}

fn parse_canonical_row(
    _headers: &csv::StringRecord,
    row: &csv::StringRecord,
) -> Result<AnnotationRecord, String> {
    if row.len() != 7 {
        return Err(format!("expected 7 columns, got {}", row.len()));
    }
    let source = Source::from_label(&row[0]).ok_or_else(|| format!("unknown source {:?}", &row[0]))?;
    let event = EventPhrase::parse(&row[1]).map_err(|e| e.to_string())?;
    let valid = parse_flag(&row[2])?;
    let intentional = parse_flag(&row[3])?;
    let responses = PerTask {
        xintent: parse_json_list(&row[4])?,
        xreact: parse_json_list(&row[5])?,
        oreact: parse_json_list(&row[6])?,
    };
    Ok(AnnotationRecord::new(event, source, valid, intentional, responses))
}

fn parse_flag(cell: &str) -> Result<bool, String> {
    match cell.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("expected 0/1 flag, got {other:?}")),
    }
}

fn parse_released_row(
    headers: &csv::StringRecord,
    row: &csv::StringRecord,
) -> Result<AnnotationRecord, String> {
    let col = |name: &str| -> Result<String, String> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .and_then(|i| row.get(i))
            .map(|s| s.to_string())
            .ok_or_else(|| format!("missing column {name:?}"))
    };
    let source =
        Source::from_label(&col("Source")?).ok_or_else(|| "unknown source label".to_string())?;
    let event = EventPhrase::parse(&col("Event")?).map_err(|e| e.to_string())?;
    let xintent = parse_json_list(&col("Xintent")?)?;
    let xreact = parse_json_list(&col("Xemotion")?)?;
    let oreact = parse_json_list(&col("Otheremotion")?)?;
    // the released file carries no validity flag; rows present are usable,
    // and an all-"none" intent marks an unintentional event
    let intentional = !(xintent.is_empty()
        || xintent.iter().all(|r| r.trim().eq_ignore_ascii_case("none")));
    Ok(AnnotationRecord::new(
        event,
        source,
        true,
        intentional,
        PerTask {
            xintent,
            xreact,
            oreact,
        },
    ))
}

/// Write records in the canonical TSV form. Loading the output reproduces
/// the records exactly (responses are stored preprocessed).
pub fn write_canonical_tsv(path: &Path, records: &[AnnotationRecord]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    };
    writeln!(w, "source\tevent\tvalid\tintentional\txintent\txreact\toreact").map_err(io_err)?;
    for rec in records {
        let cell = |seqs: &Vec<Vec<String>>| {
            let joined: Vec<String> = seqs.iter().map(|s| s.join(" ")).collect();
            serde_json::to_string(&joined).expect("string lists always serialize")
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            rec.source,
            rec.event.text(),
            rec.valid as u8,
            rec.intentional as u8,
            cell(&rec.responses.xintent),
            cell(&rec.responses.xreact),
            cell(&rec.responses.oreact),
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intent_prefix_stripping() {
        assert_eq!(preprocess_target("to be subtle", Task::XIntent), ["subtle"]);
        assert_eq!(
            preprocess_target("to catch the criminal", Task::XIntent),
            ["catch", "the", "criminal"]
        );
        // reactions keep their leading "to"
        assert_eq!(preprocess_target("to be", Task::XReact), ["to", "be"]);
    }

    #[test]
    fn bare_prefix_intent_becomes_none() {
        assert_eq!(preprocess_target("to", Task::XIntent), ["none"]);
        assert_eq!(preprocess_target("to be", Task::XIntent), ["none"]);
    }

    #[test]
    fn empty_response_becomes_none() {
        assert_eq!(preprocess_target("", Task::XReact), ["none"]);
        assert_eq!(preprocess_target("  ", Task::OReact), ["none"]);
        assert_eq!(preprocess_target("NONE", Task::XIntent), ["none"]);
    }

    #[test]
    fn invalid_records_carry_no_annotations() {
        let rec = AnnotationRecord::new(
            EventPhrase::parse("PersonX mumbles gibberish").unwrap(),
            Source::Spinn3r,
            false,
            false,
            PerTask {
                xintent: vec!["to confuse".into()],
                xreact: vec![],
                oreact: vec![],
            },
        );
        assert!(rec.responses.xintent.is_empty());
        assert!(rec.responses.xreact.is_empty());
        assert!(rec.responses.oreact.is_empty());
    }

    #[test]
    fn valid_record_materializes_empty_slots() {
        let rec = AnnotationRecord::new(
            EventPhrase::parse("It starts snowing").unwrap(),
            Source::RocStory,
            true,
            false,
            PerTask {
                xintent: vec![],
                xreact: vec![],
                oreact: vec!["calm".into(), "cold".into()],
            },
        );
        assert_eq!(rec.responses.xintent, vec![vec!["none".to_string()]]);
        assert_eq!(rec.responses.xreact, vec![vec!["none".to_string()]]);
        assert_eq!(rec.responses.oreact.len(), 2);
    }
}
