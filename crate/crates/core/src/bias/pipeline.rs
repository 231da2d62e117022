use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::holm::holm_correct;
use super::lexicon::Lexicon;
use super::logistic::{fit_logistic, RIDGE};
use super::BiasError;
use crate::corpus::{PerTask, Task};
use crate::inference::InferenceConfig;
use crate::model::ReadyModel;
use crate::numerics::Real;

/// One character with a gender label, scene word count, and the inference
/// texts generated from that character's events.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CharacterProfile {
    pub id: String,
    pub gender: Option<Gender>,
    pub word_count: u64,
    /// Generated candidate texts per task, tokenized.
    pub texts: PerTask<Vec<Vec<String>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    fn parse(label: &str) -> Option<Gender> {
        match label.trim().to_lowercase().as_str() {
            "female" | "f" | "woman" => Some(Gender::Female),
            "male" | "m" | "man" => Some(Gender::Male),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

/// Character events file row: `character_id  gender  scene_word_count  event`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacterEventRow {
    pub character_id: String,
    pub gender: String,
    pub word_count: u64,
    pub event: String,
}

pub fn load_character_events(path: &Path) -> Result<Vec<CharacterEventRow>, BiasError> {
    let content = std::fs::read_to_string(path).map_err(|e| BiasError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut rows = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if idx == 0 && line.starts_with("character_id") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(BiasError::CharacterParse {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!("expected 4 tab-separated columns, got {}", parts.len()),
            });
        }
        let word_count: u64 = parts[2].parse().map_err(|_| BiasError::CharacterParse {
            path: path.display().to_string(),
            line: idx + 1,
            message: format!("bad word count {:?}", parts[2]),
        })?;
        rows.push(CharacterEventRow {
            character_id: parts[0].to_string(),
            gender: parts[1].to_string(),
            word_count,
            event: parts[3].to_string(),
        });
    }
    Ok(rows)
}

/// Character-by-category matrix after standardization, plus the indices of
/// zero-variance categories (left at zero and excluded from regression).
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateOutcome {
    pub matrix: Vec<Vec<f64>>,
    pub zero_variance: Vec<usize>,
}

/// Average each character's per-text category proportions, then z-score
/// every category column across characters (population variance).
pub fn aggregate_characters(
    texts_per_character: &[Vec<Vec<String>>],
    lexicon: &Lexicon,
) -> Result<AggregateOutcome, BiasError> {
    let n = texts_per_character.len();
    if n < 2 {
        return Err(BiasError::NotEnoughData(format!(
            "aggregation needs at least 2 characters, got {n}"
        )));
    }
    let cats = lexicon.len();
    let mut matrix = vec![vec![0.0f64; cats]; n];
    for (ci, texts) in texts_per_character.iter().enumerate() {
        if texts.is_empty() {
            continue;
        }
        for text in texts {
            for (k, v) in lexicon.score_text(text).into_iter().enumerate() {
                matrix[ci][k] += v;
            }
        }
        for v in &mut matrix[ci] {
            *v /= texts.len() as f64;
        }
    }

    let mut zero_variance = Vec::new();
    for k in 0..cats {
        let mean = matrix.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        let var = matrix.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n as f64;
        if var < 1e-24 {
            for row in matrix.iter_mut() {
                row[k] = 0.0;
            }
            zero_variance.push(k);
        } else {
            let sd = var.sqrt();
            for row in matrix.iter_mut() {
                row[k] = (row[k] - mean) / sd;
            }
        }
    }
    Ok(AggregateOutcome {
        matrix,
        zero_variance,
    })
}

/// Direction of association, from the sign of the coefficient for
/// P(female).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    FemaleAssociated,
    MaleAssociated,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::FemaleAssociated => "female",
            Direction::MaleAssociated => "male",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignificanceTier {
    P001,
    P01,
    P05,
}

impl SignificanceTier {
    pub fn marker(self) -> &'static str {
        match self {
            SignificanceTier::P001 => "***",
            SignificanceTier::P01 => "**",
            SignificanceTier::P05 => "*",
        }
    }

    fn from_p(p: f64) -> Option<Self> {
        if p < 0.001 {
            Some(SignificanceTier::P001)
        } else if p < 0.01 {
            Some(SignificanceTier::P01)
        } else if p < 0.05 {
            Some(SignificanceTier::P05)
        } else {
            None
        }
    }
}

/// One (category, task group) regression outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionResult {
    pub category: String,
    pub task_group: Task,
    pub coefficient: f64,
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub direction: Direction,
    pub significance: Option<SignificanceTier>,
    pub separation_suspected: bool,
}

#[derive(Clone, Debug, Default)]
pub struct BiasReport {
    /// Sorted by (task group, adjusted p ascending).
    pub results: Vec<RegressionResult>,
    pub characters_used: usize,
    pub characters_excluded_no_gender: usize,
    pub zero_variance_categories: Vec<(Task, String)>,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct BiasConfig {
    pub inference: InferenceConfig,
    pub alpha: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig {
            inference: InferenceConfig::default(),
            alpha: 0.05,
        }
    }
}

/// Build per-character profiles by generating the top-10 inferences for
/// every character event.
pub fn build_profiles<T: Real>(
    model: &ReadyModel<T>,
    rows: &[CharacterEventRow],
    config: &InferenceConfig,
) -> Result<Vec<CharacterProfile>, BiasError> {
    // first-appearance order keeps the pipeline deterministic
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, CharacterProfile> = BTreeMap::new();
    // one prediction per distinct event text
    let mut cache: BTreeMap<String, PerTask<Vec<Vec<String>>>> = BTreeMap::new();

    for row in rows {
        if !by_id.contains_key(&row.character_id) {
            order.push(row.character_id.clone());
            by_id.insert(
                row.character_id.clone(),
                CharacterProfile {
                    id: row.character_id.clone(),
                    gender: Gender::parse(&row.gender),
                    word_count: row.word_count,
                    texts: PerTask::default(),
                },
            );
        }
        let candidates = match cache.get(&row.event) {
            Some(c) => c.clone(),
            None => {
                let result = model
                    .predict(&row.event, config)
                    .map_err(BiasError::Model)?;
                let texts = result
                    .candidates
                    .map(|_, list| list.iter().map(|c| c.tokens.clone()).collect::<Vec<_>>());
                cache.insert(row.event.clone(), texts.clone());
                texts
            }
        };
        let profile = by_id.get_mut(&row.character_id).expect("inserted above");
        for task in Task::ALL {
            profile
                .texts
                .get_mut(task)
                .extend(candidates.get(task).iter().cloned());
        }
    }
    Ok(order
        .into_iter()
        .map(|id| by_id.remove(&id).expect("collected above"))
        .collect())
}

/// The full analysis: generate inferences per character, score them
/// against the lexicon, aggregate and standardize per task group, regress
/// each category on gender with a word-count control, and Holm-correct the
/// whole family of tests.
pub fn analyze_bias<T: Real>(
    model: &ReadyModel<T>,
    rows: &[CharacterEventRow],
    lexicon: &Lexicon,
    config: &BiasConfig,
) -> Result<BiasReport, BiasError> {
    let profiles = build_profiles(model, rows, &config.inference)?;
    analyze_profiles(&profiles, lexicon, config)
}

/// Analysis core over prebuilt profiles (also used by tests that rig the
/// generated texts directly).
pub fn analyze_profiles(
    profiles: &[CharacterProfile],
    lexicon: &Lexicon,
    config: &BiasConfig,
) -> Result<BiasReport, BiasError> {
    let labeled: Vec<&CharacterProfile> =
        profiles.iter().filter(|p| p.gender.is_some()).collect();
    let excluded = profiles.len() - labeled.len();
    if labeled.is_empty() {
        return Err(BiasError::NotEnoughData(
            "no characters carry a gender label".into(),
        ));
    }

    let y: Vec<bool> = labeled
        .iter()
        .map(|p| p.gender == Some(Gender::Female))
        .collect();
    let control = standardize(
        &labeled
            .iter()
            .map(|p| p.word_count as f64)
            .collect::<Vec<_>>(),
    );

    let names = lexicon.category_names();
    let mut tests: Vec<(Task, usize, f64, f64, bool)> = Vec::new(); // (task, cat, coef, raw p, separation)
    let mut zero_variance_categories = Vec::new();
    for task in Task::ALL {
        let texts: Vec<Vec<Vec<String>>> = labeled
            .iter()
            .map(|p| p.texts.get(task).clone())
            .collect();
        let agg = aggregate_characters(&texts, lexicon)?;
        for (k, name) in names.iter().enumerate() {
            if agg.zero_variance.contains(&k) {
                zero_variance_categories.push((task, name.to_string()));
                continue;
            }
            let column: Vec<f64> = agg.matrix.iter().map(|r| r[k]).collect();
            let fit = fit_logistic(&y, &column, &control)?;
            tests.push((task, k, fit.coefficient, fit.p_value, fit.separation_suspected));
        }
    }
    if tests.is_empty() {
        return Err(BiasError::NotEnoughData(
            "every category was constant across characters".into(),
        ));
    }

    let raw: Vec<f64> = tests.iter().map(|t| t.3).collect();
    let holm = holm_correct(&raw, config.alpha);

    let mut results: Vec<RegressionResult> = tests
        .iter()
        .zip(&holm.adjusted)
        .map(|(&(task, k, coef, raw_p, separation), &adjusted_p)| RegressionResult {
            category: names[k].to_string(),
            task_group: task,
            coefficient: coef,
            raw_p,
            adjusted_p,
            direction: if coef >= 0.0 {
                Direction::FemaleAssociated
            } else {
                Direction::MaleAssociated
            },
            significance: SignificanceTier::from_p(adjusted_p),
            separation_suspected: separation,
        })
        .collect();
    results.sort_by(|a, b| {
        (a.task_group as usize)
            .cmp(&(b.task_group as usize))
            .then(a.adjusted_p.total_cmp(&b.adjusted_p))
            .then(a.category.cmp(&b.category))
    });

    Ok(BiasReport {
        results,
        characters_used: labeled.len(),
        characters_excluded_no_gender: excluded,
        zero_variance_categories,
        alpha: config.alpha,
    })
}

fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var < 1e-24 {
        return vec![0.0; values.len()];
    }
    let sd = var.sqrt();
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Grouped significance report plus machine-readable rows.
pub fn render_bias_report(report: &BiasReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "characters: {} used, {} excluded (no gender label)",
        report.characters_used, report.characters_excluded_no_gender
    );
    for task in Task::ALL {
        let group_label = match task {
            Task::XIntent => "intents",
            Task::XReact => "reactions",
            Task::OReact => "others' reactions",
        };
        for direction in [Direction::FemaleAssociated, Direction::MaleAssociated] {
            let rows: Vec<&RegressionResult> = report
                .results
                .iter()
                .filter(|r| {
                    r.task_group == task && r.direction == direction && r.significance.is_some()
                })
                .collect();
            let _ = writeln!(
                s,
                "\n{}: {group_label}",
                match direction {
                    Direction::FemaleAssociated => "Female",
                    Direction::MaleAssociated => "Male",
                }
            );
            if rows.is_empty() {
                let _ = writeln!(s, "  (none significant)");
            }
            for r in rows {
                let _ = writeln!(
                    s,
                    "  {}{}  (coef {:+.3}, adj p {:.2e}{})",
                    r.category.to_lowercase(),
                    r.significance.map(|t| t.marker()).unwrap_or(""),
                    r.coefficient,
                    r.adjusted_p,
                    if r.separation_suspected {
                        ", separation suspected"
                    } else {
                        ""
                    }
                );
            }
        }
    }
    let _ = writeln!(
        s,
        "\nsignificance tiers: *** p<0.001, ** p<0.01, * p<0.05 (Holm-adjusted)"
    );
    let _ = writeln!(s, "ridge on IRLS normal equations: {RIDGE:.0e}");
    if !report.zero_variance_categories.is_empty() {
        let skipped: Vec<String> = report
            .zero_variance_categories
            .iter()
            .map(|(t, c)| format!("{}/{c}", t.name()))
            .collect();
        let _ = writeln!(s, "zero-variance categories excluded: {}", skipped.join(", "));
    }
    s.push('\n');
    for r in &report.results {
        let _ = writeln!(
            s,
            "result\t{}\t{}\t{:+.6}\t{:.6e}\t{:.6e}\t{}\t{}",
            r.task_group.name(),
            r.category,
            r.coefficient,
            r.raw_p,
            r.adjusted_p,
            r.direction.name(),
            r.significance.map(|t| t.marker()).unwrap_or("-"),
        );
    }
    s
}
