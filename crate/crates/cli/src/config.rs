use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mindcast_core::corpus::{CorpusFormat, SplitRatios, VocabThresholds};
use mindcast_core::inference::{BeamConfig, InferenceConfig};
use mindcast_core::model::{ConvSpec, DecoderSetup, EncoderConfig, EncoderKind, TrainConfig};
use mindcast_core::numerics::AdamConfig;

/// Full run configuration. Files are flat key-value TOML with sections;
/// command-line flags override file values, and `MINDCAST_*` environment
/// variables override file values for paths.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: Paths,
    pub model: ModelSection,
    pub train: TrainSection,
    pub split: SplitSection,
    pub infer: InferSection,
    pub run: RunSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub corpus_format: Option<String>,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub characters: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub phrasal_verbs: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub encoder: String,
    pub h: usize,
    pub decoder: String,
    pub decoder_cell: Option<usize>,
    pub conv_widths: Vec<usize>,
    pub conv_filters: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let conv = ConvSpec::default();
        ModelSection {
            encoder: "birnn".into(),
            h: 100,
            decoder: "sequence".into(),
            decoder_cell: None,
            conv_widths: conv.widths,
            conv_filters: conv.filters_per_width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_event_len: usize,
    pub max_target_len: usize,
    pub unigram_min: u64,
    pub ngram_min: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.adam.lr,
            beta1: t.adam.beta1,
            beta2: t.adam.beta2,
            epsilon: t.adam.epsilon,
            max_event_len: t.max_event_len,
            max_target_len: t.max_target_len,
            unigram_min: t.unigram_min,
            ngram_min: t.ngram_min,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train: f64,
    pub dev: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: 0.8,
            dev: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferSection {
    pub beam_width: usize,
    pub max_len: usize,
    pub k: usize,
}

impl Default for InferSection {
    fn default() -> Self {
        InferSection {
            beam_width: 10,
            max_len: 10,
            k: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub precision: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            precision: "f64".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&content)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(config)
    }

    /// Environment variables override file values for every path setting.
    pub fn apply_env(&mut self) {
        let var = |name: &str| std::env::var(name).ok().map(PathBuf::from);
        if let Some(v) = var("MINDCAST_CORPUS") {
            self.paths.corpus = Some(v);
        }
        if let Some(v) = var("MINDCAST_EMBEDDINGS") {
            self.paths.embeddings = Some(v);
        }
        if let Some(v) = var("MINDCAST_CHECKPOINT") {
            self.paths.checkpoint = Some(v);
        }
        if let Some(v) = var("MINDCAST_VOCAB") {
            self.paths.vocab = Some(v);
        }
        if let Some(v) = var("MINDCAST_LEXICON") {
            self.paths.lexicon = Some(v);
        }
        if let Some(v) = var("MINDCAST_CHARACTERS") {
            self.paths.characters = Some(v);
        }
        if let Some(v) = var("MINDCAST_STOPWORDS") {
            self.paths.stopwords = Some(v);
        }
        if let Some(v) = var("MINDCAST_PHRASAL_VERBS") {
            self.paths.phrasal_verbs = Some(v);
        }
        if let Some(v) = var("MINDCAST_OUT_DIR") {
            self.paths.out_dir = Some(v);
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("mindcast-out"))
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat> {
        match self
            .paths
            .corpus_format
            .as_deref()
            .unwrap_or("canonical-tsv")
        {
            "canonical-tsv" | "tsv" => Ok(CorpusFormat::CanonicalTsv),
            "released-csv" | "csv" => Ok(CorpusFormat::ReleasedCsv),
            other => bail!("unknown corpus format {other:?} (canonical-tsv | released-csv)"),
        }
    }

    pub fn encoder_config(&self) -> Result<EncoderConfig> {
        let kind = EncoderKind::from_name(&self.model.encoder)
            .with_context(|| format!("unknown encoder {:?}", self.model.encoder))?;
        Ok(EncoderConfig {
            kind,
            h: self.model.h,
            conv: ConvSpec {
                widths: self.model.conv_widths.clone(),
                filters_per_width: self.model.conv_filters,
            },
        })
    }

    pub fn decoder_setup(&self) -> Result<DecoderSetup> {
        let mut setup = DecoderSetup::from_name(&self.model.decoder)
            .with_context(|| format!("unknown decoder {:?}", self.model.decoder))?;
        if let DecoderSetup::Sequence { cell } = &mut setup {
            *cell = self.model.decoder_cell;
        }
        Ok(setup)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            adam: AdamConfig {
                lr: self.train.lr,
                beta1: self.train.beta1,
                beta2: self.train.beta2,
                epsilon: self.train.epsilon,
            },
            seed: self.run.seed,
            max_event_len: self.train.max_event_len,
            max_target_len: self.train.max_target_len,
            unigram_min: self.train.unigram_min,
            ngram_min: self.train.ngram_min,
        }
    }

    pub fn thresholds(&self) -> VocabThresholds {
        VocabThresholds {
            unigram_min: self.train.unigram_min,
            ngram_min: self.train.ngram_min,
        }
    }

    pub fn split_ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.split.train,
            dev: self.split.dev,
        }
    }

    pub fn inference_config(&self) -> InferenceConfig {
        InferenceConfig {
            top_k: self.infer.k,
            beam: BeamConfig {
                width: self.infer.beam_width,
                max_len: self.infer.max_len,
            },
        }
    }

    pub fn precision(&self) -> Result<Precision> {
        match self.run.precision.as_str() {
            "f64" | "64" => Ok(Precision::F64),
            "f32" | "32" => Ok(Precision::F32),
            other => bail!("unknown precision {other:?} (f32 | f64)"),
        }
    }

    /// Write the fully resolved configuration beside the outputs so any
    /// run can be reproduced exactly.
    pub fn write_snapshot(&self, command: &str) -> Result<PathBuf> {
        let dir = self.out_dir();
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output dir {}", dir.display()))?;
        let path = dir.join(format!("resolved_config_{command}.toml"));
        let body = toml::to_string_pretty(self).context("config serializes")?;
        std::fs::write(&path, body)
            .with_context(|| format!("cannot write snapshot {}", path.display()))?;
        Ok(path)
    }

    pub fn require(&self, what: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        match value {
            Some(p) => Ok(p.clone()),
            None => bail!("missing required path: {what} (flag, config, or MINDCAST_* env)"),
        }
    }

    pub fn require_existing(&self, what: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        let path = self.require(what, value)?;
        if !path.exists() {
            bail!("{what} file does not exist: {}", path.display());
        }
        Ok(path)
    }
}
