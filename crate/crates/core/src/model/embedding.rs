use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelError;
use crate::corpus::Vocabulary;
use crate::numerics::{Real, Tensor};

pub const DEFAULT_EMBEDDING_DIM: usize = 300;
const UNK_RANGE: f64 = 0.05;
// fixed so the shared UNK vector is identical across processes
const UNK_SEED: u64 = 0x00e2_71a3;

/// Vocabulary-indexed word-vector table. Fixed: it never receives gradient
/// updates. Tokens absent from the source file share one seeded UNK vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    matrix: Tensor<T>,
    dim: usize,
}

/// Where the table's vectors come from.
#[derive(Clone, Debug)]
pub enum EmbeddingSource {
    /// Text file: one token per line, token followed by its reals.
    /// `dim_override = None` enforces the default 300.
    File {
        path: std::path::PathBuf,
        dim_override: Option<usize>,
    },
    /// Seeded random vectors for every vocabulary token (synthetic runs).
    SeededRandom { dim: usize, seed: u64 },
}

impl<T: Real> EmbeddingTable<T> {
    pub fn build(source: &EmbeddingSource, vocab: &Vocabulary) -> Result<Self, ModelError> {
        match source {
            EmbeddingSource::File { path, dim_override } => {
                Self::from_file(path, vocab, *dim_override)
            }
            EmbeddingSource::SeededRandom { dim, seed } => {
                Ok(Self::seeded_random(vocab.unigram_count(), *dim, *seed))
            }
        }
    }

    /// Load vectors for every vocabulary token from a text embedding file.
    pub fn from_file(
        path: &Path,
        vocab: &Vocabulary,
        dim_override: Option<usize>,
    ) -> Result<Self, ModelError> {
        let expected_dim = dim_override.unwrap_or(DEFAULT_EMBEDDING_DIM);
        let file = std::fs::File::open(path).map_err(|e| ModelError::EmbeddingFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;

        let mut table = Self::unk_filled(vocab.unigram_count(), expected_dim, UNK_SEED);
        let mut found = 0usize;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| ModelError::EmbeddingFile {
                path: path.display().to_string(),
                message: format!("line {}: {e}", idx + 1),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("non-empty line has one field");
            let values: Result<Vec<f64>, _> = parts.map(|p| p.parse::<f64>()).collect();
            let values = values.map_err(|e| ModelError::EmbeddingFile {
                path: path.display().to_string(),
                message: format!("line {}: bad real: {e}", idx + 1),
            })?;
            if values.len() != expected_dim {
                return Err(ModelError::EmbeddingDim {
                    expected: expected_dim,
                    got: values.len(),
                    line: idx + 1,
                });
            }
            if let Some(id) = vocab.token_id(token) {
                for (c, v) in values.into_iter().enumerate() {
                    table.matrix.set2(id, c, T::from_f64(v));
                }
                found += 1;
            }
        }
        if found == 0 {
            return Err(ModelError::EmbeddingFile {
                path: path.display().to_string(),
                message: "no vocabulary token found in embedding file".into(),
            });
        }
        Ok(table)
    }

    /// Distinct seeded vectors for every token; used by synthetic corpora
    /// and tests, where a real pretrained file is unavailable.
    pub fn seeded_random(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut matrix = Tensor::zeros(&[vocab_size, dim]);
        for r in 0..vocab_size {
            for c in 0..dim {
                matrix.set2(r, c, T::from_f64(rng.random_range(-0.5..0.5)));
            }
        }
        EmbeddingTable { matrix, dim }
    }

    /// All rows set to the single UNK vector drawn once from the seeded
    /// uniform(-0.05, 0.05); file rows then overwrite known tokens.
    fn unk_filled(vocab_size: usize, dim: usize, unk_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(unk_seed);
        let unk: Vec<T> = (0..dim)
            .map(|_| T::from_f64(rng.random_range(-UNK_RANGE..UNK_RANGE)))
            .collect();
        let mut matrix = Tensor::zeros(&[vocab_size, dim]);
        for r in 0..vocab_size {
            for c in 0..dim {
                matrix.set2(r, c, unk[c]);
            }
        }
        EmbeddingTable { matrix, dim }
    }

    pub fn from_tensor(matrix: Tensor<T>) -> Self {
        let dim = matrix.cols();
        EmbeddingTable { matrix, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.matrix
    }

    pub fn vector(&self, id: usize) -> &[T] {
        let d = self.dim;
        &self.matrix.data()[id * d..(id + 1) * d]
    }
}
