use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::decoder::{DecoderParams, DecoderSetup, LinearHead, SeqHead};
use super::embedding::EmbeddingTable;
use super::encoder::{EncoderKind, EncoderParams};
use super::params::{ModelMeta, ModelParams, CHECKPOINT_FORMAT_VERSION};
use super::ModelError;
use crate::corpus::PerTask;
use crate::numerics::{GruWeights, Real, Tensor};

const MAGIC: &[u8; 4] = b"MCPT";

/// Write a checkpoint: magic, version, JSON header, then named tensors as
/// row-major little-endian 32-bit reals. The embedding table is stored
/// alongside the trainable parameters.
pub fn save_checkpoint<T: Real>(params: &ModelParams<T>, path: &Path) -> Result<(), ModelError> {
    let file = std::fs::File::create(path).map_err(|e| ModelError::Checkpoint {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut w = BufWriter::new(file);
    let err = |e: std::io::Error| ModelError::Checkpoint {
        path: path.display().to_string(),
        message: e.to_string(),
    };

    w.write_all(MAGIC).map_err(err)?;
    w.write_all(&CHECKPOINT_FORMAT_VERSION.to_le_bytes()).map_err(err)?;
    let header = serde_json::to_vec(&params.meta).expect("meta serializes");
    w.write_all(&(header.len() as u32).to_le_bytes()).map_err(err)?;
    w.write_all(&header).map_err(err)?;

    let tensor_count = 1 + params.trainable_shapes().len();
    w.write_all(&(tensor_count as u32).to_le_bytes()).map_err(err)?;
    write_tensor(&mut w, "embeddings", params.embeddings.tensor()).map_err(err)?;
    let mut io_result = Ok(());
    params.visit_trainable(&mut |name, t| {
        if io_result.is_ok() {
            io_result = write_tensor(&mut w, &name, t);
        }
    });
    io_result.map_err(err)?;
    w.flush().map_err(err)
}

fn write_tensor<T: Real, W: Write>(
    w: &mut W,
    name: &str,
    tensor: &Tensor<T>,
) -> std::io::Result<()> {
    let bytes = name.as_bytes();
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)?;
    w.write_all(&[tensor.shape().len() as u8])?;
    for &dim in tensor.shape() {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    for &v in tensor.data() {
        w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Read a checkpoint back into a parameter set. The caller pairs it with a
/// vocabulary via [`super::ReadyModel::new`], which enforces the stored
/// fingerprint.
pub fn load_checkpoint<T: Real>(path: &Path) -> Result<ModelParams<T>, ModelError> {
    let file = std::fs::File::open(path).map_err(|e| ModelError::Checkpoint {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut r = BufReader::new(file);
    let fail = |message: String| ModelError::Checkpoint {
        path: path.display().to_string(),
        message,
    };

    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, path)?;
    if &magic != MAGIC {
        return Err(fail("not a checkpoint file (bad magic)".into()));
    }
    let version = read_u32(&mut r, path)?;
    if version != CHECKPOINT_FORMAT_VERSION {
        return Err(fail(format!(
            "unsupported format version {version} (expected {CHECKPOINT_FORMAT_VERSION})"
        )));
    }
    let header_len = read_u32(&mut r, path)? as usize;
    let mut header = vec![0u8; header_len];
    read_exact(&mut r, &mut header, path)?;
    let meta: ModelMeta =
        serde_json::from_slice(&header).map_err(|e| fail(format!("bad header: {e}")))?;

    let tensor_count = read_u32(&mut r, path)? as usize;
    let mut loaded: HashMap<String, Tensor<T>> = HashMap::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let name_len = read_u16(&mut r, path)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact(&mut r, &mut name_bytes, path)?;
        let name = String::from_utf8(name_bytes).map_err(|e| fail(format!("bad name: {e}")))?;
        let mut ndim = [0u8; 1];
        read_exact(&mut r, &mut ndim, path)?;
        let mut shape = Vec::with_capacity(ndim[0] as usize);
        for _ in 0..ndim[0] {
            shape.push(read_u32(&mut r, path)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        let mut buf = [0u8; 4];
        for _ in 0..numel {
            read_exact(&mut r, &mut buf, path)?;
            data.push(T::from_f64(f32::from_le_bytes(buf) as f64));
        }
        let tensor = Tensor::new(data, shape).map_err(|e| fail(format!("tensor {name}: {e}")))?;
        if loaded.insert(name.clone(), tensor).is_some() {
            return Err(fail(format!("duplicate tensor {name}")));
        }
    }

    let mut skeleton = zeroed_params::<T>(&meta);
    let mut fill_error: Option<String> = None;
    skeleton.visit_trainable_mut(&mut |name, slot| {
        if fill_error.is_some() {
            return;
        }
        match loaded.remove(&name) {
            Some(tensor) if tensor.shape() == slot.shape() => *slot = tensor,
            Some(tensor) => {
                fill_error = Some(format!(
                    "tensor {name}: shape {:?} does not match expected {:?}",
                    tensor.shape(),
                    slot.shape()
                ));
            }
            None => fill_error = Some(format!("missing tensor {name}")),
        }
    });
    if let Some(message) = fill_error {
        return Err(fail(message));
    }
    let embeddings = loaded
        .remove("embeddings")
        .ok_or_else(|| fail("missing embeddings tensor".into()))?;
    if let Some(extra) = loaded.keys().next() {
        return Err(fail(format!("unexpected tensor {extra}")));
    }
    if embeddings.shape() != [meta.unigram_count, meta.embedding_dim] {
        return Err(fail(format!(
            "embeddings shape {:?} does not match header ({} x {})",
            embeddings.shape(),
            meta.unigram_count,
            meta.embedding_dim
        )));
    }
    skeleton.embeddings = EmbeddingTable::from_tensor(embeddings);
    Ok(skeleton)
}

fn zeroed_params<T: Real>(meta: &ModelMeta) -> ModelParams<T> {
    let d = meta.embedding_dim;
    let h = meta.encoder.h;
    let encoder = match meta.encoder.kind {
        EncoderKind::MaxPool | EncoderKind::MeanPool => EncoderParams::Pool,
        EncoderKind::ConvNet => {
            let f = meta.encoder.conv.filters_per_width;
            EncoderParams::Conv {
                filters: meta
                    .encoder
                    .conv
                    .widths
                    .iter()
                    .map(|&w| Tensor::zeros(&[f, w * d]))
                    .collect(),
                dense_w: Tensor::zeros(&[h, f * meta.encoder.conv.widths.len()]),
                dense_b: Tensor::zeros(&[h]),
            }
        }
        EncoderKind::BiRnn => EncoderParams::BiRnn {
            forward: GruWeights::zeros(d, h / 2),
            backward: GruWeights::zeros(d, h / 2),
        },
    };
    let decoder = match meta.decoder {
        DecoderSetup::Ngram => {
            let head = || LinearHead {
                w: Tensor::zeros(&[meta.ngram_count, h]),
                b: Tensor::zeros(&[meta.ngram_count]),
            };
            DecoderParams::Ngram(PerTask {
                xintent: head(),
                xreact: head(),
                oreact: head(),
            })
        }
        DecoderSetup::Sequence { cell } => {
            let cell_size = cell.unwrap_or(h);
            let head = || SeqHead {
                proj: (cell_size != h).then(|| LinearHead {
                    w: Tensor::zeros(&[cell_size, h]),
                    b: Tensor::zeros(&[cell_size]),
                }),
                gru: GruWeights::zeros(d, cell_size),
                out: LinearHead {
                    w: Tensor::zeros(&[meta.unigram_count, cell_size]),
                    b: Tensor::zeros(&[meta.unigram_count]),
                },
            };
            DecoderParams::Sequence(PerTask {
                xintent: head(),
                xreact: head(),
                oreact: head(),
            })
        }
    };
    ModelParams {
        meta: meta.clone(),
        embeddings: EmbeddingTable::from_tensor(Tensor::zeros(&[meta.unigram_count, d])),
        encoder,
        decoder,
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], path: &Path) -> Result<(), ModelError> {
    r.read_exact(buf).map_err(|e| ModelError::Checkpoint {
        path: path.display().to_string(),
        message: format!("truncated checkpoint: {e}"),
    })
}

fn read_u32<R: Read>(r: &mut R, path: &Path) -> Result<u32, ModelError> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u16<R: Read>(r: &mut R, path: &Path) -> Result<u16, ModelError> {
    let mut buf = [0u8; 2];
    read_exact(r, &mut buf, path)?;
    Ok(u16::from_le_bytes(buf))
}
