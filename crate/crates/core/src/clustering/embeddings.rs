//! EMB1 embedding files.
//!
//! Layout (little-endian): magic `EMB1`, `u32` row count, `u32` dimension, then
//! `count * dim` 32-bit floats row by row. A sidecar text file names the instance
//! of each row, one id per line. Layer directories hold `layer_<n>.emb` and
//! `layer_<n>.idx` pairs.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Result, WsiError};

pub const MAGIC: &[u8; 4] = b"EMB1";

/// Dense vectors for one (model, layer) pair, indexed by instance id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    pub model_id: String,
    pub layer: usize,
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

/// Vectors for an ordered list of instances, widened to f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    pub ids: Vec<String>,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Points {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(WsiError::InvalidClustering(format!(
                "{} values for {} points of dimension {dim}",
                data.len(),
                ids.len()
            )));
        }
        if let Some(i) = (0..ids.len()).find(|&i| data[i * dim..(i + 1) * dim].iter().any(|v| !v.is_finite())) {
            return Err(WsiError::NonFinite(ids[i].clone()));
        }
        Ok(Points { ids, dim, data })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

impl EmbeddingStore {
    pub fn new(model_id: impl Into<String>, layer: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(WsiError::Embedding("dimension must be positive".into()));
        }
        Ok(EmbeddingStore {
            model_id: model_id.into(),
            layer,
            dim,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: &[f32]) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(WsiError::Embedding(format!(
                "vector for `{id}` has dimension {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(WsiError::NonFinite(id));
        }
        if self.index.contains_key(&id) {
            return Err(WsiError::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index
            .get(id)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Gathers vectors for `ids` in order; fails listing every id without a vector.
    pub fn points<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Points> {
        let ids: Vec<&str> = ids.into_iter().collect();
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| !self.index.contains_key(**id))
            .map(|s| s.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(WsiError::MissingEmbeddings { ids: missing });
        }
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for id in &ids {
            data.extend(self.get(id).unwrap().iter().map(|&v| v as f64));
        }
        Points::new(ids.into_iter().map(String::from).collect(), self.dim, data)
    }

    pub fn write_to<W: Write, I: Write>(&self, mut emb: W, mut idx: I) -> Result<()> {
        let io = |e| WsiError::io("<emb writer>", e);
        emb.write_all(MAGIC).map_err(io)?;
        emb.write_all(&(self.ids.len() as u32).to_le_bytes()).map_err(io)?;
        emb.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        for v in &self.data {
            emb.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        emb.flush().map_err(io)?;
        for id in &self.ids {
            writeln!(idx, "{id}").map_err(io)?;
        }
        idx.flush().map_err(io)
    }

    pub fn read_from<R: Read, I: BufRead>(
        model_id: impl Into<String>,
        layer: usize,
        mut emb: R,
        idx: I,
    ) -> Result<Self> {
        let mut header = [0u8; 12];
        emb.read_exact(&mut header)
            .map_err(|_| WsiError::Embedding("truncated header".into()))?;
        if &header[..4] != MAGIC {
            return Err(WsiError::Embedding("bad magic, expected EMB1".into()));
        }
        let count = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut store = EmbeddingStore::new(model_id, layer, dim)?;

        let mut body = Vec::new();
        emb.read_to_end(&mut body)
            .map_err(|e| WsiError::io("<emb reader>", e))?;
        let expected = count
            .checked_mul(dim)
            .and_then(|v| v.checked_mul(4))
            .ok_or_else(|| WsiError::Embedding("header sizes overflow".into()))?;
        if body.len() != expected {
            return Err(WsiError::Embedding(format!(
                "body has {} bytes, header implies {expected}",
                body.len()
            )));
        }
        let ids: Vec<String> = idx
            .lines()
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| WsiError::io("<idx reader>", e))?
            .into_iter()
            .filter(|l| !l.is_empty())
            .collect();
        if ids.len() != count {
            return Err(WsiError::Embedding(format!(
                "index names {} rows, header says {count}",
                ids.len()
            )));
        }
        let mut row = vec![0f32; dim];
        for (r, id) in ids.into_iter().enumerate() {
            let bytes = &body[r * dim * 4..(r + 1) * dim * 4];
            for (v, chunk) in row.iter_mut().zip(bytes.chunks_exact(4)) {
                *v = f32::from_le_bytes(chunk.try_into().unwrap());
            }
            store.insert(id, &row)?;
        }
        Ok(store)
    }

    pub fn read(
        model_id: impl Into<String>,
        layer: usize,
        emb_path: impl AsRef<Path>,
        idx_path: impl AsRef<Path>,
    ) -> Result<Self> {
        let (emb_path, idx_path) = (emb_path.as_ref(), idx_path.as_ref());
        let emb = File::open(emb_path).map_err(|e| WsiError::io(emb_path, e))?;
        let idx = File::open(idx_path).map_err(|e| WsiError::io(idx_path, e))?;
        Self::read_from(model_id, layer, BufReader::new(emb), BufReader::new(idx))
    }

    pub fn write(&self, emb_path: impl AsRef<Path>, idx_path: impl AsRef<Path>) -> Result<()> {
        let (emb_path, idx_path) = (emb_path.as_ref(), idx_path.as_ref());
        let emb = File::create(emb_path).map_err(|e| WsiError::io(emb_path, e))?;
        let idx = File::create(idx_path).map_err(|e| WsiError::io(idx_path, e))?;
        self.write_to(BufWriter::new(emb), BufWriter::new(idx))
    }

    /// Loads `dir/layer_<layer>.emb` with its index; the model id is the directory name.
    pub fn open_layer(dir: impl AsRef<Path>, layer: usize) -> Result<Self> {
        let dir = dir.as_ref();
        let (emb, idx) = layer_paths(dir, layer);
        Self::read(model_id_of(dir), layer, emb, idx)
    }

    pub fn write_layer(&self, dir: impl AsRef<Path>) -> Result<()> {
        let (emb, idx) = layer_paths(dir.as_ref(), self.layer);
        self.write(emb, idx)
    }
}

pub fn layer_paths(dir: &Path, layer: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("layer_{layer}.emb")),
        dir.join(format!("layer_{layer}.idx")),
    )
}

fn model_id_of(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

/// Layer numbers with an `.emb` file in `dir`, ascending.
pub fn list_layers(dir: impl AsRef<Path>) -> Result<Vec<usize>> {
    let dir = dir.as_ref();
    let mut layers = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| WsiError::io(dir, e))? {
        let entry = entry.map_err(|e| WsiError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(n) = name
            .strip_prefix("layer_")
            .and_then(|rest| rest.strip_suffix(".emb"))
            .and_then(|n| n.parse().ok())
        {
            layers.push(n);
        }
    }
    layers.sort_unstable();
    Ok(layers)
}
