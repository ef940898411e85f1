//! Append-only, content-addressed embedding cache.
//!
//! File layout: repeated records of
//! `[32-byte key][u32 LE dimension][dimension x f32 LE]`, where
//! `key = SHA-256(provider_id || 0x1F || normalized_text)`. Later records win
//! over earlier ones with the same key. A truncated final record is dropped
//! on load and cut from the file so new appends stay aligned.
//!
//! Vectors are stored as f32. Every vector handed out (freshly inserted or
//! loaded) is the f32 value widened back to f64 and re-normalized, so a
//! cold run and a warm run see bitwise-identical vectors.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard, RwLock};

use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingVector, ProviderDescriptor};

pub const CACHE_KEY_SEPARATOR: u8 = 0x1F;

const KEY_LEN: usize = 32;
const HEADER_LEN: usize = KEY_LEN + 4;

pub fn cache_key(provider_id: &str, normalized_text: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(provider_id.as_bytes());
    hasher.update([CACHE_KEY_SEPARATOR]);
    hasher.update(normalized_text.as_bytes());
    hasher.finalize().into()
}

fn canonical(stored: &[f32]) -> EmbeddingVector {
    EmbeddingVector::normalized(stored.iter().map(|v| f64::from(*v)).collect())
        .expect("stored components are finite")
}

pub struct EmbeddingCache {
    descriptor: ProviderDescriptor,
    path: Option<PathBuf>,
    entries: RwLock<HashMap<[u8; 32], EmbeddingVector>>,
    writer: Mutex<Option<BufWriter<File>>>,
    compute: Mutex<()>,
    load_warnings: Vec<String>,
}

impl std::fmt::Debug for EmbeddingCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddingCache")
            .field("provider_id", &self.descriptor.provider_id)
            .field("path", &self.path)
            .field("entries", &self.len())
            .finish()
    }
}

impl EmbeddingCache {
    /// A cache that lives only as long as the process.
    pub fn in_memory(descriptor: ProviderDescriptor) -> Self {
        EmbeddingCache {
            descriptor,
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
            compute: Mutex::new(()),
            load_warnings: Vec::new(),
        }
    }

    /// Opens (or creates) the cache file at `path` for `descriptor`. Every
    /// stored vector must have the provider's dimension.
    pub fn open(
        path: impl AsRef<Path>,
        descriptor: ProviderDescriptor,
    ) -> Result<Self, EmbedError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let mut entries = HashMap::new();
        let mut load_warnings = Vec::new();
        let mut offset = 0;
        while offset < bytes.len() {
            let rest = &bytes[offset..];
            if rest.len() < HEADER_LEN {
                break;
            }
            let dimension =
                u32::from_le_bytes(rest[KEY_LEN..HEADER_LEN].try_into().expect("4 bytes")) as usize;
            let record_len = HEADER_LEN + dimension * 4;
            if rest.len() < record_len {
                break;
            }
            if dimension != descriptor.dimension {
                return Err(EmbedError::Cache(format!(
                    "{} holds {dimension}-dimensional vectors but provider `{}` produces {}",
                    path.display(),
                    descriptor.provider_id,
                    descriptor.dimension
                )));
            }
            let key: [u8; 32] = rest[..KEY_LEN].try_into().expect("32 bytes");
            let stored: Vec<f32> = rest[HEADER_LEN..record_len]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            if stored.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::Cache(format!(
                    "{} contains a non-finite vector at byte {offset}",
                    path.display()
                )));
            }
            entries.insert(key, canonical(&stored));
            offset += record_len;
        }
        if offset < bytes.len() {
            let message = format!(
                "{}: dropped truncated trailing record ({} bytes)",
                path.display(),
                bytes.len() - offset
            );
            log::warn!("{message}");
            load_warnings.push(message);
            file.set_len(offset as u64)?;
        }

        Ok(EmbeddingCache {
            descriptor,
            path: Some(path),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(BufWriter::new(file))),
            compute: Mutex::new(()),
            load_warnings,
        })
    }

    pub fn provider_id(&self) -> &str {
        &self.descriptor.provider_id
    }

    pub fn dimension(&self) -> usize {
        self.descriptor.dimension
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn load_warnings(&self) -> &[String] {
        &self.load_warnings
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn key(&self, normalized_text: &str) -> [u8; 32] {
        cache_key(&self.descriptor.provider_id, normalized_text)
    }

    pub fn get(&self, key: &[u8; 32]) -> Option<EmbeddingVector> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(key)
            .cloned()
    }

    pub fn contains(&self, key: &[u8; 32]) -> bool {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .contains_key(key)
    }

    /// Stores `vector` under `key` and returns the vector as it will be
    /// served from now on.
    pub fn insert(
        &self,
        key: [u8; 32],
        vector: EmbeddingVector,
    ) -> Result<EmbeddingVector, EmbedError> {
        if vector.dimension() != self.descriptor.dimension {
            return Err(EmbedError::DimensionMismatch {
                expected: self.descriptor.dimension,
                actual: vector.dimension(),
            });
        }
        let stored: Vec<f32> = vector.values().iter().map(|v| *v as f32).collect();
        if stored.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidInput(
                "vector does not fit in f32".into(),
            ));
        }
        if let Some(writer) = self.writer.lock().expect("cache writer poisoned").as_mut() {
            let mut record = Vec::with_capacity(HEADER_LEN + stored.len() * 4);
            record.extend_from_slice(&key);
            record.extend_from_slice(&(stored.len() as u32).to_le_bytes());
            for v in &stored {
                record.extend_from_slice(&v.to_le_bytes());
            }
            writer.write_all(&record)?;
        }
        let served = canonical(&stored);
        self.entries
            .write()
            .expect("cache lock poisoned")
            .insert(key, served.clone());
        Ok(served)
    }

    pub fn flush(&self) -> Result<(), EmbedError> {
        if let Some(writer) = self.writer.lock().expect("cache writer poisoned").as_mut() {
            writer.flush()?;
        }
        Ok(())
    }

    pub(crate) fn lock_compute(&self) -> MutexGuard<'_, ()> {
        self.compute.lock().expect("compute lock poisoned")
    }
}

impl Drop for EmbeddingCache {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.writer.lock() {
            if let Some(writer) = guard.as_mut() {
                let _ = writer.flush();
            }
        }
    }
}
