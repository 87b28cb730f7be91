//! On-disk cache of fine reference solutions.
//!
//! Files are named by the SHA-256 of the reference key and hold the key, the
//! vector length and the raw little-endian values. A file whose stored key
//! differs from the requested one is ignored.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

const MAGIC: &[u8; 8] = b"LODREF01";

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("ref-{}.bin", digest(key.as_bytes())))
    }

    pub fn load(&self, key: &str) -> Option<Vec<f64>> {
        let bytes = std::fs::read(self.path(key)).ok()?;
        decode(&bytes, key)
    }

    pub fn store(&self, key: &str, values: &[f64]) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut bytes = Vec::with_capacity(8 * values.len() + key.len() + 24);
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(key.len() as u64).to_le_bytes());
        bytes.extend_from_slice(key.as_bytes());
        bytes.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        // Write then rename so a concurrent reader never sees a partial file.
        let target = self.path(key);
        let tmp = target.with_extension("tmp");
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(tmp, target)?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

fn decode(bytes: &[u8], key: &str) -> Option<Vec<f64>> {
    let rest = bytes.strip_prefix(MAGIC.as_slice())?;
    let (len, rest) = rest.split_at_checked(8)?;
    let key_len = u64::from_le_bytes(len.try_into().ok()?) as usize;
    let (stored, rest) = rest.split_at_checked(key_len)?;
    if stored != key.as_bytes() {
        return None;
    }
    let (n, rest) = rest.split_at_checked(8)?;
    let n = u64::from_le_bytes(n.try_into().ok()?) as usize;
    if rest.len() != 8 * n {
        return None;
    }
    Some(rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_key_check() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        assert!(cache.load("a").is_none());
        cache.store("a", &[1.0, -2.5, f64::MIN_POSITIVE]).unwrap();
        assert_eq!(cache.load("a").unwrap(), vec![1.0, -2.5, f64::MIN_POSITIVE]);
        assert!(cache.load("b").is_none());
    }
}
