use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Content key of a stage: a SHA-256 chain over upstream keys, input bytes
/// and stage parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StageKey(String);

impl StageKey {
    pub fn root(stage: &str) -> KeyBuilder {
        KeyBuilder::new(stage, None)
    }

    pub fn child(&self, stage: &str) -> KeyBuilder {
        KeyBuilder::new(stage, Some(self))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub struct KeyBuilder(Sha256);

impl KeyBuilder {
    fn new(stage: &str, parent: Option<&StageKey>) -> KeyBuilder {
        let mut h = Sha256::new();
        h.update(stage.as_bytes());
        h.update([0]);
        if let Some(p) = parent {
            h.update(p.0.as_bytes());
        }
        KeyBuilder(h)
    }

    pub fn bytes(mut self, b: &[u8]) -> KeyBuilder {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    pub fn file(self, path: &Path) -> Result<KeyBuilder> {
        if !path.is_file() {
            return Err(crate::error::Error::InvalidParameter(format!(
                "input file {} does not exist",
                path.display()
            )));
        }
        Ok(self.bytes(&fs::read(path)?))
    }

    pub fn json<T: Serialize + ?Sized>(self, value: &T) -> Result<KeyBuilder> {
        Ok(self.bytes(&serde_json::to_vec(value)?))
    }

    pub fn finish(self) -> StageKey {
        StageKey(self.0.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// JSON files under one directory, named `{stage}-{key}.json`. A disabled
/// cache always recomputes.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn at(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Cache {
        Cache { dir: None }
    }

    fn path(&self, stage: &str, key: &StageKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{stage}-{}.json", key.as_str())))
    }

    /// Cached value for `key`, or `compute()` stored under it. Unreadable
    /// entries are recomputed.
    pub fn get_or_compute<T, F>(&self, stage: &str, key: &StageKey, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let Some(path) = self.path(stage, key) else {
            return compute();
        };
        if let Ok(bytes) = fs::read(&path) {
            match serde_json::from_slice(&bytes) {
                Ok(v) => {
                    debug!("{stage}: cache hit {}", path.display());
                    return Ok(v);
                }
                Err(e) => warn!("{stage}: ignoring unreadable cache entry {}: {e}", path.display()),
            }
        }
        let value = compute()?;
        fs::create_dir_all(path.parent().unwrap())?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(&value)?)?;
        fs::rename(&tmp, &path)?;
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn keys_chain_and_differ() {
        let a = StageKey::root("graph").bytes(b"x").finish();
        let b = StageKey::root("graph").bytes(b"y").finish();
        assert_ne!(a, b);
        assert_eq!(a, StageKey::root("graph").bytes(b"x").finish());
        assert_ne!(a.child("prune").finish(), b.child("prune").finish());
        assert_eq!(a.as_str().len(), 64);
        // length prefix keeps concatenations apart
        assert_ne!(
            StageKey::root("s").bytes(b"ab").bytes(b"c").finish(),
            StageKey::root("s").bytes(b"a").bytes(b"bc").finish()
        );
    }

    #[test]
    fn second_call_hits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::at(dir.path());
        let key = StageKey::root("t").finish();
        let calls = Cell::new(0);
        let f = || {
            calls.set(calls.get() + 1);
            Ok(vec![1.5, 2.0])
        };
        let x: Vec<f64> = cache.get_or_compute("t", &key, f).unwrap();
        let y: Vec<f64> = cache.get_or_compute("t", &key, f).unwrap();
        assert_eq!((x, calls.get()), (y, 1));
        std::fs::write(dir.path().join(format!("t-{}.json", key.as_str())), "garbage").unwrap();
        let _: Vec<f64> = cache.get_or_compute("t", &key, f).unwrap();
        assert_eq!(calls.get(), 2);
        let _: Vec<f64> = Cache::disabled().get_or_compute("t", &key, f).unwrap();
        assert_eq!(calls.get(), 3);
    }
}
