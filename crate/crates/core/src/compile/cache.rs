use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::CompileResult;

/// Content-addressed store of compile results, one JSON file per key.
/// Writes go through a temporary file and a rename, so concurrent writers
/// of the same key are harmless.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

/// Share of hits that get recompiled and compared, in percent.
const AUDIT_PERCENT: u32 = 1;

impl Cache {
    pub fn open(dir: &Path) -> io::Result<Cache> {
        fs::create_dir_all(dir)?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<CompileResult> {
        let bytes = fs::read(self.path(key)).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {key}: {e}");
                None
            }
        }
    }

    pub fn put(&self, key: &str, result: &CompileResult) -> io::Result<()> {
        let path = self.path(key);
        fs::create_dir_all(path.parent().expect("entry has a parent"))?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(result).map_err(io::Error::other)?)?;
        fs::rename(tmp, path)
    }

    /// Deterministic 1% selection by key.
    pub fn selected_for_audit(key: &str) -> bool {
        u32::from_str_radix(&key[..4], 16).is_ok_and(|v| v % 100 < AUDIT_PERCENT)
    }
}
