//! One JSON record per run under `<out-dir>/runs/`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::grid::ProtocolScore;
use crate::error::Result;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub verb: String,
    /// Effective configuration after merging the config file and flags.
    pub config: serde_json::Value,
    pub seed: u64,
    pub score: Option<ProtocolScore>,
    pub wall_seconds: f64,
    pub created_unix_ms: u128,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl RunRecord {
    pub fn new(verb: &str, config: serde_json::Value, seed: u64) -> Self {
        RunRecord {
            verb: verb.to_string(),
            config,
            seed,
            score: None,
            wall_seconds: 0.0,
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis()),
            metadata: serde_json::Value::Null,
        }
    }

    /// Writes `runs/<created>-<verb>[-n].json` and returns its path.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let dir = out_dir.join("runs");
        let stem = format!("{}-{}", self.created_unix_ms, self.verb.replace([' ', '/'], "-"));
        let mut path = dir.join(format!("{stem}.json"));
        let mut n = 1;
        while path.exists() {
            path = dir.join(format!("{stem}-{n}.json"));
            n += 1;
        }
        io::write_json(&path, self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = RunRecord::new("eval cv", serde_json::json!({"preset": "lsa-lr"}), 42);
        let a = r.write(dir.path()).unwrap();
        let b = r.write(dir.path()).unwrap();
        assert_ne!(a, b);
        let back: RunRecord = io::read_json(&a).unwrap();
        assert_eq!(back, r);
    }
}
