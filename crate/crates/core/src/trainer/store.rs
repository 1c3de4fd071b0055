//! Run-directory persistence: `curves/` (CSV), `summaries/` (JSON records)
//! and `report/`, with atomic writes so an interrupted run never leaves a
//! half-written condition file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::condition::ConditionSummary;
use super::trial::TrialResult;

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

pub const CURVES_HEADER: &str = "condition_key,trial,images_seen,train_acc,eval_acc";

/// Curve rows for every trial of a condition.
pub fn curves_csv(key: &str, results: &[TrialResult]) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for r in results {
        for p in r.curve.points() {
            out.push_str(&format!("{key},{},{},{},{}\n", r.trial, p.images_seen, p.train_acc, p.eval_acc));
        }
    }
    out
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl RunStore {
    /// Opens `root`, creating the directory layout if needed.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let store = Self { root: root.into() };
        for dir in [store.curves_dir(), store.summaries_dir(), store.report_dir()] {
            fs::create_dir_all(dir)?;
        }
        Ok(store)
    }

    /// Opens an existing run directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let store = Self { root: root.into() };
        if !store.summaries_dir().is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} has no summaries/ directory", store.root.display()),
            )));
        }
        fs::create_dir_all(store.report_dir())?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn curves_dir(&self) -> PathBuf {
        self.root.join("curves")
    }

    pub fn summaries_dir(&self) -> PathBuf {
        self.root.join("summaries")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn summary_path(&self, key: &str) -> PathBuf {
        self.summaries_dir().join(format!("{key}.json"))
    }

    pub fn curves_path(&self, key: &str) -> PathBuf {
        self.curves_dir().join(format!("{key}.csv"))
    }

    pub fn has_summary(&self, key: &str) -> bool {
        self.summary_path(key).is_file()
    }

    pub fn load_summary(&self, key: &str) -> Result<Option<ConditionSummary>> {
        let path = self.summary_path(key);
        if !path.is_file() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_slice(&fs::read(path)?)?))
    }

    /// Writes curves first, then the summary; a summary therefore marks the
    /// condition complete.
    pub fn save(&self, summary: &ConditionSummary) -> Result<()> {
        write_atomic(&self.curves_path(&summary.key), curves_csv(&summary.key, &summary.results).as_bytes())?;
        let mut json = serde_json::to_vec_pretty(summary)?;
        json.push(b'\n');
        write_atomic(&self.summary_path(&summary.key), &json)
    }

    /// All stored summaries, ordered by key.
    pub fn load_summaries(&self) -> Result<Vec<ConditionSummary>> {
        let mut paths: Vec<PathBuf> = fs::read_dir(self.summaries_dir())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths
            .into_iter()
            .map(|p| Ok(serde_json::from_slice(&fs::read(&p)?)?))
            .collect()
    }
}
