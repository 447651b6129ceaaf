use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::job::SearchJob;
use crate::classify::DpnRecord;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Enumeration frontier of one job: every owned unit below `next_unit` is done.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub job_hash: String,
    pub units_total: u64,
    pub next_unit: u64,
    pub units_done: u64,
    pub candidates_examined: u64,
    pub hits: Vec<DpnRecord>,
}

impl Checkpoint {
    pub fn fresh(job: &SearchJob, units_total: u64) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            job_hash: job.hash(),
            units_total,
            next_unit: 0,
            units_done: 0,
            candidates_examined: 0,
            hits: Vec::new(),
        }
    }
}

/// File name is the checkpoint id, or a prefix of the job hash without one.
pub fn checkpoint_path(dir: &Path, job: &SearchJob) -> PathBuf {
    let stem = match &job.checkpoint_id {
        Some(id) => id.clone(),
        None => job.hash()[..16].to_string(),
    };
    dir.join(format!("{stem}.checkpoint.json"))
}

pub fn checkpoint_save(path: &Path, cp: &Checkpoint) -> Result<()> {
    let err = |e: std::io::Error| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(err)?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(cp)?).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

/// `Ok(None)` when no checkpoint exists at `path`.
pub fn checkpoint_load(path: &Path) -> Result<Option<Checkpoint>> {
    let bad = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(bad(e.to_string())),
    };
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| bad(format!("corrupted: {e}")))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == CHECKPOINT_VERSION as u64 => {}
        Some(v) => {
            return Err(bad(format!(
                "version {v} is not supported (expected {CHECKPOINT_VERSION})"
            )))
        }
        None => return Err(bad("corrupted: no version field".into())),
    }
    let cp: Checkpoint = serde_json::from_value(value).map_err(|e| bad(format!("corrupted: {e}")))?;
    if cp.next_unit > cp.units_total || cp.hits.iter().any(|h| !h.verify()) {
        return Err(bad("corrupted: inconsistent frontier or hit".into()));
    }
    Ok(Some(cp))
}

/// Load the checkpoint for `job`, rejecting one written by a different job.
pub fn checkpoint_resume(path: &Path, job: &SearchJob) -> Result<Option<Checkpoint>> {
    let Some(cp) = checkpoint_load(path)? else {
        return Ok(None);
    };
    if cp.job_hash != job.hash() {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            reason: format!("belongs to job {} but this job is {}", cp.job_hash, job.hash()),
        });
    }
    Ok(Some(cp))
}
