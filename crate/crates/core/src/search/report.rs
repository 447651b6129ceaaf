use serde::{Deserialize, Serialize};

use super::job::{Partition, SearchJob};
use crate::classify::DpnRecord;
use crate::error::{Error, Result};

/// Largest partition modulus `merge_reports` will check coverage over.
const MAX_COVERAGE_MODULUS: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub job: SearchJob,
    /// Ascending by `n`.
    pub hits: Vec<DpnRecord>,
    pub candidates_examined: u64,
    /// Work units owned by this job and how many of them finished.
    pub units_total: u64,
    pub units_done: u64,
    pub complete: bool,
    /// Wall time; kept out of the JSON so reports stay byte-stable.
    #[serde(skip)]
    pub elapsed_ms: u64,
    /// Partitions merged into this report; empty for a single run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merged_parts: Vec<Partition>,
    /// Checkpoint events, oldest first.
    #[serde(default)]
    pub lineage: Vec<String>,
}

impl SearchReport {
    pub fn hit_values(&self) -> Vec<u64> {
        self.hits.iter().map(|h| h.n).collect()
    }

    fn parts(&self) -> Vec<Partition> {
        if !self.merged_parts.is_empty() {
            return self.merged_parts.clone();
        }
        vec![self.job.partition.unwrap_or(Partition { ways: 1, index: 0 })]
    }
}

/// Combine reports of disjoint parts of one job.
///
/// When the parts cover the whole job the result carries the unpartitioned
/// job; otherwise it records which parts it holds so it can be merged again.
pub fn merge_reports(reports: &[SearchReport]) -> Result<SearchReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidJob("nothing to merge".into()))?;
    let parent = first.job.parent();
    let mut parts = Vec::new();
    let mut hits = Vec::new();
    let mut out = SearchReport {
        job: parent.clone(),
        hits: Vec::new(),
        candidates_examined: 0,
        units_total: 0,
        units_done: 0,
        complete: true,
        elapsed_ms: 0,
        merged_parts: Vec::new(),
        lineage: Vec::new(),
    };
    for r in reports {
        if r.job.parent() != parent {
            return Err(Error::InvalidJob("reports belong to different jobs".into()));
        }
        parts.extend(r.parts());
        hits.extend(r.hits.iter().cloned());
        out.candidates_examined += r.candidates_examined;
        out.units_total += r.units_total;
        out.units_done += r.units_done;
        out.complete &= r.complete;
        out.elapsed_ms = out.elapsed_ms.max(r.elapsed_ms);
        out.lineage.extend(r.lineage.iter().cloned());
    }
    hits.sort_by_key(|h| h.n);
    let before = hits.len();
    hits.dedup_by_key(|h| h.n);
    if hits.len() != before {
        return Err(Error::InvalidJob("overlapping reports share a hit".into()));
    }
    out.hits = hits;

    let modulus = parts.iter().try_fold(1u64, |acc, p| {
        let l = num_integer::lcm(acc, p.ways as u64);
        (l <= MAX_COVERAGE_MODULUS).then_some(l)
    });
    let modulus = modulus.ok_or_else(|| Error::InvalidJob("partitions too fine to merge".into()))?;
    let mut owners = vec![0u32; modulus as usize];
    for p in &parts {
        for (r, count) in owners.iter_mut().enumerate() {
            if p.owns(r) {
                *count += 1;
            }
        }
    }
    if owners.iter().any(|&c| c > 1) {
        return Err(Error::InvalidJob("reports overlap".into()));
    }
    if owners.contains(&0) {
        parts.sort_by_key(|p| (p.ways, p.index));
        out.merged_parts = parts;
    }
    Ok(out)
}
