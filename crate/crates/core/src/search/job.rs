use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Number of distinct prime factors to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmegaTarget {
    Exactly(usize),
    /// Every `n > 1`.
    Any,
}

impl fmt::Display for OmegaTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaTarget::Exactly(k) => write!(f, "{k}"),
            OmegaTarget::Any => f.write_str("any"),
        }
    }
}

impl FromStr for OmegaTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("any") {
            return Ok(OmegaTarget::Any);
        }
        s.parse::<usize>()
            .map(OmegaTarget::Exactly)
            .map_err(|_| format!("expected a count or \"any\", got {s:?}"))
    }
}

impl Serialize for OmegaTarget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OmegaTarget::Exactly(k) => s.serialize_u64(*k as u64),
            OmegaTarget::Any => s.serialize_str("any"),
        }
    }
}

impl<'de> Deserialize<'de> for OmegaTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(k) => Ok(OmegaTarget::Exactly(k)),
            Repr::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    All,
}

/// Work units are numbered `0, 1, ...`; this part takes `u % ways == index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub ways: u32,
    pub index: u32,
}

impl Partition {
    pub fn owns(&self, unit: usize) -> bool {
        unit % self.ways as usize == self.index as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchJob {
    pub k: OmegaTarget,
    pub parity: Parity,
    pub bound: u64,
    pub even_exponents_only: bool,
    #[serde(default)]
    pub partition: Option<Partition>,
    #[serde(default)]
    pub checkpoint_id: Option<String>,
}

impl SearchJob {
    /// Odd search with the even-exponent filter on.
    pub fn odd(k: usize, bound: u64) -> Self {
        SearchJob {
            k: OmegaTarget::Exactly(k),
            parity: Parity::Odd,
            bound,
            even_exponents_only: true,
            partition: None,
            checkpoint_id: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidJob(m));
        if self.bound < 3 {
            return bad(format!("bound {} is below 3", self.bound));
        }
        if self.k == OmegaTarget::Exactly(0) {
            return bad("k must be at least 1".into());
        }
        if let Some(p) = self.partition {
            if p.ways == 0 || p.index >= p.ways {
                return bad(format!("partition {}/{} is invalid", p.index, p.ways));
            }
        }
        if let Some(id) = &self.checkpoint_id {
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return bad(format!("checkpoint id {id:?} must be alphanumeric, '-' or '_'"));
            }
        }
        Ok(())
    }

    /// The job without its partition and checkpoint id.
    pub fn parent(&self) -> SearchJob {
        SearchJob {
            partition: None,
            checkpoint_id: None,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON of the job, checkpoint id excluded.
    pub fn hash(&self) -> String {
        let canonical = SearchJob {
            checkpoint_id: None,
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("job serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Split a job into `ways` disjoint parts that together cover it.
pub fn split_job(job: &SearchJob, ways: u32) -> Result<Vec<SearchJob>> {
    if ways == 0 {
        return Err(Error::InvalidJob("ways must be at least 1".into()));
    }
    if ways == 1 {
        return Ok(vec![job.clone()]);
    }
    let (outer_ways, outer_index) = match job.partition {
        Some(p) => (p.ways, p.index),
        None => (1, 0),
    };
    // Part i of the split keeps the units of the original part whose index
    // is congruent to outer_index + i * outer_ways modulo outer_ways * ways.
    let total = outer_ways
        .checked_mul(ways)
        .ok_or_else(|| Error::InvalidJob("partition too fine".into()))?;
    Ok((0..ways)
        .map(|i| SearchJob {
            partition: Some(Partition {
                ways: total,
                index: outer_index + i * outer_ways,
            }),
            checkpoint_id: job.checkpoint_id.as_ref().map(|id| format!("{id}-{i}")),
            ..job.clone()
        })
        .collect())
}
