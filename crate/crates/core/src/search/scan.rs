use std::time::Instant;

use rayon::prelude::*;

use super::job::{OmegaTarget, Parity, SearchJob};
use super::report::SearchReport;
use crate::arith::factorize;
use crate::classify::DpnRecord;
use crate::error::{Error, Result};

const BLOCK: u64 = 1 << 18;

/// Divisor sums of `lo..=hi` by pairing each divisor `d <= sqrt(m)` with `m / d`.
fn sigma_block(lo: u64, hi: u64) -> Vec<u128> {
    let mut s = vec![0u128; (hi - lo + 1) as usize];
    let mut d = 1u64;
    while d.saturating_mul(d) <= hi {
        let mut m = (lo.div_ceil(d) * d).max(d * d);
        while m <= hi {
            let q = m / d;
            s[(m - lo) as usize] += d as u128 + if q != d { q as u128 } else { 0 };
            m += d;
        }
        d += 1;
    }
    s
}

/// Every deficient perfect number `<= bound`, including the degenerate `n = 1`,
/// found by a direct scan with no structural assumptions.
pub fn enumerate_all_dpn(bound: u64) -> Result<SearchReport> {
    if bound == 0 {
        return Err(Error::InvalidJob("bound must be positive".into()));
    }
    let started = Instant::now();
    let blocks: Vec<u64> = (0..bound.div_ceil(BLOCK)).collect();
    let per_block: Vec<Vec<DpnRecord>> = blocks
        .par_iter()
        .map(|&b| {
            let lo = b * BLOCK + 1;
            let hi = (lo + BLOCK - 1).min(bound);
            let sigma = sigma_block(lo, hi);
            let mut hits = Vec::new();
            for (i, &s) in sigma.iter().enumerate() {
                let n = lo + i as u64;
                let twice = 2 * n as u128;
                if s < twice && n.is_multiple_of((twice - s) as u64) {
                    let d = (twice - s) as u64;
                    hits.push(DpnRecord {
                        n,
                        factorization: factorize(n),
                        d,
                        complement: n / d,
                    });
                }
            }
            hits
        })
        .collect();
    let hits: Vec<DpnRecord> = per_block.into_iter().flatten().collect();
    if let Some(bad) = hits.iter().find(|h| !h.verify()) {
        return Err(Error::InvalidJob(format!("{} failed re-verification", bad.n)));
    }
    Ok(SearchReport {
        job: SearchJob {
            k: OmegaTarget::Any,
            parity: Parity::All,
            bound,
            even_exponents_only: false,
            partition: None,
            checkpoint_id: None,
        },
        hits,
        candidates_examined: bound,
        units_total: blocks.len() as u64,
        units_done: blocks.len() as u64,
        complete: true,
        elapsed_ms: started.elapsed().as_millis() as u64,
        merged_parts: Vec::new(),
        lineage: Vec::new(),
    })
}
