use std::ops::ControlFlow;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::checkpoint::{checkpoint_path, checkpoint_resume, checkpoint_save, Checkpoint};
use super::job::{OmegaTarget, Parity, SearchJob};
use super::report::SearchReport;
use crate::arith::sigma::sigma_prime_power_u128;
use crate::arith::{primes_in_range, primes_up_to, Factorization};
use crate::classify::DpnRecord;
use crate::error::{Error, Result};

/// Primes up to this value are sieved once per job; larger ones per segment.
const PRIME_CACHE_LIMIT: u64 = 1 << 24;
const SEGMENT: u64 = 1 << 20;
const CHECKPOINT_INTERVAL: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub checkpoint_dir: Option<PathBuf>,
    pub resume: bool,
    /// Stop after this many units, leaving the checkpoint mid-run.
    pub stop_after_units: Option<u64>,
}

/// Exhaustive enumeration with default options.
pub fn enumerate_odd_dpn(job: &SearchJob) -> Result<SearchReport> {
    run_search(job, &RunOptions::default())
}

/// Smallest prime and exponent of a candidate; the unit of work and of splitting.
pub type Unit = (u64, u32);

#[derive(Debug, Default)]
struct UnitResult {
    hits: Vec<DpnRecord>,
    candidates: u64,
    rejected: Vec<u64>,
}

struct Plan {
    bound: u64,
    k: OmegaTarget,
    min_exp: u32,
    step: u32,
    first_prime: u64,
    primes: Vec<u64>,
    cache_limit: u64,
}

/// Largest `r` with `r^e <= x`.
fn iroot(x: u64, e: u32) -> u64 {
    if e == 1 || x < 2 {
        return x;
    }
    let fits = |r: u64| r.checked_pow(e).is_some_and(|v| v <= x);
    let mut r = (x as f64).powf(1.0 / e as f64) as u64;
    while r > 0 && !fits(r) {
        r -= 1;
    }
    while fits(r + 1) {
        r += 1;
    }
    r
}

impl Plan {
    fn new(job: &SearchJob) -> Self {
        let (min_exp, step) = if job.even_exponents_only { (2, 2) } else { (1, 1) };
        let first_prime = match job.parity {
            Parity::Odd => 3,
            Parity::All => 2,
        };
        let cache_limit = iroot(job.bound, min_exp).min(PRIME_CACHE_LIMIT);
        let primes = primes_up_to(cache_limit)
            .into_iter()
            .filter(|&p| p >= first_prime)
            .collect();
        Plan {
            bound: job.bound,
            k: job.k,
            min_exp,
            step,
            first_prime,
            primes,
            cache_limit,
        }
    }

    /// Calls `f` on each admissible prime in `(after, hi]`, ascending.
    fn for_primes(&self, after: u64, hi: u64, mut f: impl FnMut(u64) -> ControlFlow<()>) {
        let start = self.primes.partition_point(|&p| p <= after);
        for &p in &self.primes[start..] {
            if p > hi || f(p).is_break() {
                return;
            }
        }
        let mut lo = (after + 1).max(self.cache_limit + 1).max(self.first_prime);
        while lo <= hi {
            let seg_hi = hi.min(lo.saturating_add(SEGMENT - 1));
            for p in primes_in_range(lo, seg_hi) {
                if f(p).is_break() {
                    return;
                }
            }
            if seg_hi == u64::MAX {
                return;
            }
            lo = seg_hi + 1;
        }
    }

    fn remaining_after_first(&self) -> Option<usize> {
        match self.k {
            OmegaTarget::Exactly(k) => Some(k - 1),
            OmegaTarget::Any => None,
        }
    }

    /// Prime powers `q^a` that can extend `n` with `r` primes still to place.
    fn powers(&self, n: u64, q: u64, r: usize, mut f: impl FnMut(u32, u64)) {
        let mut a = self.min_exp;
        loop {
            let Some(pa) = q.checked_pow(a) else { return };
            // Each later prime exceeds q and contributes at least q^min_exp.
            let tail = (q as u128).checked_pow(self.min_exp * (r as u32 - 1));
            let least = tail.and_then(|t| t.checked_mul(n as u128 * pa as u128));
            if least.is_none_or(|v| v > self.bound as u128) {
                return;
            }
            f(a, pa);
            a += self.step;
        }
    }

    /// Upper limit for the next prime after `n` with `r` primes to place.
    fn prime_limit(&self, n: u64, r: usize) -> u64 {
        iroot(self.bound / n, self.min_exp * r as u32)
    }

    fn units(&self) -> Vec<Unit> {
        let r = self.remaining_after_first().map_or(1, |r| r + 1);
        let mut out = Vec::new();
        self.for_primes(0, self.prime_limit(1, r), |p| {
            self.powers(1, p, r, |a, _| out.push((p, a)));
            ControlFlow::Continue(())
        });
        out
    }

    fn run_unit(&self, (p, a): Unit) -> UnitResult {
        let mut out = UnitResult::default();
        let n = p.pow(a);
        let sigma = sigma_prime_power_u128(p, a).expect("p^a <= bound");
        let mut factors = vec![(p, a)];
        self.visit(n, sigma, p, self.remaining_after_first(), &mut factors, &mut out);
        out
    }

    fn visit(
        &self,
        n: u64,
        sigma: u128,
        last: u64,
        remaining: Option<usize>,
        factors: &mut Vec<(u64, u32)>,
        out: &mut UnitResult,
    ) {
        match remaining {
            Some(0) => {
                self.check(n, sigma, factors, out);
                return;
            }
            None => self.check(n, sigma, factors, out),
            Some(_) => {}
        }
        let r = remaining.unwrap_or(1);
        self.for_primes(last, self.prime_limit(n, r), |q| {
            self.powers(n, q, r, |a, pa| {
                let s = sigma_prime_power_u128(q, a).expect("q^a <= bound");
                factors.push((q, a));
                self.visit(n * pa, sigma * s, q, remaining.map(|r| r - 1), factors, out);
                factors.pop();
            });
            ControlFlow::Continue(())
        });
    }

    fn check(&self, n: u64, sigma: u128, factors: &[(u64, u32)], out: &mut UnitResult) {
        out.candidates += 1;
        let twice = 2 * n as u128;
        if sigma >= twice {
            return;
        }
        let d = (twice - sigma) as u64;
        if !n.is_multiple_of(d) {
            return;
        }
        let record = DpnRecord {
            n,
            factorization: Factorization::new(factors.to_vec()).expect("canonical by construction"),
            d,
            complement: n / d,
        };
        if record.verify() {
            out.hits.push(record);
        } else {
            out.rejected.push(n);
        }
    }
}

/// Run a job, honouring partition, parallelism and checkpoint options.
pub fn run_search(job: &SearchJob, opts: &RunOptions) -> Result<SearchReport> {
    job.validate()?;
    let started = Instant::now();
    let plan = Plan::new(job);
    let units = plan.units();
    let owned: Vec<usize> = (0..units.len())
        .filter(|&u| job.partition.is_none_or(|p| p.owns(u)))
        .collect();

    let mut lineage = Vec::new();
    let path = opts.checkpoint_dir.as_ref().map(|dir| checkpoint_path(dir, job));
    let mut state = Checkpoint::fresh(job, units.len() as u64);
    if let Some(path) = &path {
        // A checkpoint from another job under the same id is always a conflict.
        match checkpoint_resume(path, job)? {
            Some(cp) if opts.resume => {
                if cp.units_total != units.len() as u64 {
                    return Err(Error::Checkpoint {
                        path: path.clone(),
                        reason: format!("expected {} units, checkpoint has {}", units.len(), cp.units_total),
                    });
                }
                lineage.push(format!(
                    "resumed at unit {} of {} from {}",
                    cp.next_unit,
                    cp.units_total,
                    path.display()
                ));
                state = cp;
            }
            _ => lineage.push(format!("started; checkpointing to {}", path.display())),
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidJob(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads().max(1);
    let pending: Vec<usize> = owned.iter().copied().filter(|&u| u as u64 >= state.next_unit).collect();
    let mut cursor = 0;
    let mut budget = opts.stop_after_units;
    let mut last_save = Instant::now();
    let mut rejected = Vec::new();

    while cursor < pending.len() {
        let mut take = (threads * 16).min(pending.len() - cursor);
        if let Some(b) = budget {
            if b == 0 {
                break;
            }
            take = take.min(b as usize);
        }
        let chunk = &pending[cursor..cursor + take];
        cursor += take;
        let results: Vec<UnitResult> = if threads == 1 {
            chunk.iter().map(|&u| plan.run_unit(units[u])).collect()
        } else {
            pool.install(|| chunk.par_iter().map(|&u| plan.run_unit(units[u])).collect())
        };
        for r in results {
            state.hits.extend(r.hits);
            state.candidates_examined += r.candidates;
            rejected.extend(r.rejected);
        }
        state.units_done += chunk.len() as u64;
        state.next_unit = *chunk.last().expect("non-empty chunk") as u64 + 1;
        if let Some(b) = budget.as_mut() {
            *b -= chunk.len() as u64;
        }
        if let Some(path) = &path {
            if cursor == pending.len() || budget == Some(0) || last_save.elapsed() >= CHECKPOINT_INTERVAL {
                checkpoint_save(path, &state)?;
                last_save = Instant::now();
            }
        }
    }
    if !rejected.is_empty() {
        return Err(Error::InvalidJob(format!(
            "candidates failed re-verification: {rejected:?}"
        )));
    }

    let complete = cursor == pending.len();
    if let Some(path) = &path {
        checkpoint_save(path, &state)?;
        if complete {
            lineage.push(format!("completed {} units", owned.len()));
        } else {
            lineage.push(format!("stopped at unit {} of {}", state.next_unit, units.len()));
        }
    }
    state.hits.sort_by_key(|h| h.n);
    Ok(SearchReport {
        job: job.clone(),
        hits: state.hits,
        candidates_examined: state.candidates_examined,
        units_total: owned.len() as u64,
        units_done: state.units_done,
        complete,
        elapsed_ms: started.elapsed().as_millis() as u64,
        merged_parts: Vec::new(),
        lineage,
    })
}
