//! Exhaustive enumeration of deficient perfect numbers below a bound.
//!
//! The structured enumerator walks increasing prime tuples and carries the
//! divisor sum along, so no candidate is ever factored. The block scan makes
//! no structural assumption and serves as its oracle.

mod checkpoint;
mod enumerate;
mod job;
mod report;
mod scan;

pub use checkpoint::{
    checkpoint_load, checkpoint_path, checkpoint_resume, checkpoint_save, Checkpoint, CHECKPOINT_VERSION,
};
pub use enumerate::{enumerate_odd_dpn, run_search, RunOptions, Unit};
pub use job::{split_job, OmegaTarget, Parity, Partition, SearchJob};
pub use report::{merge_reports, SearchReport};
pub use scan::enumerate_all_dpn;
