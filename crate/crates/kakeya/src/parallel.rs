//! Multi-threaded hit-set builds: the direction space is cut into contiguous
//! ranges, each range is built into a private set, and the sets are merged
//! by bitwise union, so the result does not depend on scheduling.

use std::time::Instant;

use rayon::prelude::*;

use kakeya_core::families::Family;
use kakeya_core::measure::{decay_report_with, Budget, BuildPlan, CellSet, DecayReport};
use kakeya_core::phi::PhiVariant;

use crate::CliError;

const CHUNKS_PER_THREAD: u64 = 8;

pub fn build_parallel(plan: &BuildPlan<'_>) -> kakeya_core::Result<CellSet> {
    let n = plan.direction_count();
    let chunks = (rayon::current_num_threads() as u64 * CHUNKS_PER_THREAD).clamp(1, n.max(1));
    let step = n.div_ceil(chunks).max(1);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let lo = (i * step).min(n);
            let hi = (lo + step).min(n);
            plan.build_range(lo..hi)
        })
        .try_reduce(
            || plan.empty_set().expect("plan was validated"),
            |mut a, b| {
                a.union_with(&b)?;
                Ok(a)
            },
        )
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Decay table with parallel builds; `timing` controls whether wall time is
/// recorded or reported as zero.
pub fn decay_report_parallel(
    fam: &dyn Family,
    variant: PhiVariant,
    d_min: i64,
    d_max: i64,
    budget: Budget,
    timing: bool,
) -> kakeya_core::Result<DecayReport> {
    decay_report_with(fam, variant, d_min, d_max, budget, |plan| {
        let start = Instant::now();
        let set = build_parallel(plan)?;
        let secs = if timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        Ok((set, secs))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kakeya_core::families::kakeya_line_family;
    use kakeya_core::measure::decay_report;
    use kakeya_core::ring::RingSpec;

    #[test]
    fn parallel_matches_sequential() {
        let f = kakeya_line_family(RingSpec::padic(2).unwrap());
        let seq = decay_report(&f, PhiVariant::Series, 1, 7, Budget::default()).unwrap();
        for threads in [1, 3] {
            let par = with_threads(Some(threads), || {
                decay_report_parallel(&f, PhiVariant::Series, 1, 7, Budget::default(), false)
            })
            .unwrap()
            .unwrap();
            assert_eq!(par, seq);
        }
    }
}
