//! Shot-chunk parallelism. Chunks are seeded by index and merged in index
//! order, so results match `snbcert_core::game::sample_game` bit for bit at
//! any thread count.

use rayon::prelude::*;
use snbcert_core::channels::QuantumMap;
use snbcert_core::game::{chunk_plan, GameResult, OutcomeTable, RunningStats, ShotRecord};
use snbcert_core::{Error, GameSpec};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SNBCERT_THREADS";

/// Worker count: `SNBCERT_THREADS` if set to a positive integer, otherwise
/// the available parallelism.
pub fn thread_count() -> usize {
    let available = std::thread::available_parallelism().map_or(1, usize::from);
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(available)
}

pub fn pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool")
}

/// Sampled game result, plus every shot in order when `keep_log` is set.
pub fn sample_parallel(
    spec: &GameSpec,
    ch: &(dyn QuantumMap + Sync),
    shots: u64,
    seed: u64,
    keep_log: bool,
) -> Result<(GameResult, Vec<ShotRecord>), Error> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let table = OutcomeTable::new(spec, ch)?;
    let plan: Vec<(u64, u64)> = chunk_plan(shots).collect();
    let chunks: Vec<(RunningStats, Vec<ShotRecord>)> = pool().install(|| {
        plan.par_iter()
            .map(|&(chunk, n)| {
                let mut records = Vec::new();
                let stats = if keep_log {
                    let mut push = |r: &ShotRecord| records.push(*r);
                    table.sample_chunk(seed, chunk, n, Some(&mut push))
                } else {
                    table.sample_chunk(seed, chunk, n, None)
                };
                (stats, records)
            })
            .collect()
    });
    let mut stats = RunningStats::default();
    let mut log = Vec::with_capacity(if keep_log { shots as usize } else { 0 });
    for (s, records) in chunks {
        stats = stats.merge(&s);
        log.extend(records);
    }
    Ok((GameResult::sampled(table.exact_payoff(), &stats), log))
}
