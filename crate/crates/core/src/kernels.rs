//! Batched compute primitives behind a backend contract.
//!
//! Every backend must return bit-for-bit the same results as
//! [`ReferenceBackend`], for any [`KernelConfig`] and any worker count.
//! The primitives are:
//!
//! - [`Backend::pair_intersect_batch`]: one left row broadcast-ANDed over a
//!   window of later rows.
//! - [`Backend::coverage_any`] / [`Backend::coverage_count`]: for each
//!   pattern, whether any (or how many) rows are supersets of it.
//! - [`Backend::fused_score`]: per test row, the sum of scores of the
//!   patterns it contains.

use std::ops::Range;

use rayon::prelude::*;

use crate::bitpack::PackedMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_PAIR_BATCH: usize = 8192;
pub const DEFAULT_COVERAGE_BLOCK: usize = 4096;
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// Names accepted by [`select_backend`].
pub const BACKENDS: &[&str] = &["reference", "parallel-cpu"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelConfig {
    /// Peers per broadcast-AND window.
    pub pair_batch: usize,
    /// Patterns per coverage/scoring block.
    pub coverage_block: usize,
    /// Soft cap on bytes materialized by one pair window.
    pub memory_budget_bytes: u64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            pair_batch: DEFAULT_PAIR_BATCH,
            coverage_block: DEFAULT_COVERAGE_BLOCK,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pair_batch == 0 {
            return Err(Error::Config("pair_batch must be at least 1".into()));
        }
        if self.coverage_block == 0 {
            return Err(Error::Config("coverage_block must be at least 1".into()));
        }
        Ok(())
    }

    /// Window width actually used for rows of `words_per_row` words: the
    /// configured batch, shrunk if needed to fit the memory budget.
    pub fn effective_pair_batch(&self, words_per_row: usize) -> usize {
        let row_bytes = (words_per_row.max(1) * 8) as u64;
        let fit = (self.memory_budget_bytes / row_bytes).max(1);
        self.pair_batch.min(usize::try_from(fit).unwrap_or(usize::MAX))
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Worker pool for callers that parallelize around the kernels;
    /// `None` means run sequentially.
    fn pool(&self) -> Option<&rayon::ThreadPool>;

    /// `out[t] = rows[left] & rows[window.start + t]`.
    ///
    /// The window must lie strictly after `left` so that only pairs
    /// `left < j` are produced.
    fn pair_intersect_batch(
        &self,
        rows: &PackedMatrix,
        left: usize,
        window: Range<usize>,
    ) -> Result<PackedMatrix>;

    /// `mask[p]` is true iff some row of `opponents` is a superset of pattern `p`.
    fn coverage_any(
        &self,
        patterns: &PackedMatrix,
        opponents: &PackedMatrix,
        config: &KernelConfig,
    ) -> Result<Vec<bool>>;

    /// `count[p]` is the number of rows of `rows` that are supersets of pattern `p`.
    fn coverage_count(
        &self,
        patterns: &PackedMatrix,
        rows: &PackedMatrix,
        config: &KernelConfig,
    ) -> Result<Vec<u64>>;

    /// `out[t] = Σ_p scores[p] · [pattern p ⊆ tests[t]]`, with overflow reported
    /// as an error.
    fn fused_score(
        &self,
        patterns: &PackedMatrix,
        scores: &[i64],
        tests: &PackedMatrix,
        config: &KernelConfig,
    ) -> Result<Vec<i64>>;
}

/// Builds a backend by configuration key.
pub fn select_backend(name: &str, workers: usize) -> Result<Box<dyn Backend>> {
    match name {
        "reference" => Ok(Box::new(ReferenceBackend)),
        "parallel-cpu" => Ok(Box::new(ParallelCpuBackend::new(workers)?)),
        _ => Err(Error::UnknownBackend {
            name: name.to_string(),
            available: BACKENDS.join(", "),
        }),
    }
}

fn check_window(rows: &PackedMatrix, left: usize, window: &Range<usize>) -> Result<()> {
    let n = rows.n_rows();
    if left >= n {
        return Err(Error::Contract(format!("left index {left} out of range for {n} rows")));
    }
    if window.start <= left || window.start > window.end || window.end > n {
        return Err(Error::Contract(format!(
            "window {}..{} must lie within ({left}, {n}]",
            window.start, window.end
        )));
    }
    Ok(())
}

fn check_same_len(a: &PackedMatrix, b: &PackedMatrix) -> Result<()> {
    if a.logical_len() != b.logical_len() {
        return Err(Error::Shape(format!(
            "pattern rows have {} bits but data rows have {}",
            a.logical_len(),
            b.logical_len()
        )));
    }
    Ok(())
}

fn check_scores(patterns: &PackedMatrix, scores: &[i64]) -> Result<()> {
    if scores.len() != patterns.n_rows() {
        return Err(Error::Shape(format!(
            "{} scores for {} patterns",
            scores.len(),
            patterns.n_rows()
        )));
    }
    Ok(())
}

fn score_overflow() -> Error {
    Error::Overflow("accumulating pattern scores".into())
}

/// Sequential, literal implementation; the ground truth for other backends.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReferenceBackend;

impl ReferenceBackend {
    #[inline]
    fn covers(pattern: &[i64], row: &[i64]) -> bool {
        let mut all = true;
        for k in 0..pattern.len() {
            all &= (pattern[k] & row[k]) == pattern[k];
        }
        all
    }
}

impl Backend for ReferenceBackend {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn pool(&self) -> Option<&rayon::ThreadPool> {
        None
    }

    fn pair_intersect_batch(
        &self,
        rows: &PackedMatrix,
        left: usize,
        window: Range<usize>,
    ) -> Result<PackedMatrix> {
        check_window(rows, left, &window)?;
        let k = rows.words_per_row();
        let mut out = PackedMatrix::with_capacity(rows.logical_len(), rows.tag(), window.len());
        let mut buf = vec![0i64; k];
        let lhs = rows.row(left);
        for j in window {
            let rhs = rows.row(j);
            for w in 0..k {
                buf[w] = lhs[w] & rhs[w];
            }
            out.push_words_unchecked(&buf);
        }
        Ok(out)
    }

    fn coverage_any(
        &self,
        patterns: &PackedMatrix,
        opponents: &PackedMatrix,
        _config: &KernelConfig,
    ) -> Result<Vec<bool>> {
        check_same_len(patterns, opponents)?;
        Ok(patterns
            .rows()
            .map(|p| opponents.rows().any(|t| Self::covers(p, t)))
            .collect())
    }

    fn coverage_count(
        &self,
        patterns: &PackedMatrix,
        rows: &PackedMatrix,
        _config: &KernelConfig,
    ) -> Result<Vec<u64>> {
        check_same_len(patterns, rows)?;
        Ok(patterns
            .rows()
            .map(|p| rows.rows().filter(|t| Self::covers(p, t)).count() as u64)
            .collect())
    }

    fn fused_score(
        &self,
        patterns: &PackedMatrix,
        scores: &[i64],
        tests: &PackedMatrix,
        _config: &KernelConfig,
    ) -> Result<Vec<i64>> {
        check_same_len(patterns, tests)?;
        check_scores(patterns, scores)?;
        tests
            .rows()
            .map(|t| {
                let mut acc = 0i64;
                for (p, &s) in patterns.rows().zip(scores) {
                    if Self::covers(p, t) {
                        acc = acc.checked_add(s).ok_or_else(score_overflow)?;
                    }
                }
                Ok(acc)
            })
            .collect()
    }
}

/// Patterns with their all-zero words dropped: subset tests only need to
/// look at words where the pattern has bits.
struct SparsePatterns {
    offsets: Vec<usize>,
    index: Vec<u32>,
    words: Vec<i64>,
}

impl SparsePatterns {
    fn new(patterns: &PackedMatrix) -> Self {
        let mut offsets = Vec::with_capacity(patterns.n_rows() + 1);
        let mut index = Vec::new();
        let mut words = Vec::new();
        offsets.push(0);
        for row in patterns.rows() {
            for (k, &w) in row.iter().enumerate() {
                if w != 0 {
                    index.push(k as u32);
                    words.push(w);
                }
            }
            offsets.push(words.len());
        }
        Self {
            offsets,
            index,
            words,
        }
    }

    #[inline]
    fn covered_by(&self, p: usize, row: &[i64]) -> bool {
        let (lo, hi) = (self.offsets[p], self.offsets[p + 1]);
        self.index[lo..hi]
            .iter()
            .zip(&self.words[lo..hi])
            .all(|(&k, &w)| row[k as usize] & w == w)
    }
}

/// Multi-threaded CPU backend on a private rayon pool.
pub struct ParallelCpuBackend {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl std::fmt::Debug for ParallelCpuBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParallelCpuBackend")
            .field("workers", &self.workers)
            .finish()
    }
}

impl ParallelCpuBackend {
    pub fn new(workers: usize) -> Result<Self> {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("ig-worker-{i}"))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Backend for ParallelCpuBackend {
    fn name(&self) -> &'static str {
        "parallel-cpu"
    }

    fn pool(&self) -> Option<&rayon::ThreadPool> {
        Some(&self.pool)
    }

    fn pair_intersect_batch(
        &self,
        rows: &PackedMatrix,
        left: usize,
        window: Range<usize>,
    ) -> Result<PackedMatrix> {
        check_window(rows, left, &window)?;
        let lhs = rows.row(left);
        let k = rows.words_per_row();
        let start = window.start;
        let mut words = vec![0i64; window.len() * k];
        for (t, out) in words.chunks_exact_mut(k.max(1)).enumerate() {
            for ((o, &a), &b) in out.iter_mut().zip(lhs).zip(rows.row(start + t)) {
                *o = a & b;
            }
        }
        PackedMatrix::from_words(words, rows.logical_len(), rows.tag())
    }

    fn coverage_any(
        &self,
        patterns: &PackedMatrix,
        opponents: &PackedMatrix,
        config: &KernelConfig,
    ) -> Result<Vec<bool>> {
        check_same_len(patterns, opponents)?;
        config.validate()?;
        let sparse = SparsePatterns::new(patterns);
        let ids: Vec<usize> = (0..patterns.n_rows()).collect();
        Ok(self.pool.install(|| {
            ids.par_chunks(config.coverage_block)
                .flat_map_iter(|block| {
                    block
                        .iter()
                        .map(|&p| opponents.rows().any(|t| sparse.covered_by(p, t)))
                        .collect::<Vec<_>>()
                })
                .collect()
        }))
    }

    fn coverage_count(
        &self,
        patterns: &PackedMatrix,
        rows: &PackedMatrix,
        config: &KernelConfig,
    ) -> Result<Vec<u64>> {
        check_same_len(patterns, rows)?;
        config.validate()?;
        let sparse = SparsePatterns::new(patterns);
        let ids: Vec<usize> = (0..patterns.n_rows()).collect();
        Ok(self.pool.install(|| {
            ids.par_chunks(config.coverage_block)
                .flat_map_iter(|block| {
                    block
                        .iter()
                        .map(|&p| rows.rows().filter(|t| sparse.covered_by(p, t)).count() as u64)
                        .collect::<Vec<_>>()
                })
                .collect()
        }))
    }

    fn fused_score(
        &self,
        patterns: &PackedMatrix,
        scores: &[i64],
        tests: &PackedMatrix,
        config: &KernelConfig,
    ) -> Result<Vec<i64>> {
        check_same_len(patterns, tests)?;
        check_scores(patterns, scores)?;
        config.validate()?;
        let sparse = SparsePatterns::new(patterns);
        let n_patterns = patterns.n_rows();
        let block = config.coverage_block;
        let test_ids: Vec<usize> = (0..tests.n_rows()).collect();
        self.pool.install(|| {
            test_ids
                .par_iter()
                .map(|&t| {
                    let row = tests.row(t);
                    let mut acc = 0i64;
                    let mut start = 0;
                    while start < n_patterns {
                        let end = (start + block).min(n_patterns);
                        for (p, &score) in (start..end).zip(&scores[start..end]) {
                            if sparse.covered_by(p, row) {
                                acc = acc.checked_add(score).ok_or_else(score_overflow)?;
                            }
                        }
                        start = end;
                    }
                    Ok(acc)
                })
                .collect()
        })
    }
}
