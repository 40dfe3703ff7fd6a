//! Per-class candidate enumeration, support counting and scoring.
//!
//! The candidate set of a class is every non-empty intersection of two
//! distinct records of that class, plus every record itself, deduplicated
//! by bit content. A pattern's support is the number of class records that
//! contain it and its score is `support × size²`.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::bitpack::{canonical_cmp, PackedMatrix, PackedRow};
use crate::error::{Error, Result};
use crate::kernels::{Backend, KernelConfig};
use crate::Class;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub bits: PackedRow,
    /// Number of tokens in the pattern.
    pub size: usize,
    pub class: Class,
    /// Class records containing the pattern.
    pub support: u64,
    /// `support × size²`.
    pub score: i64,
}

impl Pattern {
    fn unscored(bits: PackedRow, class: Class) -> Self {
        let size = bits.popcount();
        Self {
            bits,
            size,
            class,
            support: 0,
            score: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub class: Class,
    /// Sorted by [`canonical_cmp`] on bit content; no duplicates.
    pub patterns: Vec<Pattern>,
    /// Number of class records the candidates were drawn from.
    pub source_rows: usize,
    pub logical_len: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Patterns as a contiguous matrix, in list order.
    pub fn matrix(&self) -> PackedMatrix {
        let mut m =
            PackedMatrix::with_capacity(self.logical_len, self.class.tag(), self.patterns.len());
        for p in &self.patterns {
            m.push_words_unchecked(p.bits.words());
        }
        m
    }
}

/// Snapshot passed to a progress hook during enumeration.
#[derive(Clone, Copy, Debug)]
pub struct MineProgress {
    pub pairs_done: u64,
    pub pairs_total: u64,
    /// Distinct candidates; only known once enumeration has finished.
    pub candidates: Option<usize>,
}

pub type ProgressHook<'a> = &'a (dyn Fn(MineProgress) + Sync);

fn class_of(rows: &PackedMatrix) -> Result<Class> {
    match rows.tag() {
        crate::ClassTag::Attack => Ok(Class::Attack),
        crate::ClassTag::Normal => Ok(Class::Normal),
        crate::ClassTag::Unlabeled => Err(Error::Config(
            "candidate mining needs a class-tagged matrix".into(),
        )),
    }
}

type WordSet = HashSet<Box<[i64]>>;

fn collect_left(
    rows: &PackedMatrix,
    left: usize,
    batch: usize,
    backend: &dyn Backend,
    set: &mut WordSet,
) -> Result<()> {
    let n = rows.n_rows();
    let mut start = left + 1;
    while start < n {
        let end = (start + batch).min(n);
        let block = backend.pair_intersect_batch(rows, left, start..end)?;
        for row in block.rows() {
            if row.iter().any(|&w| w != 0) && !set.contains(row) {
                set.insert(row.into());
            }
        }
        start = end;
    }
    Ok(())
}

/// Enumerates the candidate set of one class. Supports and scores are left
/// at zero; see [`count_support`] and [`score_patterns`].
pub fn enumerate_candidates(
    rows: &PackedMatrix,
    backend: &dyn Backend,
    config: &KernelConfig,
) -> Result<CandidateSet> {
    enumerate_candidates_with_progress(rows, backend, config, &|_| {})
}

pub fn enumerate_candidates_with_progress(
    rows: &PackedMatrix,
    backend: &dyn Backend,
    config: &KernelConfig,
    progress: ProgressHook<'_>,
) -> Result<CandidateSet> {
    config.validate()?;
    let class = class_of(rows)?;
    let n = rows.n_rows();
    if n == 0 {
        return Err(Error::EmptyClass(class.as_str()));
    }
    let batch = config.effective_pair_batch(rows.words_per_row());
    let pairs_total = (n as u64) * (n as u64 - 1) / 2;
    let pairs_done = AtomicU64::new(0);
    let report = |left: usize| {
        let done = pairs_done.fetch_add((n - left - 1) as u64, Ordering::Relaxed)
            + (n - left - 1) as u64;
        progress(MineProgress {
            pairs_done: done,
            pairs_total,
            candidates: None,
        });
    };

    let mut set: WordSet = match backend.pool() {
        None => {
            let mut set = WordSet::new();
            for left in 0..n {
                collect_left(rows, left, batch, backend, &mut set)?;
                report(left);
            }
            set
        }
        Some(pool) => pool.install(|| {
            (0..n)
                .into_par_iter()
                .try_fold(WordSet::new, |mut set, left| {
                    collect_left(rows, left, batch, backend, &mut set)?;
                    report(left);
                    Ok::<_, Error>(set)
                })
                .try_reduce(WordSet::new, |a, b| {
                    let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
                    big.extend(small);
                    Ok(big)
                })
        })?,
    };
    for row in rows.rows() {
        if row.iter().any(|&w| w != 0) && !set.contains(row) {
            set.insert(row.into());
        }
    }

    let mut keys: Vec<Box<[i64]>> = set.into_iter().collect();
    keys.sort_unstable_by(|a, b| canonical_cmp(a, b));
    let len = rows.logical_len();
    let patterns = keys
        .into_iter()
        .map(|words| {
            let bits = PackedRow::from_words(words.into_vec(), len)?;
            Ok(Pattern::unscored(bits, class))
        })
        .collect::<Result<Vec<_>>>()?;
    progress(MineProgress {
        pairs_done: pairs_total,
        pairs_total,
        candidates: Some(patterns.len()),
    });
    Ok(CandidateSet {
        class,
        patterns,
        source_rows: n,
        logical_len: len,
    })
}

/// Sets each candidate's support to the number of `rows` containing it.
pub fn count_support(
    mut candidates: CandidateSet,
    rows: &PackedMatrix,
    backend: &dyn Backend,
    config: &KernelConfig,
) -> Result<CandidateSet> {
    if rows.logical_len() != candidates.logical_len {
        return Err(Error::Shape(format!(
            "candidates have {} bits but rows have {}",
            candidates.logical_len,
            rows.logical_len()
        )));
    }
    if rows.tag() != candidates.class.tag() {
        return Err(Error::Config(format!(
            "support for {} candidates counted against {} rows",
            candidates.class,
            rows.tag()
        )));
    }
    let counts = backend.coverage_count(&candidates.matrix(), rows, config)?;
    for (p, c) in candidates.patterns.iter_mut().zip(counts) {
        debug_assert!(c >= 1, "candidate not contained in any source row");
        p.support = c;
    }
    Ok(candidates)
}

/// Assigns `score = support × size²` with overflow checking.
pub fn score_patterns(mut candidates: CandidateSet) -> Result<CandidateSet> {
    for p in &mut candidates.patterns {
        p.score = pattern_score(p.support, p.size)?;
    }
    Ok(candidates)
}

pub fn pattern_score(support: u64, size: usize) -> Result<i64> {
    let overflow = || Error::Overflow(format!("scoring pattern (support {support}, size {size})"));
    let size = i64::try_from(size).map_err(|_| overflow())?;
    let support = i64::try_from(support).map_err(|_| overflow())?;
    size.checked_mul(size)
        .and_then(|sq| sq.checked_mul(support))
        .ok_or_else(overflow)
}

/// Enumerate, count and score in one call.
pub fn mine_class(
    rows: &PackedMatrix,
    backend: &dyn Backend,
    config: &KernelConfig,
    progress: ProgressHook<'_>,
) -> Result<CandidateSet> {
    let candidates = enumerate_candidates_with_progress(rows, backend, config, progress)?;
    let candidates = count_support(candidates, rows, backend, config)?;
    score_patterns(candidates)
}
