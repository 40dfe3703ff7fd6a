//! Dense packed Boolean rows.
//!
//! A row over a vocabulary of `L` tokens is stored as `K = ceil(L / 64)`
//! 64-bit words. Words are kept as `i64`, the two's-complement view of the
//! unsigned bit block; AND, equality and popcount do not depend on which
//! view is used.
//!
//! # Invariants
//! - `words.len() == words_for_bits(len)`.
//! - Bits at positions `>= len` in the last word are zero.
//!
//! Zero padding lets the subset test compare whole words without masking,
//! and lets word-sequence equality and hashing stand in for set equality.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WORD_BITS: usize = 64;

/// Number of words needed for `len` bits.
pub const fn words_for_bits(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[inline]
fn last_word_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Which class a matrix of rows belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Attack,
    Normal,
    Unlabeled,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassTag::Attack => "attack",
            ClassTag::Normal => "normal",
            ClassTag::Unlabeled => "unlabeled",
        })
    }
}

/// One packed token set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PackedRow {
    words: Vec<i64>,
    len: usize,
}

impl fmt::Debug for PackedRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PackedRow")
            .field("len", &self.len)
            .field("bits", &self.unpack())
            .finish()
    }
}

impl PackedRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for_bits(len)],
            len,
        }
    }

    /// Packs a set of bit positions into a row of `len` bits.
    pub fn pack<I>(indices: I, len: usize) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut row = Self::zeros(len);
        for index in indices {
            row.set(index)?;
        }
        Ok(row)
    }

    /// Builds a row from raw words, rejecting wrong word counts or set padding bits.
    pub fn from_words(words: Vec<i64>, len: usize) -> Result<Self> {
        check_words(&words, len)?;
        Ok(Self { words, len })
    }

    pub fn set(&mut self, index: usize) -> Result<()> {
        if index >= self.len {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len,
            });
        }
        self.words[index / WORD_BITS] |= (1u64 << (index % WORD_BITS)) as i64;
        Ok(())
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.len && (self.words[index / WORD_BITS] as u64 >> (index % WORD_BITS)) & 1 == 1
    }

    /// Set bit positions in ascending order.
    pub fn unpack(&self) -> Vec<usize> {
        unpack_words(&self.words)
    }

    #[inline]
    pub fn words(&self) -> &[i64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<i64> {
        self.words
    }

    /// Logical bit count `L`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when no bit is set.
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn popcount(&self) -> usize {
        popcount_words(&self.words)
    }

    pub fn intersect(&self, other: &PackedRow) -> Result<PackedRow> {
        same_len(self.len, other.len)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        Ok(PackedRow {
            words,
            len: self.len,
        })
    }

    /// True iff every bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &PackedRow) -> Result<bool> {
        same_len(self.len, other.len)?;
        Ok(subset_words(&self.words, &other.words))
    }
}

/// Packs `indices` into a row of `len` bits.
pub fn pack<I: IntoIterator<Item = usize>>(indices: I, len: usize) -> Result<PackedRow> {
    PackedRow::pack(indices, len)
}

pub fn intersect(a: &PackedRow, b: &PackedRow) -> Result<PackedRow> {
    a.intersect(b)
}

pub fn popcount(a: &PackedRow) -> usize {
    a.popcount()
}

/// `p ⊆ x`, tested word by word as `(p & x) == p`.
pub fn is_subset(p: &PackedRow, x: &PackedRow) -> Result<bool> {
    p.is_subset_of(x)
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("row lengths differ ({a} vs {b} bits)")));
    }
    Ok(())
}

fn check_words(words: &[i64], len: usize) -> Result<()> {
    let k = words_for_bits(len);
    if words.len() != k {
        return Err(Error::Shape(format!(
            "{} words supplied for {len} bits (expected {k})",
            words.len()
        )));
    }
    if let Some(&last) = words.last() {
        if last as u64 & !last_word_mask(len) != 0 {
            return Err(Error::Shape(format!("padding bits set beyond bit {len}")));
        }
    }
    Ok(())
}

#[inline]
pub fn popcount_words(words: &[i64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

#[inline]
pub fn subset_words(p: &[i64], x: &[i64]) -> bool {
    p.iter().zip(x).all(|(&pw, &xw)| pw & xw == pw)
}

pub fn unpack_words(words: &[i64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (k, &w) in words.iter().enumerate() {
        let mut bits = w as u64;
        while bits != 0 {
            let tz = bits.trailing_zeros() as usize;
            out.push(k * WORD_BITS + tz);
            bits &= bits - 1;
        }
    }
    out
}

/// Canonical order on rows: lexicographic over the unsigned word values.
pub fn canonical_cmp(a: &[i64], b: &[i64]) -> Ordering {
    a.iter()
        .map(|&w| w as u64)
        .cmp(b.iter().map(|&w| w as u64))
}

/// Class-contiguous block of `n` packed rows, stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct PackedMatrix {
    words: Vec<i64>,
    n: usize,
    len: usize,
    tag: ClassTag,
}

impl fmt::Debug for PackedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PackedMatrix")
            .field("tag", &self.tag)
            .field("n", &self.n)
            .field("len", &self.len)
            .finish()
    }
}

impl PackedMatrix {
    pub fn empty(len: usize, tag: ClassTag) -> Self {
        Self {
            words: Vec::new(),
            n: 0,
            len,
            tag,
        }
    }

    pub fn with_capacity(len: usize, tag: ClassTag, rows: usize) -> Self {
        Self {
            words: Vec::with_capacity(rows * words_for_bits(len)),
            n: 0,
            len,
            tag,
        }
    }

    pub fn from_rows<'a, I>(rows: I, len: usize, tag: ClassTag) -> Result<Self>
    where
        I: IntoIterator<Item = &'a PackedRow>,
    {
        let mut m = Self::empty(len, tag);
        for row in rows {
            m.push(row)?;
        }
        Ok(m)
    }

    /// Builds a matrix from a flat row-major word block.
    pub fn from_words(words: Vec<i64>, len: usize, tag: ClassTag) -> Result<Self> {
        let k = words_for_bits(len);
        if k == 0 {
            if !words.is_empty() {
                return Err(Error::Shape("words supplied for zero-length rows".into()));
            }
            return Ok(Self::empty(len, tag));
        }
        if !words.len().is_multiple_of(k) {
            return Err(Error::Shape(format!(
                "{} words is not a multiple of {k} words per row",
                words.len()
            )));
        }
        for row in words.chunks_exact(k) {
            check_words(row, len)?;
        }
        Ok(Self {
            n: words.len() / k,
            words,
            len,
            tag,
        })
    }

    pub fn push(&mut self, row: &PackedRow) -> Result<()> {
        same_len(self.len, row.len)?;
        self.words.extend_from_slice(&row.words);
        self.n += 1;
        Ok(())
    }

    /// Appends a word slice that is already known to satisfy the row invariants.
    pub(crate) fn push_words_unchecked(&mut self, words: &[i64]) {
        debug_assert!(check_words(words, self.len).is_ok());
        self.words.extend_from_slice(words);
        self.n += 1;
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn logical_len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        words_for_bits(self.len)
    }

    pub fn tag(&self) -> ClassTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: ClassTag) -> Self {
        self.tag = tag;
        self
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i64] {
        let k = self.words_per_row();
        &self.words[i * k..(i + 1) * k]
    }

    pub fn row_owned(&self, i: usize) -> PackedRow {
        PackedRow {
            words: self.row(i).to_vec(),
            len: self.len,
        }
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn as_words(&self) -> &[i64] {
        &self.words
    }

    /// Copy of rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> PackedMatrix {
        let k = self.words_per_row();
        PackedMatrix {
            words: self.words[start * k..end * k].to_vec(),
            n: end - start,
            len: self.len,
            tag: self.tag,
        }
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> PackedMatrix {
        let mut out = PackedMatrix::with_capacity(self.len, self.tag, indices.len());
        for &i in indices {
            out.push_words_unchecked(self.row(i));
        }
        out
    }
}
