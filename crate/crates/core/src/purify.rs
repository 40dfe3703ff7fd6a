//! Cross-class rejection: a candidate survives only if no record of the
//! opposite class contains it.

use crate::bitpack::{subset_words, PackedMatrix};
use crate::error::{Error, Result};
use crate::kernels::{Backend, KernelConfig};
use crate::mine::{CandidateSet, Pattern};
use crate::Class;

/// Class-exclusive patterns with their scores, ready for inference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PureDictionary {
    class: Class,
    patterns: Vec<Pattern>,
    total_score: i64,
    matrix: PackedMatrix,
    scores: Vec<i64>,
}

impl PureDictionary {
    /// Wraps already-purified patterns. Fails if the score total overflows
    /// `i64`, since evidence sums are bounded by it.
    pub fn new(class: Class, logical_len: usize, patterns: Vec<Pattern>) -> Result<Self> {
        let mut total = 0i64;
        let mut matrix = PackedMatrix::with_capacity(logical_len, class.tag(), patterns.len());
        for p in &patterns {
            if p.class != class {
                return Err(Error::Config(format!(
                    "{} pattern placed in {class} dictionary",
                    p.class
                )));
            }
            if p.bits.len() != logical_len {
                return Err(Error::Shape(format!(
                    "pattern has {} bits, dictionary {logical_len}",
                    p.bits.len()
                )));
            }
            total = total.checked_add(p.score).ok_or_else(|| {
                Error::Overflow(format!("summing {class} dictionary scores"))
            })?;
            matrix.push_words_unchecked(p.bits.words());
        }
        let scores = patterns.iter().map(|p| p.score).collect();
        Ok(Self {
            class,
            patterns,
            total_score: total,
            matrix,
            scores,
        })
    }

    pub fn class(&self) -> Class {
        self.class
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn total_score(&self) -> i64 {
        self.total_score
    }

    pub fn logical_len(&self) -> usize {
        self.matrix.logical_len()
    }

    pub fn matrix(&self) -> &PackedMatrix {
        &self.matrix
    }

    pub fn scores(&self) -> &[i64] {
        &self.scores
    }

    /// Index of the first pattern contained in some row of `opposite`, if any.
    pub fn first_violation(&self, opposite: &PackedMatrix) -> Option<usize> {
        self.matrix
            .rows()
            .position(|p| opposite.rows().any(|x| subset_words(p, x)))
    }
}

/// Keeps exactly the candidates that no row of `opposite_rows` contains.
pub fn reject_covered(
    candidates: CandidateSet,
    opposite_rows: &PackedMatrix,
    backend: &dyn Backend,
    config: &KernelConfig,
) -> Result<PureDictionary> {
    if opposite_rows.tag() != candidates.class.opposite().tag() {
        return Err(Error::Config(format!(
            "{} candidates must be filtered against {} rows, got {}",
            candidates.class,
            candidates.class.opposite(),
            opposite_rows.tag()
        )));
    }
    let covered = backend.coverage_any(&candidates.matrix(), opposite_rows, config)?;
    let CandidateSet {
        class,
        patterns,
        logical_len,
        ..
    } = candidates;
    let kept = patterns
        .into_iter()
        .zip(covered)
        .filter_map(|(p, c)| (!c).then_some(p))
        .collect();
    PureDictionary::new(class, logical_len, kept)
}

/// For each rejected candidate, the index of the first opposite row that
/// contains it. Diagnostic companion to [`reject_covered`].
pub fn rejection_witnesses(
    candidates: &CandidateSet,
    opposite_rows: &PackedMatrix,
) -> Vec<(usize, usize)> {
    candidates
        .patterns
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            opposite_rows
                .rows()
                .position(|x| subset_words(p.bits.words(), x))
                .map(|w| (i, w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ReferenceBackend;
    use crate::mine::mine_class;
    use crate::{ClassTag, PackedRow};

    fn rows(sets: &[&[usize]], tag: ClassTag) -> PackedMatrix {
        let rows: Vec<_> = sets
            .iter()
            .map(|s| PackedRow::pack(s.iter().copied(), 5).unwrap())
            .collect();
        PackedMatrix::from_rows(&rows, 5, tag).unwrap()
    }

    fn summary(d: &PureDictionary) -> Vec<(Vec<usize>, i64)> {
        let mut v: Vec<_> = d.patterns().iter().map(|p| (p.bits.unpack(), p.score)).collect();
        v.sort();
        v
    }

    #[test]
    fn running_example_dictionaries() {
        let cfg = KernelConfig::default();
        let plus = rows(&[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3]], ClassTag::Attack);
        let minus = rows(&[&[0, 1, 4], &[2, 3, 4]], ClassTag::Normal);
        let b_plus = mine_class(&plus, &ReferenceBackend, &cfg, &|_| {}).unwrap();
        let b_minus = mine_class(&minus, &ReferenceBackend, &cfg, &|_| {}).unwrap();

        let witnesses = rejection_witnesses(&b_plus, &minus);
        assert_eq!(witnesses.len(), 1);
        assert_eq!(b_plus.patterns[witnesses[0].0].bits.unpack(), vec![0, 1]);

        let p_plus = reject_covered(b_plus, &minus, &ReferenceBackend, &cfg).unwrap();
        assert_eq!(
            summary(&p_plus),
            vec![
                (vec![0, 1, 2], 9),
                (vec![0, 1, 3], 9),
                (vec![0, 2], 8),
                (vec![0, 2, 3], 9),
                (vec![0, 3], 8),
            ]
        );
        assert_eq!(p_plus.total_score(), 43);
        assert_eq!(p_plus.first_violation(&minus), None);

        let p_minus = reject_covered(b_minus, &plus, &ReferenceBackend, &cfg).unwrap();
        assert_eq!(
            summary(&p_minus),
            vec![(vec![0, 1, 4], 9), (vec![2, 3, 4], 9), (vec![4], 2)]
        );
    }

    #[test]
    fn empty_opposite_keeps_everything() {
        let cfg = KernelConfig::default();
        let plus = rows(&[&[0, 1], &[1, 2]], ClassTag::Attack);
        let b_plus = mine_class(&plus, &ReferenceBackend, &cfg, &|_| {}).unwrap();
        let n = b_plus.len();
        let none = PackedMatrix::empty(5, ClassTag::Normal);
        let p = reject_covered(b_plus, &none, &ReferenceBackend, &cfg).unwrap();
        assert_eq!(p.len(), n);
    }

    #[test]
    fn wrong_opposite_class_rejected() {
        let cfg = KernelConfig::default();
        let plus = rows(&[&[0, 1]], ClassTag::Attack);
        let b_plus = mine_class(&plus, &ReferenceBackend, &cfg, &|_| {}).unwrap();
        assert!(reject_covered(b_plus, &plus, &ReferenceBackend, &cfg).is_err());
    }
}
