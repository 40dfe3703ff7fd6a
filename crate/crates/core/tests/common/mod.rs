//! Brute-force set oracle shared by the integration tests and the
//! acceptance suite. Rows are `u128` bitmasks (at most 128 tokens), and every
//! quantity is computed straight from the definitions with no batching,
//! packing or parallelism.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use igdetect::{ClassTag, PackedMatrix, PackedRow};
use rand::Rng;

pub fn is_subset(p: u128, x: u128) -> bool {
    p & !x == 0
}

/// Non-empty pairwise intersections plus the non-empty rows themselves.
pub fn candidates(rows: &[u128]) -> BTreeSet<u128> {
    let mut out = BTreeSet::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let b = rows[i] & rows[j];
            if b != 0 {
                out.insert(b);
            }
        }
        if rows[i] != 0 {
            out.insert(rows[i]);
        }
    }
    out
}

pub fn support(p: u128, rows: &[u128]) -> u64 {
    rows.iter().filter(|&&x| is_subset(p, x)).count() as u64
}

pub fn score(p: u128, rows: &[u128]) -> i64 {
    let size = p.count_ones() as i64;
    support(p, rows) as i64 * size * size
}

/// Pure dictionary: pattern → (support, score).
pub fn pure(own: &[u128], opposite: &[u128]) -> BTreeMap<u128, (u64, i64)> {
    candidates(own)
        .into_iter()
        .filter(|&b| !opposite.iter().any(|&x| is_subset(b, x)))
        .map(|b| (b, (support(b, own), score(b, own))))
        .collect()
}

pub fn evidence(x: u128, dict: &BTreeMap<u128, (u64, i64)>) -> i64 {
    dict.iter()
        .filter(|(&p, _)| is_subset(p, x))
        .map(|(_, &(_, s))| s)
        .sum()
}

pub fn to_row(mask: u128, len: usize) -> PackedRow {
    PackedRow::pack((0..len).filter(|&b| mask >> b & 1 == 1), len).unwrap()
}

pub fn from_row(row: &PackedRow) -> u128 {
    row.unpack().into_iter().fold(0u128, |m, b| m | 1 << b)
}

pub fn to_matrix(masks: &[u128], len: usize, tag: ClassTag) -> PackedMatrix {
    let rows: Vec<PackedRow> = masks.iter().map(|&m| to_row(m, len)).collect();
    PackedMatrix::from_rows(&rows, len, tag).unwrap()
}

pub fn random_masks<R: Rng>(rng: &mut R, n: usize, len: usize, density: f64) -> Vec<u128> {
    (0..n)
        .map(|_| (0..len).filter(|_| rng.gen_bool(density)).fold(0u128, |m, b| m | 1 << b))
        .collect()
}

/// The five-token hand example: bits a..e = 0..4.
pub const A: u128 = 1;
pub const B: u128 = 2;
pub const C: u128 = 4;
pub const D: u128 = 8;
pub const E: u128 = 16;

pub fn running_attack() -> Vec<u128> {
    vec![A | B | C, A | B | D, A | C | D]
}

pub fn running_normal() -> Vec<u128> {
    vec![A | B | E, C | D | E]
}

pub fn running_probes() -> Vec<u128> {
    vec![A | C | D | E, A | B | E, B]
}

/// Everything the mining stages produce for one dataset, in oracle form.
#[derive(Debug, PartialEq)]
pub struct Outcome {
    pub candidates_attack: BTreeMap<u128, (u64, i64)>,
    pub candidates_normal: BTreeMap<u128, (u64, i64)>,
    pub pure_attack: BTreeMap<u128, (u64, i64)>,
    pub pure_normal: BTreeMap<u128, (u64, i64)>,
    pub abnormal: Vec<i64>,
    pub normal: Vec<i64>,
}

pub fn oracle_outcome(attack: &[u128], normal: &[u128], probes: &[u128]) -> Outcome {
    let scored = |own: &[u128]| -> BTreeMap<u128, (u64, i64)> {
        candidates(own)
            .into_iter()
            .map(|b| (b, (support(b, own), score(b, own))))
            .collect()
    };
    let pure_attack = pure(attack, normal);
    let pure_normal = pure(normal, attack);
    Outcome {
        candidates_attack: scored(attack),
        candidates_normal: scored(normal),
        abnormal: probes.iter().map(|&x| evidence(x, &pure_attack)).collect(),
        normal: probes.iter().map(|&x| evidence(x, &pure_normal)).collect(),
        pure_attack,
        pure_normal,
    }
}

fn as_map<'a, I>(patterns: I) -> BTreeMap<u128, (u64, i64)>
where
    I: IntoIterator<Item = &'a igdetect::mine::Pattern>,
{
    patterns
        .into_iter()
        .map(|p| (from_row(&p.bits), (p.support, p.score)))
        .collect()
}

/// Runs mine → purify → evidence through the library. Both classes must be
/// non-empty.
pub fn library_outcome(
    attack: &[u128],
    normal: &[u128],
    probes: &[u128],
    len: usize,
    backend: &dyn igdetect::Backend,
    config: &igdetect::KernelConfig,
) -> igdetect::Result<Outcome> {
    use igdetect::mine::mine_class;
    use igdetect::purify::reject_covered;

    let xa = to_matrix(attack, len, ClassTag::Attack);
    let xn = to_matrix(normal, len, ClassTag::Normal);
    let ca = mine_class(&xa, backend, config, &|_| {})?;
    let cn = mine_class(&xn, backend, config, &|_| {})?;
    let candidates_attack = as_map(&ca.patterns);
    let candidates_normal = as_map(&cn.patterns);
    let pa = reject_covered(ca, &xn, backend, config)?;
    let pn = reject_covered(cn, &xa, backend, config)?;
    let tests = to_matrix(probes, len, ClassTag::Unlabeled);
    let (abnormal, normal_ev) = igdetect::infer::evidence_scores(&tests, &pa, &pn, backend, config)?;
    Ok(Outcome {
        candidates_attack,
        candidates_normal,
        pure_attack: as_map(pa.patterns()),
        pure_normal: as_map(pn.patterns()),
        abnormal,
        normal: normal_ev,
    })
}
