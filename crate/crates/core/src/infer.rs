//! Evidence accumulation, the three-rule classifier, and per-record
//! explanations.
//!
//! For a record `x`, `A(x)` is the summed score of attack patterns contained
//! in `x` and `N(x)` the same over normal patterns. The label is decided by:
//!
//! 1. `A ≥ N` → attack, otherwise normal;
//! 2. `A = N = 0` → attack;
//! 3. `N < μ_N − r·σ_N` → attack, overriding a normal verdict from rule 1.
//!
//! `μ_N`, `σ_N` are the mean and population standard deviation of the
//! strictly positive `N` values of a reference batch ([`fit_normal_stats`]).

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::bitpack::{subset_words, PackedMatrix, PackedRow};
use crate::error::{Error, Result};
use crate::kernels::{Backend, KernelConfig};
use crate::pipeline::TokenVocabulary;
use crate::purify::PureDictionary;
use crate::Class;

/// Outlier multiplier used when none is configured.
pub const DEFAULT_R: f64 = 0.568;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub r: f64,
    pub mu_n: f64,
    pub sigma_n: f64,
}

impl ClassifierParams {
    /// Regulation 3 fires when `N` is strictly below this value.
    pub fn threshold(&self) -> f64 {
        self.mu_n - self.r * self.sigma_n
    }
}

/// Which population the normal-evidence statistics are fitted on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsMode {
    /// The batch being classified.
    #[default]
    Batch,
    /// Training normals, frozen into the model.
    Train,
}

impl std::str::FromStr for StatsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(StatsMode::Batch),
            "train" => Ok(StatsMode::Train),
            _ => Err(Error::Config(format!("stats mode must be `batch` or `train`, got `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regulation {
    #[serde(rename = "R1-attack")]
    R1Attack,
    #[serde(rename = "R1-normal")]
    R1Normal,
    #[serde(rename = "R2")]
    R2,
    #[serde(rename = "R3")]
    R3,
}

impl fmt::Display for Regulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regulation::R1Attack => "R1-attack",
            Regulation::R1Normal => "R1-normal",
            Regulation::R2 => "R2",
            Regulation::R3 => "R3",
        })
    }
}

/// `(A, N)` for every row of `tests`.
pub fn evidence_scores(
    tests: &PackedMatrix,
    attack: &PureDictionary,
    normal: &PureDictionary,
    backend: &dyn Backend,
    config: &KernelConfig,
) -> Result<(Vec<i64>, Vec<i64>)> {
    let a = backend.fused_score(attack.matrix(), attack.scores(), tests, config)?;
    let n = backend.fused_score(normal.matrix(), normal.scores(), tests, config)?;
    Ok((a, n))
}

/// Mean and population standard deviation of the strictly positive values.
/// Fewer than two positive values yields `μ = σ = 0`, which disables rule 3.
pub fn fit_normal_stats(n_values: &[i64], r: f64) -> ClassifierParams {
    let positive: Vec<i64> = n_values.iter().copied().filter(|&v| v > 0).collect();
    let (mu_n, sigma_n) = if positive.len() < 2 {
        (0.0, 0.0)
    } else {
        mean_and_std(&positive)
    };
    ClassifierParams { r, mu_n, sigma_n }
}

// Integer moments keep the result independent of value order; falls back to
// two-pass floating point if they overflow.
fn mean_and_std(values: &[i64]) -> (f64, f64) {
    let count = values.len() as i128;
    let moments = values.iter().try_fold((0i128, 0i128), |(s, sq), &v| {
        let v = v as i128;
        Some((s.checked_add(v)?, sq.checked_add(v.checked_mul(v)?)?))
    });
    if let Some((sum, sum_sq)) = moments {
        if let Some(num) = count
            .checked_mul(sum_sq)
            .and_then(|a| sum.checked_mul(sum).map(|b| a - b))
        {
            let mean = sum as f64 / count as f64;
            let std = (num as f64).sqrt() / count as f64;
            return (mean, std);
        }
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Applies the three rules; the regulation returned is the first that
/// fixed the label.
pub fn classify(a: i64, n: i64, params: &ClassifierParams) -> (Class, Regulation) {
    if a == 0 && n == 0 {
        (Class::Attack, Regulation::R2)
    } else if a >= n {
        (Class::Attack, Regulation::R1Attack)
    } else if (n as f64) < params.threshold() {
        (Class::Attack, Regulation::R3)
    } else {
        (Class::Normal, Regulation::R1Normal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPattern {
    pub tokens: Vec<String>,
    pub support: u64,
    pub score: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub abnormal_score: i64,
    pub normal_score: i64,
    pub label: Class,
    pub fired_regulation: Regulation,
    pub matched_attack_patterns: Vec<MatchedPattern>,
    pub matched_normal_patterns: Vec<MatchedPattern>,
}

fn matches(
    row: &PackedRow,
    dict: &PureDictionary,
    vocabulary: &TokenVocabulary,
) -> Result<(i64, Vec<MatchedPattern>)> {
    let mut total = 0i64;
    let mut out = Vec::new();
    for p in dict.patterns() {
        if subset_words(p.bits.words(), row.words()) {
            total = total
                .checked_add(p.score)
                .ok_or_else(|| Error::Overflow("summing matched pattern scores".into()))?;
            out.push(MatchedPattern {
                tokens: vocabulary.tokens_of(&p.bits)?,
                support: p.support,
                score: p.score,
            });
        }
    }
    Ok((total, out))
}

/// Lists every dictionary pattern contained in `row`, with its tokens.
pub fn explain(
    row: &PackedRow,
    attack: &PureDictionary,
    normal: &PureDictionary,
    vocabulary: &TokenVocabulary,
    params: &ClassifierParams,
) -> Result<EvidenceReport> {
    if row.len() != attack.logical_len() || row.len() != normal.logical_len() {
        return Err(Error::Shape(format!(
            "row has {} bits, dictionaries {}",
            row.len(),
            attack.logical_len()
        )));
    }
    let (a, attack_hits) = matches(row, attack, vocabulary)?;
    let (n, normal_hits) = matches(row, normal, vocabulary)?;
    let (label, fired_regulation) = classify(a, n, params);
    Ok(EvidenceReport {
        abnormal_score: a,
        normal_score: n,
        label,
        fired_regulation,
        matched_attack_patterns: attack_hits,
        matched_normal_patterns: normal_hits,
    })
}

impl EvidenceReport {
    /// Line-oriented rendering: a verdict line, then one line per matched pattern.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "verdict {} ({}) A={} N={}",
            self.label, self.fired_regulation, self.abnormal_score, self.normal_score
        );
        for (side, list) in [
            ("attack", &self.matched_attack_patterns),
            ("normal", &self.matched_normal_patterns),
        ] {
            for m in list {
                let _ = writeln!(
                    s,
                    "  {side} score={} support={} [{}]",
                    m.score,
                    m.support,
                    m.tokens.join(", ")
                );
            }
        }
        s
    }
}
