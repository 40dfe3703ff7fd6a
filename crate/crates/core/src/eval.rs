//! Train/test split protocol, detection metrics and the ratio benchmark.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PhaseTimes, TrainOptions, Trainer};
use crate::pipeline::RawTable;
use crate::Class;

/// A `k | 10−k` train/test split, `k` in `1..=9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ratio(u32);

impl Ratio {
    pub fn new(train_tenths: u32) -> Result<Self> {
        if (1..=9).contains(&train_tenths) {
            Ok(Self(train_tenths))
        } else {
            Err(Error::Config(format!(
                "train share must be 1..9 tenths, got {train_tenths}"
            )))
        }
    }

    pub fn train_tenths(self) -> u32 {
        self.0
    }

    pub fn test_tenths(self) -> u32 {
        10 - self.0
    }

    pub fn all() -> Vec<Ratio> {
        (1..=9).map(Ratio).collect()
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.0, 10 - self.0)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Accepts `k:m` or `k|m` with `k + m = 10`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid ratio `{s}` (expected e.g. 1:9)"));
        let (a, b) = s.split_once([':', '|']).ok_or_else(bad)?;
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a + b != 10 {
            return Err(bad());
        }
        Ratio::new(a).map_err(|_| bad())
    }
}

/// Parses a comma-separated ratio list, or `all` for the nine splits.
pub fn parse_ratios(s: &str) -> Result<Vec<Ratio>> {
    if s.trim() == "all" {
        return Ok(Ratio::all());
    }
    s.split(',').map(|r| r.trim().parse()).collect()
}

/// Train and test row indices: the first `⌊k·n/10⌋` rows train, the rest
/// test. With a seed, indices are shuffled first.
pub fn split_by_ratio(n: usize, ratio: Ratio, shuffle_seed: Option<u64>) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let cut = n * ratio.0 as usize / 10;
    let test = order.split_off(cut);
    (order, test)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// `(TPR + TNR) / 2`.
    pub balanced_auc: f64,
    /// Mann-Whitney AUC over the `A − N` margin; the headline AUC.
    pub rank_auc: f64,
}

fn ratio_or_zero(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    /// Ratios derived from a confusion table; `rank_auc` is left at 0.
    pub fn from_confusion(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let accuracy = ratio_or_zero(tp + tn, tp + fp + tn + fn_);
        let recall = ratio_or_zero(tp, tp + fn_);
        let precision = ratio_or_zero(tp, tp + fp);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let tnr = ratio_or_zero(tn, tn + fp);
        Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy,
            recall,
            precision,
            f1,
            balanced_auc: (recall + tnr) / 2.0,
            rank_auc: 0.0,
        }
    }
}

/// Probability that a random attack row has a larger margin than a random
/// normal row, ties counting one half. 0.5 when either class is absent.
pub fn rank_auc(margins: &[i64], truth: &[Class]) -> f64 {
    let mut pairs: Vec<(i64, bool)> = margins
        .iter()
        .zip(truth)
        .map(|(&m, &c)| (m, c == Class::Attack))
        .collect();
    pairs.sort_unstable();
    let positives = pairs.iter().filter(|p| p.1).count() as u128;
    let negatives = pairs.len() as u128 - positives;
    if positives == 0 || negatives == 0 {
        return 0.5;
    }
    // twice the Mann-Whitney U, kept integral
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            if pairs[j].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_u += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    twice_u as f64 / (2 * positives * negatives) as f64
}

/// Confusion counts and ratios with attack as the positive class.
pub fn compute_metrics(predicted: &[Class], truth: &[Class], margins: &[i64]) -> Result<Metrics> {
    if predicted.len() != truth.len() || margins.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions, {} truths, {} margins",
            predicted.len(),
            truth.len(),
            margins.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (Class::Attack, Class::Attack) => tp += 1,
            (Class::Attack, Class::Normal) => fp += 1,
            (Class::Normal, Class::Normal) => tn += 1,
            (Class::Normal, Class::Attack) => fn_ += 1,
        }
    }
    let mut m = Metrics::from_confusion(tp, fp, tn, fn_);
    m.rank_auc = rank_auc(margins, truth);
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub ratio: Ratio,
    pub train_rows: usize,
    pub test_rows: usize,
    pub candidates_attack: usize,
    pub candidates_normal: usize,
    pub pure_attack: usize,
    pub pure_normal: usize,
    pub metrics: Metrics,
    pub times: PhaseTimes,
}

#[derive(Debug)]
pub struct RatioOutcome {
    pub ratio: Ratio,
    pub result: Result<RunReport>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchOptions {
    pub train: TrainOptions,
    /// Shuffle rows before splitting; positional split when `None`.
    pub shuffle_seed: Option<u64>,
}

/// Trains and evaluates one split.
pub fn run_ratio(
    table: &RawTable,
    ratio: Ratio,
    trainer: &Trainer<'_>,
    options: &BenchOptions,
) -> Result<RunReport> {
    let (train_idx, test_idx) = split_by_ratio(table.len(), ratio, options.shuffle_seed);
    let train = table.select(&train_idx);
    let test = table.select(&test_idx);
    let (model, summary) = trainer.train(&train, &options.train)?;

    let t = Instant::now();
    let batch = model.encode(&test)?;
    let encode_test = t.elapsed().as_secs_f64();
    let truth = batch.labels.ok_or_else(|| {
        Error::SchemaMismatch("benchmark data needs the label column".into())
    })?;
    let t = Instant::now();
    let predictions = model.predict(&batch.rows, trainer.backend(), trainer.config())?;
    let infer = t.elapsed().as_secs_f64();
    let metrics = compute_metrics(&predictions.labels, &truth, &predictions.margins())?;

    Ok(RunReport {
        ratio,
        train_rows: train.len(),
        test_rows: test.len(),
        candidates_attack: summary.candidates_attack,
        candidates_normal: summary.candidates_normal,
        pure_attack: summary.pure_attack,
        pure_normal: summary.pure_normal,
        metrics,
        times: PhaseTimes {
            encode: summary.times.encode + encode_test,
            infer,
            ..summary.times
        },
    })
}

/// Runs every ratio in order; a failing ratio is reported and the rest continue.
pub fn run_benchmark(
    table: &RawTable,
    ratios: &[Ratio],
    trainer: &Trainer<'_>,
    options: &BenchOptions,
) -> Vec<RatioOutcome> {
    ratios
        .iter()
        .map(|&ratio| RatioOutcome {
            ratio,
            result: run_ratio(table, ratio, trainer, options),
        })
        .collect()
}

pub const REPORT_COLUMNS: [&str; 19] = [
    "ratio",
    "candidates+",
    "candidates-",
    "pure+",
    "pure-",
    "tp",
    "fp",
    "tn",
    "fn",
    "accuracy",
    "recall",
    "precision",
    "f1",
    "balanced_auc",
    "rank_auc",
    "t_encode",
    "t_mine",
    "t_purify",
    "t_infer",
];

fn secs(v: f64) -> String {
    format!("{v:.3}")
}

fn report_cells(r: &RunReport) -> Vec<String> {
    let m = &r.metrics;
    vec![
        r.ratio.to_string(),
        r.candidates_attack.to_string(),
        r.candidates_normal.to_string(),
        r.pure_attack.to_string(),
        r.pure_normal.to_string(),
        m.tp.to_string(),
        m.fp.to_string(),
        m.tn.to_string(),
        m.fn_.to_string(),
        format!("{:.5}", m.accuracy),
        format!("{:.5}", m.recall),
        format!("{:.5}", m.precision),
        format!("{:.5}", m.f1),
        format!("{:.5}", m.balanced_auc),
        format!("{:.5}", m.rank_auc),
        secs(r.times.encode),
        secs(r.times.mine),
        secs(r.times.purify),
        secs(r.times.infer),
    ]
}

/// Aligned, human-readable table; failed ratios get an error line.
pub fn render_table(outcomes: &[RatioOutcome]) -> String {
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().map(report_cells))
        .collect();
    let widths: Vec<usize> = REPORT_COLUMNS
        .iter()
        .enumerate()
        .map(|(i, h)| rows.iter().map(|r| r[i].len()).max().unwrap_or(0).max(h.len()))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = String::new();
    let header: Vec<String> = REPORT_COLUMNS.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{}", line(&header));
    for o in outcomes {
        match &o.result {
            Ok(r) => {
                let _ = writeln!(out, "{}", line(&report_cells(r)));
            }
            Err(e) => {
                let _ = writeln!(out, "{:>w$}  ERROR: {e}", o.ratio.to_string(), w = widths[0]);
            }
        }
    }
    out
}

/// One JSON object per ratio, keys as in [`REPORT_COLUMNS`].
pub fn render_jsonl(outcomes: &[RatioOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let value = match &o.result {
            Ok(r) => {
                let m = &r.metrics;
                let round = |v: f64| (v * 1000.0).round() / 1000.0;
                serde_json::json!({
                    "ratio": r.ratio.to_string(),
                    "candidates+": r.candidates_attack,
                    "candidates-": r.candidates_normal,
                    "pure+": r.pure_attack,
                    "pure-": r.pure_normal,
                    "tp": m.tp, "fp": m.fp, "tn": m.tn, "fn": m.fn_,
                    "accuracy": m.accuracy, "recall": m.recall,
                    "precision": m.precision, "f1": m.f1,
                    "balanced_auc": m.balanced_auc, "rank_auc": m.rank_auc,
                    "t_encode": round(r.times.encode), "t_mine": round(r.times.mine),
                    "t_purify": round(r.times.purify), "t_infer": round(r.times.infer),
                })
            }
            Err(e) => serde_json::json!({ "ratio": o.ratio.to_string(), "error": e.to_string() }),
        };
        let _ = writeln!(out, "{value}");
    }
    out
}
