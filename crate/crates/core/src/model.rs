//! Trained model and the end-to-end training driver.

use std::time::Instant;

use crate::bitpack::PackedMatrix;
use crate::error::{Error, Result};
use crate::infer::{
    classify, evidence_scores, explain, fit_normal_stats, ClassifierParams, EvidenceReport,
    Regulation, StatsMode, DEFAULT_R,
};
use crate::kernels::{Backend, KernelConfig};
use crate::mine::{mine_class, CandidateSet, MineProgress};
use crate::pipeline::{
    encode_dataset, encode_rows, infer_schema, DatasetSchema, EncodedBatch, FilterReport,
    RawTable, SchemaOptions, TokenVocabulary,
};
use crate::purify::{reject_covered, PureDictionary};
use crate::{Class, PackedRow};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierSettings {
    pub r: f64,
    pub stats_mode: StatsMode,
    /// Statistics fitted on training normals; set when `stats_mode` is `Train`.
    pub frozen: Option<ClassifierParams>,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            r: DEFAULT_R,
            stats_mode: StatsMode::Batch,
            frozen: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub schema: DatasetSchema,
    pub vocabulary: TokenVocabulary,
    pub attack: PureDictionary,
    pub normal: PureDictionary,
    pub classifier: ClassifierSettings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub abnormal: Vec<i64>,
    pub normal: Vec<i64>,
    pub labels: Vec<Class>,
    pub regulations: Vec<Regulation>,
    /// Parameters the labels were decided with.
    pub params: ClassifierParams,
}

impl Predictions {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `A − N` per row, the ranking score behind the AUC.
    pub fn margins(&self) -> Vec<i64> {
        self.abnormal
            .iter()
            .zip(&self.normal)
            .map(|(a, n)| a - n)
            .collect()
    }
}

impl Model {
    pub fn encode(&self, table: &RawTable) -> Result<EncodedBatch> {
        encode_rows(table, &self.schema, &self.vocabulary)
    }

    /// Classifier parameters for a batch with normal evidence `n_values`.
    pub fn params_for(&self, n_values: &[i64]) -> ClassifierParams {
        match (self.classifier.stats_mode, self.classifier.frozen) {
            (StatsMode::Train, Some(p)) => ClassifierParams {
                r: self.classifier.r,
                ..p
            },
            _ => fit_normal_stats(n_values, self.classifier.r),
        }
    }

    pub fn predict(
        &self,
        rows: &PackedMatrix,
        backend: &dyn Backend,
        config: &KernelConfig,
    ) -> Result<Predictions> {
        let (abnormal, normal) = evidence_scores(rows, &self.attack, &self.normal, backend, config)?;
        let params = self.params_for(&normal);
        let (labels, regulations) = abnormal
            .iter()
            .zip(&normal)
            .map(|(&a, &n)| classify(a, n, &params))
            .unzip();
        Ok(Predictions {
            abnormal,
            normal,
            labels,
            regulations,
            params,
        })
    }

    pub fn explain(&self, row: &PackedRow, params: &ClassifierParams) -> Result<EvidenceReport> {
        explain(row, &self.attack, &self.normal, &self.vocabulary, params)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub schema: SchemaOptions,
    pub r: f64,
    pub stats_mode: StatsMode,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            schema: SchemaOptions::default(),
            r: DEFAULT_R,
            stats_mode: StatsMode::Batch,
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub encode: f64,
    pub mine: f64,
    pub purify: f64,
    pub infer: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub training_rows: usize,
    pub attack_rows: usize,
    pub normal_rows: usize,
    pub candidates_attack: usize,
    pub candidates_normal: usize,
    pub pure_attack: usize,
    pub pure_normal: usize,
    pub filter: FilterReport,
    pub times: PhaseTimes,
}

/// Both pure dictionaries plus the candidate counts they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionaries {
    pub attack: PureDictionary,
    pub normal: PureDictionary,
    pub candidates_attack: usize,
    pub candidates_normal: usize,
    pub mine_secs: f64,
    pub purify_secs: f64,
}

pub struct Trainer<'a> {
    backend: &'a dyn Backend,
    config: KernelConfig,
    progress: Option<&'a (dyn Fn(Class, MineProgress) + Sync)>,
}

impl<'a> Trainer<'a> {
    pub fn new(backend: &'a dyn Backend, config: KernelConfig) -> Self {
        Self {
            backend,
            config,
            progress: None,
        }
    }

    pub fn with_progress(mut self, hook: &'a (dyn Fn(Class, MineProgress) + Sync)) -> Self {
        self.progress = Some(hook);
        self
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    fn mine(&self, rows: &PackedMatrix, class: Class) -> Result<CandidateSet> {
        let hook = |p: MineProgress| {
            if let Some(h) = self.progress {
                h(class, p)
            }
        };
        mine_class(rows, self.backend, &self.config, &hook)
    }

    /// Mines and purifies both classes of already-packed training rows.
    pub fn dictionaries(&self, attack: &PackedMatrix, normal: &PackedMatrix) -> Result<Dictionaries> {
        let t = Instant::now();
        let b_attack = self.mine(attack, Class::Attack)?;
        let b_normal = self.mine(normal, Class::Normal)?;
        let mine_secs = t.elapsed().as_secs_f64();
        let (candidates_attack, candidates_normal) = (b_attack.len(), b_normal.len());

        let t = Instant::now();
        let p_attack = reject_covered(b_attack, normal, self.backend, &self.config)?;
        let p_normal = reject_covered(b_normal, attack, self.backend, &self.config)?;
        p_attack
            .total_score()
            .checked_add(p_normal.total_score())
            .ok_or_else(|| Error::Overflow("summing dictionary scores".into()))?;
        Ok(Dictionaries {
            attack: p_attack,
            normal: p_normal,
            candidates_attack,
            candidates_normal,
            mine_secs,
            purify_secs: t.elapsed().as_secs_f64(),
        })
    }

    /// Full training run on a labeled table.
    pub fn train(&self, table: &RawTable, options: &TrainOptions) -> Result<(Model, TrainSummary)> {
        if !(options.r >= 0.0 && options.r.is_finite()) {
            return Err(Error::Config(format!("r must be a non-negative number, got {}", options.r)));
        }
        let t = Instant::now();
        let schema = infer_schema(table, &options.schema)?;
        let encoded = encode_dataset(table, &schema, None)?;
        let encode = t.elapsed().as_secs_f64();

        let dicts = self.dictionaries(&encoded.attack, &encoded.normal)?;

        let mut classifier = ClassifierSettings {
            r: options.r,
            stats_mode: options.stats_mode,
            frozen: None,
        };
        if options.stats_mode == StatsMode::Train {
            let (_, n) = evidence_scores(
                &encoded.normal,
                &dicts.attack,
                &dicts.normal,
                self.backend,
                &self.config,
            )?;
            classifier.frozen = Some(fit_normal_stats(&n, options.r));
        }

        let summary = TrainSummary {
            training_rows: table.len(),
            attack_rows: encoded.attack.n_rows(),
            normal_rows: encoded.normal.n_rows(),
            candidates_attack: dicts.candidates_attack,
            candidates_normal: dicts.candidates_normal,
            pure_attack: dicts.attack.len(),
            pure_normal: dicts.normal.len(),
            filter: encoded.filter.unwrap_or_default(),
            times: PhaseTimes {
                encode,
                mine: dicts.mine_secs,
                purify: dicts.purify_secs,
                infer: 0.0,
            },
        };
        let model = Model {
            schema,
            vocabulary: encoded.vocabulary,
            attack: dicts.attack,
            normal: dicts.normal,
            classifier,
        };
        Ok((model, summary))
    }
}
