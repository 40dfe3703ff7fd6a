//! Interpretable intrusion detection by exhaustive coherent-pattern mining.
//!
//! Training records are discretized into tokens (`"<column>:<value>"`),
//! packed into 64-bit words, and mined per class: every pairwise
//! intersection of same-class records plus every full record becomes a
//! candidate pattern, scored `support × size²`. Candidates contained in any
//! record of the opposite class are discarded. What remains are two
//! dictionaries of class-exclusive patterns. A new record is scored by
//! summing the scores of the patterns it contains from each dictionary, and
//! the matched patterns double as its explanation.
//!
//! | module | role |
//! |---|---|
//! | [`bitpack`] | packed rows and word-level set algebra |
//! | [`pipeline`] | CSV → tokens → vocabulary → packed class matrices |
//! | [`kernels`] | batched pair-AND, coverage and fused scoring backends |
//! | [`mine`] | candidate enumeration, support counting, scoring |
//! | [`purify`] | cross-class rejection into pure dictionaries |
//! | [`infer`] | evidence scores, the three-rule classifier, explanations |
//! | [`eval`] | split protocol, metrics, benchmark matrix |
//! | [`model`] | trained model and training driver |
//! | [`archive`] | JSON model archive with provenance |
//! | [`synth`] | synthetic datasets for demos and benchmarks |
//! | [`cli`] | the `ig` command line |
//!
//! See `examples/` for one runnable program per capability.

pub mod archive;
pub mod bitpack;
pub mod cli;
pub mod error;
pub mod eval;
pub mod infer;
pub mod kernels;
pub mod mine;
pub mod model;
pub mod pipeline;
pub mod purify;
pub mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bitpack::{ClassTag, PackedMatrix, PackedRow};
pub use error::{Error, Result};
pub use kernels::{select_backend, Backend, KernelConfig, ParallelCpuBackend, ReferenceBackend};
pub use archive::{ModelArchive, Provenance};
pub use model::{Model, Predictions, Trainer, TrainOptions};

/// Binary class of a training or test record. Attack is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Attack,
    Normal,
}

impl Class {
    pub fn opposite(self) -> Class {
        match self {
            Class::Attack => Class::Normal,
            Class::Normal => Class::Attack,
        }
    }

    pub fn tag(self) -> ClassTag {
        match self {
            Class::Attack => ClassTag::Attack,
            Class::Normal => ClassTag::Normal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Attack => "attack",
            Class::Normal => "normal",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
