//! Training checkpoints.
//!
//! One JSON object holding both network files (see [`crate::net::NetFile`]),
//! the learned training codes, the hyperparameters, the run seed and,
//! optionally, the query/database/train split the run used:
//!
//! ```text
//! {
//!   "format": "dcmh-checkpoint", "version": 1, "scalar": "f64",
//!   "seed": 7,
//!   "hyper": { "gamma": 1.0, "eta": 1.0, "code_length": 16, "batch_size": 128,
//!              "outer_iters": 500, "lr": 0.01 },
//!   "iterations": 500,
//!   "split": { "query": [...], "database": [...], "train": [...] } | null,
//!   "net_x": { ...network file... },
//!   "net_y": { ...network file... },
//!   "codes": { "bits": 16, "points": 5000, "signs": "+-+-..." }
//! }
//! ```
//!
//! `codes.signs` lists the code of training point 0 first, one `+`/`-` per bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Split;
use crate::error::{Error, Result};
use crate::math::{CodeMatrix, Scalar};
use crate::model::{Hyperparams, TrainState};
use crate::net::{FeedForwardNet, NetFile};

pub const CHECKPOINT_FORMAT: &str = "dcmh-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CodeRecord {
    bits: usize,
    points: usize,
    signs: String,
}

impl From<&CodeMatrix> for CodeRecord {
    fn from(b: &CodeMatrix) -> Self {
        CodeRecord {
            bits: b.bits(),
            points: b.points(),
            signs: b
                .as_columns_flat()
                .iter()
                .map(|&s| if s > 0 { '+' } else { '-' })
                .collect(),
        }
    }
}

impl CodeRecord {
    fn into_codes(self) -> Result<CodeMatrix> {
        let signs = self
            .signs
            .chars()
            .map(|ch| match ch {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::invalid(format!("bad code character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        CodeMatrix::from_columns_flat(self.bits, self.points, signs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct CheckpointFile<T> {
    format: String,
    version: u32,
    scalar: String,
    seed: u64,
    hyper: Hyperparams<T>,
    iterations: usize,
    split: Option<Split>,
    net_x: NetFile<T>,
    net_y: NetFile<T>,
    codes: CodeRecord,
}

/// Everything needed to encode new points and reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub seed: u64,
    pub hyper: Hyperparams<T>,
    pub iterations: usize,
    pub split: Option<Split>,
    pub net_x: FeedForwardNet<T>,
    pub net_y: FeedForwardNet<T>,
    pub codes: CodeMatrix,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn from_state(state: &TrainState<T>, seed: u64, split: Option<Split>) -> Self {
        Checkpoint {
            seed,
            hyper: state.hyper,
            iterations: state.iteration,
            split,
            net_x: state.net_x.clone(),
            net_y: state.net_y.clone(),
            codes: state.b.clone(),
        }
    }
}

pub fn save_checkpoint<T: Scalar>(ckpt: &Checkpoint<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        scalar: T::NAME.into(),
        seed: ckpt.seed,
        hyper: ckpt.hyper,
        iterations: ckpt.iterations,
        split: ckpt.split.clone(),
        net_x: NetFile::from(&ckpt.net_x),
        net_y: NetFile::from(&ckpt.net_y),
        codes: CodeRecord::from(&ckpt.codes),
    };
    let json = serde_json::to_string(&file).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Checkpoint<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CheckpointFile<T> = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
        return Err(Error::invalid(format!(
            "{}: unsupported checkpoint {:?} version {}",
            path.display(),
            file.format,
            file.version
        )));
    }
    if file.scalar != T::NAME {
        return Err(Error::invalid(format!(
            "{}: checkpoint stored as {}, requested {}",
            path.display(),
            file.scalar,
            T::NAME
        )));
    }
    file.hyper.validate()?;
    Ok(Checkpoint {
        seed: file.seed,
        hyper: file.hyper,
        iterations: file.iterations,
        split: file.split,
        net_x: file.net_x.into_net()?,
        net_y: file.net_y.into_net()?,
        codes: file.codes.into_codes()?,
    })
}
