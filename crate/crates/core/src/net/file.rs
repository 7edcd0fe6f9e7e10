//! Network checkpoint files.
//!
//! A network is stored as one JSON object:
//!
//! ```text
//! {
//!   "format": "dcmh-net",
//!   "version": 1,
//!   "scalar": "f64",
//!   "layers": [
//!     { "in_dim": 32, "out_dim": 64, "activation": "relu",
//!       "weights": [...out_dim * in_dim values, row-major...],
//!       "bias": [...out_dim values...] },
//!     ...
//!   ]
//! }
//! ```
//!
//! Layers appear input side first. Floats are written in shortest
//! round-trip form and parsed with correct rounding, so save/load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Scalar};
use crate::net::{Activation, FeedForwardNet, Layer};

pub const NET_FORMAT: &str = "dcmh-net";
pub const NET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetFile<T> {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub layers: Vec<LayerRecord<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LayerRecord<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> From<&FeedForwardNet<T>> for NetFile<T> {
    fn from(net: &FeedForwardNet<T>) -> Self {
        NetFile {
            format: NET_FORMAT.into(),
            version: NET_FORMAT_VERSION,
            scalar: T::NAME.into(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation,
                    weights: l.weights.as_slice().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl<T: Scalar> NetFile<T> {
    pub fn into_net(self) -> Result<FeedForwardNet<T>> {
        if self.format != NET_FORMAT {
            return Err(Error::invalid(format!("not a network file (format {:?})", self.format)));
        }
        if self.version != NET_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported network file version {}",
                self.version
            )));
        }
        if self.scalar != T::NAME {
            return Err(Error::invalid(format!(
                "network stored as {}, requested {}",
                self.scalar,
                T::NAME
            )));
        }
        let layers = self
            .layers
            .into_iter()
            .map(|r| {
                let w = DenseMatrix::from_vec(r.out_dim, r.in_dim, r.weights)?;
                Layer::new(w, r.bias, r.activation)
            })
            .collect::<Result<Vec<_>>>()?;
        FeedForwardNet::from_layers(layers)
    }
}

pub fn save_net<T: Scalar>(net: &FeedForwardNet<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string(&NetFile::from(net)).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_net<T: Scalar>(path: impl AsRef<Path>) -> Result<FeedForwardNet<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: NetFile<T> = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    file.into_net()
}
