//! Multi-modal datasets: label-based similarity, splits, a synthetic
//! generator and the on-disk dataset format.

mod dataset;
mod file;
mod similarity;
mod split;
mod synth;

pub use dataset::MultiModalDataset;
pub use file::{load_dataset, read_dataset, save_dataset, write_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use similarity::{build_similarity, SimilarityMatrix};
pub use split::{Split, SplitSpec};
pub use synth::{nearest_centroid_accuracy, synth_dataset, SynthConfig, WORDS_PER_DOCUMENT};
