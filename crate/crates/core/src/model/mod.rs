//! The cross-modal hashing model: objective, alternating training,
//! out-of-sample encoding and checkpoints.

mod checkpoint;
mod encode;
mod objective;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use encode::{encode, encode_image, encode_text};
pub use objective::{
    balance_grad, grad_f, grad_f_columns, grad_g, grad_g_columns, objective, objective_terms,
    theta, update_b, GradScale, Hyperparams, ObjectiveTerms,
};
pub use train::{train, IterRecord, TrainLogWriter, TrainState, LOG_HEADER};
