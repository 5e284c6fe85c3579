//! Feed-forward softmax classifier and its training loop.

mod checkpoint;
mod mlp;
mod optim;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use mlp::{evaluate, predict, ForwardPass, Mlp};
pub use optim::OptimizerState;
pub use train::{train, EpochRecord, TrainConfig, TrainHistory};
