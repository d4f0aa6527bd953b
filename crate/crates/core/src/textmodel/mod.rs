//! Bag-of-embeddings sentiment classifier trained with Adam.
//!
//! The model averages token embeddings, passes the mean through one `tanh`
//! hidden layer and a 2-way softmax (index 1 is the positive class). All
//! gradients are computed analytically; training is deterministic per seed.

mod adam;
mod io;
mod model;
mod schedule;
mod train;
mod vocab;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{content_hash, read_weights, weights_from_bytes, weights_to_bytes, write_weights, WeightsHeader};
pub use model::{forward, loss_and_grad, predict, Dims, Encoded, ModelWeights, Prediction};
pub use schedule::LrSchedule;
pub use train::{accuracy, train, Trainer, TrainConfig, TrainOutcome};
pub use vocab::{build_vocab, encode, tokenize, Vocab, PAD, PAD_INDEX, UNK, UNK_INDEX};
