//! The common embedding space: similarity, contrastive losses, the
//! two-stream model, its optimizer and gradient verification.

pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod similarity;
pub mod train;

pub use loss::{infonce_loss, triplet_loss, DEFAULT_MARGIN, DEFAULT_TEMPERATURE};
pub use model::{LossKind, ModelConfig, RetrievalModel, DEFAULT_COMMON_DIM};
pub use similarity::{cosine_similarity, similarity_matrix};
pub use train::{fit, fit_with, train_step, AdamConfig, PairBatch, Schedule, TrainLog, TrainState};
