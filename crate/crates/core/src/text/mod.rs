//! Text side of the common space: tokenization, precomputed embedding files,
//! hashed stand-in featurizers and the trainable text encoders.

pub mod embeddings;
pub mod encoder;
pub mod featurize;
pub mod tokenize;
pub mod vocab;

pub use embeddings::{SentenceEmbedding, TokenEmbeddingSequence};
pub use encoder::{
    encode_affine, encode_lstm_aggregator, encode_self_contained, TextBatch, TextEncoder,
    TextEncoderConfig, TextVariant,
};
pub use featurize::HashedFeaturizer;
pub use tokenize::{normalize, tokenize};
pub use vocab::Vocabulary;
