//! Text-to-motion retrieval in a learned common embedding space.
//!
//! Skeleton sequences are aggregated into five body-part streams and encoded
//! by a recurrent or transformer motion encoder; captions are encoded by a
//! small text encoder over precomputed (or hashed) word and sentence
//! features. Both are projected into a shared, L2-normalized space trained
//! with a symmetric triplet or InfoNCE loss, and text queries are answered
//! by exact nearest-neighbour search over an embedding index.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod codec;
pub mod config;
pub mod container;
pub mod data;
pub mod error;
pub mod eval;
pub mod index;
pub mod motion_encoder;
pub mod params;
pub mod pipeline;
pub mod recurrent;
pub mod space;
pub mod sweep;
pub mod tape;
pub mod text;

pub use error::{Error, Result};
