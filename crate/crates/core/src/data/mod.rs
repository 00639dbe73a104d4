//! Skeleton datasets: topology, the motion file format, part aggregation,
//! padding and the synthetic generator.

pub mod batch;
pub mod manifest;
pub mod motion;
pub mod synthetic;
pub mod topology;

pub use batch::{aggregate_body_parts, pad_and_mask, FeatureStats, PaddedBatch, DEFAULT_MAX_LEN};
pub use manifest::{CaptionRecord, Dataset, DatasetManifest, ManifestEntry, Split, TopologySpec};
pub use motion::{load_motion, save_motion, SkeletonSequence, FEATURE_DIM};
pub use synthetic::generate_synthetic;
pub use topology::{BodyPart, SkeletonTopology, PART_COUNT};
