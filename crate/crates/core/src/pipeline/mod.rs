//! Scene compression: per-frame decomposition, time-mode insertion and
//! pairwise merging into one [`CompressedScene`], plus compressed-domain
//! frame extraction and point queries.

mod compress;
mod query;
mod scene;

pub use compress::{compress_scene, CompressOptions, CompressStats, MergeStrategy, TimePadding};
pub use query::{query_gradient, query_point, Sampling};
pub use scene::{
    CompressedFrame, CompressedScene, ScalarWidth, SceneFormat, SceneLayout, ScenePayload, SceneStorage,
};
