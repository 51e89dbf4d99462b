//! Dense volumes and the compressed tensor containers.

pub mod budget;
pub mod dense;
pub mod storage;
pub mod tt;
pub mod tucker;

pub use budget::MemoryBudget;
pub use dense::{DenseVolume, PaddedVolume};
pub use storage::{storage_report, ParameterCount, StorageReport};
pub use tt::{Core3, TTTensor};
pub use tucker::{mode_product, TTTuckerTensor, TuckerTensor};
