//! Compression of time-varying truncated signed distance fields into
//! low-rank tensor formats (TT, Tucker, TT-Tucker, QTT and octet QTT), with
//! compressed-domain random access, frame extraction and quality metrics.

pub mod decompose;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod quantics;
pub mod tensor;

pub use error::{Result, T4dtError};
