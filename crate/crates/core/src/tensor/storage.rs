use serde::Serialize;

/// Parameter accounting for a compressed tensor against its uncompressed size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageReport {
    pub parameter_count: u64,
    pub uncompressed_count: u64,
    /// `uncompressed_count / parameter_count`; may be below 1.
    pub compression_ratio: f64,
    /// Filled in once the tensor has been serialized.
    pub bytes_on_disk: Option<u64>,
}

impl StorageReport {
    pub fn new(parameter_count: u64, original_shape: &[usize]) -> Self {
        let uncompressed_count: u64 = original_shape.iter().map(|&s| s as u64).product();
        let parameter_count = parameter_count.max(1);
        StorageReport {
            parameter_count,
            uncompressed_count,
            compression_ratio: uncompressed_count as f64 / parameter_count as f64,
            bytes_on_disk: None,
        }
    }

    pub fn with_bytes(mut self, bytes: u64) -> Self {
        self.bytes_on_disk = Some(bytes);
        self
    }
}

/// Anything with an exact stored-scalar count.
pub trait ParameterCount {
    fn parameter_count(&self) -> usize;
}

impl ParameterCount for super::TTTensor {
    fn parameter_count(&self) -> usize {
        super::TTTensor::parameter_count(self)
    }
}

impl ParameterCount for super::TuckerTensor {
    fn parameter_count(&self) -> usize {
        super::TuckerTensor::parameter_count(self)
    }
}

impl ParameterCount for super::TTTuckerTensor {
    fn parameter_count(&self) -> usize {
        super::TTTuckerTensor::parameter_count(self)
    }
}

pub fn storage_report<T: ParameterCount + ?Sized>(t: &T, original_shape: &[usize]) -> StorageReport {
    StorageReport::new(t.parameter_count() as u64, original_shape)
}

/// Σ r_{d-1} I_d r_d for TT ranks `r_0..r_D`.
pub fn tt_parameter_count(shape: &[usize], ranks: &[usize]) -> u64 {
    assert_eq!(ranks.len(), shape.len() + 1);
    shape
        .iter()
        .enumerate()
        .map(|(d, &n)| (ranks[d] * n * ranks[d + 1]) as u64)
        .sum()
}

/// Π r_d + Σ I_d r_d.
pub fn tucker_parameter_count(shape: &[usize], ranks: &[usize]) -> u64 {
    assert_eq!(ranks.len(), shape.len());
    let core: u64 = ranks.iter().map(|&r| r as u64).product();
    core + shape.iter().zip(ranks).map(|(&n, &r)| (n * r) as u64).sum::<u64>()
}
