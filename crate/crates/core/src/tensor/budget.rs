use crate::error::{Result, T4dtError};

/// Environment variable overriding the densification budget (bytes).
pub const MEM_BUDGET_ENV: &str = "T4DT_MEM_BUDGET";

const DEFAULT_BUDGET_BYTES: u128 = 2 * 1024 * 1024 * 1024;

/// Upper bound on the memory a dense reconstruction may allocate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBudget {
    bytes: u128,
}

impl Default for MemoryBudget {
    fn default() -> Self {
        MemoryBudget { bytes: DEFAULT_BUDGET_BYTES }
    }
}

impl MemoryBudget {
    pub fn new(bytes: u128) -> Self {
        MemoryBudget { bytes }
    }

    pub fn unlimited() -> Self {
        MemoryBudget { bytes: u128::MAX }
    }

    /// Default budget, overridden by `T4DT_MEM_BUDGET` when it holds a byte count.
    pub fn from_env() -> Self {
        std::env::var(MEM_BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
            .map(MemoryBudget::new)
            .unwrap_or_default()
    }

    pub fn bytes(&self) -> u128 {
        self.bytes
    }

    /// Checks that `elements` f64 scalars fit.
    pub fn check_elements(&self, elements: u128) -> Result<()> {
        let required = elements.saturating_mul(8);
        if required > self.bytes {
            return Err(T4dtError::Budget { required, allowed: self.bytes });
        }
        Ok(())
    }

    pub fn check_shape(&self, shape: &[usize]) -> Result<()> {
        let elements = shape.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
        self.check_elements(elements)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_with_required_and_allowed() {
        let b = MemoryBudget::new(100);
        match b.check_shape(&[4, 4]) {
            Err(T4dtError::Budget { required, allowed }) => {
                assert_eq!(required, 128);
                assert_eq!(allowed, 100);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        assert!(b.check_shape(&[12]).is_ok());
    }

    #[test]
    fn default_is_two_gib() {
        assert_eq!(MemoryBudget::default().bytes(), 2 << 30);
    }
}
