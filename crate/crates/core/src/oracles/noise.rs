use statrs::distribution::{ContinuousCDF, Normal};

/// `m` equiprobable atoms at the standard-normal quantile midpoints
/// `Phi^-1((i - 0.5) / m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    values: Vec<f64>,
}

pub const DEFAULT_NOISE_ATOMS: usize = 1001;

impl Default for NoiseGrid {
    fn default() -> Self {
        Self::new(DEFAULT_NOISE_ATOMS)
    }
}

impl NoiseGrid {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "noise grid needs at least one atom");
        let normal = Normal::standard();
        let raw: Vec<f64> = (1..=m)
            .map(|i| normal.inverse_cdf((i as f64 - 0.5) / m as f64))
            .collect();
        // Average mirrored pairs so the grid is exactly symmetric.
        let values = (0..m).map(|i| 0.5 * (raw[i] - raw[m - 1 - i])).collect();
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn prob(&self) -> f64 {
        1.0 / self.values.len() as f64
    }
}
