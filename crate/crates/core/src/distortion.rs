//! Bounded single-letter distortion criteria, applied additively to blocks.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A distortion matrix d(target, estimate) with entries in [0, d_max].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionCriterion {
    target_size: usize,
    estimate_size: usize,
    matrix: Vec<f64>,
    d_max: f64,
}

impl DistortionCriterion {
    pub fn new(target_size: usize, estimate_size: usize, matrix: Vec<f64>, d_max: f64) -> Result<Self> {
        if target_size == 0 || estimate_size == 0 {
            return Err(Error::InvalidParameter("distortion alphabets must be nonempty".into()));
        }
        if matrix.len() != target_size * estimate_size {
            return Err(Error::MassLength { got: matrix.len(), expected: target_size * estimate_size });
        }
        if !(d_max > 0.0) || !d_max.is_finite() {
            return Err(Error::InvalidParameter("d_max must be positive and finite".into()));
        }
        for (i, &v) in matrix.iter().enumerate() {
            if !v.is_finite() || v < 0.0 || v > d_max {
                return Err(Error::InvalidParameter(format!(
                    "distortion entry {v} at cell {i} outside [0, {d_max}]"
                )));
            }
        }
        Ok(Self { target_size, estimate_size, matrix, d_max })
    }

    /// 0/1 distortion on a shared alphabet.
    pub fn hamming(size: usize) -> Self {
        let mut matrix = vec![1.0; size * size];
        for i in 0..size {
            matrix[i * size + i] = 0.0;
        }
        Self { target_size: size, estimate_size: size, matrix, d_max: 1.0 }
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn estimate_size(&self) -> usize {
        self.estimate_size
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    #[inline]
    pub fn get(&self, target: u32, estimate: u32) -> f64 {
        self.matrix[target as usize * self.estimate_size + estimate as usize]
    }

    /// Additive block distortion: sum of per-symbol distortions.
    pub fn block(&self, targets: &[u32], estimates: &[u32]) -> f64 {
        debug_assert_eq!(targets.len(), estimates.len());
        targets.iter().zip(estimates).map(|(&t, &e)| self.get(t, e)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_block_counts_mismatches() {
        let d = DistortionCriterion::hamming(2);
        assert_eq!(d.block(&[0, 1, 1, 0], &[0, 0, 1, 1]), 2.0);
    }

    #[test]
    fn rejects_entries_above_dmax() {
        let err = DistortionCriterion::new(2, 2, vec![0.0, 2.0, 1.0, 0.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
