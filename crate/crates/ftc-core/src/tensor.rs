//! Channel-major 2D tensors and validity masks for variable-length series.

use crate::error::{FtcError, Result};
use crate::scalar::Scalar;

/// A `channels × length` array of scalars, one row per channel, stored
/// row-major (`data[c * length + t]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<F: Scalar> {
    channels: usize,
    length: usize,
    data: Vec<F>,
}

impl<F: Scalar> Tensor2<F> {
    /// Zero-filled tensor.
    pub fn zeros(channels: usize, length: usize) -> Self {
        Tensor2 {
            channels,
            length,
            data: vec![F::zero(); channels * length],
        }
    }

    /// Builds from a flat channel-major vector, checking shape and finiteness.
    pub fn from_vec(channels: usize, length: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != channels * length {
            return Err(FtcError::contract(format!(
                "tensor data has {} entries, expected channels {} x length {}",
                data.len(),
                channels,
                length
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(FtcError::contract(format!(
                "tensor entry {} is not finite",
                idx
            )));
        }
        Ok(Tensor2 {
            channels,
            length,
            data,
        })
    }

    /// Single-channel tensor, convenient in tests.
    pub fn from_row(row: &[F]) -> Result<Self> {
        Self::from_vec(1, row.len(), row.to_vec())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, t: usize) -> F {
        self.data[channel * self.length + t]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, t: usize, v: F) {
        self.data[channel * self.length + t] = v;
    }

    /// Borrow one channel row.
    #[inline]
    pub fn row(&self, channel: usize) -> &[F] {
        &self.data[channel * self.length..(channel + 1) * self.length]
    }

    #[inline]
    pub fn row_mut(&mut self, channel: usize) -> &mut [F] {
        &mut self.data[channel * self.length..(channel + 1) * self.length]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Tensor2 {
            channels: self.channels,
            length: self.length,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies this tensor into the first `self.length` columns of a
    /// zero-padded tensor of `padded_length` columns.
    pub fn zero_padded(&self, padded_length: usize) -> Result<Self> {
        if padded_length < self.length {
            return Err(FtcError::contract(format!(
                "padded length {} shorter than tensor length {}",
                padded_length, self.length
            )));
        }
        let mut out = Tensor2::zeros(self.channels, padded_length);
        for c in 0..self.channels {
            out.row_mut(c)[..self.length].copy_from_slice(self.row(c));
        }
        Ok(out)
    }
}

/// Marks which time steps of a padded series are real observations (`true`)
/// versus padding (`false`). At least one step must be valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    flags: Vec<bool>,
}

impl Mask {
    pub fn new(flags: Vec<bool>) -> Result<Self> {
        if !flags.iter().any(|&f| f) {
            return Err(FtcError::contract("mask has no valid time steps"));
        }
        Ok(Mask { flags })
    }

    /// All-valid mask of the given length.
    pub fn all_valid(length: usize) -> Self {
        Mask {
            flags: vec![true; length.max(1)],
        }
    }

    /// First `valid` steps set, remainder padding.
    pub fn valid_prefix(valid: usize, length: usize) -> Result<Self> {
        if valid == 0 || valid > length {
            return Err(FtcError::contract(format!(
                "mask prefix {} invalid for length {}",
                valid, length
            )));
        }
        let mut flags = vec![false; length];
        flags[..valid].fill(true);
        Ok(Mask { flags })
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    #[inline]
    pub fn is_valid(&self, t: usize) -> bool {
        self.flags[t]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn valid_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_shape() {
        let err = Tensor2::<f64>::from_vec(2, 3, vec![0.0; 5]).unwrap_err();
        assert!(err.to_string().contains("5 entries"));
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        let err = Tensor2::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("not finite"));
    }

    #[test]
    fn rows_are_channel_major() {
        let t = Tensor2::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(t.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(t.get(1, 2), 6.0);
    }

    #[test]
    fn zero_padding_keeps_prefix() {
        let t = Tensor2::from_vec(1, 2, vec![7.0, 8.0]).unwrap();
        let p = t.zero_padded(4).unwrap();
        assert_eq!(p.row(0), &[7.0, 8.0, 0.0, 0.0]);
    }

    #[test]
    fn mask_requires_one_valid_flag() {
        assert!(Mask::new(vec![false, false]).is_err());
        let m = Mask::valid_prefix(2, 4).unwrap();
        assert_eq!(m.valid_count(), 2);
        assert!(m.is_valid(1));
        assert!(!m.is_valid(2));
    }
}
