//! Conversion of static images and spectrograms into spike trains.
//!
//! Images use count-rate coding, spectrograms use time-to-first-spike coding
//! against an exponentially decaying threshold. All grids are flattened
//! row-major, the same order used to index the rows of a
//! [`SynapseMatrix`](crate::neuron::SynapseMatrix).

mod rate;
mod spectrogram;
mod ttfs;

pub use rate::{rate_encode, RateEncoderConfig, RateMode};
pub use spectrogram::{compute_spectrogram, SpectrogramConfig};
pub use ttfs::{ttfs_encode, ttfs_spike_step, TtfsEncoderConfig};

use crate::error::{Error, Result};

/// Normalized 2-D intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl IntensityGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::Structural(format!(
                "{height}x{width} grid needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        let grid = Self {
            height,
            width,
            values,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    /// Checks every cell lies in `[0, 1]`, naming the first offender.
    pub fn validate(&self) -> Result<()> {
        match self.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            None => Ok(()),
            Some(idx) => Err(Error::Validation(format!(
                "intensity {} at row {}, column {} is outside [0, 1]",
                self.values[idx],
                idx / self.width.max(1),
                idx % self.width.max(1)
            ))),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Snap a ratio to the nearest integer when it is within rounding noise of one,
/// so that exact multiples survive floor/ceil.
pub(crate) fn snap(q: f64) -> f64 {
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(
            IntensityGrid::new(2, 2, vec![0.0; 3]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn names_offending_cell() {
        let err = IntensityGrid::new(2, 3, vec![0.0, 0.1, 0.2, 0.3, 1.5, 0.0])
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 1, column 1"), "{err}");
        assert!(IntensityGrid::new(1, 1, vec![f64::NAN]).is_err());
        assert!(IntensityGrid::new(1, 1, vec![-0.01]).is_err());
    }
}
