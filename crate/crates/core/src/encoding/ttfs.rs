use super::{snap, IntensityGrid};
use crate::error::{Error, Result};
use crate::spikes::{ModalSpikeTrains, Modality, SpikeTrain};
use crate::time::TimeGrid;

/// Threshold `theta0 * exp(-t / tau_th_ms)` decaying from `theta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtfsEncoderConfig {
    pub theta0: f64,
    pub tau_th_ms: f64,
}

impl TtfsEncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta0.is_finite() && self.theta0 > 0.0) {
            return Err(Error::config("theta0", format!("must be positive, got {}", self.theta0)));
        }
        if !(self.tau_th_ms.is_finite() && self.tau_th_ms > 0.0) {
            return Err(Error::config(
                "tau_th_ms",
                format!("must be positive, got {}", self.tau_th_ms),
            ));
        }
        Ok(())
    }
}

/// First step at which `x` reaches the decaying threshold, if inside the window.
///
/// Values at or above `theta0` fire at step 0. Otherwise the crossing time
/// `tau_th * ln(theta0 / x)` is rounded up to the grid, since a spike cannot
/// precede the crossing.
pub fn ttfs_spike_step(x: f64, cfg: &TtfsEncoderConfig, grid: &TimeGrid) -> Option<usize> {
    if x <= 0.0 {
        return None;
    }
    if x >= cfg.theta0 {
        return Some(0);
    }
    let t_cross = cfg.tau_th_ms * (cfg.theta0 / x).ln();
    let step = snap(t_cross / grid.dt_ms()).ceil();
    (step < grid.n_steps() as f64).then_some(step as usize)
}

/// Latency-codes every cell of `spectrogram`: at most one spike per cell.
pub fn ttfs_encode(
    spectrogram: &IntensityGrid,
    cfg: &TtfsEncoderConfig,
    grid: &TimeGrid,
) -> Result<ModalSpikeTrains> {
    spectrogram.validate()?;
    cfg.validate()?;
    let trains = spectrogram
        .values()
        .iter()
        .map(|&x| match ttfs_spike_step(x, cfg, grid) {
            Some(s) => SpikeTrain::from_sorted_unchecked(vec![s]),
            None => SpikeTrain::empty(),
        })
        .collect();
    Ok(ModalSpikeTrains::new_unchecked(Modality::Audio, trains, *grid))
}
