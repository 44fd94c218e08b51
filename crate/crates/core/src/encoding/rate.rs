use rand::Rng;

use super::{snap, IntensityGrid};
use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::spikes::{ModalSpikeTrains, Modality, SpikeTrain};
use crate::time::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateMode {
    /// Evenly spaced spikes starting at step 0.
    #[default]
    Periodic,
    /// Independent Bernoulli trial per step.
    Poisson,
}

/// Maps an intensity `p` in `[0, 1]` to a target rate `p * f_max_hz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEncoderConfig {
    pub f_max_hz: f64,
    pub mode: RateMode,
}

impl RateEncoderConfig {
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if !(self.f_max_hz.is_finite() && self.f_max_hz > 0.0) {
            return Err(Error::config("f_max_hz", format!("must be positive, got {}", self.f_max_hz)));
        }
        let ceiling = 1000.0 / grid.dt_ms();
        if self.f_max_hz > ceiling {
            return Err(Error::config(
                "f_max_hz",
                format!(
                    "{} Hz exceeds one spike per {} ms step ({ceiling} Hz)",
                    self.f_max_hz,
                    grid.dt_ms()
                ),
            ));
        }
        Ok(())
    }
}

/// Rate-codes every pixel of `image` into a spike train on `grid`.
///
/// Periodic mode places spikes at `floor(k * period_steps)` for every k whose
/// spike time `k * period` falls inside the window, and ignores `seed`.
/// Poisson mode fires each step with probability `min(1, r * dt / 1000)`,
/// drawing from a generator seeded by `seed`.
pub fn rate_encode(
    image: &IntensityGrid,
    cfg: &RateEncoderConfig,
    grid: &TimeGrid,
    seed: RngSeed,
) -> Result<ModalSpikeTrains> {
    image.validate()?;
    cfg.validate(grid)?;
    let trains = match cfg.mode {
        RateMode::Periodic => image
            .values()
            .iter()
            .map(|&p| periodic_train(p * cfg.f_max_hz, grid))
            .collect(),
        RateMode::Poisson => {
            let mut rng = seed.rng();
            image
                .values()
                .iter()
                .map(|&p| {
                    let prob = (p * cfg.f_max_hz * grid.dt_ms() / 1000.0).min(1.0);
                    let steps = (0..grid.n_steps())
                        .filter(|_| rng.random::<f64>() < prob)
                        .collect();
                    SpikeTrain::from_sorted_unchecked(steps)
                })
                .collect()
        }
    };
    Ok(ModalSpikeTrains::new_unchecked(Modality::Image, trains, *grid))
}

fn periodic_train(rate_hz: f64, grid: &TimeGrid) -> SpikeTrain {
    if rate_hz <= 0.0 {
        return SpikeTrain::empty();
    }
    let period_steps = 1000.0 / (rate_hz * grid.dt_ms());
    let window_steps = snap(grid.duration_ms() / grid.dt_ms());
    let mut steps = Vec::new();
    for k in 0.. {
        let x = snap(k as f64 * period_steps);
        if x >= window_steps {
            break;
        }
        steps.push(x.floor() as usize);
    }
    SpikeTrain::from_sorted_unchecked(steps)
}
