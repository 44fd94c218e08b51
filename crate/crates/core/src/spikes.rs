//! Spike-train representation shared by encoders, dynamics and plasticity.

use std::fmt;

use crate::error::{Error, Result};
use crate::time::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Image,
    Audio,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Image => f.write_str("image"),
            Modality::Audio => f.write_str("audio"),
        }
    }
}

/// Strictly increasing step indices at which one neuron fired.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SpikeTrain {
    steps: Vec<usize>,
}

impl SpikeTrain {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a train, rejecting unsorted, duplicated or out-of-window steps.
    pub fn new(steps: Vec<usize>, grid: &TimeGrid) -> Result<Self> {
        let train = SpikeTrain { steps };
        train.validate(grid)?;
        Ok(train)
    }

    /// Caller guarantees monotonicity and range.
    pub(crate) fn from_sorted_unchecked(steps: Vec<usize>) -> Self {
        debug_assert!(steps.windows(2).all(|w| w[0] < w[1]));
        SpikeTrain { steps }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if let Some(w) = self.steps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "spike steps must be strictly increasing, found {} followed by {}",
                w[0], w[1]
            )));
        }
        if let Some(&last) = self.steps.last() {
            if last >= grid.n_steps() {
                return Err(Error::Validation(format!(
                    "spike at step {last} lies outside a window of {} steps",
                    grid.n_steps()
                )));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Mean firing rate in Hz over the window: count / T.
    pub fn rate_hz(&self, grid: &TimeGrid) -> f64 {
        self.len() as f64 / grid.duration_s()
    }
}

/// Number of spikes in `train`; divided by the window length it is the
/// count-rate of the neuron.
pub fn spike_count(train: &SpikeTrain, _window: &TimeGrid) -> usize {
    train.len()
}

/// One spike train per input neuron of a modality, all on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSpikeTrains {
    modality: Modality,
    trains: Vec<SpikeTrain>,
    grid: TimeGrid,
}

impl ModalSpikeTrains {
    pub fn new(modality: Modality, trains: Vec<SpikeTrain>, grid: TimeGrid) -> Result<Self> {
        for (i, t) in trains.iter().enumerate() {
            t.validate(&grid)
                .map_err(|e| Error::Validation(format!("{modality} input {i}: {e}")))?;
        }
        Ok(Self {
            modality,
            trains,
            grid,
        })
    }

    pub(crate) fn new_unchecked(modality: Modality, trains: Vec<SpikeTrain>, grid: TimeGrid) -> Self {
        Self {
            modality,
            trains,
            grid,
        }
    }

    /// All-silent input of the given width (a masked modality).
    pub fn silent(modality: Modality, n_inputs: usize, grid: TimeGrid) -> Self {
        Self {
            modality,
            trains: vec![SpikeTrain::empty(); n_inputs],
            grid,
        }
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn trains(&self) -> &[SpikeTrain] {
        &self.trains
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_inputs(&self) -> usize {
        self.trains.len()
    }

    pub fn total_spikes(&self) -> usize {
        self.trains.iter().map(SpikeTrain::len).sum()
    }

    /// For every step, the indices of inputs that fire on it.
    pub fn active_by_step(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.grid.n_steps()];
        for (i, train) in self.trains.iter().enumerate() {
            for &s in train.steps() {
                out[s].push(i);
            }
        }
        out
    }
}
