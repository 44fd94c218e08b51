//! Audio-visual spiking neural network simulation.
//!
//! Images are rate coded, spectrograms are latency coded, and both drive a
//! single layer of leaky integrate-and-fire neurons. The layer learns with
//! modality-specific STDP rules, and classification fuses two masked passes
//! with accuracy-proportional bias terms.
//!
//! Module map:
//! - [`time`], [`spikes`], [`rng`]: time discretization, spike trains, seeds
//! - [`encoding`]: rate, time-to-first-spike and spectrogram front ends
//! - [`neuron`]: synapse matrices and LIF dynamics
//! - [`plasticity`]: STDP kernels and the combined weight update
//! - [`network`]: training, class assignment, masking, bias and decoding
//! - [`cli`]: file formats, synthetic data and the command-line workflow

pub mod cli;
pub mod encoding;
pub mod error;
pub mod network;
pub mod neuron;
pub mod plasticity;
pub mod rng;
pub mod spikes;
pub mod time;

pub use error::{Error, Result};
pub use rng::RngSeed;
pub use spikes::{spike_count, ModalSpikeTrains, Modality, SpikeTrain};
pub use time::{build_time_grid, TimeGrid};
