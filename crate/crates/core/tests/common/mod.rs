//! Fixtures and independent reference computations shared by the
//! integration suites.

#![allow(dead_code)]

use avsnn::cli::config::RunConfig;
use avsnn::cli::{generate_splits, train_network};
use avsnn::encoding::{IntensityGrid, RateEncoderConfig, RateMode, TtfsEncoderConfig};
use avsnn::network::{EncoderConfigs, MultimodalNetwork, Sample};
use avsnn::neuron::{LifParams, SpikeRecord, SynapseMatrix};
use avsnn::{Modality, ModalSpikeTrains, SpikeTrain, TimeGrid};

pub fn grid(duration_ms: f64, dt_ms: f64) -> TimeGrid {
    TimeGrid::new(duration_ms, dt_ms).unwrap()
}

pub fn rel_close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(f64::MIN_POSITIVE)
}

pub fn periodic_encoders() -> EncoderConfigs {
    EncoderConfigs {
        rate: RateEncoderConfig {
            f_max_hz: 100.0,
            mode: RateMode::Periodic,
        },
        ttfs: TtfsEncoderConfig {
            theta0: 1.0,
            tau_th_ms: 20.0,
        },
    }
}

pub fn matrix(modality: Modality, n_pre: usize, n_post: usize, w: &[f32], lo: f32, hi: f32) -> SynapseMatrix {
    SynapseMatrix::new(modality, n_pre, n_post, w.to_vec(), lo, hi).unwrap()
}

pub fn trains(modality: Modality, steps: &[&[usize]], g: TimeGrid) -> ModalSpikeTrains {
    let t = steps.iter().map(|s| SpikeTrain::new(s.to_vec(), &g).unwrap()).collect();
    ModalSpikeTrains::new(modality, t, g).unwrap()
}

pub fn record(steps: &[&[usize]], g: TimeGrid) -> SpikeRecord {
    SpikeRecord {
        trains: steps.iter().map(|s| SpikeTrain::new(s.to_vec(), &g).unwrap()).collect(),
        membrane_trace: None,
        grid: g,
    }
}

pub fn sample(h: usize, w: usize, image: &[f64], sh: usize, sw: usize, audio: &[f64], label: Option<u32>) -> Sample {
    Sample {
        image: IntensityGrid::new(h, w, image.to_vec()).unwrap(),
        audio: IntensityGrid::new(sh, sw, audio.to_vec()).unwrap(),
        label,
    }
}

/// Periodic rate placement written out directly: `floor(k * 1000 / (r dt))`
/// for every spike time `k * 1000 / r` below the window length.
pub fn periodic_steps(p: f64, f_max_hz: f64, g: &TimeGrid) -> Vec<usize> {
    let rate = p * f_max_hz;
    if rate == 0.0 {
        return Vec::new();
    }
    let period_steps = 1000.0 / (rate * g.dt_ms());
    let mut out = Vec::new();
    let mut k = 0.0;
    while k * period_steps * g.dt_ms() < g.duration_ms() - 1e-9 {
        out.push((k * period_steps + 1e-9).floor() as usize);
        k += 1.0;
    }
    out
}

/// First grid step where `x >= theta0 exp(-t / tau)`, scanning the grid.
pub fn ttfs_scan(x: f64, theta0: f64, tau_ms: f64, g: &TimeGrid) -> Option<usize> {
    if x <= 0.0 {
        return None;
    }
    (0..g.n_steps()).find(|&s| x >= theta0 * (-g.time_ms(s) / tau_ms).exp() * (1.0 - 1e-12))
}

/// Single-neuron LIF run from rest over precomputed per-step currents.
/// Returns the spike steps.
pub fn scalar_lif(currents: &[f64], p: &LifParams, dt_ms: f64) -> Vec<usize> {
    let k = dt_ms / p.tau_m_ms;
    let mut v = p.v_reset;
    let mut refractory = 0u32;
    let mut spikes = Vec::new();
    for (t, &i) in currents.iter().enumerate() {
        if refractory > 0 {
            refractory -= 1;
            v = p.v_reset;
            continue;
        }
        v += k * (i - v);
        if v >= p.v_th {
            spikes.push(t);
            v = p.v_reset;
            refractory = p.refractory_steps;
        }
    }
    spikes
}

/// Per-step input current of post-neuron `j`, computed from trains and
/// weights with explicit loops.
pub fn currents_for(
    j: usize,
    im: &ModalSpikeTrains,
    w_im: &SynapseMatrix,
    au: &ModalSpikeTrains,
    w_au: &SynapseMatrix,
    n_steps: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; n_steps];
    for (t, c) in out.iter_mut().enumerate() {
        let mut a = 0.0;
        for (i, tr) in im.trains().iter().enumerate() {
            if tr.steps().contains(&t) {
                a += f64::from(w_im.get(i, j));
            }
        }
        let mut b = 0.0;
        for (i, tr) in au.trains().iter().enumerate() {
            if tr.steps().contains(&t) {
                b += f64::from(w_au.get(i, j));
            }
        }
        *c = a + b;
    }
    out
}

/// Small config used for fixtures that need a trained network quickly.
pub fn toy_config() -> RunConfig {
    RunConfig {
        seed: 5,
        n_neurons: 24,
        samples_per_class: 8,
        eval_samples_per_class: 6,
        image_h: 8,
        image_w: 8,
        spect_h: 8,
        spect_w: 8,
        epochs: 2,
        ..RunConfig::default()
    }
}

pub struct Trained {
    pub cfg: RunConfig,
    pub net: MultimodalNetwork,
    pub train: Vec<Sample>,
    pub eval: Vec<Sample>,
}

pub fn trained(cfg: RunConfig) -> Trained {
    let (train_set, eval_set) = generate_splits(&cfg).unwrap();
    let net = train_network(&cfg, &train_set).unwrap();
    Trained {
        cfg,
        net,
        train: train_set.samples,
        eval: eval_set.unwrap().samples,
    }
}
