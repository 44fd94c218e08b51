//! Leaky integrate-and-fire layer driven by an image and an audio synapse matrix.
//!
//! The membrane obeys `tau_m dV/dt = -V + I_im + I_au` integrated with forward
//! Euler on the [`TimeGrid`]. A neuron spikes when `V >= v_th`, is reset to
//! `v_reset` and then sits out `refractory_steps` steps. Audio spikes are unit
//! impulses on their step and pass through the same `dt / tau_m` scaling as
//! image spikes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::spikes::{ModalSpikeTrains, Modality, SpikeTrain};
use crate::time::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    pub tau_m_ms: f64,
    pub v_th: f64,
    pub v_reset: f64,
    pub refractory_steps: u32,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau_m_ms: 10.0,
            v_th: 1.0,
            v_reset: 0.0,
            refractory_steps: 0,
        }
    }
}

impl LifParams {
    /// Checks parameter ranges and the Euler stability guard `dt <= tau_m / 10`.
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if !(self.tau_m_ms.is_finite() && self.tau_m_ms > 0.0) {
            return Err(Error::config("tau_m_ms", format!("must be positive, got {}", self.tau_m_ms)));
        }
        if !(self.v_th.is_finite() && self.v_reset.is_finite() && self.v_th > self.v_reset) {
            return Err(Error::config(
                "v_th",
                format!("threshold {} must exceed reset {}", self.v_th, self.v_reset),
            ));
        }
        if grid.dt_ms() > self.tau_m_ms / 10.0 {
            return Err(Error::config(
                "dt_ms",
                format!(
                    "step {} ms is larger than tau_m / 10 = {} ms",
                    grid.dt_ms(),
                    self.tau_m_ms / 10.0
                ),
            ));
        }
        Ok(())
    }
}

/// Dense `n_pre x n_post` weights, stored pre-major (row `i` holds the
/// outgoing weights of input `i`). Every weight stays within `[w_min, w_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseMatrix {
    modality: Modality,
    n_pre: usize,
    n_post: usize,
    weights: Vec<f32>,
    w_min: f32,
    w_max: f32,
}

impl SynapseMatrix {
    pub fn new(
        modality: Modality,
        n_pre: usize,
        n_post: usize,
        weights: Vec<f32>,
        w_min: f32,
        w_max: f32,
    ) -> Result<Self> {
        check_bounds(w_min, w_max)?;
        if weights.len() != n_pre * n_post {
            return Err(Error::Structural(format!(
                "{modality} matrix {n_pre}x{n_post} needs {} weights, got {}",
                n_pre * n_post,
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w_min..=w_max).contains(w)) {
            return Err(Error::Validation(format!(
                "{modality} weight ({}, {}) = {} outside [{w_min}, {w_max}]",
                i / n_post.max(1),
                i % n_post.max(1),
                weights[i]
            )));
        }
        Ok(Self {
            modality,
            n_pre,
            n_post,
            weights,
            w_min,
            w_max,
        })
    }

    /// Every weight set to `value`, which must lie within the bounds.
    pub fn filled(
        modality: Modality,
        n_pre: usize,
        n_post: usize,
        value: f32,
        w_min: f32,
        w_max: f32,
    ) -> Result<Self> {
        Self::new(modality, n_pre, n_post, vec![value; n_pre * n_post], w_min, w_max)
    }

    /// Uniform random weights in the middle fifth of the range,
    /// `[w_min + 0.4 r, w_min + 0.6 r]`.
    pub fn random_init(
        modality: Modality,
        n_pre: usize,
        n_post: usize,
        w_min: f32,
        w_max: f32,
        seed: RngSeed,
    ) -> Result<Self> {
        check_bounds(w_min, w_max)?;
        let range = f64::from(w_max) - f64::from(w_min);
        let lo = f64::from(w_min) + 0.4 * range;
        let hi = f64::from(w_min) + 0.6 * range;
        let mut rng = seed.rng();
        let weights = (0..n_pre * n_post)
            .map(|_| (rng.random_range(lo..=hi) as f32).clamp(w_min, w_max))
            .collect();
        Self::new(modality, n_pre, n_post, weights, w_min, w_max)
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn n_pre(&self) -> usize {
        self.n_pre
    }

    pub fn n_post(&self) -> usize {
        self.n_post
    }

    pub fn w_min(&self) -> f32 {
        self.w_min
    }

    pub fn w_max(&self) -> f32 {
        self.w_max
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn get(&self, pre: usize, post: usize) -> f32 {
        self.weights[pre * self.n_post + post]
    }

    pub fn row(&self, pre: usize) -> &[f32] {
        &self.weights[pre * self.n_post..(pre + 1) * self.n_post]
    }

    /// Adds `delta` to a weight and clamps into the bounds.
    pub fn add_clamped(&mut self, pre: usize, post: usize, delta: f64) {
        let w = &mut self.weights[pre * self.n_post + post];
        let updated = (f64::from(*w) + delta) as f32;
        *w = updated.clamp(self.w_min, self.w_max);
    }

    /// Copy with every weight set to zero, clamped into the bounds.
    pub fn zeroed(&self) -> Self {
        let z = 0.0f32.clamp(self.w_min, self.w_max);
        Self {
            weights: vec![z; self.weights.len()],
            ..self.clone()
        }
    }
}

fn check_bounds(w_min: f32, w_max: f32) -> Result<()> {
    if !(w_min.is_finite() && w_max.is_finite() && w_min < w_max) {
        return Err(Error::config(
            "w_min",
            format!("weight bounds [{w_min}, {w_max}] must be finite with w_min < w_max"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifLayerState {
    pub v: Vec<f64>,
    pub refrac_remaining: Vec<u32>,
}

impl LifLayerState {
    /// Every neuron at `v_reset`, none refractory.
    pub fn resting(n_post: usize, params: &LifParams) -> Self {
        Self {
            v: vec![params.v_reset; n_post],
            refrac_remaining: vec![0; n_post],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// In-place form of [`lif_step`]. `spikes` is overwritten.
    pub fn step(
        &mut self,
        params: &LifParams,
        current: &[f64],
        grid: &TimeGrid,
        spikes: &mut [bool],
    ) -> Result<()> {
        let n = self.v.len();
        if current.len() != n || spikes.len() != n || self.refrac_remaining.len() != n {
            return Err(Error::Structural(format!(
                "layer of {n} neurons given {} currents and {} spike slots",
                current.len(),
                spikes.len()
            )));
        }
        if let Some(j) = current.iter().position(|c| !c.is_finite()) {
            return Err(Error::Numeric(format!(
                "input current to neuron {j} is {}",
                current[j]
            )));
        }
        let k = grid.dt_ms() / params.tau_m_ms;
        for j in 0..n {
            if self.refrac_remaining[j] > 0 {
                self.refrac_remaining[j] -= 1;
                self.v[j] = params.v_reset;
                spikes[j] = false;
                continue;
            }
            let v = self.v[j] + k * (current[j] - self.v[j]);
            if !v.is_finite() {
                return Err(Error::Numeric(format!("membrane of neuron {j} diverged to {v}")));
            }
            if v >= params.v_th {
                spikes[j] = true;
                self.v[j] = params.v_reset;
                self.refrac_remaining[j] = params.refractory_steps;
            } else {
                spikes[j] = false;
                self.v[j] = v;
            }
        }
        Ok(())
    }
}

/// Output of [`simulate_window`]: one train per post-synaptic neuron, and
/// optionally the membrane potential after every step (`trace[step][neuron]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRecord {
    pub trains: Vec<SpikeTrain>,
    pub membrane_trace: Option<Vec<Vec<f64>>>,
    pub grid: TimeGrid,
}

impl SpikeRecord {
    pub fn n_neurons(&self) -> usize {
        self.trains.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.trains.iter().map(SpikeTrain::len).collect()
    }

    pub fn total_spikes(&self) -> usize {
        self.trains.iter().map(SpikeTrain::len).sum()
    }

    pub fn is_silent(&self) -> bool {
        self.trains.iter().all(SpikeTrain::is_empty)
    }
}

fn check_pair(w_im: &SynapseMatrix, w_au: &SynapseMatrix) -> Result<()> {
    if w_im.n_post() != w_au.n_post() {
        return Err(Error::Structural(format!(
            "image matrix feeds {} neurons but audio matrix feeds {}",
            w_im.n_post(),
            w_au.n_post()
        )));
    }
    Ok(())
}

fn accumulate_rows<'a>(
    out: &mut [f64],
    w: &SynapseMatrix,
    active: impl IntoIterator<Item = &'a usize>,
) {
    out.iter_mut().for_each(|c| *c = 0.0);
    for &i in active {
        for (c, &wij) in out.iter_mut().zip(w.row(i)) {
            *c += f64::from(wij);
        }
    }
}

/// Summed synaptic drive of one step:
/// `I_j = sum_i w_im[i][j] s_im[i] + sum_i w_au[i][j] s_au[i]`.
///
/// The two modality sums are formed separately and added last, so the result
/// is exactly the sum of the image-only and audio-only currents.
pub fn gather_current(
    w_im: &SynapseMatrix,
    spikes_im: &[bool],
    w_au: &SynapseMatrix,
    spikes_au: &[bool],
) -> Result<Vec<f64>> {
    check_pair(w_im, w_au)?;
    for (w, s) in [(w_im, spikes_im), (w_au, spikes_au)] {
        if s.len() != w.n_pre() {
            return Err(Error::Structural(format!(
                "{} indicator has {} entries but the matrix has {} inputs",
                w.modality(),
                s.len(),
                w.n_pre()
            )));
        }
    }
    let active = |s: &[bool]| -> Vec<usize> {
        s.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    };
    let n = w_im.n_post();
    let mut im = vec![0.0; n];
    let mut au = vec![0.0; n];
    accumulate_rows(&mut im, w_im, &active(spikes_im));
    accumulate_rows(&mut au, w_au, &active(spikes_au));
    Ok(im.iter().zip(&au).map(|(a, b)| a + b).collect())
}

/// One Euler step of the layer; returns the new state and the spike indicator.
pub fn lif_step(
    state: &LifLayerState,
    params: &LifParams,
    current: &[f64],
    grid: &TimeGrid,
) -> Result<(LifLayerState, Vec<bool>)> {
    params.validate(grid)?;
    let mut next = state.clone();
    let mut spikes = vec![false; state.len()];
    next.step(params, current, grid, &mut spikes)?;
    Ok((next, spikes))
}

/// Runs the layer over the whole window from rest.
pub fn simulate_window(
    w_im: &SynapseMatrix,
    w_au: &SynapseMatrix,
    params: &LifParams,
    inputs_im: &ModalSpikeTrains,
    inputs_au: &ModalSpikeTrains,
    grid: &TimeGrid,
    record_v: bool,
) -> Result<SpikeRecord> {
    check_pair(w_im, w_au)?;
    params.validate(grid)?;
    for (w, x) in [(w_im, inputs_im), (w_au, inputs_au)] {
        if x.n_inputs() != w.n_pre() {
            return Err(Error::Structural(format!(
                "{} input has {} trains but the matrix has {} inputs",
                w.modality(),
                x.n_inputs(),
                w.n_pre()
            )));
        }
        if x.grid() != grid {
            return Err(Error::Structural(format!(
                "{} input was encoded on a different time grid",
                w.modality()
            )));
        }
    }

    let n_post = w_im.n_post();
    let active_im = inputs_im.active_by_step();
    let active_au = inputs_au.active_by_step();
    let mut state = LifLayerState::resting(n_post, params);
    let mut im = vec![0.0; n_post];
    let mut au = vec![0.0; n_post];
    let mut current = vec![0.0; n_post];
    let mut fired = vec![false; n_post];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n_post];
    let mut trace = record_v.then(|| Vec::with_capacity(grid.n_steps()));

    for step in 0..grid.n_steps() {
        accumulate_rows(&mut im, w_im, &active_im[step]);
        accumulate_rows(&mut au, w_au, &active_au[step]);
        for ((c, a), b) in current.iter_mut().zip(&im).zip(&au) {
            *c = a + b;
        }
        state.step(params, &current, grid, &mut fired)?;
        for (j, _) in fired.iter().enumerate().filter(|(_, &f)| f) {
            out[j].push(step);
        }
        if let Some(t) = trace.as_mut() {
            t.push(state.v.clone());
        }
    }

    Ok(SpikeRecord {
        trains: out.into_iter().map(SpikeTrain::from_sorted_unchecked).collect(),
        membrane_trace: trace,
        grid: *grid,
    })
}
