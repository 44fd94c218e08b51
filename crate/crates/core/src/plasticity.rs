//! Spike-timing-dependent plasticity for the two input pathways.
//!
//! Image synapses follow a classic exponential window with separate
//! potentiation and depression constants. Audio synapses use a single decay
//! constant and are scaled by `(1 - t_post / T)`, so late post-synaptic spikes
//! learn less. Both windows decay with `|dt|` on either side and are zero for
//! coincident spikes.

use crate::error::{Error, Result};
use crate::neuron::{SpikeRecord, SynapseMatrix};
use crate::spikes::{ModalSpikeTrains, Modality, SpikeTrain};
use crate::time::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus_ms: f64,
    pub tau_minus_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalStdpParams {
    pub b_plus: f64,
    pub b_minus: f64,
    pub tau_minus_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// One pair per post spike, with the closest pre spike (earlier on ties).
    #[default]
    NearestNeighbor,
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedUpdateParams {
    pub eta_im: f64,
    pub eta_au: f64,
    pub pairing: Pairing,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive, got {v}")))
    }
}

impl RateStdpParams {
    pub fn validate(&self) -> Result<()> {
        positive("a_plus", self.a_plus)?;
        positive("a_minus", self.a_minus)?;
        positive("tau_plus_ms", self.tau_plus_ms)?;
        positive("tau_minus_ms", self.tau_minus_ms)
    }
}

impl TemporalStdpParams {
    pub fn validate(&self) -> Result<()> {
        positive("b_plus", self.b_plus)?;
        positive("b_minus", self.b_minus)?;
        positive("temporal_tau_minus_ms", self.tau_minus_ms)
    }
}

impl CombinedUpdateParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("eta_im", self.eta_im), ("eta_au", self.eta_au)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// `delta_t_ms = t_post - t_pre`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikePair {
    pub delta_t_ms: f64,
    pub t_post_ms: f64,
}

/// Pairs the spikes of one synapse under `policy`.
pub fn pair_spikes(
    pre: &SpikeTrain,
    post: &SpikeTrain,
    policy: Pairing,
    grid: &TimeGrid,
) -> Vec<SpikePair> {
    let mut out = Vec::new();
    for_each_pair(pre.steps(), post.steps(), policy, |pre_s, post_s| {
        out.push(SpikePair {
            delta_t_ms: grid.time_ms(post_s) - grid.time_ms(pre_s),
            t_post_ms: grid.time_ms(post_s),
        })
    });
    out
}

fn for_each_pair(pre: &[usize], post: &[usize], policy: Pairing, mut f: impl FnMut(usize, usize)) {
    if pre.is_empty() {
        return;
    }
    match policy {
        Pairing::AllPairs => {
            for &q in post {
                for &p in pre {
                    f(p, q);
                }
            }
        }
        Pairing::NearestNeighbor => {
            for &q in post {
                let idx = pre.partition_point(|&p| p < q);
                let nearest = match (idx.checked_sub(1).map(|i| pre[i]), pre.get(idx).copied()) {
                    (Some(before), Some(after)) => {
                        if q - before <= after - q {
                            before
                        } else {
                            after
                        }
                    }
                    (Some(before), None) => before,
                    (None, Some(after)) => after,
                    (None, None) => unreachable!(),
                };
                f(nearest, q);
            }
        }
    }
}

/// Weight change for the rate-coded pathway.
pub fn rate_stdp_delta(delta_t_ms: f64, params: &RateStdpParams) -> f64 {
    if delta_t_ms > 0.0 {
        params.a_plus * (-delta_t_ms / params.tau_plus_ms).exp()
    } else if delta_t_ms < 0.0 {
        -params.a_minus * (-delta_t_ms.abs() / params.tau_minus_ms).exp()
    } else {
        0.0
    }
}

/// Weight change for the latency-coded pathway.
pub fn temporal_stdp_delta(
    delta_t_ms: f64,
    t_post_ms: f64,
    params: &TemporalStdpParams,
    grid: &TimeGrid,
) -> f64 {
    let scale = 1.0 - t_post_ms / grid.duration_ms();
    let decay = (-delta_t_ms.abs() / params.tau_minus_ms).exp();
    if delta_t_ms > 0.0 {
        params.b_plus * scale * decay
    } else if delta_t_ms < 0.0 {
        -params.b_minus * scale * decay
    } else {
        0.0
    }
}

fn check_dims(w: &SynapseMatrix, pre: &ModalSpikeTrains, post: &SpikeRecord, m: Modality) -> Result<()> {
    if w.modality() != m || pre.modality() != m {
        return Err(Error::Structural(format!(
            "expected {m} matrix and trains, got {} and {}",
            w.modality(),
            pre.modality()
        )));
    }
    if w.n_pre() != pre.n_inputs() || w.n_post() != post.n_neurons() {
        return Err(Error::Structural(format!(
            "{m} matrix is {}x{} but there are {} pre and {} post trains",
            w.n_pre(),
            w.n_post(),
            pre.n_inputs(),
            post.n_neurons()
        )));
    }
    Ok(())
}

/// Applies one window's worth of STDP to both matrices.
///
/// Each synapse belongs to exactly one modality, so its change is its own
/// modality's kernel summed over its spike pairs, scaled by that modality's
/// learning rate. Updated weights are clamped into the matrix bounds.
#[allow(clippy::too_many_arguments)]
pub fn apply_combined_update(
    w_im: &SynapseMatrix,
    w_au: &SynapseMatrix,
    pre_im: &ModalSpikeTrains,
    pre_au: &ModalSpikeTrains,
    post: &SpikeRecord,
    rate_params: &RateStdpParams,
    temp_params: &TemporalStdpParams,
    comb: &CombinedUpdateParams,
    grid: &TimeGrid,
) -> Result<(SynapseMatrix, SynapseMatrix)> {
    check_dims(w_im, pre_im, post, Modality::Image)?;
    check_dims(w_au, pre_au, post, Modality::Audio)?;
    rate_params.validate()?;
    temp_params.validate()?;
    comb.validate()?;

    let mut new_im = w_im.clone();
    let mut new_au = w_au.clone();
    if comb.eta_im != 0.0 {
        let sums = kernel_sums(pre_im, post, comb.pairing, |pre_s, post_s| {
            rate_stdp_delta(grid.time_ms(post_s) - grid.time_ms(pre_s), rate_params)
        });
        apply_scaled(&mut new_im, &sums, comb.eta_im);
    }
    if comb.eta_au != 0.0 {
        let sums = kernel_sums(pre_au, post, comb.pairing, |pre_s, post_s| {
            let t_post = grid.time_ms(post_s);
            temporal_stdp_delta(t_post - grid.time_ms(pre_s), t_post, temp_params, grid)
        });
        apply_scaled(&mut new_au, &sums, comb.eta_au);
    }
    Ok((new_im, new_au))
}

/// Per-synapse sum of `kernel(pre_step, post_step)` over all pairs, pre-major.
fn kernel_sums(
    pre: &ModalSpikeTrains,
    post: &SpikeRecord,
    pairing: Pairing,
    kernel: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let n_post = post.n_neurons();
    let mut sums = vec![0.0; pre.n_inputs() * n_post];
    for (j, post_train) in post.trains.iter().enumerate() {
        if post_train.is_empty() {
            continue;
        }
        for (i, pre_train) in pre.trains().iter().enumerate() {
            let mut sum = 0.0;
            for_each_pair(pre_train.steps(), post_train.steps(), pairing, |a, b| {
                sum += kernel(a, b)
            });
            sums[i * n_post + j] = sum;
        }
    }
    sums
}

fn apply_scaled(w: &mut SynapseMatrix, sums: &[f64], eta: f64) {
    let n_post = w.n_post();
    for (idx, &s) in sums.iter().enumerate() {
        if s != 0.0 {
            w.add_clamped(idx / n_post, idx % n_post, eta * s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(100.0, 1.0).unwrap()
    }

    fn train(steps: &[usize]) -> SpikeTrain {
        SpikeTrain::new(steps.to_vec(), &grid()).unwrap()
    }

    const RATE: RateStdpParams = RateStdpParams {
        a_plus: 0.01,
        a_minus: 0.012,
        tau_plus_ms: 20.0,
        tau_minus_ms: 20.0,
    };
    const TEMP: TemporalStdpParams = TemporalStdpParams {
        b_plus: 0.01,
        b_minus: 0.01,
        tau_minus_ms: 20.0,
    };

    #[test]
    fn pairing_cases() {
        let g = grid();
        assert!(pair_spikes(&train(&[]), &train(&[5]), Pairing::NearestNeighbor, &g).is_empty());
        assert!(pair_spikes(&train(&[5]), &train(&[]), Pairing::AllPairs, &g).is_empty());
        assert_eq!(
            pair_spikes(&train(&[10]), &train(&[30]), Pairing::NearestNeighbor, &g),
            vec![SpikePair { delta_t_ms: 20.0, t_post_ms: 30.0 }]
        );
        assert_eq!(
            pair_spikes(&train(&[10, 25]), &train(&[30]), Pairing::NearestNeighbor, &g),
            vec![SpikePair { delta_t_ms: 5.0, t_post_ms: 30.0 }]
        );
        let all = pair_spikes(&train(&[10, 25]), &train(&[30]), Pairing::AllPairs, &g);
        assert_eq!(
            all,
            vec![
                SpikePair { delta_t_ms: 20.0, t_post_ms: 30.0 },
                SpikePair { delta_t_ms: 5.0, t_post_ms: 30.0 }
            ]
        );
    }

    #[test]
    fn nearest_neighbor_ties_prefer_earlier_pre() {
        let p = pair_spikes(&train(&[10, 30]), &train(&[20]), Pairing::NearestNeighbor, &grid());
        assert_eq!(p, vec![SpikePair { delta_t_ms: 10.0, t_post_ms: 20.0 }]);
        // pre after post only
        let p = pair_spikes(&train(&[40]), &train(&[20]), Pairing::NearestNeighbor, &grid());
        assert_eq!(p[0].delta_t_ms, -20.0);
    }

    #[test]
    fn pairs_use_physical_time() {
        let g = TimeGrid::new(10.0, 0.5).unwrap();
        let pre = SpikeTrain::new(vec![2], &g).unwrap();
        let post = SpikeTrain::new(vec![6], &g).unwrap();
        let p = pair_spikes(&pre, &post, Pairing::NearestNeighbor, &g);
        assert_eq!(p, vec![SpikePair { delta_t_ms: 2.0, t_post_ms: 3.0 }]);
    }

    #[test]
    fn rate_kernel_values() {
        assert_eq!(rate_stdp_delta(0.0, &RATE), 0.0);
        let e = (-1.0f64).exp();
        assert!((rate_stdp_delta(20.0, &RATE) - 0.01 * e).abs() <= 1e-9 * 0.01 * e);
        assert!((rate_stdp_delta(-20.0, &RATE) + 0.012 * e).abs() <= 1e-9 * 0.012 * e);
    }

    #[test]
    fn temporal_kernel_values() {
        let g = grid();
        let e = (-1.0f64).exp();
        assert_eq!(temporal_stdp_delta(5.0, 100.0, &TEMP, &g), 0.0);
        assert_eq!(temporal_stdp_delta(-5.0, 100.0, &TEMP, &g), 0.0);
        assert!((temporal_stdp_delta(20.0, 0.0, &TEMP, &g) - 0.01 * e).abs() <= 1e-9 * 0.01 * e);
        assert!((temporal_stdp_delta(-20.0, 50.0, &TEMP, &g) + 0.005 * e).abs() <= 1e-9 * 0.005 * e);
        assert_eq!(temporal_stdp_delta(0.0, 10.0, &TEMP, &g), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(RATE.validate().is_ok());
        assert!(RateStdpParams { a_plus: 0.0, ..RATE }.validate().is_err());
        assert!(TemporalStdpParams { tau_minus_ms: -1.0, ..TEMP }.validate().is_err());
        let comb = CombinedUpdateParams { eta_im: -0.1, eta_au: 1.0, pairing: Pairing::AllPairs };
        assert!(comb.validate().is_err());
    }
}
