//! The audio-visual network: one LIF layer fed by both modalities, trained
//! with STDP and read out per class.
//!
//! Masking a modality silences all of its input trains. Evaluating with the
//! audio masked gives the image-only accuracy and vice versa. The two
//! accuracies are normalized into [`BiasTerms`] which weight the per-class
//! spike counts of two masked passes in [`biased_classify`].

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoding::{rate_encode, ttfs_encode, IntensityGrid, RateEncoderConfig, TtfsEncoderConfig};
use crate::error::{Error, Result};
use crate::neuron::{simulate_window, LifParams, SpikeRecord, SynapseMatrix};
use crate::plasticity::{apply_combined_update, CombinedUpdateParams, RateStdpParams, TemporalStdpParams};
use crate::rng::RngSeed;
use crate::spikes::{ModalSpikeTrains, Modality};
use crate::time::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalNetwork {
    pub w_im: SynapseMatrix,
    pub w_au: SynapseMatrix,
    pub lif: LifParams,
    pub grid: TimeGrid,
    class_of_neuron: Vec<Option<u32>>,
    n_classes: usize,
}

/// Sizes and weight bounds for a fresh network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkShape {
    pub n_image_inputs: usize,
    pub n_audio_inputs: usize,
    pub n_neurons: usize,
    pub w_im_bounds: (f32, f32),
    pub w_au_bounds: (f32, f32),
}

impl MultimodalNetwork {
    /// Randomly initialized, unassigned network.
    pub fn new(shape: &NetworkShape, lif: LifParams, grid: TimeGrid, seed: RngSeed) -> Result<Self> {
        if shape.n_neurons == 0 {
            return Err(Error::config("n_neurons", "must be at least 1"));
        }
        lif.validate(&grid)?;
        let w_im = SynapseMatrix::random_init(
            Modality::Image,
            shape.n_image_inputs,
            shape.n_neurons,
            shape.w_im_bounds.0,
            shape.w_im_bounds.1,
            seed.derive(0),
        )?;
        let w_au = SynapseMatrix::random_init(
            Modality::Audio,
            shape.n_audio_inputs,
            shape.n_neurons,
            shape.w_au_bounds.0,
            shape.w_au_bounds.1,
            seed.derive(1),
        )?;
        Self::from_parts(w_im, w_au, lif, grid, vec![None; shape.n_neurons], 0)
    }

    /// Reassembles a network, e.g. after loading from disk.
    pub fn from_parts(
        w_im: SynapseMatrix,
        w_au: SynapseMatrix,
        lif: LifParams,
        grid: TimeGrid,
        class_of_neuron: Vec<Option<u32>>,
        n_classes: usize,
    ) -> Result<Self> {
        if w_im.modality() != Modality::Image || w_au.modality() != Modality::Audio {
            return Err(Error::Structural("matrices must be (image, audio)".into()));
        }
        if w_im.n_post() != w_au.n_post() || class_of_neuron.len() != w_im.n_post() {
            return Err(Error::Structural(format!(
                "image matrix feeds {} neurons, audio matrix {}, class map covers {}",
                w_im.n_post(),
                w_au.n_post(),
                class_of_neuron.len()
            )));
        }
        if let Some(c) = class_of_neuron.iter().flatten().find(|&&c| c as usize >= n_classes) {
            return Err(Error::Validation(format!(
                "class label {c} is out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            w_im,
            w_au,
            lif,
            grid,
            class_of_neuron,
            n_classes,
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.w_im.n_post()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_of_neuron(&self) -> &[Option<u32>] {
        &self.class_of_neuron
    }

    pub fn is_assigned(&self) -> bool {
        self.n_classes > 0 && self.class_of_neuron.iter().all(Option::is_some)
    }

    fn require_assigned(&self) -> Result<()> {
        if self.is_assigned() {
            Ok(())
        } else {
            Err(Error::State("network has no neuron-to-class assignment yet".into()))
        }
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        if sample.image.len() != self.w_im.n_pre() || sample.audio.len() != self.w_au.n_pre() {
            return Err(Error::Structural(format!(
                "sample has {} image and {} audio values, network expects {} and {}",
                sample.image.len(),
                sample.audio.len(),
                self.w_im.n_pre(),
                self.w_au.n_pre()
            )));
        }
        Ok(())
    }

    /// Sums per-neuron spike counts into per-class totals.
    pub fn class_counts(&self, record: &SpikeRecord) -> Vec<u64> {
        let mut out = vec![0u64; self.n_classes];
        for (train, class) in record.trains.iter().zip(&self.class_of_neuron) {
            if let Some(c) = class {
                out[*c as usize] += train.len() as u64;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: IntensityGrid,
    /// Spectrogram, frequency on rows.
    pub audio: IntensityGrid,
    pub label: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    #[default]
    None,
    MaskImage,
    MaskAudio,
}

/// Encoder settings used for every forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfigs {
    pub rate: RateEncoderConfig,
    pub ttfs: TtfsEncoderConfig,
}

/// Learning-rule settings for [`train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub rate: RateStdpParams,
    pub temporal: TemporalStdpParams,
    pub combined: CombinedUpdateParams,
}

/// Fusion weights proportional to the unimodal accuracies; they sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasTerms {
    pub b_im: f64,
    pub b_au: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub mask: MaskMode,
    pub predictions: Vec<u32>,
}

/// Seed of the forward pass for sample `index` within a pass over a dataset.
pub fn sample_seed(seed: RngSeed, index: usize) -> RngSeed {
    seed.derive(index as u64)
}

/// Encodes both modalities, replacing a masked one with silent trains.
pub fn encode_sample(
    net: &MultimodalNetwork,
    sample: &Sample,
    mask: MaskMode,
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<(ModalSpikeTrains, ModalSpikeTrains)> {
    net.check_sample(sample)?;
    let im = if mask == MaskMode::MaskImage {
        ModalSpikeTrains::silent(Modality::Image, net.w_im.n_pre(), net.grid)
    } else {
        rate_encode(&sample.image, &enc.rate, &net.grid, seed)?
    };
    let au = if mask == MaskMode::MaskAudio {
        ModalSpikeTrains::silent(Modality::Audio, net.w_au.n_pre(), net.grid)
    } else {
        ttfs_encode(&sample.audio, &enc.ttfs, &net.grid)?
    };
    Ok((im, au))
}

pub fn forward(
    net: &MultimodalNetwork,
    sample: &Sample,
    mask: MaskMode,
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<SpikeRecord> {
    let (im, au) = encode_sample(net, sample, mask, enc, seed)?;
    simulate_window(&net.w_im, &net.w_au, &net.lif, &im, &au, &net.grid, false)
}

/// Unsupervised STDP training. Each epoch visits the samples in a
/// seed-shuffled order and updates the weights after every sample.
pub fn train(
    net: &MultimodalNetwork,
    dataset: &[Sample],
    cfg: &TrainConfig,
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<MultimodalNetwork> {
    if cfg.epochs == 0 {
        return Err(Error::config("epochs", "must be at least 1"));
    }
    if dataset.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    for s in dataset {
        net.check_sample(s)?;
    }
    cfg.rate.validate()?;
    cfg.temporal.validate()?;
    cfg.combined.validate()?;

    let mut net = net.clone();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..cfg.epochs {
        let epoch_seed = seed.derive(epoch as u64);
        order.shuffle(&mut epoch_seed.derive(u64::MAX).rng());
        for &idx in &order {
            let (im, au) = encode_sample(
                &net,
                &dataset[idx],
                MaskMode::None,
                enc,
                sample_seed(epoch_seed, idx),
            )?;
            let post = simulate_window(&net.w_im, &net.w_au, &net.lif, &im, &au, &net.grid, false)?;
            let (w_im, w_au) = apply_combined_update(
                &net.w_im,
                &net.w_au,
                &im,
                &au,
                &post,
                &cfg.rate,
                &cfg.temporal,
                &cfg.combined,
                &net.grid,
            )?;
            net.w_im = w_im;
            net.w_au = w_au;
        }
    }
    Ok(net)
}

fn labels(dataset: &[Sample], n_classes: usize) -> Result<Vec<usize>> {
    dataset
        .iter()
        .enumerate()
        .map(|(i, s)| match s.label {
            None => Err(Error::Validation(format!("sample {i} has no label"))),
            Some(l) if l as usize >= n_classes => Err(Error::Validation(format!(
                "sample {i} has label {l} but there are {n_classes} classes"
            ))),
            Some(l) => Ok(l as usize),
        })
        .collect()
}

/// Index of the largest value; values within a relative `1e-12` of the
/// running maximum count as ties and resolve to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let b = values[best];
        if v > b && (v - b) > 1e-12 * v.abs().max(b.abs()) {
            best = i;
        }
    }
    best
}

/// Labels every neuron with the class that drives it hardest on average.
///
/// Ties, including neurons that never fire, go to the lowest class id.
pub fn assign_classes(
    net: &MultimodalNetwork,
    dataset: &[Sample],
    n_classes: usize,
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<MultimodalNetwork> {
    if n_classes == 0 {
        return Err(Error::config("n_classes", "must be at least 1"));
    }
    let labels = labels(dataset, n_classes)?;
    let mut per_class = vec![0usize; n_classes];
    for &l in &labels {
        per_class[l] += 1;
    }
    if let Some(c) = per_class.iter().position(|&n| n == 0) {
        return Err(Error::config(
            "n_classes",
            format!("class {c} has no samples to assign neurons from"),
        ));
    }

    let n = net.n_neurons();
    let mut totals = vec![vec![0u64; n_classes]; n];
    for (i, (sample, &label)) in dataset.iter().zip(&labels).enumerate() {
        let rec = forward(net, sample, MaskMode::None, enc, sample_seed(seed, i))?;
        for (j, t) in rec.trains.iter().enumerate() {
            totals[j][label] += t.len() as u64;
        }
    }
    let class_of_neuron = totals
        .iter()
        .map(|row| {
            let means: Vec<f64> = row
                .iter()
                .zip(&per_class)
                .map(|(&s, &c)| s as f64 / c as f64)
                .collect();
            Some(argmax_lowest(&means) as u32)
        })
        .collect();
    MultimodalNetwork::from_parts(
        net.w_im.clone(),
        net.w_au.clone(),
        net.lif,
        net.grid,
        class_of_neuron,
        n_classes,
    )
}

/// Class whose neuron group fired most in `record`.
pub fn predict(net: &MultimodalNetwork, record: &SpikeRecord) -> Result<u32> {
    net.require_assigned()?;
    let counts: Vec<f64> = net.class_counts(record).iter().map(|&c| c as f64).collect();
    Ok(argmax_lowest(&counts) as u32)
}

pub fn evaluate(
    net: &MultimodalNetwork,
    dataset: &[Sample],
    mask: MaskMode,
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<EvalReport> {
    net.require_assigned()?;
    let labels = labels(dataset, net.n_classes())?;
    let mut predictions = Vec::with_capacity(dataset.len());
    for (i, sample) in dataset.iter().enumerate() {
        let rec = forward(net, sample, mask, enc, sample_seed(seed, i))?;
        predictions.push(predict(net, &rec)?);
    }
    Ok(EvalReport::from_predictions(&labels, predictions, net.n_classes(), mask))
}

impl EvalReport {
    pub fn from_predictions(
        labels: &[usize],
        predictions: Vec<u32>,
        n_classes: usize,
        mask: MaskMode,
    ) -> Self {
        let mut confusion = vec![vec![0u64; n_classes]; n_classes];
        for (&l, &p) in labels.iter().zip(&predictions) {
            confusion[l][p as usize] += 1;
        }
        let correct: u64 = (0..n_classes).map(|c| confusion[c][c]).sum();
        let accuracy = if labels.is_empty() {
            0.0
        } else {
            correct as f64 / labels.len() as f64
        };
        Self {
            accuracy,
            confusion,
            mask,
            predictions,
        }
    }
}

/// Normalizes two unimodal accuracies into fusion weights.
/// Two zero accuracies give equal weights.
pub fn compute_bias(a_im: f64, a_au: f64) -> Result<BiasTerms> {
    for (name, a) in [("a_im", a_im), ("a_au", a_au)] {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Validation(format!("accuracy {name} = {a} is outside [0, 1]")));
        }
    }
    let total = a_im + a_au;
    if total == 0.0 {
        return Ok(BiasTerms { b_im: 0.5, b_au: 0.5 });
    }
    Ok(BiasTerms {
        b_im: a_im / total,
        b_au: a_au / total,
    })
}

/// Unimodal evaluations (audio masked, image masked) and the resulting bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedBias {
    pub image_only: EvalReport,
    pub audio_only: EvalReport,
    pub bias: BiasTerms,
}

pub fn masked_bias(
    net: &MultimodalNetwork,
    dataset: &[Sample],
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<MaskedBias> {
    let image_only = evaluate(net, dataset, MaskMode::MaskAudio, enc, seed)?;
    let audio_only = evaluate(net, dataset, MaskMode::MaskImage, enc, seed)?;
    let bias = compute_bias(image_only.accuracy, audio_only.accuracy)?;
    Ok(MaskedBias {
        image_only,
        audio_only,
        bias,
    })
}

/// `argmax_i (b_im * c_im[i] + b_au * c_au[i])`, lowest class on ties.
pub fn biased_decode(c_im: &[u64], c_au: &[u64], bias: &BiasTerms) -> usize {
    let scores: Vec<f64> = c_im
        .iter()
        .zip(c_au)
        .map(|(&a, &b)| bias.b_im * a as f64 + bias.b_au * b as f64)
        .collect();
    argmax_lowest(&scores)
}

/// Runs an audio-masked and an image-masked pass and decodes their per-class
/// counts with `bias`.
pub fn biased_classify(
    net: &MultimodalNetwork,
    sample: &Sample,
    bias: &BiasTerms,
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<u32> {
    net.require_assigned()?;
    let im_only = forward(net, sample, MaskMode::MaskAudio, enc, seed)?;
    let au_only = forward(net, sample, MaskMode::MaskImage, enc, seed)?;
    Ok(biased_decode(&net.class_counts(&im_only), &net.class_counts(&au_only), bias) as u32)
}

/// [`biased_classify`] over a labeled dataset, seeded per sample like
/// [`evaluate`].
pub fn biased_evaluate(
    net: &MultimodalNetwork,
    dataset: &[Sample],
    bias: &BiasTerms,
    enc: &EncoderConfigs,
    seed: RngSeed,
) -> Result<EvalReport> {
    net.require_assigned()?;
    let labels = labels(dataset, net.n_classes())?;
    let predictions = dataset
        .iter()
        .enumerate()
        .map(|(i, s)| biased_classify(net, s, bias, enc, sample_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_predictions(&labels, predictions, net.n_classes(), MaskMode::None))
}
