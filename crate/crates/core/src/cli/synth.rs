//! Synthetic two-modality classification data.
//!
//! Every class owns a fixed image prototype (a diagonal block pattern) and a
//! fixed spectrogram prototype (a ridge in its own frequency band). A sample
//! mixes its class prototype with class-independent uniform clutter and then
//! adds symmetric jitter:
//!
//! `x = clamp(inf * proto + (1 - inf) * u + noise * (2 v - 1), 0, 1)`
//!
//! with `u, v ~ U[0, 1)` drawn per cell. Values are rounded to `f32` so an
//! in-memory dataset equals its on-disk form.

use rand::Rng;

use crate::encoding::IntensityGrid;
use crate::error::{Error, Result};
use crate::network::Sample;
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticDatasetSpec {
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub image_size: (usize, usize),
    pub spect_size: (usize, usize),
    pub image_informative: f64,
    pub audio_informative: f64,
    pub noise: f64,
    pub seed: RngSeed,
}

impl SyntheticDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::config("n_classes", format!("need at least 2, got {}", self.n_classes)));
        }
        if self.samples_per_class < 1 {
            return Err(Error::config("samples_per_class", "need at least 1"));
        }
        for (field, (h, w)) in [("image_size", self.image_size), ("spect_size", self.spect_size)] {
            if h < 2 || w < 2 {
                return Err(Error::config(field, format!("{h}x{w} is smaller than 2x2")));
            }
        }
        for (field, v) in [
            ("image_informative", self.image_informative),
            ("audio_informative", self.audio_informative),
            ("noise", self.noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        check_prototypes("image_size", self.n_classes, self.image_size, image_prototype)?;
        check_prototypes("spect_size", self.n_classes, self.spect_size, spectrogram_prototype)?;
        Ok(())
    }
}

fn check_prototypes(
    field: &str,
    n_classes: usize,
    (h, w): (usize, usize),
    proto: fn(usize, usize, usize, usize) -> Vec<f64>,
) -> Result<()> {
    let all: Vec<Vec<f64>> = (0..n_classes).map(|c| proto(c, n_classes, h, w)).collect();
    for (c, p) in all.iter().enumerate() {
        if p.iter().all(|&v| v == 0.0) {
            return Err(Error::config(
                field,
                format!("{h}x{w} leaves class {c} with an empty prototype"),
            ));
        }
        if let Some(d) = all[..c].iter().position(|q| q == p) {
            return Err(Error::config(
                field,
                format!("{h}x{w} gives classes {d} and {c} identical prototypes"),
            ));
        }
    }
    Ok(())
}

/// Diagonal blocks: cell `(r, c)` is lit for class `(band(r) + stripe(c)) mod n`.
pub fn image_prototype(class: usize, n_classes: usize, h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let band = r * n_classes / h;
            let stripe = c * n_classes / w;
            if (band + stripe) % n_classes == class {
                out[r * w + c] = 1.0;
            }
        }
    }
    out
}

/// Horizontal ridge (constant frequency across frames) centred in the
/// class's band: full intensity on the centre row, 0.5 on its flanks.
pub fn spectrogram_prototype(class: usize, n_classes: usize, h: usize, w: usize) -> Vec<f64> {
    let center = ((2 * class + 1) * h) / (2 * n_classes);
    let half = (h / (3 * n_classes)).max(1);
    let mut out = vec![0.0; h * w];
    for r in center.saturating_sub(half)..=(center + half).min(h - 1) {
        let level = if r == center { 1.0 } else { 0.5 };
        out[r * w..(r + 1) * w].iter_mut().for_each(|v| *v = level);
    }
    out
}

fn mix(proto: &[f64], informative: f64, noise: f64, rng: &mut impl Rng) -> Vec<f64> {
    proto
        .iter()
        .map(|&p| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let x = informative * p + (1.0 - informative) * u + noise * (2.0 * v - 1.0);
            f64::from(x.clamp(0.0, 1.0) as f32)
        })
        .collect()
}

/// Generates `n_classes * samples_per_class` samples; sample `s` has class
/// `s mod n_classes`.
pub fn generate_dataset(spec: &SyntheticDatasetSpec) -> Result<Vec<Sample>> {
    spec.validate()?;
    let n = spec.n_classes;
    let (ih, iw) = spec.image_size;
    let (sh, sw) = spec.spect_size;
    let image_protos: Vec<_> = (0..n).map(|c| image_prototype(c, n, ih, iw)).collect();
    let spect_protos: Vec<_> = (0..n).map(|c| spectrogram_prototype(c, n, sh, sw)).collect();

    (0..n * spec.samples_per_class)
        .map(|s| {
            let class = s % n;
            let mut rng = spec.seed.derive(s as u64).rng();
            let image = mix(&image_protos[class], spec.image_informative, spec.noise, &mut rng);
            let audio = mix(&spect_protos[class], spec.audio_informative, spec.noise, &mut rng);
            Ok(Sample {
                image: IntensityGrid::new(ih, iw, image)?,
                audio: IntensityGrid::new(sh, sw, audio)?,
                label: Some(class as u32),
            })
        })
        .collect()
}
