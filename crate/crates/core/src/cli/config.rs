//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Unknown and repeated keys are rejected. Every key is optional and falls back
//! to the defaults of [`RunConfig::default`]; relative paths resolve against
//! the directory holding the config file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cli::synth::SyntheticDatasetSpec;
use crate::encoding::{RateEncoderConfig, RateMode, TtfsEncoderConfig};
use crate::error::{Error, Result};
use crate::network::{EncoderConfigs, NetworkShape, TrainConfig};
use crate::neuron::LifParams;
use crate::plasticity::{CombinedUpdateParams, Pairing, RateStdpParams, TemporalStdpParams};
use crate::rng::RngSeed;
use crate::time::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,

    pub duration_ms: f64,
    pub dt_ms: f64,

    pub f_max_hz: f64,
    pub rate_mode: RateMode,
    pub theta0: f64,
    pub tau_th_ms: f64,

    pub tau_m_ms: f64,
    pub v_th: f64,
    pub v_reset: f64,
    pub refractory_steps: u32,

    pub n_neurons: usize,
    pub w_im_min: f32,
    pub w_im_max: f32,
    pub w_au_min: f32,
    pub w_au_max: f32,

    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus_ms: f64,
    pub tau_minus_ms: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub temporal_tau_minus_ms: f64,
    pub eta_im: f64,
    pub eta_au: f64,
    pub pairing: Pairing,
    pub epochs: usize,

    pub n_classes: usize,
    pub samples_per_class: usize,
    pub eval_samples_per_class: usize,
    pub image_h: usize,
    pub image_w: usize,
    pub spect_h: usize,
    pub spect_w: usize,
    pub image_informative: f64,
    pub audio_informative: f64,
    pub noise: f64,

    pub train_data: Option<PathBuf>,
    pub eval_data: Option<PathBuf>,
    pub bias_data: Option<PathBuf>,
    pub network: Option<PathBuf>,
    pub bias: Option<PathBuf>,
    pub sample_index: usize,
    pub raster_mask: crate::network::MaskMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            duration_ms: 100.0,
            dt_ms: 1.0,
            f_max_hz: 100.0,
            rate_mode: RateMode::Periodic,
            theta0: 1.0,
            tau_th_ms: 20.0,
            tau_m_ms: 10.0,
            v_th: 0.1,
            v_reset: 0.0,
            refractory_steps: 2,
            n_neurons: 60,
            w_im_min: -1.0,
            w_im_max: 1.0,
            w_au_min: -2.0,
            w_au_max: 2.0,
            a_plus: 0.01,
            a_minus: 0.015,
            tau_plus_ms: 20.0,
            tau_minus_ms: 20.0,
            b_plus: 0.01,
            b_minus: 0.015,
            temporal_tau_minus_ms: 20.0,
            eta_im: 0.02,
            eta_au: 0.3,
            pairing: Pairing::NearestNeighbor,
            epochs: 3,
            n_classes: 3,
            samples_per_class: 60,
            eval_samples_per_class: 30,
            image_h: 16,
            image_w: 16,
            spect_h: 16,
            spect_w: 16,
            image_informative: 0.9,
            audio_informative: 0.7,
            noise: 0.2,
            train_data: None,
            eval_data: None,
            bias_data: None,
            network: None,
            bias: None,
            sample_index: 0,
            raster_mask: crate::network::MaskMode::None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

pub fn parse_mask(value: &str) -> Option<crate::network::MaskMode> {
    use crate::network::MaskMode;
    match value {
        "none" => Some(MaskMode::None),
        "image" => Some(MaskMode::MaskImage),
        "audio" => Some(MaskMode::MaskAudio),
        _ => None,
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field,
                reason: format!("{reason} (in {})", path.display()),
            },
            other => other,
        })
    }

    /// Parses config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", n + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(Error::config(key, format!("set twice (line {})", n + 1)));
            }
            seen.push(key.to_string());
            cfg.set(key, value, base)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        let path = |v: &str| Some(base.join(v));
        match key {
            "seed" => self.seed = parse(key, v)?,
            "duration_ms" => self.duration_ms = parse(key, v)?,
            "dt_ms" => self.dt_ms = parse(key, v)?,
            "f_max_hz" => self.f_max_hz = parse(key, v)?,
            "rate_mode" => {
                self.rate_mode = match v {
                    "periodic" => RateMode::Periodic,
                    "poisson" => RateMode::Poisson,
                    _ => return Err(Error::config(key, format!("expected periodic|poisson, got `{v}`"))),
                }
            }
            "theta0" => self.theta0 = parse(key, v)?,
            "tau_th_ms" => self.tau_th_ms = parse(key, v)?,
            "tau_m_ms" => self.tau_m_ms = parse(key, v)?,
            "v_th" => self.v_th = parse(key, v)?,
            "v_reset" => self.v_reset = parse(key, v)?,
            "refractory_steps" => self.refractory_steps = parse(key, v)?,
            "n_neurons" => self.n_neurons = parse(key, v)?,
            "w_im_min" => self.w_im_min = parse(key, v)?,
            "w_im_max" => self.w_im_max = parse(key, v)?,
            "w_au_min" => self.w_au_min = parse(key, v)?,
            "w_au_max" => self.w_au_max = parse(key, v)?,
            "a_plus" => self.a_plus = parse(key, v)?,
            "a_minus" => self.a_minus = parse(key, v)?,
            "tau_plus_ms" => self.tau_plus_ms = parse(key, v)?,
            "tau_minus_ms" => self.tau_minus_ms = parse(key, v)?,
            "b_plus" => self.b_plus = parse(key, v)?,
            "b_minus" => self.b_minus = parse(key, v)?,
            "temporal_tau_minus_ms" => self.temporal_tau_minus_ms = parse(key, v)?,
            "eta_im" => self.eta_im = parse(key, v)?,
            "eta_au" => self.eta_au = parse(key, v)?,
            "pairing" => {
                self.pairing = match v {
                    "nearest_neighbor" => Pairing::NearestNeighbor,
                    "all_pairs" => Pairing::AllPairs,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("expected nearest_neighbor|all_pairs, got `{v}`"),
                        ))
                    }
                }
            }
            "epochs" => self.epochs = parse(key, v)?,
            "n_classes" => self.n_classes = parse(key, v)?,
            "samples_per_class" => self.samples_per_class = parse(key, v)?,
            "eval_samples_per_class" => self.eval_samples_per_class = parse(key, v)?,
            "image_h" => self.image_h = parse(key, v)?,
            "image_w" => self.image_w = parse(key, v)?,
            "spect_h" => self.spect_h = parse(key, v)?,
            "spect_w" => self.spect_w = parse(key, v)?,
            "image_informative" => self.image_informative = parse(key, v)?,
            "audio_informative" => self.audio_informative = parse(key, v)?,
            "noise" => self.noise = parse(key, v)?,
            "train_data" => self.train_data = path(v),
            "eval_data" => self.eval_data = path(v),
            "bias_data" => self.bias_data = path(v),
            "network" => self.network = path(v),
            "bias" => self.bias = path(v),
            "sample_index" => self.sample_index = parse(key, v)?,
            "raster_mask" => {
                self.raster_mask = parse_mask(v)
                    .ok_or_else(|| Error::config(key, format!("expected none|image|audio, got `{v}`")))?
            }
            _ => return Err(Error::config(key, "unknown configuration key")),
        }
        Ok(())
    }

    pub fn rng_seed(&self) -> RngSeed {
        RngSeed(self.seed)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.duration_ms, self.dt_ms)
    }

    pub fn lif(&self) -> LifParams {
        LifParams {
            tau_m_ms: self.tau_m_ms,
            v_th: self.v_th,
            v_reset: self.v_reset,
            refractory_steps: self.refractory_steps,
        }
    }

    pub fn encoders(&self) -> EncoderConfigs {
        EncoderConfigs {
            rate: RateEncoderConfig {
                f_max_hz: self.f_max_hz,
                mode: self.rate_mode,
            },
            ttfs: TtfsEncoderConfig {
                theta0: self.theta0,
                tau_th_ms: self.tau_th_ms,
            },
        }
    }

    pub fn shape(&self, n_image_inputs: usize, n_audio_inputs: usize) -> NetworkShape {
        NetworkShape {
            n_image_inputs,
            n_audio_inputs,
            n_neurons: self.n_neurons,
            w_im_bounds: (self.w_im_min, self.w_im_max),
            w_au_bounds: (self.w_au_min, self.w_au_max),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            rate: RateStdpParams {
                a_plus: self.a_plus,
                a_minus: self.a_minus,
                tau_plus_ms: self.tau_plus_ms,
                tau_minus_ms: self.tau_minus_ms,
            },
            temporal: TemporalStdpParams {
                b_plus: self.b_plus,
                b_minus: self.b_minus,
                tau_minus_ms: self.temporal_tau_minus_ms,
            },
            combined: CombinedUpdateParams {
                eta_im: self.eta_im,
                eta_au: self.eta_au,
                pairing: self.pairing,
            },
        }
    }

    pub fn dataset_spec(&self, samples_per_class: usize, seed: RngSeed) -> SyntheticDatasetSpec {
        SyntheticDatasetSpec {
            n_classes: self.n_classes,
            samples_per_class,
            image_size: (self.image_h, self.image_w),
            spect_size: (self.spect_h, self.spect_w),
            image_informative: self.image_informative,
            audio_informative: self.audio_informative,
            noise: self.noise,
            seed,
        }
    }

    /// Path stored under `key`, or an error naming the command that needs it.
    pub fn require_path<'a>(&self, value: &'a Option<PathBuf>, key: &str, command: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::config(key, format!("required by `{command}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_comments_and_paths() {
        let text = "\
# demo
seed = 7
v_th=0.25   # inline comment
pairing = all_pairs
rate_mode = poisson
train_data = data/train.sfd

raster_mask = audio
";
        let cfg = RunConfig::parse(text, Path::new("/runs")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.v_th, 0.25);
        assert_eq!(cfg.pairing, Pairing::AllPairs);
        assert_eq!(cfg.rate_mode, RateMode::Poisson);
        assert_eq!(cfg.train_data, Some(PathBuf::from("/runs/data/train.sfd")));
        assert_eq!(cfg.raster_mask, crate::network::MaskMode::MaskAudio);
        assert_eq!(cfg.n_neurons, RunConfig::default().n_neurons);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        let err = RunConfig::parse("v_treshold = 1", Path::new("")).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "v_treshold"));
        assert!(RunConfig::parse("seed = 1\nseed = 2", Path::new("")).is_err());
        assert!(RunConfig::parse("seed 1", Path::new("")).is_err());
        assert!(RunConfig::parse("seed = -1", Path::new("")).is_err());
        assert!(RunConfig::parse("pairing = sometimes", Path::new("")).is_err());
    }

    #[test]
    fn absolute_paths_are_kept() {
        let cfg = RunConfig::parse("network = /abs/net.sfn", Path::new("/base")).unwrap();
        assert_eq!(cfg.network, Some(PathBuf::from("/abs/net.sfn")));
    }
}
