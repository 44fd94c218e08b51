use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::IntensityGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrogramConfig {
    /// Frame length, a power of two ≥ 2.
    pub window_len_samples: usize,
    pub hop_samples: usize,
    /// Apply `ln(1 + |X|)` before normalization.
    pub log_compress: bool,
}

impl SpectrogramConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.window_len_samples;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::config(
                "window_len_samples",
                format!("must be a power of two ≥ 2, got {n}"),
            ));
        }
        if self.hop_samples == 0 || self.hop_samples > n {
            return Err(Error::config(
                "hop_samples",
                format!("must lie in 1..={n}, got {}", self.hop_samples),
            ));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.window_len_samples / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.window_len_samples {
            0
        } else {
            1 + (n_samples - self.window_len_samples) / self.hop_samples
        }
    }
}

/// Periodic Hann window of length `n`.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Hann-windowed short-time Fourier magnitude of `waveform`.
///
/// Rows are frequency bins `0..=N/2` (bin `k` sits at `k * fs / N` Hz), columns
/// are frames. The result is rescaled by its own maximum into `[0, 1]`; an
/// all-zero signal yields an all-zero grid.
pub fn compute_spectrogram(
    waveform: &[f64],
    sample_rate_hz: f64,
    cfg: &SpectrogramConfig,
) -> Result<IntensityGrid> {
    cfg.validate()?;
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::config(
            "sample_rate_hz",
            format!("must be positive, got {sample_rate_hz}"),
        ));
    }
    let n = cfg.window_len_samples;
    if waveform.len() < n {
        return Err(Error::Ingestion(format!(
            "waveform has {} samples, at least {n} are required",
            waveform.len()
        )));
    }
    if let Some(i) = waveform.iter().position(|x| !x.is_finite()) {
        return Err(Error::Ingestion(format!("sample {i} is not finite")));
    }

    let window = hann(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let n_bins = cfg.n_bins();
    let n_frames = cfg.n_frames(waveform.len());

    let mut values = vec![0.0; n_bins * n_frames];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for frame in 0..n_frames {
        let start = frame * cfg.hop_samples;
        for (b, (x, w)) in buf.iter_mut().zip(waveform[start..start + n].iter().zip(&window)) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (bin, c) in buf.iter().take(n_bins).enumerate() {
            let mag = c.norm();
            values[bin * n_frames + frame] = if cfg.log_compress { mag.ln_1p() } else { mag };
        }
    }

    let peak = values.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        for v in &mut values {
            *v = (*v / peak).min(1.0);
        }
    }
    IntensityGrid::new(n_bins, n_frames, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(N^2) DFT magnitude of one windowed frame.
    fn dft_magnitudes(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let w = hann(n);
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, x) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += x * w[i] * ang.cos();
                    im += x * w[i] * ang.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    fn cfg(n: usize, hop: usize, log: bool) -> SpectrogramConfig {
        SpectrogramConfig {
            window_len_samples: n,
            hop_samples: hop,
            log_compress: log,
        }
    }

    #[test]
    fn silence_maps_to_zero_grid() {
        let s = compute_spectrogram(&[0.0; 1024], 8000.0, &cfg(256, 128, true)).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        assert_eq!(s.height(), 129);
        assert_eq!(s.width(), 7);
    }

    #[test]
    fn single_frame_when_length_equals_window() {
        let s = compute_spectrogram(&[0.5; 64], 1000.0, &cfg(64, 64, false)).unwrap();
        assert_eq!(s.width(), 1);
    }

    #[test]
    fn bin_center_sinusoid_peaks_in_its_row() {
        let (fs, n, bin) = (8000.0, 256, 20usize);
        let f = bin as f64 * fs / n as f64;
        let wave: Vec<f64> = (0..n * 4)
            .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
            .collect();
        let s = compute_spectrogram(&wave, fs, &cfg(n, n, false)).unwrap();
        assert_eq!(s.width(), 4);
        for frame in 0..s.width() {
            let column: Vec<f64> = (0..s.height()).map(|r| s.get(r, frame)).collect();
            let argmax = column
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
                .0;
            assert_eq!(argmax, bin, "frame {frame}");
        }

        // Unnormalized FFT column agrees with the direct DFT oracle up to scale.
        let oracle = dft_magnitudes(&wave[..n]);
        let peak = oracle.iter().copied().fold(0.0, f64::max);
        let global_peak_is_frame0 = oracle[bin] / peak;
        assert!((global_peak_is_frame0 - 1.0).abs() < 1e-12);
        for (r, o) in oracle.iter().enumerate() {
            assert!((s.get(r, 0) - o / peak).abs() < 1e-9, "row {r}");
        }
    }

    #[test]
    fn log_compression_stays_normalized() {
        let wave: Vec<f64> = (0..512).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let s = compute_spectrogram(&wave, 16000.0, &cfg(128, 64, true)).unwrap();
        let max = s.values().iter().copied().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        assert!(s.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn rejects_short_waveforms_and_bad_config() {
        let err = compute_spectrogram(&[0.0; 100], 8000.0, &cfg(128, 64, false)).unwrap_err();
        assert!(matches!(err, Error::Ingestion(ref m) if m.contains("128")));
        assert!(compute_spectrogram(&[0.0; 256], 8000.0, &cfg(100, 50, false)).is_err());
        assert!(compute_spectrogram(&[0.0; 256], 8000.0, &cfg(128, 0, false)).is_err());
        assert!(compute_spectrogram(&[0.0; 256], 8000.0, &cfg(128, 129, false)).is_err());
        assert!(compute_spectrogram(&[0.0; 256], 0.0, &cfg(128, 64, false)).is_err());
    }
}
