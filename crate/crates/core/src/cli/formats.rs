//! On-disk formats. All integers and floats are little-endian.
//!
//! Dataset (`SFD1`):
//! ```text
//! "SFD1" | u32 n_samples | u32 n_classes | u32 img_h | u32 img_w | u32 spc_h | u32 spc_w
//! per sample: u32 label | img_h*img_w f32 (row-major) | spc_h*spc_w f32 (row-major)
//! ```
//! An unlabeled sample stores label `0xFFFFFFFF`.
//!
//! Network (`SFN1`):
//! ```text
//! "SFN1" | u32 n_image_inputs | u32 n_audio_inputs | u32 n_neurons | u32 n_classes
//! f64 duration_ms | f64 dt_ms
//! f64 tau_m_ms | f64 v_th | f64 v_reset | f64 refractory_steps
//! f32 w_im_min | f32 w_im_max | f32 w_au_min | f32 w_au_max
//! n_image_inputs*n_neurons f32 | n_audio_inputs*n_neurons f32   (pre-major)
//! n_neurons u32 class ids, 0xFFFFFFFF = unassigned
//! ```
//! The fourth magic byte is the format version.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::encoding::IntensityGrid;
use crate::error::{Error, Result};
use crate::network::{MultimodalNetwork, Sample};
use crate::neuron::{LifParams, SpikeRecord, SynapseMatrix};
use crate::spikes::Modality;
use crate::time::TimeGrid;

pub const DATASET_MAGIC: &[u8; 4] = b"SFD1";
pub const NETWORK_MAGIC: &[u8; 4] = b"SFN1";
const UNLABELED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_classes: usize,
    pub image_size: (usize, usize),
    pub spect_size: (usize, usize),
    pub samples: Vec<Sample>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::format(
                self.path,
                format!("truncated while reading {what} at byte {}", self.pos),
            )),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        Ok(self.u32(what)? as usize)
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32_vec(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let raw = self.take(n.saturating_mul(4), what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn magic(&mut self, expected: &[u8; 4], kind: &str) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got[..3] != expected[..3] {
            return Err(Error::format(self.path, format!("not a {kind} file (bad magic)")));
        }
        if got[3] != expected[3] {
            return Err(Error::format(
                self.path,
                format!(
                    "{kind} format version {} is not supported, this build reads version {}",
                    char::from(got[3]).escape_default(),
                    char::from(expected[3])
                ),
            ));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(
                self.path,
                format!("{} unexpected trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Validation(format!("{what} = {v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let (ih, iw) = ds.image_size;
    let (sh, sw) = ds.spect_size;
    let mut out = Vec::with_capacity(28 + ds.samples.len() * 4 * (1 + ih * iw + sh * sw));
    out.extend_from_slice(DATASET_MAGIC);
    put_u32(&mut out, ds.samples.len(), "n_samples")?;
    put_u32(&mut out, ds.n_classes, "n_classes")?;
    for (v, what) in [(ih, "img_h"), (iw, "img_w"), (sh, "spc_h"), (sw, "spc_w")] {
        put_u32(&mut out, v, what)?;
    }
    for (i, s) in ds.samples.iter().enumerate() {
        if (s.image.height(), s.image.width()) != ds.image_size
            || (s.audio.height(), s.audio.width()) != ds.spect_size
        {
            return Err(Error::Structural(format!("sample {i} does not match the dataset dimensions")));
        }
        out.extend_from_slice(&s.label.unwrap_or(UNLABELED).to_le_bytes());
        for &v in s.image.values().iter().chain(s.audio.values()) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let mut r = Reader { bytes, pos: 0, path };
    r.magic(DATASET_MAGIC, "dataset")?;
    let n = r.usize("n_samples")?;
    let n_classes = r.usize("n_classes")?;
    let (ih, iw) = (r.usize("img_h")?, r.usize("img_w")?);
    let (sh, sw) = (r.usize("spc_h")?, r.usize("spc_w")?);
    let expected = ih
        .checked_mul(iw)
        .zip(sh.checked_mul(sw))
        .and_then(|(a, b)| a.checked_add(b)?.checked_add(1)?.checked_mul(4))
        .and_then(|per_sample| per_sample.checked_mul(n)?.checked_add(28));
    if expected != Some(bytes.len()) {
        let announced = expected.map_or_else(|| "an overflowing size".to_string(), |b| format!("{b} bytes"));
        return Err(Error::format(
            path,
            format!("header announces {n} samples ({announced}) but the file has {} bytes", bytes.len()),
        ));
    }
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let label = match r.u32("label")? {
            UNLABELED => None,
            l if (l as usize) < n_classes => Some(l),
            l => {
                return Err(Error::format(
                    path,
                    format!("sample {i} has label {l} but the file declares {n_classes} classes"),
                ))
            }
        };
        let grid = |r: &mut Reader, h: usize, w: usize, what: &str| -> Result<IntensityGrid> {
            let vals = r.f32_vec(h * w, what)?.into_iter().map(f64::from).collect();
            IntensityGrid::new(h, w, vals)
                .map_err(|e| Error::format(path, format!("sample {i} {what}: {e}")))
        };
        let image = grid(&mut r, ih, iw, "image")?;
        let audio = grid(&mut r, sh, sw, "spectrogram")?;
        samples.push(Sample { image, audio, label });
    }
    r.finish()?;
    Ok(Dataset {
        n_classes,
        image_size: (ih, iw),
        spect_size: (sh, sw),
        samples,
    })
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes, path)
}

pub fn encode_network(net: &MultimodalNetwork) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(NETWORK_MAGIC);
    put_u32(&mut out, net.w_im.n_pre(), "n_image_inputs")?;
    put_u32(&mut out, net.w_au.n_pre(), "n_audio_inputs")?;
    put_u32(&mut out, net.n_neurons(), "n_neurons")?;
    put_u32(&mut out, net.n_classes(), "n_classes")?;
    for v in [
        net.grid.duration_ms(),
        net.grid.dt_ms(),
        net.lif.tau_m_ms,
        net.lif.v_th,
        net.lif.v_reset,
        f64::from(net.lif.refractory_steps),
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [net.w_im.w_min(), net.w_im.w_max(), net.w_au.w_min(), net.w_au.w_max()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &w in net.w_im.weights().iter().chain(net.w_au.weights()) {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for c in net.class_of_neuron() {
        out.extend_from_slice(&c.unwrap_or(UNLABELED).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_network(bytes: &[u8], path: &Path) -> Result<MultimodalNetwork> {
    let mut r = Reader { bytes, pos: 0, path };
    r.magic(NETWORK_MAGIC, "network")?;
    let n_im = r.usize("n_image_inputs")?;
    let n_au = r.usize("n_audio_inputs")?;
    let n_post = r.usize("n_neurons")?;
    let n_classes = r.usize("n_classes")?;
    let bad = |e: Error| Error::format(path, e.to_string());
    let grid = TimeGrid::new(r.f64("duration_ms")?, r.f64("dt_ms")?).map_err(bad)?;
    let tau_m_ms = r.f64("tau_m_ms")?;
    let v_th = r.f64("v_th")?;
    let v_reset = r.f64("v_reset")?;
    let refractory = r.f64("refractory_steps")?;
    if !(refractory >= 0.0 && refractory.fract() == 0.0 && refractory <= f64::from(u32::MAX)) {
        return Err(Error::format(path, format!("refractory_steps {refractory} is not a count")));
    }
    let lif = LifParams {
        tau_m_ms,
        v_th,
        v_reset,
        refractory_steps: refractory as u32,
    };
    let (im_lo, im_hi) = (r.f32("w_im_min")?, r.f32("w_im_max")?);
    let (au_lo, au_hi) = (r.f32("w_au_min")?, r.f32("w_au_max")?);
    let w_im = r.f32_vec(n_im.saturating_mul(n_post), "image weights")?;
    let w_au = r.f32_vec(n_au.saturating_mul(n_post), "audio weights")?;
    let mut classes = Vec::new();
    for _ in 0..n_post {
        classes.push(match r.u32("class assignment")? {
            UNLABELED => None,
            c => Some(c),
        });
    }
    r.finish()?;
    let w_im = SynapseMatrix::new(Modality::Image, n_im, n_post, w_im, im_lo, im_hi).map_err(bad)?;
    let w_au = SynapseMatrix::new(Modality::Audio, n_au, n_post, w_au, au_lo, au_hi).map_err(bad)?;
    lif.validate(&grid).map_err(bad)?;
    MultimodalNetwork::from_parts(w_im, w_au, lif, grid, classes, n_classes).map_err(bad)
}

pub fn read_network(path: &Path) -> Result<MultimodalNetwork> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_network(&bytes, path)
}

/// `neuron,step,time_ms`, one row per spike, ordered by neuron then step.
pub fn raster_csv(record: &SpikeRecord) -> String {
    let mut out = String::from("neuron,step,time_ms\n");
    for (j, train) in record.trains.iter().enumerate() {
        for &s in train.steps() {
            let _ = writeln!(out, "{j},{s},{}", record.grid.time_ms(s));
        }
    }
    out
}

/// Writes every file or none of them: contents go to hidden temporaries which
/// are renamed into place only after all writes succeed.
pub fn write_all_or_nothing(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut temps: Vec<PathBuf> = Vec::with_capacity(files.len());
    let cleanup = |temps: &[PathBuf]| {
        for t in temps {
            let _ = std::fs::remove_file(t);
        }
    };
    for (path, bytes) in files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = path.with_file_name(format!(".{name}.{}.partial", std::process::id()));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            cleanup(&temps);
            let _ = std::fs::remove_file(&tmp);
            return Err(Error::io(path, e));
        }
        temps.push(tmp);
    }
    for (tmp, (path, _)) in temps.iter().zip(files) {
        if let Err(e) = std::fs::rename(tmp, path) {
            cleanup(&temps);
            return Err(Error::io(path, e));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset() -> Dataset {
        let s = |l: Option<u32>, v: f64| Sample {
            image: IntensityGrid::new(2, 2, vec![v, 0.0, 1.0, 0.5]).unwrap(),
            audio: IntensityGrid::new(2, 3, vec![0.25; 6]).unwrap(),
            label: l,
        };
        Dataset {
            n_classes: 2,
            image_size: (2, 2),
            spect_size: (2, 3),
            samples: vec![s(Some(0), 0.125), s(Some(1), 0.75), s(None, 1.0)],
        }
    }

    #[test]
    fn dataset_layout_is_exact() {
        let bytes = encode_dataset(&tiny_dataset()).unwrap();
        assert_eq!(&bytes[..4], b"SFD1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 28 + 3 * 4 * (1 + 4 + 6));
        // first sample: label then first pixel
        assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 0);
        assert_eq!(f32::from_le_bytes(bytes[32..36].try_into().unwrap()), 0.125);
        let back = decode_dataset(&bytes, Path::new("t.sfd")).unwrap();
        assert_eq!(back, tiny_dataset());
    }

    #[test]
    fn version_mismatch_names_both_versions() {
        let mut bytes = encode_dataset(&tiny_dataset()).unwrap();
        bytes[3] = b'2';
        let msg = decode_dataset(&bytes, Path::new("t.sfd")).unwrap_err().to_string();
        assert!(msg.contains("version 2") && msg.contains("version 1"), "{msg}");
        bytes[0] = b'X';
        let msg = decode_dataset(&bytes, Path::new("t.sfd")).unwrap_err().to_string();
        assert!(msg.contains("bad magic"), "{msg}");
    }

    #[test]
    fn truncated_and_padded_files_fail() {
        let bytes = encode_dataset(&tiny_dataset()).unwrap();
        assert!(decode_dataset(&bytes[..bytes.len() - 1], Path::new("t")).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(decode_dataset(&longer, Path::new("t")).is_err());
        assert!(decode_dataset(&bytes[..10], Path::new("t")).is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        let mut bytes = encode_dataset(&tiny_dataset()).unwrap();
        bytes[32..36].copy_from_slice(&2.0f32.to_le_bytes());
        let msg = decode_dataset(&bytes, Path::new("t")).unwrap_err().to_string();
        assert!(msg.contains("sample 0 image"), "{msg}");
        let mut bytes = encode_dataset(&tiny_dataset()).unwrap();
        bytes[28..32].copy_from_slice(&5u32.to_le_bytes());
        assert!(decode_dataset(&bytes, Path::new("t")).is_err());
    }

    #[test]
    fn raster_rows() {
        let g = TimeGrid::new(10.0, 0.5).unwrap();
        let rec = SpikeRecord {
            trains: vec![
                crate::spikes::SpikeTrain::new(vec![1, 4], &g).unwrap(),
                crate::spikes::SpikeTrain::empty(),
                crate::spikes::SpikeTrain::new(vec![0], &g).unwrap(),
            ],
            membrane_trace: None,
            grid: g,
        };
        assert_eq!(raster_csv(&rec), "neuron,step,time_ms\n0,1,0.5\n0,4,2\n2,0,0\n");
    }

    #[test]
    fn all_or_nothing_leaves_no_partials() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("a.bin");
        let bad = dir.path().join("missing-dir").join("b.bin");
        assert!(write_all_or_nothing(&[(ok.clone(), vec![1]), (bad, vec![2])]).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        write_all_or_nothing(&[(ok.clone(), vec![1, 2])]).unwrap();
        assert_eq!(std::fs::read(&ok).unwrap(), vec![1, 2]);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
