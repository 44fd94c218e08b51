//! Command-line workflow: synthetic data, training, masked evaluation, bias
//! estimation, biased classification and raster export.
//!
//! Every command reads `--config`, optionally overrides its seed with
//! `--seed`, and writes its artifacts plus a `<command>.manifest.json` into
//! `--out`. Outputs are all written or none are.

pub mod config;
pub mod formats;
pub mod synth;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    assign_classes, biased_classify, evaluate, forward, masked_bias, sample_seed, train, BiasTerms,
    EvalReport, MaskMode, MultimodalNetwork,
};
use crate::rng::RngSeed;
use config::RunConfig;
use formats::{Dataset, write_all_or_nothing};

/// Streams derived from the run seed. `eval`, `bias`, `classify` and
/// `export-raster` share [`STREAM_EVAL`] so they see identical encodings.
pub const STREAM_TRAIN_DATA: u64 = 0;
pub const STREAM_EVAL_DATA: u64 = 1;
pub const STREAM_INIT: u64 = 10;
pub const STREAM_TRAIN: u64 = 11;
pub const STREAM_ASSIGN: u64 = 12;
pub const STREAM_EVAL: u64 = 13;

#[derive(Debug, Parser)]
#[command(name = "avsnn", version, about = "Audio-visual spiking network workflow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic train/eval datasets (train.sfd, eval.sfd)
    GenData(Common),
    /// Train with STDP, assign classes, write network.sfn
    Train(Common),
    /// Evaluate under a mask, write eval_<mask>.json
    Eval(EvalArgs),
    /// Masked evaluations and bias terms, write bias.json
    Bias(Common),
    /// Bias-weighted classification, write predictions.csv and classify.json
    Classify(Common),
    /// Spike raster of one sample, write raster.csv
    ExportRaster(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = MaskArg::None)]
    mask: MaskArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MaskArg {
    None,
    Image,
    Audio,
}

impl From<MaskArg> for MaskMode {
    fn from(m: MaskArg) -> Self {
        match m {
            MaskArg::None => MaskMode::None,
            MaskArg::Image => MaskMode::MaskImage,
            MaskArg::Audio => MaskMode::MaskAudio,
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: String,
    seed: u64,
    timestamp_unix: u64,
    artifacts: Vec<String>,
}

/// Contents of `bias.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFile {
    pub b_im: f64,
    pub b_au: f64,
    pub a_im: f64,
    pub a_au: f64,
    pub n_samples: usize,
}

/// Contents of `classify.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub accuracy: Option<f64>,
    pub confusion: Option<Vec<Vec<u64>>>,
    pub bias: BiasTerms,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Ctx<'a> {
    name: &'static str,
    common: &'a Common,
    cfg: RunConfig,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl<'a> Ctx<'a> {
    fn new(name: &'static str, common: &'a Common) -> Result<Self> {
        let mut cfg = RunConfig::load(&common.config)?;
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        Ok(Self {
            name,
            common,
            cfg,
            files: Vec::new(),
        })
    }

    fn seed(&self, stream: u64) -> RngSeed {
        self.cfg.rng_seed().derive(stream)
    }

    fn add(&mut self, file_name: &str, bytes: Vec<u8>) {
        self.files.push((self.common.out.join(file_name), bytes));
    }

    fn add_json<T: Serialize>(&mut self, file_name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Validation(format!("cannot serialize {file_name}: {e}")))?;
        text.push('\n');
        self.add(file_name, text.into_bytes());
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Manifest {
            command: self.name,
            config: self.common.config.display().to_string(),
            seed: self.cfg.seed,
            timestamp_unix,
            artifacts: self.files.iter().map(|(p, _)| p.display().to_string()).collect(),
        };
        let name = format!("{}.manifest.json", self.name);
        self.add_json(&name, &manifest)?;
        std::fs::create_dir_all(&self.common.out).map_err(|e| Error::io(&self.common.out, e))?;
        write_all_or_nothing(&self.files)
    }

    fn dataset(&self, path: &Option<PathBuf>, key: &str) -> Result<Dataset> {
        formats::read_dataset(self.cfg.require_path(path, key, self.name)?)
    }

    fn network(&self) -> Result<MultimodalNetwork> {
        formats::read_network(self.cfg.require_path(&self.cfg.network, "network", self.name)?)
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData(c) => gen_data(Ctx::new("gen-data", &c)?),
        Command::Train(c) => train_cmd(Ctx::new("train", &c)?),
        Command::Eval(e) => eval_cmd(Ctx::new("eval", &e.common)?, e.mask.into()),
        Command::Bias(c) => bias_cmd(Ctx::new("bias", &c)?),
        Command::Classify(c) => classify_cmd(Ctx::new("classify", &c)?),
        Command::ExportRaster(c) => raster_cmd(Ctx::new("export-raster", &c)?),
    }
}

fn to_dataset(cfg: &RunConfig, samples: Vec<crate::network::Sample>) -> Dataset {
    Dataset {
        n_classes: cfg.n_classes,
        image_size: (cfg.image_h, cfg.image_w),
        spect_size: (cfg.spect_h, cfg.spect_w),
        samples,
    }
}

/// The synthetic train split and, when `eval_samples_per_class > 0`, the
/// eval split that `gen-data` writes.
pub fn generate_splits(cfg: &RunConfig) -> Result<(Dataset, Option<Dataset>)> {
    let seed = cfg.rng_seed();
    let train_spec = cfg.dataset_spec(cfg.samples_per_class, seed.derive(STREAM_TRAIN_DATA));
    let train_set = to_dataset(cfg, synth::generate_dataset(&train_spec)?);
    let eval_set = if cfg.eval_samples_per_class > 0 {
        let spec = cfg.dataset_spec(cfg.eval_samples_per_class, seed.derive(STREAM_EVAL_DATA));
        Some(to_dataset(cfg, synth::generate_dataset(&spec)?))
    } else {
        None
    };
    Ok((train_set, eval_set))
}

fn gen_data(mut ctx: Ctx) -> Result<()> {
    let (train_set, eval_set) = generate_splits(&ctx.cfg)?;
    ctx.add("train.sfd", formats::encode_dataset(&train_set)?);
    if let Some(eval_set) = eval_set {
        ctx.add("eval.sfd", formats::encode_dataset(&eval_set)?);
    }
    ctx.finish()
}

/// Trains a fresh network on `data` and assigns classes with the same data.
pub fn train_network(cfg: &RunConfig, data: &Dataset) -> Result<MultimodalNetwork> {
    let seed = cfg.rng_seed();
    let (ih, iw) = data.image_size;
    let (sh, sw) = data.spect_size;
    let net = MultimodalNetwork::new(&cfg.shape(ih * iw, sh * sw), cfg.lif(), cfg.grid()?, seed.derive(STREAM_INIT))?;
    let enc = cfg.encoders();
    let trained = train(&net, &data.samples, &cfg.train_config(), &enc, seed.derive(STREAM_TRAIN))?;
    assign_classes(&trained, &data.samples, data.n_classes, &enc, seed.derive(STREAM_ASSIGN))
}

fn train_cmd(mut ctx: Ctx) -> Result<()> {
    let data = ctx.dataset(&ctx.cfg.train_data, "train_data")?;
    let net = train_network(&ctx.cfg, &data)?;
    ctx.add("network.sfn", formats::encode_network(&net)?);
    ctx.finish()
}

fn mask_name(mask: MaskMode) -> &'static str {
    match mask {
        MaskMode::None => "none",
        MaskMode::MaskImage => "image",
        MaskMode::MaskAudio => "audio",
    }
}

fn eval_cmd(mut ctx: Ctx, mask: MaskMode) -> Result<()> {
    let net = ctx.network()?;
    let data = ctx.dataset(&ctx.cfg.eval_data, "eval_data")?;
    let report: EvalReport = evaluate(&net, &data.samples, mask, &ctx.cfg.encoders(), ctx.seed(STREAM_EVAL))?;
    ctx.add_json(&format!("eval_{}.json", mask_name(mask)), &report)?;
    ctx.finish()
}

fn bias_cmd(mut ctx: Ctx) -> Result<()> {
    let net = ctx.network()?;
    let path = ctx.cfg.bias_data.clone().or_else(|| ctx.cfg.eval_data.clone());
    let data = ctx.dataset(&path, "bias_data")?;
    let mb = masked_bias(&net, &data.samples, &ctx.cfg.encoders(), ctx.seed(STREAM_EVAL))?;
    let file = BiasFile {
        b_im: mb.bias.b_im,
        b_au: mb.bias.b_au,
        a_im: mb.image_only.accuracy,
        a_au: mb.audio_only.accuracy,
        n_samples: data.samples.len(),
    };
    ctx.add_json("bias.json", &file)?;
    ctx.finish()
}

pub fn read_bias(path: &Path) -> Result<BiasTerms> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: BiasFile =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let ok = |b: f64| (0.0..=1.0).contains(&b);
    if !(ok(file.b_im) && ok(file.b_au) && (file.b_im + file.b_au - 1.0).abs() <= 1e-12) {
        return Err(Error::format(
            path,
            format!("bias terms ({}, {}) must lie in [0, 1] and sum to 1", file.b_im, file.b_au),
        ));
    }
    Ok(BiasTerms {
        b_im: file.b_im,
        b_au: file.b_au,
    })
}

fn classify_cmd(mut ctx: Ctx) -> Result<()> {
    let net = ctx.network()?;
    let bias = read_bias(ctx.cfg.require_path(&ctx.cfg.bias, "bias", "classify")?)?;
    let data = ctx.dataset(&ctx.cfg.eval_data, "eval_data")?;
    let enc = ctx.cfg.encoders();
    let seed = ctx.seed(STREAM_EVAL);
    let mut csv = String::from("index,label,predicted\n");
    let mut predictions = Vec::with_capacity(data.samples.len());
    for (i, s) in data.samples.iter().enumerate() {
        let p = biased_classify(&net, s, &bias, &enc, sample_seed(seed, i))?;
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        csv.push_str(&format!("{i},{label},{p}\n"));
        predictions.push(p);
    }
    let labels: Option<Vec<usize>> = data.samples.iter().map(|s| s.label.map(|l| l as usize)).collect();
    let report = match labels {
        Some(labels) => {
            let r = EvalReport::from_predictions(&labels, predictions, net.n_classes(), MaskMode::None);
            ClassifyReport {
                accuracy: Some(r.accuracy),
                confusion: Some(r.confusion),
                bias,
            }
        }
        None => ClassifyReport {
            accuracy: None,
            confusion: None,
            bias,
        },
    };
    ctx.add("predictions.csv", csv.into_bytes());
    ctx.add_json("classify.json", &report)?;
    ctx.finish()
}

fn raster_cmd(mut ctx: Ctx) -> Result<()> {
    let net = ctx.network()?;
    let data = ctx.dataset(&ctx.cfg.eval_data, "eval_data")?;
    let idx = ctx.cfg.sample_index;
    let sample = data.samples.get(idx).ok_or_else(|| {
        Error::config(
            "sample_index",
            format!("{idx} is out of range for {} samples", data.samples.len()),
        )
    })?;
    let rec = forward(
        &net,
        sample,
        ctx.cfg.raster_mask,
        &ctx.cfg.encoders(),
        sample_seed(ctx.seed(STREAM_EVAL), idx),
    )?;
    ctx.add("raster.csv", formats::raster_csv(&rec).into_bytes());
    ctx.finish()
}
