use super::LABEL_DIM;
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, HiddenActivation, MlpSpec, OutputActivation};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    WganGp,
    Vanilla,
}

/// Arithmetic used for training and generation. Checkpoints always store
/// `f64`, which represents `f32` weights exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::Config(format!("unknown precision {other:?} (expected f32 or f64)"))),
        }
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wgan_gp" | "wgan-gp" => Ok(LossMode::WganGp),
            "vanilla" | "gan" => Ok(LossMode::Vanilla),
            other => Err(Error::Config(format!("unknown loss mode {other:?} (expected wgan_gp or vanilla)"))),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub latent_dim: usize,
    /// Hidden widths of the generator (input `latent + 3`, output the data dimension).
    pub g_hidden: Vec<usize>,
    /// Hidden widths of the critic (input `data + 3`, output 1).
    pub d_hidden: Vec<usize>,
    pub hidden_activation: HiddenActivation,
    pub lambda_gp: f64,
    pub n_critic: usize,
    pub batch_size: usize,
    pub iterations: u64,
    pub adam: AdamConfig,
    pub seed: u64,
    pub loss_mode: LossMode,
    /// Train on a seeded subset of at most this many samples.
    pub max_samples: Option<usize>,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            latent_dim: 64,
            g_hidden: vec![256, 512, 1024],
            d_hidden: vec![512, 256, 128],
            hidden_activation: HiddenActivation::LeakyRelu { slope: 0.2 },
            lambda_gp: 10.0,
            n_critic: 5,
            batch_size: 64,
            iterations: 7000,
            adam: AdamConfig::default(),
            seed: 0,
            loss_mode: LossMode::WganGp,
            max_samples: None,
            precision: Precision::F32,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_widths(key: &str, v: &str) -> Result<Vec<usize>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|w| parse(key, w.trim())).collect()
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.latent_dim == 0 {
            return fail("latent_dim must be positive".into());
        }
        if !(self.lambda_gp >= 0.0) {
            return fail(format!("lambda_gp must be >= 0, got {}", self.lambda_gp));
        }
        if self.n_critic < 1 {
            return fail("n_critic must be >= 1".into());
        }
        if self.batch_size < 2 {
            return fail(format!("batch_size must be >= 2, got {}", self.batch_size));
        }
        if self.iterations < 1 {
            return fail("iterations must be >= 1".into());
        }
        let a = &self.adam;
        if !(a.lr > 0.0) || !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return fail(format!("invalid Adam settings {a:?}"));
        }
        if self.max_samples == Some(0) {
            return fail("max_samples must be positive".into());
        }
        self.g_spec(1)?;
        self.d_spec(1)?;
        Ok(())
    }

    pub fn g_spec(&self, data_dim: usize) -> Result<MlpSpec> {
        let mut w = vec![self.latent_dim + LABEL_DIM];
        w.extend(&self.g_hidden);
        w.push(data_dim);
        MlpSpec::new(w, self.hidden_activation, OutputActivation::Identity)
    }

    pub fn d_spec(&self, data_dim: usize) -> Result<MlpSpec> {
        let mut w = vec![data_dim + LABEL_DIM];
        w.extend(&self.d_hidden);
        w.push(1);
        MlpSpec::new(w, self.hidden_activation, OutputActivation::Identity)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "latent_dim" => self.latent_dim = parse(key, v)?,
            "g_hidden" => self.g_hidden = parse_widths(key, v)?,
            "d_hidden" => self.d_hidden = parse_widths(key, v)?,
            "hidden_activation" => {
                self.hidden_activation = match v.split_once(':') {
                    _ if v == "tanh" => HiddenActivation::Tanh,
                    Some(("leaky_relu", s)) => HiddenActivation::LeakyRelu { slope: parse(key, s)? },
                    None if v == "leaky_relu" => HiddenActivation::LeakyRelu { slope: 0.2 },
                    _ => return Err(Error::Config(format!("{key}: expected tanh or leaky_relu[:slope], got {v:?}"))),
                }
            }
            "lambda_gp" => self.lambda_gp = parse(key, v)?,
            "n_critic" => self.n_critic = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "lr" => self.adam.lr = parse(key, v)?,
            "beta1" => self.adam.beta1 = parse(key, v)?,
            "beta2" => self.adam.beta2 = parse(key, v)?,
            "adam_eps" => self.adam.eps = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "loss_mode" => self.loss_mode = v.parse()?,
            "precision" => self.precision = v.parse()?,
            "max_samples" => self.max_samples = if v == "none" { None } else { Some(parse(key, v)?) },
            other => return Err(Error::Config(format!("unknown training key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` file. Blank lines and `#` comments are ignored;
    /// keys this struct does not know are returned to the caller.
    pub fn apply_file_text(&mut self, text: &str) -> Result<Vec<(String, String)>> {
        let mut unknown = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {raw:?}", n + 1)))?;
            match self.set(k, v) {
                Ok(()) => {}
                Err(Error::Config(m)) if m.starts_with("unknown training key") => {
                    unknown.push((k.trim().to_string(), v.trim().to_string()))
                }
                Err(Error::Config(m)) => return Err(Error::Config(format!("line {}: {m}", n + 1))),
                Err(e) => return Err(e),
            }
        }
        Ok(unknown)
    }
}
