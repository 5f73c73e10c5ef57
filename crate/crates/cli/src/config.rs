//! Run configuration: `key = value` file merged with command-line flags.
//! Unknown keys are rejected, flags win, and the fully-resolved result is
//! echoed into every output directory.

use dnsp_core::imaging::DegradationSpec;
use dnsp_core::network::{srcnn_9_1_5, tiny_3_layer, LayerSpec};
use dnsp_core::training::HyperParams;
use dnsp_core::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub hp: HyperParams,
    pub degradation: DegradationSpec,
    pub profile: String,
    pub patch: usize,
    pub stride: usize,
    pub fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hp: HyperParams::default(),
            degradation: DegradationSpec { blur_sigma: 1.0, scale: 2 },
            profile: "srcnn".into(),
            patch: 40,
            stride: 40,
            fraction: 1.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Configuration(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Configuration(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::Configuration(format!("invalid value '{value}' for key '{key}'"))
            })
        }
        match key {
            "delta" => self.hp.delta = num(key, value)?,
            "alpha" => self.hp.alpha = num(key, value)?,
            "beta" => self.hp.beta = num(key, value)?,
            "eta" => self.hp.eta = num(key, value)?,
            "eta_last_layer_ratio" => self.hp.eta_last_layer_ratio = num(key, value)?,
            "batch_size" => self.hp.batch_size = num(key, value)?,
            "epochs" => self.hp.epochs = num(key, value)?,
            "seed" => self.hp.seed = num(key, value)?,
            "blur_sigma" => self.degradation.blur_sigma = num(key, value)?,
            "scale" => self.degradation.scale = num(key, value)?,
            "profile" => self.profile = value.to_string(),
            "patch" => self.patch = num(key, value)?,
            "stride" => self.stride = num(key, value)?,
            "fraction" => self.fraction = num(key, value)?,
            other => {
                return Err(Error::Configuration(format!("unknown config key '{other}'")))
            }
        }
        Ok(())
    }

    pub fn layer_specs(&self) -> Result<Vec<LayerSpec>> {
        match self.profile.as_str() {
            "srcnn" => Ok(srcnn_9_1_5()),
            "tiny" => Ok(tiny_3_layer()),
            other => Err(Error::Configuration(format!(
                "unknown profile '{other}', expected srcnn or tiny"
            ))),
        }
    }

    /// Plain-text rendering, readable back by [`RunConfig::load`].
    pub fn render(&self) -> String {
        format!(
            "delta = {}\nalpha = {}\nbeta = {}\neta = {}\neta_last_layer_ratio = {}\n\
             batch_size = {}\nepochs = {}\nseed = {}\nblur_sigma = {}\nscale = {}\n\
             profile = {}\npatch = {}\nstride = {}\nfraction = {}\n",
            self.hp.delta,
            self.hp.alpha,
            self.hp.beta,
            self.hp.eta,
            self.hp.eta_last_layer_ratio,
            self.hp.batch_size,
            self.hp.epochs,
            self.hp.seed,
            self.degradation.blur_sigma,
            self.degradation.scale,
            self.profile,
            self.patch,
            self.stride,
            self.fraction,
        )
    }

    pub fn write_into(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("config.txt"), self.render())?;
        Ok(())
    }
}
