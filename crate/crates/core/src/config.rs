//! Plain-text `key = value` configuration.
//!
//! Precedence is defaults, then the config file (`--config` or the
//! `STPD_CONFIG` environment variable), then command-line flags. Flags are
//! applied through the same keys, so every setting is validated in one
//! place. Unknown keys are errors.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::perceptual::PerceptualModelParams;
use crate::tradeoff::TradeoffConfig;
use crate::video_io::ValueRange;

pub const CONFIG_ENV: &str = "STPD_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub flow: FlowParams,
    pub perceptual: PerceptualModelParams,
    pub tradeoff: TradeoffConfig,
    pub skip_degenerate: bool,
    pub niqe_patch_size: usize,
    pub niqe_sharpness_fraction: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            flow: FlowParams::default(),
            perceptual: PerceptualModelParams::default(),
            tradeoff: TradeoffConfig::default(),
            skip_degenerate: false,
            niqe_patch_size: 96,
            niqe_sharpness_fraction: 0.75,
        }
    }
}

/// Every recognised key, for `--help` text and error messages.
pub const KEYS: [&str; 21] = [
    "alpha",
    "pixel_range",
    "spatial",
    "skip_degenerate",
    "flow.levels",
    "flow.scale",
    "flow.lambda",
    "flow.iters",
    "psh.crop",
    "psh.downscale",
    "psh.gamma",
    "psh.sigma_center",
    "psh.sigma_surround",
    "psh.gain_window",
    "psh.gain_epsilon",
    "psh.v1",
    "psh.v1_orientations",
    "psh.v1_scales",
    "psh.v1_pool",
    "niqe.patch_size",
    "niqe.sharpness_fraction",
];

fn parse<T: std::str::FromStr>(value: &str, location: &str, key: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        location: location.to_string(),
        reason: format!("{key}: cannot parse {value:?}"),
    })
}

fn parse_bool(value: &str, location: &str, key: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config {
            location: location.to_string(),
            reason: format!("{key}: expected true or false, got {value:?}"),
        }),
    }
}

/// `H`, `HxW`.
fn parse_crop(value: &str, location: &str) -> Result<(usize, usize)> {
    match value.split_once(['x', 'X']) {
        Some((h, w)) => Ok((parse(h.trim(), location, "psh.crop")?, parse(w.trim(), location, "psh.crop")?)),
        None => {
            let s = parse(value, location, "psh.crop")?;
            Ok((s, s))
        }
    }
}

impl Settings {
    /// Apply one setting; `location` names its origin for diagnostics.
    pub fn apply(&mut self, key: &str, value: &str, location: &str) -> Result<()> {
        let value = value.trim();
        let p = &mut self.perceptual;
        match key {
            "alpha" => self.tradeoff.alpha = parse(value, location, key)?,
            "pixel_range" => {
                self.tradeoff.pixel_range = match value {
                    "byte" => ValueRange::Byte,
                    "unit" => ValueRange::Unit,
                    _ => {
                        return Err(Error::Config {
                            location: location.into(),
                            reason: format!("pixel_range: expected byte or unit, got {value:?}"),
                        })
                    }
                }
            }
            "spatial" => {
                self.tradeoff.spatial_metric = value.parse().map_err(|e: Error| Error::Config {
                    location: location.into(),
                    reason: e.to_string(),
                })?
            }
            "skip_degenerate" => self.skip_degenerate = parse_bool(value, location, key)?,
            "flow.levels" => self.flow.pyramid_levels = parse(value, location, key)?,
            "flow.scale" => self.flow.pyramid_scale = parse(value, location, key)?,
            "flow.lambda" => self.flow.smoothness = parse(value, location, key)?,
            "flow.iters" => self.flow.iterations_per_level = parse(value, location, key)?,
            "psh.crop" => p.crop = parse_crop(value, location)?,
            "psh.downscale" => p.downscale = parse(value, location, key)?,
            "psh.gamma" => p.gamma = parse(value, location, key)?,
            "psh.sigma_center" => p.dog_sigma_center = parse(value, location, key)?,
            "psh.sigma_surround" => p.dog_sigma_surround = parse(value, location, key)?,
            "psh.gain_window" => p.gain_window = parse(value, location, key)?,
            "psh.gain_epsilon" => p.gain_epsilon = parse(value, location, key)?,
            "psh.v1" => p.v1_enabled = parse_bool(value, location, key)?,
            "psh.v1_orientations" => p.v1_orientations = parse(value, location, key)?,
            "psh.v1_scales" => p.v1_scales = parse(value, location, key)?,
            "psh.v1_pool" => p.v1_pool = parse(value, location, key)?,
            "niqe.patch_size" => self.niqe_patch_size = parse(value, location, key)?,
            "niqe.sharpness_fraction" => self.niqe_sharpness_fraction = parse(value, location, key)?,
            other => {
                return Err(Error::Config {
                    location: location.into(),
                    reason: format!("unknown key {other:?}"),
                })
            }
        }
        Ok(())
    }

    /// Apply a config file's contents. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let location = format!("{}:{}", origin.display(), i + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                location: location.clone(),
                reason: format!("expected key = value, got {line:?}"),
            })?;
            self.apply(key.trim(), value, &location)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// Defaults overlaid with the explicit config file, or else the one
    /// named by `STPD_CONFIG`.
    pub fn load(explicit: Option<&Path>) -> Result<Settings> {
        let mut s = Settings::default();
        let path: Option<PathBuf> = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        if let Some(p) = path {
            s.apply_file(&p)?;
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        self.perceptual.validate()?;
        self.tradeoff.validate()?;
        if self.niqe_patch_size < 8 || !self.niqe_patch_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "niqe.patch_size {} must be even and at least 8",
                self.niqe_patch_size
            )));
        }
        if !(self.niqe_sharpness_fraction > 0.0 && self.niqe_sharpness_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "niqe.sharpness_fraction {} must lie in (0, 1]",
                self.niqe_sharpness_fraction
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::SpatialMetric;

    #[test]
    fn file_then_flag_precedence() {
        let mut s = Settings::default();
        s.apply_text("# comment\nalpha = 500\npsh.crop = 128x64\n\nspatial = niqe # inline\n", Path::new("c"))
            .unwrap();
        assert_eq!(s.tradeoff.alpha, 500.0);
        assert_eq!(s.perceptual.crop, (128, 64));
        assert_eq!(s.tradeoff.spatial_metric, SpatialMetric::Niqe);
        s.apply("alpha", "250", "--alpha").unwrap();
        assert_eq!(s.tradeoff.alpha, 250.0);
        assert_eq!(s.flow, FlowParams::default());
    }

    #[test]
    fn errors_name_the_line() {
        let mut s = Settings::default();
        let e = s.apply_text("alpha = 1\nbogus = 2\n", Path::new("c.conf")).unwrap_err();
        assert!(e.to_string().contains("c.conf:2"), "{e}");
        assert!(s.apply_text("psh.v1 = maybe", Path::new("c")).is_err());
        assert!(s.apply_text("no equals sign", Path::new("c")).is_err());
    }

    #[test]
    fn keys_are_all_accepted() {
        let sample = |k: &str| match k {
            "pixel_range" => "unit",
            "spatial" => "lpips_vgg",
            "skip_degenerate" | "psh.v1" => "true",
            "psh.crop" => "64",
            _ => "2",
        };
        let mut s = Settings::default();
        for k in KEYS {
            s.apply(k, sample(k), "t").unwrap();
        }
    }
}
