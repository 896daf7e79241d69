//! Key/value configuration file for the tracker.
//!
//! Format: one `key = value` pair per line; `#` starts a comment. Unknown
//! keys are rejected. Every key has a CLI flag of the same name. Example:
//!
//! ```text
//! # association
//! alpha = 0.7
//! beta = 0.3
//! sigma_iou = 0.6
//! sigma_reid = 0.7
//! sigma_iou_relaxed = 0.1
//! # lifecycle
//! ttl = 15
//! t_min = 3
//! ema_momentum = 0.9
//! backward_enabled = true
//! backward_appearance_only = false
//! predictor = constant_velocity
//! velocity_window = 3
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tracker::TrackerConfig;

/// Parses a config file on top of the default configuration.
pub fn parse_config_file(path: &Path) -> Result<TrackerConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parses config text on top of the default configuration.
pub fn parse_config_str(text: &str, source: &str) -> Result<TrackerConfig> {
    let mut cfg = TrackerConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or_else(|| Error::Config(format!(
            "{source}:{line}: expected `key = value`, got {stripped:?}"
        )))?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, key, value)
            .map_err(|e| Error::Config(format!("{source}:{line}: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Applies one `key = value` override to a configuration.
pub fn apply_key(cfg: &mut TrackerConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::Config(format!("invalid value for {key}: {value:?}")))
    }
    match key {
        "alpha" => cfg.assoc.alpha = num(key, value)?,
        "beta" => cfg.assoc.beta = num(key, value)?,
        "sigma_iou" => cfg.assoc.sigma_iou = num(key, value)?,
        "sigma_reid" => cfg.assoc.sigma_reid = num(key, value)?,
        "sigma_iou_relaxed" => cfg.assoc.sigma_iou_relaxed = num(key, value)?,
        "ttl" => cfg.ttl = num(key, value)?,
        "t_min" => cfg.t_min = num(key, value)?,
        "ema_momentum" => cfg.ema_momentum = num(key, value)?,
        "backward_enabled" => cfg.backward_enabled = num(key, value)?,
        "backward_appearance_only" => cfg.backward_appearance_only = num(key, value)?,
        "predictor" => cfg.predictor = value.parse()?,
        "velocity_window" => cfg.velocity_window = num(key, value)?,
        other => {
            return Err(Error::Config(format!("unknown key {other:?}")));
        }
    }
    Ok(())
}

/// Renders a configuration in the config-file format (used for run
/// manifests and `--dump-config`).
pub fn config_to_string(cfg: &TrackerConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "alpha = {}", cfg.assoc.alpha);
    let _ = writeln!(s, "beta = {}", cfg.assoc.beta);
    let _ = writeln!(s, "sigma_iou = {}", cfg.assoc.sigma_iou);
    let _ = writeln!(s, "sigma_reid = {}", cfg.assoc.sigma_reid);
    let _ = writeln!(s, "sigma_iou_relaxed = {}", cfg.assoc.sigma_iou_relaxed);
    let _ = writeln!(s, "ttl = {}", cfg.ttl);
    let _ = writeln!(s, "t_min = {}", cfg.t_min);
    let _ = writeln!(s, "ema_momentum = {}", cfg.ema_momentum);
    let _ = writeln!(s, "backward_enabled = {}", cfg.backward_enabled);
    let _ = writeln!(s, "backward_appearance_only = {}", cfg.backward_appearance_only);
    let _ = writeln!(s, "predictor = {}", cfg.predictor.as_str());
    let _ = writeln!(s, "velocity_window = {}", cfg.velocity_window);
    s
}
