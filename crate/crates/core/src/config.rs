//! Plain `key=value` configuration, one entry per line, `#` starts a comment.
//!
//! Missing keys keep their defaults; unknown or repeated keys are rejected.

use crate::template::FusionMode;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mfrat_window: usize,
    pub fusion_r: u64,
    pub block_size: usize,
    pub block_count: usize,
    pub cell_size: usize,
    pub iom_l: usize,
    pub iom_k: usize,
    pub mode: FusionMode,
    pub w_o: f64,
    pub shift_radius: usize,
    pub cyclic_wrap: bool,
    pub hessian_threshold: f64,
    /// Box filter sizes of the detector, comma separated in text form.
    pub hessian_sizes: Vec<usize>,
    /// Apply the fixed affine maps when fusing; off concatenates raw codes.
    pub segment_scaling: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mfrat_window: 13,
            fusion_r: 8,
            block_size: 24,
            block_count: 36,
            cell_size: 4,
            iom_l: 420,
            iom_k: 50,
            mode: FusionMode::Raw,
            w_o: 0.5,
            shift_radius: 0,
            cyclic_wrap: false,
            hessian_threshold: 1000.0,
            hessian_sizes: vec![9, 15, 21],
            segment_scaling: true,
        }
    }
}

pub const KEYS: [&str; 14] = [
    "mfrat_window",
    "fusion_r",
    "block_size",
    "block_count",
    "cell_size",
    "iom_l",
    "iom_k",
    "mode",
    "w_o",
    "shift_radius",
    "cyclic_wrap",
    "hessian_threshold",
    "hessian_sizes",
    "segment_scaling",
];

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if seen.contains(&key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(key);
            cfg.set(line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "mfrat_window" => self.mfrat_window = parse_value(line, key, value)?,
            "fusion_r" => self.fusion_r = parse_value(line, key, value)?,
            "block_size" => self.block_size = parse_value(line, key, value)?,
            "block_count" => self.block_count = parse_value(line, key, value)?,
            "cell_size" => self.cell_size = parse_value(line, key, value)?,
            "iom_l" => self.iom_l = parse_value(line, key, value)?,
            "iom_k" => self.iom_k = parse_value(line, key, value)?,
            "mode" => self.mode = parse_value(line, key, value)?,
            "w_o" => self.w_o = parse_value(line, key, value)?,
            "shift_radius" => self.shift_radius = parse_value(line, key, value)?,
            "cyclic_wrap" => self.cyclic_wrap = parse_value(line, key, value)?,
            "hessian_threshold" => self.hessian_threshold = parse_value(line, key, value)?,
            "segment_scaling" => self.segment_scaling = parse_value(line, key, value)?,
            "hessian_sizes" => {
                self.hessian_sizes = value
                    .split(',')
                    .map(|s| parse_value(line, key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            _ => unreachable!("key checked against KEYS"),
        }
        Ok(())
    }

    /// Cross-field checks; per-module parameter checks run when the pipeline is built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Inconsistent(msg));
        if self.cell_size == 0 || !self.block_size.is_multiple_of(self.cell_size) {
            return bad(format!(
                "cell_size {} must divide block_size {}",
                self.cell_size, self.block_size
            ));
        }
        if self.block_count == 0 {
            return bad("block_count must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.w_o) {
            return bad(format!("w_o {} outside [0, 1]", self.w_o));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in self.echo_lines() {
            let _ = writeln!(out, "{line}");
        }
        out
    }

    /// One `key=value` string per key, in [`KEYS`] order.
    pub fn echo_lines(&self) -> Vec<String> {
        let sizes: Vec<String> = self.hessian_sizes.iter().map(|s| s.to_string()).collect();
        vec![
            format!("mfrat_window={}", self.mfrat_window),
            format!("fusion_r={}", self.fusion_r),
            format!("block_size={}", self.block_size),
            format!("block_count={}", self.block_count),
            format!("cell_size={}", self.cell_size),
            format!("iom_l={}", self.iom_l),
            format!("iom_k={}", self.iom_k),
            format!("mode={}", self.mode.name()),
            format!("w_o={}", self.w_o),
            format!("shift_radius={}", self.shift_radius),
            format!("cyclic_wrap={}", self.cyclic_wrap),
            format!("hessian_threshold={}", self.hessian_threshold),
            format!("hessian_sizes={}", sizes.join(",")),
            format!("segment_scaling={}", self.segment_scaling),
        ]
    }
}
