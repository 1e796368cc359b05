//! The single text config holding every threshold, as TOML:
//!
//! ```toml
//! seed = 7
//! [ground]
//! lambda = 0.6
//! [direction]
//! tau = 0.8
//! [fusion]
//! zeta = 0.7
//! [eval]
//! bands = [[0.5, 1.0], [1.0, 1.5]]
//! ```
//!
//! Missing keys take their defaults. Any error names the offending key as
//! `section.field`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::direction::DirectionConfig;
use crate::error::EvalError;
use crate::fusion::FusionConfig;
use crate::ground::GroundConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// World-frame forward distance bands `[lo, hi)`, meters.
    pub bands: Vec<[f64; 2]>,
    pub iou_thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bands: vec![[0.5, 1.0], [1.0, 1.5], [1.5, 2.0], [2.0, 2.5], [2.5, 3.0]],
            iou_thresholds: vec![0.1, 0.2, 0.3, 0.4, 0.45],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.bands.is_empty() {
            return Err(("bands", "at least one band is required".into()));
        }
        if let Some(b) = self.bands.iter().find(|b| !(b[0] >= 0.0 && b[1] > b[0])) {
            return Err(("bands", format!("band {b:?} must satisfy 0 <= lo < hi")));
        }
        if let Some(t) = self.iou_thresholds.iter().find(|t| !(0.0..=0.5).contains(*t)) {
            return Err(("iou_thresholds", format!("{t} outside [0, 0.5]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Base RANSAC seed; frame `i` uses `seed + i`.
    pub seed: u64,
    pub ground: GroundConfig,
    pub direction: DirectionConfig,
    pub fusion: FusionConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| EvalError::config("<root>", e.message().to_string()))?;
        let mut cfg = Config::default();
        for (key, value) in table {
            match key.as_str() {
                "seed" => {
                    cfg.seed = value
                        .as_integer()
                        .and_then(|v| u64::try_from(v).ok())
                        .ok_or_else(|| EvalError::config("seed", "expected a non-negative integer"))?;
                }
                "ground" => cfg.ground = section("ground", value)?,
                "direction" => cfg.direction = section("direction", value)?,
                "fusion" => cfg.fusion = section("fusion", value)?,
                "eval" => cfg.eval = section("eval", value)?,
                other => return Err(EvalError::config(other, "unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let name = |s: &str, r: Result<(), (&'static str, String)>| {
            r.map_err(|(k, m)| EvalError::config(format!("{s}.{k}"), m))
        };
        name("ground", self.ground.validate())?;
        name("direction", self.direction.validate())?;
        name("fusion", self.fusion.validate())?;
        name("eval", self.eval.validate())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}

/// Deserializes one section key by key so a type error can name its field.
fn section<T: DeserializeOwned + Serialize + Default>(name: &str, value: toml::Value) -> Result<T, EvalError> {
    let toml::Value::Table(table) = value else {
        return Err(EvalError::config(name, "expected a table"));
    };
    let known = toml::Table::try_from(T::default()).expect("defaults serialize");
    for (k, v) in &table {
        if !known.contains_key(k) {
            return Err(EvalError::config(format!("{name}.{k}"), "unknown key"));
        }
        let mut one = toml::Table::new();
        one.insert(k.clone(), v.clone());
        T::deserialize(one).map_err(|e| EvalError::config(format!("{name}.{k}"), e.message().to_string()))?;
    }
    T::deserialize(table).map_err(|e| EvalError::config(name, e.message().to_string()))
}
