use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::cell_problems::GradientAnchor;
use crate::error::{Error, Result};
use crate::field::{Kappa, Source};
use crate::geometry::Period;

/// How continuum errors are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    /// sqrt(Σ|Ū − ū|² / Σ|ū|²), a relative L2 norm.
    #[default]
    Sqrt,
    /// Σ|Ū − ū|² / Σ|ū|² without the square root.
    Ratio,
}

impl std::str::FromStr for ErrorNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrt" => Ok(ErrorNorm::Sqrt),
            "ratio" => Ok(ErrorNorm::Ratio),
            other => Err(Error::InvalidParameter(format!("unknown error norm `{other}`"))),
        }
    }
}

pub const DEFAULT_N_FINE: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub structure: u32,
    pub kappa: Kappa,
    #[serde(with = "period_str")]
    pub eps: Period,
    pub layers: usize,
    pub n_fine: usize,
    pub gradient_load: bool,
    pub dump_basis: bool,
    pub error_norm: ErrorNorm,
    pub anchor: GradientAnchor,
    pub source_amplitude: f64,
    pub out: Option<PathBuf>,
}

mod period_str {
    use super::Period;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Period, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&p.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Period, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            structure: 1,
            kappa: Kappa::ConstantOne,
            eps: Period::from_inverse(10).unwrap(),
            layers: 1,
            n_fine: DEFAULT_N_FINE,
            gradient_load: true,
            dump_basis: false,
            error_norm: ErrorNorm::Sqrt,
            anchor: GradientAnchor::Central,
            source_amplitude: 1.0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.structure) {
            return Err(Error::UnknownStructure(self.structure));
        }
        if self.layers > 2 {
            return Err(Error::Config(format!("layers must be 0, 1 or 2 (got {})", self.layers)));
        }
        if self.eps.inverse() < 2 {
            return Err(Error::Config("need at least 2 coarse blocks per side".into()));
        }
        if self.n_fine < 20 || self.n_fine % 4 != 0 {
            return Err(Error::Config(format!(
                "n_fine = {} must be >= 20 and divisible by 4",
                self.n_fine
            )));
        }
        if !self.source_amplitude.is_finite() {
            return Err(Error::Config("source amplitude must be finite".into()));
        }
        Ok(())
    }

    pub fn source(&self) -> Source {
        Source { amplitude: self.source_amplitude }
    }

    /// Short identifier used for per-case output directories.
    pub fn tag(&self) -> String {
        format!("s{}_{}_eps{}_l{}", self.structure, self.kappa.cli_name(), self.eps.inverse(), self.layers)
    }

    /// Overlay a flat JSON object of settings onto `self`.
    ///
    /// Keys: `structure`, `kappa`, `eps`, `layers`, `n_fine`, `grad_load`,
    /// `dump_basis`, `error_norm`, `anchor`, `source_amplitude`, `out`.
    /// Dashes and underscores are interchangeable in keys.
    pub fn apply_json(&mut self, text: &str) -> Result<()> {
        let value: Value = serde_json::from_str(text)?;
        let Value::Object(map) = value else {
            return Err(Error::Config("config must be a flat JSON object".into()));
        };
        self.apply_map(&map)
    }

    fn apply_map(&mut self, map: &Map<String, Value>) -> Result<()> {
        for (key, v) in map {
            let k = key.replace('-', "_");
            match k.as_str() {
                "structure" => self.structure = as_u64(&k, v)? as u32,
                "kappa" | "kappa_id" => self.kappa = as_text(&k, v)?.parse()?,
                "eps" => self.eps = as_text(&k, v)?.parse()?,
                "layers" | "l" => self.layers = as_u64(&k, v)? as usize,
                "n_fine" => self.n_fine = as_u64(&k, v)? as usize,
                "grad_load" | "gradient_load" => self.gradient_load = as_switch(&k, v)?,
                "dump_basis" => self.dump_basis = as_switch(&k, v)?,
                "error_norm" => self.error_norm = as_text(&k, v)?.parse()?,
                "anchor" => {
                    self.anchor = match as_text(&k, v)?.as_str() {
                        "central" => GradientAnchor::Central,
                        "per_block" | "per-block" => GradientAnchor::PerBlock,
                        other => return Err(Error::Config(format!("unknown anchor `{other}`"))),
                    }
                }
                "source_amplitude" => {
                    self.source_amplitude =
                        v.as_f64().ok_or_else(|| Error::Config(format!("`{k}` must be a number")))?
                }
                "out" => self.out = Some(PathBuf::from(as_text(&k, v)?)),
                _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
            }
        }
        Ok(())
    }
}

fn as_u64(k: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .ok_or_else(|| Error::Config(format!("`{k}` must be a non-negative integer")))
}

fn as_text(k: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::Config(format!("`{k}` must be a string"))),
    }
}

fn as_switch(k: &str, v: &Value) -> Result<bool> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::String(s) => parse_switch(s).ok_or_else(|| Error::Config(format!("`{k}` must be on/off"))),
        _ => Err(Error::Config(format!("`{k}` must be on/off"))),
    }
}

pub fn parse_switch(s: &str) -> Option<bool> {
    match s.trim() {
        "on" | "true" | "yes" | "1" => Some(true),
        "off" | "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_overlay() {
        let mut c = ExperimentConfig::default();
        c.apply_json(r#"{"structure": 2, "kappa": "sine", "eps": "1/20", "layers": 2, "grad-load": "off", "out": "x"}"#)
            .unwrap();
        assert_eq!(c.structure, 2);
        assert_eq!(c.kappa, Kappa::TwoPlusSine);
        assert_eq!(c.eps.inverse(), 20);
        assert_eq!(c.layers, 2);
        assert!(!c.gradient_load);
        assert_eq!(c.out, Some(PathBuf::from("x")));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::default();
        assert!(c.apply_json(r#"{"colour": 1}"#).is_err());
        c.layers = 3;
        assert!(c.validate().is_err());
        let c = ExperimentConfig { n_fine: 42, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { structure: 5, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let c = ExperimentConfig { eps: Period::from_inverse(40).unwrap(), ..Default::default() };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"1/40\""));
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
