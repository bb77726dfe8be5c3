//! Coefficient and source fields on [0,1]².

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub trait ScalarField: Sync {
    fn value(&self, x: [f64; 2]) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    fn value(&self, x: [f64; 2]) -> f64 {
        self(x)
    }
}

/// Conductivity choices used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    /// κ = 1
    ConstantOne,
    /// κ = 2 + sin(πx₁) sin(πx₂)
    TwoPlusSine,
    /// κ = 2 + sin(πx₁/2) sin(πx₂/2)
    TwoPlusHalfSine,
}

impl ScalarField for Kappa {
    fn value(&self, x: [f64; 2]) -> f64 {
        match self {
            Kappa::ConstantOne => 1.0,
            Kappa::TwoPlusSine => 2.0 + (PI * x[0]).sin() * (PI * x[1]).sin(),
            Kappa::TwoPlusHalfSine => 2.0 + (0.5 * PI * x[0]).sin() * (0.5 * PI * x[1]).sin(),
        }
    }
}

impl Kappa {
    pub fn cli_name(self) -> &'static str {
        match self {
            Kappa::ConstantOne => "one",
            Kappa::TwoPlusSine => "sine",
            Kappa::TwoPlusHalfSine => "half-sine",
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Kappa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "one" | "constant_one" | "1" => Ok(Kappa::ConstantOne),
            "sine" | "two_plus_sine" => Ok(Kappa::TwoPlusSine),
            "half-sine" | "half_sine" | "two_plus_half_sine" => Ok(Kappa::TwoPlusHalfSine),
            other => Err(Error::InvalidParameter(format!("unknown kappa `{other}`"))),
        }
    }
}

/// f = amplitude · 5π² sin(2πx₁) sin(πx₂)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub amplitude: f64,
}

impl Default for Source {
    fn default() -> Self {
        Source { amplitude: 1.0 }
    }
}

impl ScalarField for Source {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.amplitude * 5.0 * PI * PI * (2.0 * PI * x[0]).sin() * (PI * x[1]).sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_values() {
        assert_eq!(Kappa::ConstantOne.value([0.3, 0.7]), 1.0);
        assert!((Kappa::TwoPlusSine.value([0.5, 0.5]) - 3.0).abs() < 1e-15);
        assert!((Kappa::TwoPlusHalfSine.value([1.0, 1.0]) - 3.0).abs() < 1e-15);
        assert_eq!("sine".parse::<Kappa>().unwrap(), Kappa::TwoPlusSine);
        assert!("cosine".parse::<Kappa>().is_err());
    }

    #[test]
    fn source_vanishes_on_boundary() {
        let f = Source::default();
        for t in [0.0, 0.25, 0.6, 1.0] {
            assert!(f.value([t, 0.0]).abs() < 1e-12);
            assert!(f.value([0.0, t]).abs() < 1e-12);
            assert!(f.value([1.0, t]).abs() < 1e-12);
        }
        assert!((f.value([0.25, 0.5]) - 5.0 * PI * PI).abs() < 1e-12);
    }
}
