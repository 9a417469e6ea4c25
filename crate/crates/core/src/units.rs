//! Unit-annotated quantities for preset files and command-line input.
//!
//! Internally every rate is rad/s, every time is seconds and every fiber
//! length is kilometres. Frequencies quoted in Hz are treated as cycles per
//! second and multiplied by 2π when a rate is requested.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::NUCLEAR_MAGNETON;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    #[serde(default = "dimensionless")]
    pub unit: String,
}

fn dimensionless() -> String {
    "1".to_owned()
}

impl Quantity {
    pub fn new(value: f64, unit: impl Into<String>) -> Self {
        Self {
            value,
            unit: unit.into(),
        }
    }

    pub fn plain(value: f64) -> Self {
        Self::new(value, "1")
    }

    fn unit_key(&self) -> String {
        self.unit.replace(' ', "").to_ascii_lowercase()
    }

    fn err(&self, want: &str) -> Error {
        Error::Unit(format!("`{}` is not a {want} unit", self.unit))
    }

    /// Angular rate in rad/s.
    pub fn rad_per_s(&self) -> Result<f64> {
        let k = self.unit_key();
        let (two_pi, rest) = strip_two_pi(&k);
        let scale = match rest {
            "rad/s" | "1/s" | "s^-1" => {
                if two_pi {
                    TAU
                } else {
                    1.0
                }
            }
            _ => TAU * hz_scale(rest).ok_or_else(|| self.err("rate"))?,
        };
        Ok(self.value * scale)
    }

    /// Frequency in cycles per second.
    pub fn hz(&self) -> Result<f64> {
        let k = self.unit_key();
        let (_, rest) = strip_two_pi(&k);
        if rest == "rad/s" {
            return Ok(self.value / TAU);
        }
        Ok(self.value * hz_scale(rest).ok_or_else(|| self.err("frequency"))?)
    }

    pub fn seconds(&self) -> Result<f64> {
        let scale = match self.unit_key().as_str() {
            "s" => 1.0,
            "ms" => 1e-3,
            "us" | "µs" => 1e-6,
            "ns" => 1e-9,
            _ => return Err(self.err("time")),
        };
        Ok(self.value * scale)
    }

    pub fn meters(&self) -> Result<f64> {
        let scale = match self.unit_key().as_str() {
            "m" => 1.0,
            "km" => 1e3,
            "um" | "µm" => 1e-6,
            "nm" => 1e-9,
            _ => return Err(self.err("length")),
        };
        Ok(self.value * scale)
    }

    pub fn kilometers(&self) -> Result<f64> {
        Ok(self.meters()? / 1e3)
    }

    pub fn meters_per_second(&self) -> Result<f64> {
        match self.unit_key().as_str() {
            "m/s" => Ok(self.value),
            "km/s" => Ok(self.value * 1e3),
            _ => Err(self.err("speed")),
        }
    }

    /// Electric dipole moment in C·m (`debye` also accepted).
    pub fn coulomb_meters(&self) -> Result<f64> {
        match self.unit_key().as_str() {
            "c*m" | "cm" | "c·m" => Ok(self.value),
            "debye" | "d" => Ok(self.value * 3.335_640_951_98e-30),
            _ => Err(self.err("dipole moment")),
        }
    }

    /// Magnetic moment in J/T (`mu_n` for nuclear magnetons).
    pub fn joules_per_tesla(&self) -> Result<f64> {
        match self.unit_key().as_str() {
            "j/t" => Ok(self.value),
            "mu_n" | "μ_n" => Ok(self.value * NUCLEAR_MAGNETON),
            _ => Err(self.err("magnetic moment")),
        }
    }

    pub fn volts_per_meter(&self) -> Result<f64> {
        match self.unit_key().as_str() {
            "v/m" => Ok(self.value),
            "kv/m" => Ok(self.value * 1e3),
            "v/cm" => Ok(self.value * 1e2),
            _ => Err(self.err("electric field")),
        }
    }

    pub fn number(&self) -> Result<f64> {
        match self.unit_key().as_str() {
            "1" | "" => Ok(self.value),
            _ => Err(self.err("dimensionless")),
        }
    }
}

fn strip_two_pi(key: &str) -> (bool, &str) {
    for prefix in ["2pi*", "2*pi*", "2π*", "2π×", "2pi"] {
        if let Some(rest) = key.strip_prefix(prefix) {
            return (true, rest);
        }
    }
    (false, key)
}

fn hz_scale(unit: &str) -> Option<f64> {
    Some(match unit {
        "hz" => 1.0,
        "khz" => 1e3,
        "mhz" => 1e6,
        "ghz" => 1e9,
        "thz" => 1e12,
        _ => return None,
    })
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit == "1" {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{} {}", self.value, self.unit)
        }
    }
}

/// Parses strings such as `2pi*14 Hz`, `2*pi*16MHz`, `85 us`, `0.9` or `1e5 V/m`.
///
/// A `2pi*` prefix on the number is carried into the unit, so `2pi*14 Hz`
/// and `14 2pi*Hz` denote the same rate.
impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (two_pi, body) = {
            let lower = s.to_ascii_lowercase();
            let mut found = None;
            for prefix in ["2*pi*", "2pi*", "2π*", "2π×", "2π"] {
                if lower.starts_with(prefix) {
                    found = Some(prefix.len());
                    break;
                }
            }
            match found {
                Some(n) => (true, s[n..].trim_start()),
                None => (false, s),
            }
        };
        let split = body
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_digit()
                    || c == '.'
                    || c == '+'
                    || c == '-'
                    || ((c == 'e' || c == 'E') && is_exponent(body, i)))
            })
            .map(|(i, _)| i)
            .unwrap_or(body.len());
        let value: f64 = body[..split]
            .parse()
            .map_err(|_| Error::Unit(format!("cannot parse number in `{s}`")))?;
        let unit = body[split..].trim();
        let unit = match (two_pi, unit.is_empty()) {
            (false, true) => "1".to_owned(),
            (false, false) => unit.to_owned(),
            (true, true) => return Ok(Quantity::plain(value * TAU)),
            (true, false) => format!("2pi*{unit}"),
        };
        Ok(Quantity { value, unit })
    }
}

fn is_exponent(body: &str, i: usize) -> bool {
    let next = body[i + 1..].chars().next();
    i > 0 && matches!(next, Some(c) if c.is_ascii_digit() || c == '-' || c == '+')
}
