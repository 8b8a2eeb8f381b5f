//! Unit-carrying quantities as they appear in scenario files.
//!
//! Every physical value is written as `<number> <unit>`. Parsing checks the
//! unit against the expected dimension and converts to SI.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Current,
    Length,
    Time,
    Temperature,
    Field,
    Gradient,
    Angle,
    Speed,
}

impl Dimension {
    /// SI unit used when writing values back out.
    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Current => "A",
            Dimension::Length => "m",
            Dimension::Time => "s",
            Dimension::Temperature => "K",
            Dimension::Field => "T",
            Dimension::Gradient => "T/m",
            Dimension::Angle => "rad",
            Dimension::Speed => "m/s",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Current => "current",
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Temperature => "temperature",
            Dimension::Field => "magnetic field",
            Dimension::Gradient => "field gradient",
            Dimension::Angle => "angle",
            Dimension::Speed => "speed",
        };
        f.write_str(s)
    }
}

const UNITS: &[(&str, Dimension, f64)] = &[
    ("A", Dimension::Current, 1.0),
    ("m", Dimension::Length, 1.0),
    ("mm", Dimension::Length, 1e-3),
    ("µm", Dimension::Length, 1e-6),
    ("um", Dimension::Length, 1e-6),
    ("s", Dimension::Time, 1.0),
    ("ms", Dimension::Time, 1e-3),
    ("µs", Dimension::Time, 1e-6),
    ("us", Dimension::Time, 1e-6),
    ("K", Dimension::Temperature, 1.0),
    ("µK", Dimension::Temperature, 1e-6),
    ("uK", Dimension::Temperature, 1e-6),
    ("T", Dimension::Field, 1.0),
    ("G", Dimension::Field, 1e-4),
    ("T/m", Dimension::Gradient, 1.0),
    ("G/cm", Dimension::Gradient, 1e-2),
    ("rad", Dimension::Angle, 1.0),
    ("deg", Dimension::Angle, std::f64::consts::PI / 180.0),
    ("m/s", Dimension::Speed, 1.0),
];

#[derive(Debug, Clone, PartialEq)]
pub enum UnitError {
    Malformed(String),
    UnknownUnit(String),
    WrongDimension {
        unit: String,
        expected: Dimension,
        found: Dimension,
    },
}

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitError::Malformed(s) => write!(f, "expected `<number> <unit>`, got `{s}`"),
            UnitError::UnknownUnit(u) => write!(f, "unknown unit `{u}`"),
            UnitError::WrongDimension {
                unit,
                expected,
                found,
            } => write!(f, "unit `{unit}` is a {found}, expected a {expected}"),
        }
    }
}

impl std::error::Error for UnitError {}

/// Parse `"<number> <unit>"` into an SI value of the expected dimension.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64, UnitError> {
    let trimmed = text.trim();
    let split = trimmed
        .find(|c: char| c.is_whitespace())
        .ok_or_else(|| UnitError::Malformed(trimmed.to_string()))?;
    let (num, unit) = trimmed.split_at(split);
    let unit = unit.trim();
    let value: f64 = num
        .parse()
        .map_err(|_| UnitError::Malformed(trimmed.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::Malformed(trimmed.to_string()));
    }
    let (_, dim, factor) = UNITS
        .iter()
        .find(|(u, _, _)| *u == unit)
        .ok_or_else(|| UnitError::UnknownUnit(unit.to_string()))?;
    if *dim != expected {
        return Err(UnitError::WrongDimension {
            unit: unit.to_string(),
            expected,
            found: *dim,
        });
    }
    Ok(value * factor)
}

/// Format an SI value so that [`parse_quantity`] returns exactly the same f64.
pub fn format_si(value: f64, dim: Dimension) -> String {
    format!("{:?} {}", value, dim.si_unit())
}

pub fn tesla_to_gauss(b: f64) -> f64 {
    b * 1e4
}

pub fn gradient_to_gauss_per_cm(g: f64) -> f64 {
    g * 100.0
}

pub fn kelvin_to_mk(t: f64) -> f64 {
    t * 1e3
}

pub fn kelvin_to_uk(t: f64) -> f64 {
    t * 1e6
}
