//! Unit-suffixed quantity parsing.
//!
//! Inputs such as `10GHz`, `10 mK`, `2.03A`, `0.2um` or `2e8A3` are converted
//! to SI exactly once, here. A bare number is taken to be SI already.

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Temperature,
    Length,
    Volume,
    Dimensionless,
}

impl Dimension {
    fn suffixes(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Frequency => &[
                ("Hz", 1.0),
                ("kHz", 1e3),
                ("MHz", 1e6),
                ("GHz", 1e9),
                ("THz", 1e12),
            ],
            Dimension::Temperature => &[("K", 1.0), ("mK", 1e-3), ("uK", 1e-6), ("μK", 1e-6)],
            Dimension::Length => &[
                ("m", 1.0),
                ("mm", 1e-3),
                ("um", 1e-6),
                ("μm", 1e-6),
                ("nm", 1e-9),
                ("A", 1e-10),
                ("Å", 1e-10),
            ],
            Dimension::Volume => &[
                ("m3", 1.0),
                ("mm3", 1e-9),
                ("um3", 1e-18),
                ("μm3", 1e-18),
                ("nm3", 1e-27),
                ("A3", 1e-30),
                ("Å3", 1e-30),
            ],
            Dimension::Dimensionless => &[],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Frequency => "frequency",
            Dimension::Temperature => "temperature",
            Dimension::Length => "length",
            Dimension::Volume => "volume",
            Dimension::Dimensionless => "dimensionless number",
        }
    }
}

/// Parses `text` as a quantity of the given dimension and returns its SI value.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let s = text.trim();
    let split = numeric_prefix_len(s);
    if split == 0 {
        return Err(parse_err(text, dim, "missing numeric value"));
    }
    let (num, suffix) = s.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| parse_err(text, dim, "malformed number"))?;
    let suffix = suffix.trim();
    let scale = if suffix.is_empty() {
        1.0
    } else {
        dim.suffixes()
            .iter()
            .find(|(s, _)| *s == suffix)
            .map(|(_, f)| *f)
            .ok_or_else(|| parse_err(text, dim, &format!("unknown unit '{suffix}'")))?
    };
    let si = value * scale;
    if !si.is_finite() {
        return Err(parse_err(text, dim, "value is not finite"));
    }
    Ok(si)
}

fn parse_err(text: &str, dim: Dimension, msg: &str) -> Error {
    Error::Parse {
        context: format!("{} '{}'", dim.name(), text),
        message: msg.to_string(),
    }
}

// Longest prefix that looks like a float literal: sign, digits, point, exponent.
fn numeric_prefix_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let mut digits = 0;
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
        digits += 1;
    }
    if digits == 0 {
        return 0;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > start {
            i = j;
        }
    }
    i
}

/// A number in a structured text file: either a bare SI float or a string
/// carrying a unit suffix.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum QuantityText {
    Number(f64),
    Text(String),
}

impl QuantityText {
    pub fn to_si(&self, dim: Dimension) -> Result<f64> {
        match self {
            QuantityText::Number(x) => Ok(*x),
            QuantityText::Text(s) => parse_quantity(s, dim),
        }
    }
}
