//! Quantities with unit suffixes, e.g. `"10 ms"`, `"72 MHz"`, `"4.5 cm"`.
//!
//! Everything is normalized to SI before the scenario is deserialized.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Voltage,
    Current,
    Time,
    Frequency,
    Length,
    Power,
    Resistance,
    Inductance,
    Angle,
    /// Sensor transfer ratio such as V/V or A/V.
    Gain,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Voltage => "voltage",
            Self::Current => "current",
            Self::Time => "time",
            Self::Frequency => "frequency",
            Self::Length => "length",
            Self::Power => "power",
            Self::Resistance => "resistance",
            Self::Inductance => "inductance",
            Self::Angle => "angle",
            Self::Gain => "gain",
        };
        f.write_str(s)
    }
}

/// Unit symbol, dimension, and power of ten.
const UNITS: &[(&str, Dimension, i32)] = &[
    ("kV", Dimension::Voltage, 3),
    ("V", Dimension::Voltage, 0),
    ("mV", Dimension::Voltage, -3),
    ("uV", Dimension::Voltage, -6),
    ("µV", Dimension::Voltage, -6),
    ("kA", Dimension::Current, 3),
    ("A", Dimension::Current, 0),
    ("mA", Dimension::Current, -3),
    ("uA", Dimension::Current, -6),
    ("µA", Dimension::Current, -6),
    ("s", Dimension::Time, 0),
    ("ms", Dimension::Time, -3),
    ("us", Dimension::Time, -6),
    ("µs", Dimension::Time, -6),
    ("ns", Dimension::Time, -9),
    ("Hz", Dimension::Frequency, 0),
    ("kHz", Dimension::Frequency, 3),
    ("MHz", Dimension::Frequency, 6),
    ("GHz", Dimension::Frequency, 9),
    ("m", Dimension::Length, 0),
    ("cm", Dimension::Length, -2),
    ("mm", Dimension::Length, -3),
    ("um", Dimension::Length, -6),
    ("µm", Dimension::Length, -6),
    ("kW", Dimension::Power, 3),
    ("W", Dimension::Power, 0),
    ("mW", Dimension::Power, -3),
    ("uW", Dimension::Power, -6),
    ("µW", Dimension::Power, -6),
    ("Ohm", Dimension::Resistance, 0),
    ("ohm", Dimension::Resistance, 0),
    ("Ω", Dimension::Resistance, 0),
    ("mOhm", Dimension::Resistance, -3),
    ("mΩ", Dimension::Resistance, -3),
    ("kOhm", Dimension::Resistance, 3),
    ("kΩ", Dimension::Resistance, 3),
    ("H", Dimension::Inductance, 0),
    ("uH", Dimension::Inductance, -6),
    ("µH", Dimension::Inductance, -6),
    ("nH", Dimension::Inductance, -9),
    ("deg", Dimension::Angle, 0),
    ("°", Dimension::Angle, 0),
    ("V/V", Dimension::Gain, 0),
    ("A/V", Dimension::Gain, 0),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    /// `None` for a bare number.
    pub dimension: Option<Dimension>,
}

/// True when the string looks like it is meant as a number.
pub fn looks_numeric(s: &str) -> bool {
    let s = s.trim_start();
    matches!(s.chars().next(), Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
}

/// Parses `"<number> <unit>"` (the space is optional) into SI.
pub fn parse_quantity(s: &str) -> Result<Quantity, String> {
    let s = s.trim();
    let split = s
        .char_indices()
        .find(|&(i, c)| {
            let numeric = c.is_ascii_digit() || matches!(c, '.' | '-' | '+');
            // an exponent marker only counts when followed by a digit or sign
            let exponent = matches!(c, 'e' | 'E')
                && i > 0
                && s[i + 1..]
                    .chars()
                    .next()
                    .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+');
            !(numeric || exponent)
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num.parse().map_err(|_| format!("`{s}` does not start with a number"))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(Quantity { value, dimension: None });
    }
    let &(_, dim, exp) = UNITS
        .iter()
        .find(|(sym, _, _)| *sym == unit)
        .ok_or_else(|| format!("unknown unit `{unit}` in `{s}`"))?;
    // Dividing by an exact power of ten keeps "10 ms" at exactly 0.01.
    let value = if exp < 0 {
        value / 10f64.powi(-exp)
    } else {
        value * 10f64.powi(exp)
    };
    Ok(Quantity {
        value,
        dimension: Some(dim),
    })
}

/// Dimensions accepted by a scenario key, by leaf key name.
pub fn expected_dimensions(key: &str) -> Option<&'static [Dimension]> {
    use Dimension::*;
    let dims: &'static [Dimension] = match key {
        "duration" | "step" | "window" | "tau_p" | "min_dwell" | "phase_offset" | "settling_guard" => &[Time],
        "V_bat" | "V_out_ref" | "V_p" | "V_n" | "v_min" | "v_max" | "V_th" | "V_on" | "V_off" | "logic_level" => {
            &[Voltage]
        }
        "offset" | "sensor_offset" => &[Voltage, Current],
        "R_bat" | "source_resistance" => &[Resistance],
        "update_rate" | "sample_rate" | "frequency" | "resonant_frequency" | "switching_frequency" => &[Frequency],
        "d_a" | "w" | "l" => &[Length],
        "power" => &[Power],
        "amplitude_current" => &[Current],
        "phi_grid" => &[Angle],
        "sensor_gain" => &[Gain],
        _ => return None,
    };
    Some(dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn milliseconds_normalize_exactly() {
        let q = parse_quantity("10 ms").unwrap();
        assert_eq!(q.value, 0.010);
        assert_eq!(q.dimension, Some(Dimension::Time));
    }

    #[test]
    fn common_suffixes() {
        assert_eq!(parse_quantity("72 MHz").unwrap().value, 72e6);
        assert_eq!(parse_quantity("200 mW").unwrap().value, 0.2);
        assert_eq!(parse_quantity("4cm").unwrap().value, 0.04);
        assert_eq!(parse_quantity("-1 V").unwrap().value, -1.0);
        assert_eq!(parse_quantity("1.5e-3 s").unwrap().value, 1.5e-3);
        assert_eq!(
            parse_quantity("2.5e1").unwrap(),
            Quantity {
                value: 25.0,
                dimension: None
            }
        );
        assert_eq!(parse_quantity("500 mV").unwrap().value, 0.5);
        assert_eq!(parse_quantity("10 us").unwrap().value, 1e-5);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_quantity("ten ms").is_err());
        assert!(parse_quantity("10 furlongs").is_err());
    }

    #[test]
    fn numeric_detection() {
        assert!(looks_numeric("10 ms"));
        assert!(looks_numeric("-1 V"));
        assert!(!looks_numeric("voltage_sensor"));
    }
}
