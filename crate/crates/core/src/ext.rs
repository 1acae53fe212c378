//! Extended-real helpers: exponents may be `inf`, which JSON cannot carry
//! as a number.

use serde::Serializer;

use crate::error::{Error, Result};

/// Parses a finite decimal or the literal `inf`.
pub fn parse_extended(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" | "infinity" | "Inf" | "INF" => Ok(f64::INFINITY),
        _ => {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Parse(format!("cannot parse {s:?} as a number or `inf`")))?;
            if v.is_nan() {
                return Err(Error::Parse("NaN is not an exponent".into()));
            }
            Ok(v)
        }
    }
}

/// Serializes `+inf` as the string `"inf"`, other values as numbers.
pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn to_json(v: f64) -> serde_json::Value {
    if v.is_infinite() && v > 0.0 {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::json!(v)
    }
}

/// Hölder conjugate `r' = r/(r-1)` with `1' = inf` and `inf' = 1`.
pub fn conjugate(r: f64) -> f64 {
    if r == 1.0 {
        f64::INFINITY
    } else if r.is_infinite() {
        1.0
    } else {
        r / (r - 1.0)
    }
}

pub(crate) mod opt_inf {
    use serde::{Deserialize, Deserializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    /// Accepts a number, the string `"inf"`, or nothing.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Num(v)) => Ok(Some(v)),
            Some(Raw::Text(s)) => super::parse_extended(&s)
                .map(Some)
                .map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(conjugate(1.0), f64::INFINITY);
        assert_eq!(conjugate(f64::INFINITY), 1.0);
        assert_eq!(conjugate(2.0), 2.0);
        assert!((conjugate(4.0) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn parses_inf() {
        assert_eq!(parse_extended("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_extended(" 1.5 ").unwrap(), 1.5);
        assert!(parse_extended("abc").is_err());
        assert_eq!(to_json(f64::INFINITY), serde_json::json!("inf"));
    }
}
