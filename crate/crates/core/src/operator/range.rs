use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::{self, conjugate};

/// Open interval of exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PRange {
    pub lower: f64,
    #[serde(serialize_with = "ext::serialize")]
    pub upper: f64,
}

impl PRange {
    pub fn contains(&self, p: f64) -> bool {
        p > self.lower && p < self.upper
    }
}

/// `(min(s', q), max(q', s))` for `1 <= q < s <= inf`.
pub fn interpolation_range(q: f64, s: f64) -> Result<PRange> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::Exponent {
            value: q,
            reason: "q must be finite and at least 1",
        });
    }
    if s.is_nan() || s <= q {
        return Err(Error::Exponent {
            value: s,
            reason: "s must exceed q",
        });
    }
    Ok(PRange {
        lower: conjugate(s).min(q),
        upper: conjugate(q).max(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        let r = interpolation_range(1.0, f64::INFINITY).unwrap();
        assert_eq!((r.lower, r.upper), (1.0, f64::INFINITY));
        let r = interpolation_range(2.0, 4.0).unwrap();
        assert_eq!((r.lower, r.upper), (4.0 / 3.0, 4.0));
        let r = interpolation_range(2.0, 3.0).unwrap();
        assert_eq!((r.lower, r.upper), (1.5, 3.0));
        assert!(!r.contains(1.5) && r.contains(2.0));
    }

    #[test]
    fn rejects_s_not_above_q() {
        assert!(interpolation_range(2.0, 2.0).is_err());
        assert!(interpolation_range(0.5, 2.0).is_err());
    }

    #[test]
    fn serializes_infinite_upper() {
        let r = interpolation_range(1.0, 3.0).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"lower":1.0,"upper":"inf"}"#);
    }
}
