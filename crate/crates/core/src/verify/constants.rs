use super::Method;
use crate::error::{Error, Result};
use crate::grid::{check_dim, unit_ball_volume};

fn check_exponents(q: f64, s: f64) -> Result<()> {
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
    Ok(())
}

/// `gamma (B + [K])`: 1 for finite `s`, otherwise the factor that pushes
/// `B ||g||_inf` down to `alpha / 4`.
fn gamma_factor(n: usize, q: f64, s: f64, method: Method) -> f64 {
    if s.is_finite() {
        return 1.0;
    }
    match method {
        Method::Cz => 2f64.powf(-(n as f64) / q) / 4.0,
        Method::Ntv => 0.25,
    }
}

/// The proof's choice of `gamma` given `B` and `[K]`.
pub fn gamma(n: usize, q: f64, s: f64, bound: f64, seminorm: f64, method: Method) -> Result<f64> {
    check_dim(n)?;
    check_exponents(q, s)?;
    let total = bound + seminorm;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "B + [K] must be positive and finite, got {total}"
        )));
    }
    Ok(gamma_factor(n, q, s, method) / total)
}

/// The named summands of the constant; their sum times the doubling
/// factor (NTV only) is [`theorem_constant`].
///
/// With `s = inf` the good-part term is absent and the other terms absorb
/// the smaller `gamma` of that branch. The NTV term of `T(1_E)` is then
/// also absent: the traces assert separately that it vanishes.
pub fn constant_terms(n: usize, q: f64, s: f64, method: Method) -> Result<Vec<(&'static str, f64)>> {
    check_dim(n)?;
    check_exponents(q, s)?;
    let nf = n as f64;
    let rn = nf.sqrt();
    let c0 = gamma_factor(n, q, s, method);
    let finite = s.is_finite();
    let terms = match method {
        Method::Cz => vec![
            ("good", if finite { 2f64.powf(s - nf + nf * s / q) } else { 0.0 }),
            ("dilates", (2.0 * rn).powf(nf) * c0.powf(-q)),
            ("bad", 2f64.powf(nf / q + 2.0 - nf) * nf.powf(nf / 2.0) * c0.powf(1.0 - q)),
        ],
        Method::Ntv => {
            let d = 17.0 * rn;
            let v = unit_ball_volume(n)?;
            vec![
                ("good", if finite { 2f64.powf(s) } else { 0.0 }),
                ("I", 3f64.powf(nf) * c0.powf(-q)),
                ("II", 8.0 * d.powf(nf / q) * (1.5 * rn).powf(nf) * v * c0.powf(1.0 - q)),
                ("III", if finite { 4f64.powf(s) * d.powf(nf * s / q) * 3f64.powf(nf) } else { 0.0 }),
            ]
        }
    };
    Ok(terms)
}

/// `C_{n,s,q}` of the chosen proof. The NTV constant is doubled to pass
/// from nonnegative to signed inputs.
pub fn theorem_constant(n: usize, q: f64, s: f64, method: Method) -> Result<f64> {
    let sum: f64 = constant_terms(n, q, s, method)?.iter().map(|t| t.1).sum();
    Ok(match method {
        Method::Cz => sum,
        Method::Ntv => 2.0 * sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluations() {
        assert_eq!(theorem_constant(1, 1.0, 2.0, Method::Cz).unwrap(), 14.0);
        assert_eq!(theorem_constant(1, 1.0, 2.0, Method::Ntv).unwrap(), 28574.0);
    }

    #[test]
    fn infinite_s_keeps_surviving_terms() {
        // 2 * 2 * 4 + 4 and 2 * (3 * 4 + 408)
        assert_eq!(theorem_constant(1, 1.0, f64::INFINITY, Method::Cz).unwrap(), 20.0);
        assert_eq!(theorem_constant(1, 1.0, f64::INFINITY, Method::Ntv).unwrap(), 840.0);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(theorem_constant(1, 2.0, 2.0, Method::Cz).is_err());
        assert!(theorem_constant(4, 1.0, 2.0, Method::Cz).is_err());
        assert!("xyz".parse::<Method>().is_err());
    }

    #[test]
    fn gamma_branches() {
        let g = gamma(1, 1.0, 2.0, 3.0, 1.0, Method::Cz).unwrap();
        assert_eq!(g, 0.25);
        let g = gamma(1, 1.0, f64::INFINITY, 3.0, 1.0, Method::Cz).unwrap();
        assert_eq!(g, 1.0 / 32.0);
        let g = gamma(1, 1.0, f64::INFINITY, 3.0, 1.0, Method::Ntv).unwrap();
        assert_eq!(g, 1.0 / 16.0);
    }
}
