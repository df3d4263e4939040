//! Logarithms of the modified Bessel functions `I0` and `I1`.
//!
//! Power series below [`SWITCH`], the exponentially scaled Hankel
//! expansion above it.

use crate::error::{Error, Result};

const SWITCH: f64 = 20.0;

/// `ln I0(x)`, NaN-checked.
pub fn log_bessel_i0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Numeric("log_bessel_i0 called with NaN".into()));
    }
    Ok(ln_i0(x))
}

/// `ln I1(x)` for `x > 0`, NaN-checked. `ln I1(0) = -inf`.
pub fn log_bessel_i1(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Numeric("log_bessel_i1 called with NaN".into()));
    }
    Ok(ln_i1(x))
}

/// `ln I0(x)`; even in `x`, NaN in gives NaN out.
#[inline]
pub fn ln_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < SWITCH {
        let t = 0.25 * x * x;
        let mut term = 1.0;
        let mut tail = 0.0;
        let mut k = 1.0;
        loop {
            term *= t / (k * k);
            tail += term;
            if term < (1.0 + tail) * 1e-17 {
                break;
            }
            k += 1.0;
        }
        tail.ln_1p()
    } else if x.is_infinite() {
        f64::INFINITY
    } else {
        let inv = 1.0 / (8.0 * x);
        let mut term = 1.0;
        let mut tail = 0.0;
        let mut k = 1.0;
        loop {
            let odd = 2.0 * k - 1.0;
            let next = term * odd * odd * inv / k;
            if next >= term || next < 1e-17 {
                tail += next;
                break;
            }
            term = next;
            tail += term;
            k += 1.0;
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + tail.ln_1p()
    }
}

/// `ln I1(x)` for `x >= 0`.
#[inline]
pub fn ln_i1(x: f64) -> f64 {
    if x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < SWITCH {
        let t = 0.25 * x * x;
        let mut term = 1.0;
        let mut tail = 0.0;
        let mut k = 1.0;
        loop {
            term *= t / (k * (k + 1.0));
            tail += term;
            if term < (1.0 + tail) * 1e-17 {
                break;
            }
            k += 1.0;
        }
        (0.5 * x).ln() + tail.ln_1p()
    } else if x.is_infinite() {
        f64::INFINITY
    } else {
        let inv = 1.0 / (8.0 * x);
        let mut term = 1.0;
        let mut tail = 0.0;
        let mut k = 1.0;
        loop {
            let odd = 2.0 * k - 1.0;
            let next = term * (odd * odd - 4.0) * inv / k;
            if next.abs() >= term.abs() || next.abs() < 1e-17 {
                tail += next;
                break;
            }
            term = next;
            tail += term;
            k += 1.0;
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + tail.ln_1p()
    }
}

/// `(ln I0(x), I1(x) / I0(x))` for `x >= 0` in a single pass.
#[inline]
pub fn ln_i0_and_ratio(x: f64) -> (f64, f64) {
    if x < SWITCH {
        if x == 0.0 {
            return (0.0, 0.0);
        }
        let t = 0.25 * x * x;
        let mut term = 1.0;
        let mut tail0 = 0.0;
        let mut sum1 = 1.0;
        let mut k = 1.0;
        loop {
            term *= t / (k * k);
            tail0 += term;
            sum1 += term / (k + 1.0);
            if term < (1.0 + tail0) * 1e-17 {
                break;
            }
            k += 1.0;
        }
        (tail0.ln_1p(), 0.5 * x * sum1 / (1.0 + tail0))
    } else if x.is_infinite() {
        (f64::INFINITY, 1.0)
    } else {
        let inv = 1.0 / (8.0 * x);
        let mut t0: f64 = 1.0;
        let mut t1: f64 = 1.0;
        let mut tail0 = 0.0;
        let mut tail1 = 0.0;
        let mut k = 1.0;
        loop {
            let odd = 2.0 * k - 1.0;
            let n0 = t0 * odd * odd * inv / k;
            let n1 = t1 * (odd * odd - 4.0) * inv / k;
            if n0 >= t0 || n1.abs() >= t1.abs() || (n0 < 1e-17 && n1.abs() < 1e-17) {
                tail0 += n0;
                tail1 += n1;
                break;
            }
            t0 = n0;
            t1 = n1;
            tail0 += t0;
            tail1 += t1;
            k += 1.0;
        }
        let lead = x - 0.5 * (2.0 * std::f64::consts::PI * x).ln();
        (lead + tail0.ln_1p(), (1.0 + tail1) / (1.0 + tail0))
    }
}

/// `I1(x) / I0(x)`, odd in `x`.
#[inline]
pub fn i1_over_i0(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < 0.0 {
        -i1_over_i0(-x)
    } else if x < 1e-8 {
        0.5 * x
    } else {
        (ln_i1(x) - ln_i0(x)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn i0_reference_values() {
        let cases = [
            (0.001, 2.4999998437500175e-7),
            (1.0, 0.23591435850717865),
            (5.0, 3.3046817758225334),
            (19.999, 17.5886357583783),
            (20.0, 17.5896104282442743),
            (20.001, 17.5905850993941),
            (50.0, 47.1275755018718),
            (700.0, 695.805699998443449),
            (1e6, 999992.173306312813),
        ];
        for (x, v) in cases {
            let got = log_bessel_i0(x).unwrap();
            assert!(close(got, v, 1e-13), "ln I0({x}) = {got}, want {v}");
        }
        assert_eq!(ln_i0(0.0), 0.0);
    }

    #[test]
    fn i1_reference_values() {
        let cases = [
            (0.001, -7.6009023345420849),
            (0.5, -1.35520544702533),
            (1.0, -0.570647987490831),
            (5.0, 3.1919420305456755),
            (20.0, 17.5639546225193),
            (700.0, 695.804985201856),
        ];
        for (x, v) in cases {
            let got = log_bessel_i1(x).unwrap();
            assert!(close(got, v, 1e-13), "ln I1({x}) = {got}, want {v}");
        }
    }

    #[test]
    fn nan_is_an_error() {
        assert!(matches!(log_bessel_i0(f64::NAN), Err(Error::Numeric(_))));
        assert!(log_bessel_i1(f64::NAN).is_err());
    }

    #[test]
    fn branch_switch_is_continuous() {
        let below = ln_i0(SWITCH - 1e-12);
        let above = ln_i0(SWITCH);
        assert!((below - above).abs() < 1e-12);
        let below = ln_i1(SWITCH - 1e-12);
        let above = ln_i1(SWITCH);
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn symmetric() {
        assert_eq!(ln_i0(-3.2), ln_i0(3.2));
        assert_eq!(i1_over_i0(-3.2), -i1_over_i0(3.2));
    }

    proptest! {
        #[test]
        fn fused_matches_separate(x in 0.0f64..3000.0) {
            let (l, r) = ln_i0_and_ratio(x);
            prop_assert!((l - ln_i0(x)).abs() <= 1e-14 * l.max(1.0));
            prop_assert!((r - i1_over_i0(x)).abs() <= 1e-13 + 4e-16 * x);
        }

        #[test]
        fn i0_bounds_and_shape(x in 0.0f64..2000.0, d in 1e-3f64..1.0) {
            let f = ln_i0(x);
            prop_assert!(f >= 0.0 && f <= x + 1e-12);
            if x >= 2.0 {
                prop_assert!(f >= x - 0.5 * (2.0 * std::f64::consts::PI * x).ln());
            }
            prop_assert!(ln_i0(x + d) > f);
            // Midpoint convexity.
            let mid = ln_i0(x + 0.5 * d);
            prop_assert!(mid <= 0.5 * (f + ln_i0(x + d)) + 1e-12 * (1.0 + x));
        }

        #[test]
        fn ratio_in_unit_interval(x in 1e-6f64..1e5) {
            let r = i1_over_i0(x);
            prop_assert!(r > 0.0 && r < 1.0);
        }
    }
}
