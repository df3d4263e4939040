//! Closed-form upper bounds on the secondary rate, in bits.

use crate::channel::BITS_PER_NAT;
use crate::error::{Error, Result};

/// `log2(1 + snr)`.
pub fn upper_bound_average_power(snr: f64) -> f64 {
    snr.ln_1p() * BITS_PER_NAT
}

/// Peak-power bound `log2(1 + sqrt(pi snr) + snr / e)`.
pub fn upper_bound_mckellips(snr: f64) -> f64 {
    ((std::f64::consts::PI * snr).sqrt() + snr / std::f64::consts::E).ln_1p() * BITS_PER_NAT
}

/// Tighter of the two bounds on `I(X2; Y | X1)` for `|X2| <= 1`.
pub fn mi_upper_bound_disk(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::Domain(format!("snr must be nonnegative, got {snr}")));
    }
    Ok(upper_bound_average_power(snr).min(upper_bound_mckellips(snr)))
}

/// Horizontal distance in dB between the two bounds at `snr`: how much
/// extra SNR the peak-power bound needs to reach the average-power value.
pub fn bound_gap_db(snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::Domain(format!("snr must be positive, got {snr}")));
    }
    let target = upper_bound_average_power(snr);
    // upper_bound_mckellips is increasing; bracket and bisect in dB.
    let base = 10.0 * snr.log10();
    let (mut lo, mut hi) = (base - 40.0, base + 40.0);
    let at = |db: f64| upper_bound_mckellips(10f64.powf(db / 10.0)) - target;
    if at(lo) > 0.0 || at(hi) < 0.0 {
        return Err(Error::Numeric("bound gap outside the bracket".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) - base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(mi_upper_bound_disk(0.0).unwrap(), 0.0);
        assert!((upper_bound_average_power(38.857) - 5.31676121881235).abs() < 1e-12);
        assert!((upper_bound_mckellips(38.857) - 4.71936693959392).abs() < 1e-12);
        assert!((mi_upper_bound_disk(38.857).unwrap() - 4.71936693959392).abs() < 1e-12);
        assert!((upper_bound_mckellips(12288.0) - 12.2039539853612).abs() < 1e-11);
        assert!(mi_upper_bound_disk(-1.0).is_err());
    }

    #[test]
    fn crossover() {
        assert!(upper_bound_average_power(0.01) < upper_bound_mckellips(0.01));
        assert!(upper_bound_average_power(1e4) > upper_bound_mckellips(1e4));
    }

    #[test]
    fn gap_at_high_snr() {
        let g = bound_gap_db(12288.0).unwrap();
        assert!((g - 4.22845857378746).abs() < 1e-9, "{g}");
        // Asymptotically the gap tends to 10 log10(e).
        let far = bound_gap_db(1e12).unwrap();
        assert!((far - 10.0 * std::f64::consts::E.log10()).abs() < 0.01);
    }
}
