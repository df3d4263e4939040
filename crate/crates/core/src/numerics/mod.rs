//! Special functions and quadrature shared by every rate computation.

pub mod bessel;
pub mod quadrature;
pub mod special;

pub use bessel::{i1_over_i0, ln_i0, ln_i0_and_ratio, ln_i1, log_bessel_i0, log_bessel_i1};
pub use quadrature::{
    gauss_laguerre, gauss_legendre, integrate_adaptive, integrate_angular, integrate_radial, integrate_radial_multi,
    QuadratureSpec, RadialGrid,
};
pub use special::{erfcx, ln_ray_moment, one_minus_scaled_erfc};

/// `ln sum_i exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `p ln p` with the limit `0` at `p = 0`, taking `ln p` as input.
#[inline]
pub fn p_ln_p(ln_p: f64) -> f64 {
    if ln_p == f64::NEG_INFINITY {
        0.0
    } else {
        ln_p.exp() * ln_p
    }
}
