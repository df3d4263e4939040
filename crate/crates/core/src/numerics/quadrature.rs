//! Quadrature engines: adaptive Gauss-Kronrod for accuracy-critical radial
//! integrals, fixed composite Gauss-Legendre grids for the optimizer, and
//! the periodic trapezoid rule for angles.

use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre, GaussLegendre};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub radial_truncation_sigmas: f64,
    pub max_subdivisions: usize,
    pub angular_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            radial_truncation_sigmas: 10.0,
            max_subdivisions: 60,
            angular_nodes: 256,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        if !positive(self.radial_truncation_sigmas) {
            return Err(Error::Config("radial truncation must be positive".into()));
        }
        if self.max_subdivisions < 8 || self.angular_nodes < 8 {
            return Err(Error::Config("node and subdivision counts must be at least 8".into()));
        }
        Ok(())
    }
}

// QUADPACK qk21 abscissae and weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_330,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();
    let fc = f(centr);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = hlgth * XGK[j];
        let f1 = f(centr - dx);
        let f2 = f(centr + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut err = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive GK21 over the panels delimited by `breakpoints`
/// (sorted, at least two entries). The subdivision budget counts bisections.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    if breakpoints.len() < 2 {
        return Err(Error::Domain("adaptive quadrature needs at least one panel".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk21(&f, w[0], w[1]);
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }
    }
    let totals = |heap: &BinaryHeap<Panel>| {
        let mut v = 0.0;
        let mut e = 0.0;
        for p in heap.iter() {
            v += p.value;
            e += p.error;
        }
        (v, e)
    };
    let (mut value, mut error) = totals(&heap);
    if value.is_nan() || error.is_nan() {
        return Err(Error::Numeric("integrand produced NaN".into()));
    }
    let mut splits = 0;
    while error > spec.abs_tol.max(spec.rel_tol * value.abs()) {
        if splits >= spec.max_subdivisions {
            return Err(Error::Quadrature { estimate: value, error });
        }
        let worst = heap.pop().expect("panel heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        splits += 1;
        (value, error) = totals(&heap);
        if value.is_nan() || error.is_nan() {
            return Err(Error::Numeric("integrand produced NaN".into()));
        }
    }
    Ok(value)
}

/// `int_0^inf f(r) dr` for an integrand concentrated around `center` with
/// spread `width`; truncated at `center + radial_truncation_sigmas * width`.
pub fn integrate_radial<F: Fn(f64) -> f64>(f: F, center: f64, width: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_radial_multi(f, &[center], width, spec)
}

/// Radial integral for a mixture-shaped integrand with several modes.
pub fn integrate_radial_multi<F: Fn(f64) -> f64>(
    f: F,
    centers: &[f64],
    width: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(width > 0.0) {
        return Err(Error::Domain(format!("radial width must be positive, got {width}")));
    }
    let reach = spec.radial_truncation_sigmas * width;
    let top = centers.iter().cloned().fold(0.0, f64::max) + reach;
    let mut points = vec![0.0, top];
    for &c in centers {
        for p in [c - 3.0 * width, c, c + 3.0 * width] {
            if p > 0.0 && p < top {
                points.push(p);
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 0.5 * width);
    integrate_adaptive(f, &points, spec)
}

/// Periodic trapezoid rule on `[-pi, pi)` with `spec.angular_nodes` points.
pub fn integrate_angular<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> f64 {
    let n = spec.angular_nodes;
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| f(-PI + i as f64 * h)).sum::<f64>() * h
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = NonZeroUsize::new(order).ok_or_else(|| Error::Domain("Gauss-Legendre order must be positive".into()))?;
    let rule = GaussLegendre::new(n);
    Ok(rule.as_node_weight_pairs().iter().cloned().unzip())
}

/// Gauss-Laguerre nodes and weights for `int_0^inf e^{-u} g(u) du`.
pub fn gauss_laguerre(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = NonZeroUsize::new(order).ok_or_else(|| Error::Domain("Gauss-Laguerre order must be positive".into()))?;
    let alpha = FiniteAboveNegOneF64::new(0.0).expect("zero is a valid Laguerre parameter");
    let rule = GaussLaguerre::new(n, alpha);
    Ok(rule.as_node_weight_pairs().iter().cloned().unzip())
}

/// Fixed composite Gauss-Legendre rule on `[lower, upper]` with panels of
/// `panel_width` aligned from `lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(lower: f64, upper: f64, panel_width: f64, order: usize) -> Result<Self> {
        if !(upper > lower && panel_width > 0.0) {
            return Err(Error::Domain(format!("bad radial grid [{lower}, {upper}] width {panel_width}")));
        }
        let (x, w) = gauss_legendre(order)?;
        let panels = ((upper - lower) / panel_width).ceil() as usize;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let a = lower + k as f64 * panel_width;
            let b = (a + panel_width).min(upper);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel::ln_i0;
    use proptest::prelude::*;

    fn rice(r: f64, s: f64, s2: f64) -> f64 {
        2.0 * r / s2 * (-(r * r + s * s) / s2 + ln_i0(2.0 * r * s / s2)).exp()
    }

    #[test]
    fn rayleigh_normalization_and_moment() {
        let spec = QuadratureSpec::default();
        for s2 in [0.01f64, 1.0, 37.0] {
            let sig = s2.sqrt();
            let one = integrate_radial(|r| 2.0 * r / s2 * (-r * r / s2).exp(), 0.0, sig, &spec).unwrap();
            assert!((one - 1.0).abs() < 1e-10);
            let m2 = integrate_radial(|r| 2.0 * r.powi(3) / s2 * (-r * r / s2).exp(), 0.0, sig, &spec).unwrap();
            assert!((m2 - s2).abs() < 1e-8 * s2, "{s2}: {m2}");
        }
    }

    #[test]
    fn rice_normalization() {
        let spec = QuadratureSpec::default();
        for s in [0.0, 0.3, 2.0, 6.23, 40.0, 400.0] {
            let one = integrate_radial(|r| rice(r, s, 1.0), s, 1.0, &spec).unwrap();
            assert!((one - 1.0).abs() < 1e-9, "s = {s}: {one}");
        }
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let spec = QuadratureSpec { max_subdivisions: 8, ..QuadratureSpec::default() };
        let err = integrate_adaptive(|x: f64| x.abs().sqrt().recip(), &[1e-300, 1.0], &spec).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn angular_rules() {
        let spec = QuadratureSpec::default();
        assert!((integrate_angular(|_| 1.0, &spec) - 2.0 * PI).abs() < 1e-13);
        assert!(integrate_angular(f64::cos, &spec).abs() < 1e-13);
        let v = integrate_angular(|p| p.cos().exp(), &spec);
        assert!((v - 2.0 * PI * ln_i0(1.0).exp()).abs() < 1e-13);
    }

    #[test]
    fn laguerre_moments() {
        let (u, w) = gauss_laguerre(48).unwrap();
        let m0: f64 = w.iter().sum();
        let m1: f64 = u.iter().zip(&w).map(|(u, w)| u * w).sum();
        let m3: f64 = u.iter().zip(&w).map(|(u, w)| u.powi(3) * w).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m1 - 1.0).abs() < 1e-11);
        assert!((m3 - 6.0).abs() < 1e-10);
    }

    #[test]
    fn radial_grid_integrates_gaussian() {
        let g = RadialGrid::new(0.0, 12.0, 1.0, 16).unwrap();
        let v = g.integrate(|r| 2.0 * r * (-r * r).exp());
        assert!((v - 1.0).abs() < 1e-13);
        assert!(RadialGrid::new(1.0, 0.0, 1.0, 16).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        assert!(QuadratureSpec { angular_nodes: 4, ..Default::default() }.validate().is_err());
        assert!(QuadratureSpec { rel_tol: 0.0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn rice_family_normalized(s in 0.0f64..60.0, s2 in 0.05f64..20.0) {
            let spec = QuadratureSpec::default();
            let one = integrate_radial(|r| rice(r, s, s2), s, s2.sqrt(), &spec).unwrap();
            prop_assert!((one - 1.0).abs() < 1e-7);
        }
    }
}
