//! Rate pairs of the two phase-splitting schemes that reach the maximum
//! sum rate.
//!
//! Both give `X1 X2 ~ CN(0, P)`: `|X1|` is Rayleigh and the output phase is
//! split between the users. With `N = pi / alpha`:
//!
//! * scheme I: `X1` phase uniform on `[-alpha, alpha)`, `X2` an `N`-PSK
//!   symbol on multiples of `2 alpha`;
//! * scheme II: the roles swapped, `X1` carries the `N`-PSK phase and `X2`
//!   is uniform on the arc `[-alpha, alpha)`.
//!
//! The conditional output densities are not rotationally symmetric, so
//! the entropies are evaluated on a polar grid: composite Gauss-Legendre
//! in `r`, the periodic trapezoid rule in `psi`. The amplitude expectation
//! uses Gauss-Laguerre in `u = a^2 / P`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{noise_entropy, ChannelConfig, BITS_PER_NAT};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, ln_ray_moment, QuadratureSpec, RadialGrid};

use super::{Provenance, RatePair};

/// Panel edges, in units of `sqrt(P)`, and order of the Rayleigh amplitude
/// average. Gauss-Laguerre in `a^2` converges slowly here (the entropy is
/// not smooth in `a^2` near 0) and was off by 1e-2 bits at 15 dB.
const AMPLITUDE_EDGES: [f64; 6] = [0.0, 1.0, 2.0, 3.0, 4.5, 6.5];
const AMPLITUDE_ORDER: usize = 16;
const RADIAL_ORDER: usize = 16;
const CELL_ORDER: usize = 8;
const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeOrder {
    X1First,
    X2First,
}

impl DecodeOrder {
    pub fn label(self) -> &'static str {
        match self {
            DecodeOrder::X1First => "x1_first",
            DecodeOrder::X2First => "x2_first",
        }
    }
}

/// Scheme with opening half-angle `alpha = pi / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseScheme {
    pub kind: SchemeKind,
    pub n: u32,
}

impl PhaseScheme {
    pub fn new(kind: SchemeKind, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Scheme("pi / alpha must be a positive integer".into()));
        }
        Ok(Self { kind, n })
    }

    pub fn from_alpha(kind: SchemeKind, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= PI * (1.0 + 1e-12)) {
            return Err(Error::Scheme(format!("alpha = {alpha} outside (0, pi]")));
        }
        let ratio = PI / alpha;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio || n > u32::MAX as f64 {
            return Err(Error::Scheme(format!("pi / alpha = {ratio} is not an integer")));
        }
        Self::new(kind, n as u32)
    }

    pub fn alpha(&self) -> f64 {
        PI / self.n as f64
    }

    pub fn label(&self) -> String {
        let k = match self.kind {
            SchemeKind::I => "I",
            SchemeKind::II => "II",
        };
        format!("{k}(n={})", self.n)
    }
}

/// Conditional output law of one decoding step, in the four flavours.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    /// Given `X1 = a`: output centred on `N` equally spaced phases.
    Psk { s: f64, n: u32 },
    /// Given `X1 = a`: output phase smeared over an arc of half-angle alpha.
    Arc { s: f64, alpha: f64 },
    /// Given `X2`: Rayleigh amplitude times a phase uniform on a sector.
    Sector { alpha: f64 },
    /// Given `X2`: Rayleigh amplitude on `N` rays.
    Rays { n: u32 },
}

struct Geometry {
    sigma2: f64,
    /// `sigma^2 + P h^2`.
    v: f64,
    /// `h / (sigma^2 sqrt(c))` with `c = 1/P + h^2 / sigma^2`; `w_max = r * ray_scale`.
    ray_scale: f64,
}

impl Geometry {
    fn new(cfg: &ChannelConfig) -> Self {
        let s2 = cfg.noise_power();
        let h = cfg.composite_gain();
        let p = cfg.power_budget();
        let c = 1.0 / p + h * h / s2;
        Self { sigma2: s2, v: s2 + p * h * h, ray_scale: h / (s2 * c.sqrt()) }
    }
}

/// Number of angular nodes at radius `r`: fine enough for structures of
/// width `sigma / r`, and a multiple of `2n` so that arc and sector edges fall
/// on nodes.
fn angular_nodes(r: f64, sigma: f64, n: u32, spec: &QuadratureSpec) -> usize {
    let want = spec.angular_nodes.max((12.0 * r / sigma).ceil() as usize);
    let step = 2 * n as usize;
    let step = if step % 2 == 0 { step } else { 2 * step };
    want.div_ceil(step) * step
}

/// Window sums of a kernel peaked at `phi = 0` over cells of the grid
/// `psi_k = -pi + k h`. Prefix sums run from both troughs so a window far
/// from the peak never cancels against the bulk.
struct CellSums {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl CellSums {
    fn new<K: Fn(f64) -> f64>(kernel: K, nodes: usize, width: f64, gl: &(Vec<f64>, Vec<f64>)) -> Self {
        let h = 2.0 * PI / nodes as f64;
        let sub = ((h / (0.5 * width)).ceil() as usize).clamp(1, 256);
        let hs = h / sub as f64;
        let mut cells = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let a = -PI + k as f64 * h;
            let mut acc = 0.0;
            for j in 0..sub {
                let mid = a + (j as f64 + 0.5) * hs;
                for (x, w) in gl.0.iter().zip(&gl.1) {
                    acc += w * kernel(mid + 0.5 * hs * x);
                }
            }
            cells.push(acc * 0.5 * hs);
        }
        let mut left = vec![0.0; nodes + 1];
        for k in 0..nodes {
            left[k + 1] = left[k] + cells[k];
        }
        let mut right = vec![0.0; nodes + 1];
        for k in (0..nodes).rev() {
            right[k] = right[k + 1] + cells[k];
        }
        Self { left, right }
    }

    /// Sum of cells `[i0, i0 + len)` taken modulo the cell count.
    fn window(&self, i0: usize, len: usize) -> f64 {
        let n = self.left.len() - 1;
        let half = n / 2;
        if len >= n {
            return self.left[n];
        }
        let i1 = i0 + len;
        if i1 <= n {
            if i1 <= half {
                self.left[i1] - self.left[i0]
            } else if i0 >= half {
                self.right[i0] - self.right[i1]
            } else {
                self.left[i1] - self.left[i0]
            }
        } else {
            self.right[i0] + self.left[i1 - n]
        }
    }
}

/// Result of integrating one conditional density over the polar grid.
struct PolarEntropy {
    entropy: f64,
    mass: f64,
}

fn polar_entropy(kernel: Kernel, geo: &Geometry, spec: &QuadratureSpec, gl_cell: &(Vec<f64>, Vec<f64>)) -> Result<PolarEntropy> {
    let s2 = geo.sigma2;
    let sigma = s2.sqrt();
    let t = spec.radial_truncation_sigmas;
    let (lo, hi, n_sym) = match kernel {
        Kernel::Psk { s, n } => ((s - t * sigma).max(0.0), s + t * sigma, n),
        Kernel::Arc { s, alpha } => ((s - t * sigma).max(0.0), s + t * sigma, (PI / alpha).round() as u32),
        Kernel::Sector { alpha } => (0.0, geo.v.sqrt() * t / std::f64::consts::SQRT_2, (PI / alpha).round() as u32),
        Kernel::Rays { n } => (0.0, geo.v.sqrt() * t / std::f64::consts::SQRT_2, n),
    };
    let grid = RadialGrid::new(lo, hi, sigma, RADIAL_ORDER)?;
    let ln_pi_s2 = (PI * s2).ln();
    let ln_pi_v = (PI * geo.v).ln();
    let mut entropy = 0.0;
    let mut mass = 0.0;
    let mut row: Vec<f64> = Vec::new();
    for (&r, &wr) in grid.nodes.iter().zip(&grid.weights) {
        let nodes = angular_nodes(r, sigma, n_sym, spec);
        let h = 2.0 * PI / nodes as f64;
        row.clear();
        row.resize(nodes, f64::NEG_INFINITY);
        match kernel {
            Kernel::Psk { s, n } => {
                let step = 2.0 * PI / n as f64;
                let base = -ln_pi_s2 - (n as f64).ln();
                for (i, out) in row.iter_mut().enumerate() {
                    let psi = -PI + i as f64 * h;
                    let mut m = f64::NEG_INFINITY;
                    let mut acc = 0.0;
                    for k in 0..n {
                        let phi = psi - k as f64 * step;
                        let x = -(r * r + s * s - 2.0 * r * s * phi.cos()) / s2;
                        if x > m {
                            acc = acc * (m - x).exp() + 1.0;
                            m = x;
                        } else {
                            acc += (x - m).exp();
                        }
                    }
                    *out = base + m + acc.ln();
                }
            }
            Kernel::Arc { s, alpha } => {
                let x = 2.0 * r * s / s2;
                let width = if x > 0.0 { 1.0 / x.sqrt() } else { PI };
                let sums = CellSums::new(|phi| (x * (phi.cos() - 1.0)).exp(), nodes, width, gl_cell);
                let base = -ln_pi_s2 - (r - s) * (r - s) / s2 - (2.0 * alpha).ln();
                fill_window(&mut row, &sums, alpha, h, base);
            }
            Kernel::Sector { alpha } => {
                let w_max = r * geo.ray_scale;
                let width = if w_max > 0.0 { 1.0 / (std::f64::consts::SQRT_2 * w_max) } else { PI };
                let sums = CellSums::new(|phi| (ln_ray_moment(w_max * phi.cos()) - w_max * w_max).exp(), nodes, width, gl_cell);
                let base = -ln_pi_v - r * r / geo.v - (2.0 * alpha).ln();
                fill_window(&mut row, &sums, alpha, h, base);
            }
            Kernel::Rays { n } => {
                let w_max = r * geo.ray_scale;
                let step = 2.0 * PI / n as f64;
                let base = -ln_pi_v - r * r / geo.v - (n as f64).ln();
                for (i, out) in row.iter_mut().enumerate() {
                    let psi = -PI + i as f64 * h;
                    let mut m = f64::NEG_INFINITY;
                    let mut acc = 0.0;
                    for k in 0..n {
                        let phi = psi - k as f64 * step;
                        let x = ln_ray_moment(w_max * phi.cos()) - w_max * w_max;
                        if x > m {
                            acc = acc * (m - x).exp() + 1.0;
                            m = x;
                        } else {
                            acc += (x - m).exp();
                        }
                    }
                    *out = base + m + acc.ln();
                }
            }
        }
        let mut e_row = 0.0;
        let mut m_row = 0.0;
        for &lp in &row {
            if lp > f64::NEG_INFINITY {
                let p = lp.exp();
                e_row -= p * lp;
                m_row += p;
            }
        }
        entropy += wr * r * h * e_row;
        mass += wr * r * h * m_row;
    }
    Ok(PolarEntropy { entropy, mass })
}

/// `ln p(r, psi_i)` for a window kernel: `base + ln(window sum)` where the
/// window covers `[psi_i - alpha, psi_i + alpha]`.
fn fill_window(row: &mut [f64], sums: &CellSums, alpha: f64, h: f64, base: f64) {
    let nodes = row.len();
    let len = (2.0 * alpha / h).round() as usize;
    let shift = (alpha / h).round() as usize;
    // phi = psi - theta runs over [psi_i - alpha, psi_i + alpha], starting at cell i - shift.
    for (i, out) in row.iter_mut().enumerate() {
        let start = (i + nodes - shift) % nodes;
        let w = sums.window(start, len);
        *out = if w > 0.0 { base + w.ln() } else { f64::NEG_INFINITY };
    }
}

fn check_mass(mass: f64, what: &str) -> Result<()> {
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::Numeric(format!("{what} density integrates to {mass}")));
    }
    Ok(())
}

/// Amplitudes and weights for averages over the Rayleigh law with
/// `E a^2 = p`.
fn rayleigh_nodes(p: f64) -> Result<Vec<(f64, f64)>> {
    let (x, w) = gauss_legendre(AMPLITUDE_ORDER)?;
    let root = p.sqrt();
    let mut out = Vec::with_capacity(x.len() * (AMPLITUDE_EDGES.len() - 1));
    for e in AMPLITUDE_EDGES.windows(2) {
        let (lo, hi) = (e[0] * root, e[1] * root);
        let half = 0.5 * (hi - lo);
        for (x, w) in x.iter().zip(&w) {
            let a = lo + half * (x + 1.0);
            out.push((a, half * w * 2.0 * a / p * (-a * a / p).exp()));
        }
    }
    Ok(out)
}

/// `E_a H(Y | X1)` for the decode-X1-first kernels, in nats.
fn conditional_entropy_x1(scheme: PhaseScheme, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<f64> {
    let gl = gauss_legendre(CELL_ORDER)?;
    let geo = Geometry::new(cfg);
    let h = cfg.composite_gain();
    let nodes = rayleigh_nodes(cfg.power_budget())?;
    let per_node = crate::par::map(&nodes, |&(a, _)| {
        let s = h * a;
        let kernel = match scheme.kind {
            SchemeKind::I => Kernel::Psk { s, n: scheme.n },
            SchemeKind::II => Kernel::Arc { s, alpha: scheme.alpha() },
        };
        polar_entropy(kernel, &geo, spec, &gl)
    });
    let mut total = 0.0;
    let mut weight = 0.0;
    for ((_, w), res) in nodes.iter().zip(per_node) {
        let pe = res?;
        check_mass(pe.mass, "conditional output")?;
        total += w * pe.entropy;
        weight += w;
    }
    Ok(total / weight)
}

/// `H(Y | X2)` for the decode-X2-first kernels, in nats.
fn conditional_entropy_x2(scheme: PhaseScheme, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<f64> {
    let gl = gauss_legendre(CELL_ORDER)?;
    let geo = Geometry::new(cfg);
    let kernel = match scheme.kind {
        SchemeKind::I => Kernel::Sector { alpha: scheme.alpha() },
        SchemeKind::II => Kernel::Rays { n: scheme.n },
    };
    let pe = polar_entropy(kernel, &geo, spec, &gl)?;
    check_mass(pe.mass, "conditional output")?;
    Ok(pe.entropy)
}

/// `(R1, R2)` in bits for one scheme and decoding order.
pub fn scheme_rate_pair(scheme: PhaseScheme, order: DecodeOrder, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<RatePair> {
    let (r1, r2) = scheme_rate_pair_nats(scheme, order, cfg, spec)?;
    Ok(RatePair::new(r1 * BITS_PER_NAT, r2 * BITS_PER_NAT, Provenance::Scheme { scheme, order }))
}

fn scheme_rate_pair_nats(scheme: PhaseScheme, order: DecodeOrder, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let n0 = noise_entropy(cfg.noise_power());
    let h_y = (PI * std::f64::consts::E * (cfg.noise_power() + cfg.power_budget() * cfg.composite_gain().powi(2))).ln();
    match order {
        DecodeOrder::X1First => {
            let hc = conditional_entropy_x1(scheme, cfg, spec)?;
            Ok(((h_y - hc).max(0.0), (hc - n0).max(0.0)))
        }
        DecodeOrder::X2First => {
            let hc = conditional_entropy_x2(scheme, cfg, spec)?;
            Ok(((hc - n0).max(0.0), (h_y - hc).max(0.0)))
        }
    }
}
