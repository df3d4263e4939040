//! Likelihood-ratio Monte-Carlo estimates of the same mutual informations
//! the quadrature path computes. Every input family has an exact output
//! density (a finite Gaussian or Rice mixture), so the estimator has no
//! smoothing knobs; the scheme families fall back to brute-force
//! composite Simpson sums for their continuous phase or amplitude.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{noise_entropy, ChannelConfig};
use crate::error::{Error, Result};
use crate::mi::{self, DecodeOrder, PhaseScheme, SchemeKind};
use crate::numerics::{ln_i0, QuadratureSpec};
use crate::optmass::{MassPointDistribution, SecondaryInput};

const BLOCK: u64 = 1 << 15;
const MIN_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum McFamily {
    /// `X1 X2 ~ CN(0, P)`: the full-rate Gaussian input.
    Gaussian,
    /// `I(X2; Y | |X1| = a)` for unit-modulus `X2` with uniform phase.
    UnitPhase { amplitude: f64 },
    /// `I(X1; Y)` for a discrete `|X1|` law and unit-modulus `X2`.
    MassPointAmplitude { dist_a: MassPointDistribution },
    /// `I(X2; Y | |X1| = a)` for `X2` on concentric circles.
    ConcentricCircles { amplitude: f64, radii: MassPointDistribution },
    /// Rate of the user decoded second under a phase-splitting scheme.
    Scheme { scheme: PhaseScheme, order: DecodeOrder },
}

impl McFamily {
    fn case_id(&self) -> u64 {
        match self {
            McFamily::Gaussian => 1,
            McFamily::UnitPhase { .. } => 2,
            McFamily::MassPointAmplitude { .. } => 3,
            McFamily::ConcentricCircles { .. } => 4,
            McFamily::Scheme { .. } => 5,
        }
    }

    pub fn label(&self) -> String {
        match self {
            McFamily::Gaussian => "gaussian".into(),
            McFamily::UnitPhase { .. } => "unit_phase".into(),
            McFamily::MassPointAmplitude { dist_a } => format!("mass_points_{}", dist_a.len()),
            McFamily::ConcentricCircles { radii, .. } => format!("circles_{}", radii.len()),
            McFamily::Scheme { scheme, order } => format!("scheme_{}_{}", scheme.label(), order.label()),
        }
    }
}

pub(crate) fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }
}

fn log_sum_exp_iter<I: Iterator<Item = f64>>(xs: I) -> f64 {
    let mut m = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for x in xs {
        if x == f64::NEG_INFINITY {
            continue;
        }
        if x > m {
            acc = acc * (m - x).exp() + 1.0;
            m = x;
        } else {
            acc += (x - m).exp();
        }
    }
    m + acc.ln()
}

/// `ln` of a composite Simpson sum of `exp(g(t))` over `[a, b]` with `m` (even) intervals.
fn ln_simpson<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let vals: Vec<f64> = (0..=m)
        .map(|i| {
            let c: f64 = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c.ln() + g(a + i as f64 * h)
        })
        .collect();
    log_sum_exp_iter(vals.into_iter()) + (h / 3.0).ln()
}

fn even(m: f64) -> usize {
    let m = m.ceil() as usize;
    m + m % 2
}

struct Sampler<'a> {
    family: &'a McFamily,
    h: f64,
    s2: f64,
    p: f64,
    ln_pi_s2: f64,
}

impl Sampler<'_> {
    fn noise(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let sd = (0.5 * self.s2).sqrt();
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        (sd * a, sd * b)
    }

    fn ln_gauss(&self, yr: f64, yi: f64, mr: f64, mi: f64) -> f64 {
        let dr = yr - mr;
        let di = yi - mi;
        -(dr * dr + di * di) / self.s2 - self.ln_pi_s2
    }

    /// `ln` of the uniform-phase Rice output density at `|y| = r`, amplitude `s`.
    fn ln_rice(&self, r: f64, s: f64) -> f64 {
        -(r * r + s * s) / self.s2 + ln_i0(2.0 * r * s / self.s2) - self.ln_pi_s2
    }

    fn rayleigh(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        (self.p * -(1.0 - u).ln()).sqrt()
    }

    fn pick(dist: &MassPointDistribution, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for p in dist.points() {
            acc += p.probability;
            if u < acc {
                return p.location;
            }
        }
        dist.points().last().map(|p| p.location).unwrap_or(0.0)
    }

    /// One draw of the log-likelihood ratio.
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (zr, zi) = self.noise(rng);
        match self.family {
            McFamily::Gaussian => {
                let sd = (0.5 * self.p).sqrt();
                let xr: f64 = sd * rng.sample::<f64, _>(StandardNormal);
                let xi: f64 = sd * rng.sample::<f64, _>(StandardNormal);
                let yr = self.h * xr + zr;
                let yi = self.h * xi + zi;
                let v = self.s2 + self.p * self.h * self.h;
                let ln_y = -(yr * yr + yi * yi) / v - (PI * v).ln();
                self.ln_gauss(yr, yi, self.h * xr, self.h * xi) - ln_y
            }
            McFamily::UnitPhase { amplitude } => {
                let s = self.h * amplitude;
                let th = rng.random::<f64>() * 2.0 * PI;
                let (mr, mi) = (s * th.cos(), s * th.sin());
                let (yr, yi) = (mr + zr, mi + zi);
                self.ln_gauss(yr, yi, mr, mi) - self.ln_rice(yr.hypot(yi), s)
            }
            McFamily::MassPointAmplitude { dist_a } => {
                let a = Self::pick(dist_a, rng);
                let th = rng.random::<f64>() * 2.0 * PI;
                let s = self.h * a;
                let (yr, yi) = (s * th.cos() + zr, s * th.sin() + zi);
                let r = yr.hypot(yi);
                let num = self.ln_rice(r, s);
                let den = log_sum_exp_iter(
                    dist_a.points().iter().map(|p| p.probability.ln() + self.ln_rice(r, self.h * p.location)),
                );
                num - den
            }
            McFamily::ConcentricCircles { amplitude, radii } => {
                let rad = Self::pick(radii, rng);
                let th = rng.random::<f64>() * 2.0 * PI;
                let s = self.h * amplitude * rad;
                let (mr, mi) = (s * th.cos(), s * th.sin());
                let (yr, yi) = (mr + zr, mi + zi);
                let r = yr.hypot(yi);
                let den = log_sum_exp_iter(
                    radii.points().iter().map(|p| p.probability.ln() + self.ln_rice(r, self.h * amplitude * p.location)),
                );
                self.ln_gauss(yr, yi, mr, mi) - den
            }
            McFamily::Scheme { scheme, order } => self.draw_scheme(*scheme, *order, rng, zr, zi),
        }
    }

    fn draw_scheme(&self, scheme: PhaseScheme, order: DecodeOrder, rng: &mut ChaCha8Rng, zr: f64, zi: f64) -> f64 {
        let n = scheme.n;
        let alpha = scheme.alpha();
        let a = self.rayleigh(rng);
        let k = rng.random_range(0..n) as f64;
        let cont = (2.0 * rng.random::<f64>() - 1.0) * alpha;
        let discrete = 2.0 * alpha * k;
        let (th1, th2) = match scheme.kind {
            SchemeKind::I => (cont, discrete),
            SchemeKind::II => (discrete, cont),
        };
        let s = self.h * a;
        let (mr, mi) = (s * (th1 + th2).cos(), s * (th1 + th2).sin());
        let (yr, yi) = (mr + zr, mi + zi);
        let ln_joint = self.ln_gauss(yr, yi, mr, mi);
        let ln_cond = match order {
            // p(y | x1): average over X2's phase.
            DecodeOrder::X1First => match scheme.kind {
                SchemeKind::I => {
                    log_sum_exp_iter((0..n).map(|j| {
                        let ph = th1 + 2.0 * alpha * j as f64;
                        self.ln_gauss(yr, yi, s * ph.cos(), s * ph.sin())
                    })) - (n as f64).ln()
                }
                SchemeKind::II => {
                    let r = yr.hypot(yi);
                    let x = 2.0 * r * s / self.s2;
                    let m = even((400.0f64).max(2.0 * alpha * x.sqrt() / 0.2));
                    let g = |t: f64| self.ln_gauss(yr, yi, s * (th1 + t).cos(), s * (th1 + t).sin());
                    ln_simpson(g, -alpha, alpha, m) - (2.0 * alpha).ln()
                }
            },
            // p(y | x2): average over X1's amplitude and phase.
            DecodeOrder::X2First => {
                let h = self.h;
                let p = self.p;
                let w = self.s2.sqrt() / h;
                // The Gaussian factor pins the amplitude to within a few `w` of
                // the projection of y onto the ray.
                let ln_ray = |ph: f64| {
                    let centre = (yr * ph.cos() + yi * ph.sin()) / h;
                    let lo = (centre - 10.0 * w).max(0.0);
                    let hi = (centre + 10.0 * w).max(10.0 * w);
                    ln_simpson(
                        |t: f64| {
                            let lr = if t > 0.0 { (2.0 * t / p).ln() - t * t / p } else { f64::NEG_INFINITY };
                            lr + self.ln_gauss(yr, yi, h * t * ph.cos(), h * t * ph.sin())
                        },
                        lo,
                        hi,
                        200,
                    )
                };
                match scheme.kind {
                    SchemeKind::II => {
                        log_sum_exp_iter((0..n).map(|j| ln_ray(th2 + 2.0 * alpha * j as f64))) - (n as f64).ln()
                    }
                    SchemeKind::I => {
                        let r = yr.hypot(yi);
                        let width = self.s2.sqrt() / r.max(self.s2.sqrt());
                        let mt = even((100.0f64).max(2.0 * alpha / (0.25 * width)));
                        ln_simpson(|t: f64| ln_ray(th2 + t), -alpha, alpha, mt) - (2.0 * alpha).ln()
                    }
                }
            }
        };
        ln_joint - ln_cond
    }
}

/// Likelihood-ratio estimate of the family's mutual information, in nats.
/// Blocks of samples draw from independent ChaCha streams keyed by
/// `(seed, family)` and are merged in block order, so the result does not
/// depend on scheduling.
pub fn mc_mutual_information(family: &McFamily, cfg: &ChannelConfig, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::Domain(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    match family {
        McFamily::UnitPhase { amplitude } | McFamily::ConcentricCircles { amplitude, .. } if !(*amplitude >= 0.0) => {
            return Err(Error::Domain(format!("amplitude must be nonnegative, got {amplitude}")));
        }
        _ => {}
    }
    let sampler = Sampler {
        family,
        h: cfg.composite_gain(),
        s2: cfg.noise_power(),
        p: cfg.power_budget(),
        ln_pi_s2: (PI * cfg.noise_power()).ln(),
    };
    let key = splitmix(seed ^ splitmix(family.case_id()));
    let blocks: Vec<u64> = (0..samples.div_ceil(BLOCK)).collect();
    let parts = crate::par::map(&blocks, |&b| {
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(b);
        let count = BLOCK.min(samples - b * BLOCK);
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(sampler.draw(&mut rng));
        }
        m
    });
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    if !total.mean.is_finite() {
        return Err(Error::Numeric("Monte-Carlo estimate is not finite".into()));
    }
    let var = total.m2 / (total.n - 1.0);
    Ok(McEstimate { mean: total.mean, stderr: (var / total.n).sqrt(), samples, seed })
}

/// The quadrature-path value matching an oracle family, in nats.
pub fn quadrature_value(family: &McFamily, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<f64> {
    match family {
        McFamily::Gaussian => Ok(cfg.receive_snr().ln_1p()),
        McFamily::UnitPhase { amplitude } => mi::mi_phase_uniform(cfg.composite_gain() * amplitude, cfg.noise_power(), spec),
        McFamily::MassPointAmplitude { dist_a } => {
            Ok(mi::radial::rates_discrete_amplitude_nats(dist_a, &SecondaryInput::UnitModulus, cfg, spec)?.0)
        }
        McFamily::ConcentricCircles { amplitude, radii } => mi::mi_disk_conditional(radii, *amplitude, cfg, spec),
        McFamily::Scheme { scheme, order } => {
            let pair = mi::scheme_rate_pair(*scheme, *order, cfg, spec)?;
            let bits = match order {
                DecodeOrder::X1First => pair.r2,
                DecodeOrder::X2First => pair.r1,
            };
            Ok(bits / crate::channel::BITS_PER_NAT)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCase {
    pub name: String,
    pub snr_db: f64,
    pub family: McFamily,
}

/// Four SNRs times three input families: unit phase at full amplitude, a
/// three-point amplitude law, and two concentric circles.
pub fn validation_grid() -> Result<Vec<ValidationCase>> {
    let mut cases = Vec::new();
    for snr_db in [-10.0, 0.0, 5.0, 15.0] {
        let cfg = ChannelConfig::reference(snr_db)?;
        let p = cfg.power_budget();
        let sp = p.sqrt();
        let dist_a = MassPointDistribution::from_pairs(
            &[(0.0, 0.2), (0.8 * sp, 0.4), (1.3 * sp, 0.4)],
            crate::optmass::Constraint::AveragePower { power: p },
        )?;
        let radii = MassPointDistribution::from_pairs(&[(0.0, 0.5), (1.0, 0.5)], crate::optmass::Constraint::UnitDisk)?;
        cases.push(ValidationCase { name: format!("unit_phase@{snr_db}dB"), snr_db, family: McFamily::UnitPhase { amplitude: sp } });
        cases.push(ValidationCase { name: format!("mass_points_3@{snr_db}dB"), snr_db, family: McFamily::MassPointAmplitude { dist_a } });
        cases.push(ValidationCase {
            name: format!("circles_2@{snr_db}dB"),
            snr_db,
            family: McFamily::ConcentricCircles { amplitude: sp, radii },
        });
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub case: String,
    pub quad: f64,
    pub mc: McEstimate,
    pub z: f64,
}

/// Runs each case against the quadrature path. `base` supplies everything
/// but the SNR.
pub fn run_validation(
    cases: &[ValidationCase],
    base: &ChannelConfig,
    samples: u64,
    seed: u64,
    spec: &QuadratureSpec,
) -> Result<Vec<ValidationRow>> {
    cases
        .iter()
        .map(|c| {
            let cfg = base.with_snr_db(c.snr_db)?;
            let quad = quadrature_value(&c.family, &cfg, spec)?;
            let mc = mc_mutual_information(&c.family, &cfg, samples, seed)?;
            let z = if mc.stderr > 0.0 { (quad - mc.mean) / mc.stderr } else { 0.0 };
            Ok(ValidationRow { case: c.name.clone(), quad, mc, z })
        })
        .collect()
}

/// Reference output entropy `H(Y | |X1| = a)` by Monte Carlo, in nats.
pub fn mc_conditional_entropy(amplitude: f64, cfg: &ChannelConfig, samples: u64, seed: u64) -> Result<McEstimate> {
    let est = mc_mutual_information(&McFamily::UnitPhase { amplitude }, cfg, samples, seed)?;
    Ok(McEstimate { mean: est.mean + noise_entropy(cfg.noise_power()), ..est })
}
