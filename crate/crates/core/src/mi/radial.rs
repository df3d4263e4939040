//! Radial laws of `|Y|` given the received amplitude, and the entropies
//! built from them. Given the primary amplitude the output phase is uniform,
//! so every entropy here is a one-dimensional integral over `r = |y|`.

use std::f64::consts::PI;

use crate::channel::{noise_entropy, ChannelConfig, BITS_PER_NAT};
use crate::error::{Error, Result};
use crate::numerics::{integrate_radial_multi, ln_i0, QuadratureSpec};
use crate::optmass::{Constraint, MassPointDistribution, SecondaryInput};

use super::{Provenance, RatePair};

/// Anything with a log-kernel `ln kappa(r)` such that the Cartesian output
/// density is `kappa(r) / (pi sigma^2)`.
pub trait RadialLaw {
    fn ln_kappa(&self, r: f64) -> f64;
    /// Modes used to split the radial quadrature.
    fn centers(&self) -> Vec<f64>;
    fn noise_power(&self) -> f64;

    /// Density of `|Y|`.
    fn pdf(&self, r: f64) -> f64 {
        2.0 * r / self.noise_power() * self.ln_kappa(r).exp()
    }
}

/// Rice law of `|Y|` for a received amplitude `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalRadialDensity {
    noncentrality: f64,
    noise_power: f64,
}

impl ConditionalRadialDensity {
    pub fn new(noncentrality: f64, noise_power: f64) -> Result<Self> {
        if !(noncentrality >= 0.0 && noncentrality.is_finite()) {
            return Err(Error::Domain(format!("noncentrality must be nonnegative, got {noncentrality}")));
        }
        if !(noise_power > 0.0) {
            return Err(Error::Domain(format!("noise power must be positive, got {noise_power}")));
        }
        Ok(Self { noncentrality, noise_power })
    }

    pub fn noncentrality(&self) -> f64 {
        self.noncentrality
    }
}

impl RadialLaw for ConditionalRadialDensity {
    #[inline]
    fn ln_kappa(&self, r: f64) -> f64 {
        let s = self.noncentrality;
        -(r * r + s * s) / self.noise_power + ln_i0(2.0 * r * s / self.noise_power)
    }

    fn centers(&self) -> Vec<f64> {
        vec![self.noncentrality]
    }

    fn noise_power(&self) -> f64 {
        self.noise_power
    }
}

/// Finite mixture of Rice laws sharing one noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureRadialDensity {
    ln_weights: Vec<f64>,
    components: Vec<ConditionalRadialDensity>,
    noise_power: f64,
}

impl MixtureRadialDensity {
    pub fn new(components: Vec<(f64, ConditionalRadialDensity)>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::Domain("mixture has no components".into()))?;
        let noise_power = first.1.noise_power;
        let mut total = 0.0;
        for (w, c) in &components {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::Domain(format!("mixture weight {w} outside [0, 1]")));
            }
            if c.noise_power != noise_power {
                return Err(Error::Domain("mixture components disagree on noise power".into()));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("mixture weights sum to {total}")));
        }
        let kept: Vec<_> = components.into_iter().filter(|(w, _)| *w > 0.0).collect();
        Ok(Self {
            ln_weights: kept.iter().map(|(w, _)| w.ln()).collect(),
            components: kept.into_iter().map(|(_, c)| c).collect(),
            noise_power,
        })
    }

    /// Received-amplitude mixture: weight `w_i` at amplitude `s_i`.
    pub fn from_amplitudes(pairs: &[(f64, f64)], noise_power: f64) -> Result<Self> {
        let comps = pairs
            .iter()
            .map(|&(s, w)| Ok((w, ConditionalRadialDensity::new(s, noise_power)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl RadialLaw for MixtureRadialDensity {
    fn ln_kappa(&self, r: f64) -> f64 {
        // Streaming log-sum-exp, one exponential per component.
        let mut m = f64::NEG_INFINITY;
        let mut acc = 0.0;
        for (lw, c) in self.ln_weights.iter().zip(&self.components) {
            let x = lw + c.ln_kappa(r);
            if x > m {
                acc = acc * (m - x).exp() + 1.0;
                m = x;
            } else {
                acc += (x - m).exp();
            }
        }
        m + acc.ln()
    }

    fn centers(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.noncentrality).collect()
    }

    fn noise_power(&self) -> f64 {
        self.noise_power
    }
}

/// `-int f_r(r) ln kappa_g(r) dr + ln(pi sigma^2)`: the cross-entropy of the
/// output law `f` against `g`, in nats.
pub fn cross_entropy<F: RadialLaw, G: RadialLaw>(f: &F, g: &G, spec: &QuadratureSpec) -> Result<f64> {
    let s2 = f.noise_power();
    let integrand = |r: f64| {
        let lk = f.ln_kappa(r);
        let w = 2.0 * r / s2 * lk.exp();
        if w == 0.0 {
            0.0
        } else {
            -w * g.ln_kappa(r)
        }
    };
    let v = integrate_radial_multi(integrand, &f.centers(), s2.sqrt(), spec)?;
    Ok(v + (PI * s2).ln())
}

/// Differential entropy of `Y` in nats.
pub fn entropy<F: RadialLaw>(f: &F, spec: &QuadratureSpec) -> Result<f64> {
    cross_entropy(f, f, spec)
}

/// `I(X2; Y | received amplitude s)` for a uniform-phase unit-modulus `X2`, in nats.
pub fn mi_phase_uniform(noncentrality: f64, noise_power: f64, spec: &QuadratureSpec) -> Result<f64> {
    let law = ConditionalRadialDensity::new(noncentrality, noise_power)?;
    let s = noncentrality;
    if s == 0.0 {
        return Ok(0.0);
    }
    let snr = s * s / noise_power;
    let sigma = noise_power.sqrt();
    // Two cancellation-free rearrangements of -E[ln kappa] - 1, one per regime.
    let value = if snr < 1.0 {
        // I = 2 snr - E[ln I0(2 r s / sigma^2)]
        let e = integrate_radial_multi(
            |r| {
                let w = law.pdf(r);
                if w == 0.0 {
                    0.0
                } else {
                    w * ln_i0(2.0 * r * s / noise_power)
                }
            },
            &[s],
            sigma,
            spec,
        )?;
        2.0 * snr - e
    } else {
        // I = E[(r - s)^2 / sigma^2 - ln(I0(x) e^{-x})] - 1
        let e = integrate_radial_multi(
            |r| {
                let w = law.pdf(r);
                if w == 0.0 {
                    0.0
                } else {
                    let x = 2.0 * r * s / noise_power;
                    w * ((r - s) * (r - s) / noise_power - (ln_i0(x) - x))
                }
            },
            &[s],
            sigma,
            spec,
        )?;
        e - 1.0
    };
    Ok(value.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticRegime {
    High,
    Low,
}

/// Closed-form limits of [`mi_phase_uniform`] in nats, `snr = s^2 / sigma^2`.
pub fn mi_phase_uniform_asymptotic(snr: f64, regime: AsymptoticRegime) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::Domain(format!("snr must be nonnegative, got {snr}")));
    }
    match regime {
        AsymptoticRegime::Low => Ok(snr),
        AsymptoticRegime::High => {
            let threshold = std::f64::consts::E / (4.0 * PI);
            if snr < threshold * (1.0 - 1e-12) {
                return Err(Error::Domain(format!("high-snr form is negative below snr = {threshold}")));
            }
            Ok((0.5 * (4.0 * PI * snr / std::f64::consts::E).ln()).max(0.0))
        }
    }
}

/// Secondary capacity under `|X2| = 1`, in bits.
pub fn c2_unit_modulus(cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<f64> {
    Ok(mi_phase_uniform(cfg.full_amplitude(), cfg.noise_power(), spec)? * BITS_PER_NAT)
}

/// Output law given primary amplitude `a` and the secondary ring law.
pub fn conditional_law(a: f64, x2: &SecondaryInput, cfg: &ChannelConfig) -> Result<MixtureRadialDensity> {
    let h = cfg.composite_gain();
    let pairs: Vec<(f64, f64)> = x2.rings().iter().map(|&(r, q)| (h * a * r, q)).collect();
    MixtureRadialDensity::from_amplitudes(&pairs, cfg.noise_power())
}

/// Output law when `|X1|` follows `dist_a`.
pub fn output_law(dist_a: &MassPointDistribution, x2: &SecondaryInput, cfg: &ChannelConfig) -> Result<MixtureRadialDensity> {
    let h = cfg.composite_gain();
    let rings = x2.rings();
    let mut pairs = Vec::with_capacity(dist_a.len() * rings.len());
    for p in dist_a.points() {
        for &(r, q) in &rings {
            pairs.push((h * p.location * r, p.probability * q));
        }
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    for p in pairs.iter_mut() {
        p.1 /= total;
    }
    MixtureRadialDensity::from_amplitudes(&pairs, cfg.noise_power())
}

/// `I(X2; Y | |X1| = a)` for concentric-circle `X2`, in nats.
pub fn mi_disk_conditional(
    dist_x2: &MassPointDistribution,
    amplitude: f64,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if dist_x2.constraint() != Constraint::UnitDisk {
        return Err(Error::Domain("secondary radii must carry the unit-disk constraint".into()));
    }
    if let [only] = dist_x2.points() {
        return mi_phase_uniform(cfg.composite_gain() * amplitude * only.location, cfg.noise_power(), spec);
    }
    let law = conditional_law(amplitude, &SecondaryInput::Circles(dist_x2.clone()), cfg)?;
    Ok((entropy(&law, spec)? - noise_entropy(cfg.noise_power())).max(0.0))
}

/// `H(Y | |X1| = a)` for a unit-modulus `X2`, in nats.
pub fn h_y_given_amplitude(a: f64, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<f64> {
    h_y_given_amplitude_with(a, &SecondaryInput::UnitModulus, cfg, spec)
}

/// `H(Y | |X1| = a)` for an arbitrary ring law, in nats.
pub fn h_y_given_amplitude_with(a: f64, x2: &SecondaryInput, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("amplitude must be nonnegative, got {a}")));
    }
    let n0 = noise_entropy(cfg.noise_power());
    match x2 {
        SecondaryInput::UnitModulus => Ok(mi_phase_uniform(cfg.composite_gain() * a, cfg.noise_power(), spec)? + n0),
        SecondaryInput::Circles(d) => Ok(mi_disk_conditional(d, a, cfg, spec)? + n0),
    }
}

/// Cross-entropy of the output at amplitude `a` against the output law
/// induced by `dist_a`, in nats.
pub fn marginal_entropy(
    a: f64,
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let f = conditional_law(a, x2, cfg)?;
    let g = output_law(dist_a, x2, cfg)?;
    cross_entropy(&f, &g, spec)
}

fn check_power(dist_a: &MassPointDistribution, cfg: &ChannelConfig) -> Result<()> {
    let m2 = dist_a.second_moment();
    if m2 > cfg.power_budget() * (1.0 + 1e-10) + 1e-12 {
        return Err(Error::Domain(format!(
            "amplitude law has power {m2}, budget is {}",
            cfg.power_budget()
        )));
    }
    Ok(())
}

/// `(I(X1; Y), I(X2; Y | X1))` in bits for a discrete amplitude law.
pub fn rates_discrete_amplitude(
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
) -> Result<RatePair> {
    let (r1, r2) = rates_discrete_amplitude_nats(dist_a, x2, cfg, spec)?;
    Ok(RatePair::new(r1 * BITS_PER_NAT, r2 * BITS_PER_NAT, Provenance::Evaluated))
}

pub(crate) fn rates_discrete_amplitude_nats(
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    check_power(dist_a, cfg)?;
    let n0 = noise_entropy(cfg.noise_power());
    let mut h_cond = 0.0;
    for p in dist_a.points() {
        h_cond += p.probability * h_y_given_amplitude_with(p.location, x2, cfg, spec)?;
    }
    let h_y = if dist_a.len() == 1 { h_cond } else { entropy(&output_law(dist_a, x2, cfg)?, spec)? };
    Ok(((h_y - h_cond).max(0.0), (h_cond - n0).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_radial;
    use proptest::prelude::*;

    const SPEC: QuadratureSpec = QuadratureSpec {
        rel_tol: 1e-8,
        abs_tol: 1e-12,
        radial_truncation_sigmas: 10.0,
        max_subdivisions: 60,
        angular_nodes: 256,
    };

    #[test]
    fn rice_mi_reference_values() {
        // snr, I in nats
        let cases = [
            (1e-4, 9.99950003332958e-5),
            (0.01, 0.00995032965154595),
            (0.1, 0.0953014343084550),
            (1.0, 0.679902887442163),
            (3.8857, 1.40441498936310),
            (12.288, 2.00905473068367),
            (38.857, 2.59218549346972),
            (388.58067888, 3.74644032854800),
            (1000.0, 4.21926468473586),
        ];
        for (snr, v) in cases {
            let got = mi_phase_uniform(f64::sqrt(snr), 1.0, &SPEC).unwrap();
            assert!((got - v).abs() < 1e-8 * v.max(1e-3), "snr {snr}: {got} vs {v}");
            // Noise power only enters through s^2 / sigma^2.
            let scaled = mi_phase_uniform(f64::sqrt(snr * 4.0), 4.0, &SPEC).unwrap();
            assert!((scaled - got).abs() < 1e-9);
        }
        assert_eq!(mi_phase_uniform(0.0, 1.0, &SPEC).unwrap(), 0.0);
    }

    #[test]
    fn asymptotic_forms() {
        let high = mi_phase_uniform_asymptotic(38.857, AsymptoticRegime::High).unwrap();
        assert!((high - 2.59545624386631).abs() < 1e-12);
        assert_eq!(mi_phase_uniform_asymptotic(0.01, AsymptoticRegime::Low).unwrap(), 0.01);
        let edge = mi_phase_uniform_asymptotic(std::f64::consts::E / (4.0 * PI), AsymptoticRegime::High).unwrap();
        assert!(edge.abs() < 1e-15);
        assert!(mi_phase_uniform_asymptotic(0.1, AsymptoticRegime::High).is_err());
        let exact = mi_phase_uniform(38.857f64.sqrt(), 1.0, &SPEC).unwrap();
        assert!((exact - high).abs() < 0.02);
        let low = mi_phase_uniform(0.1, 1.0, &SPEC).unwrap();
        assert!((low - 0.01).abs() < 0.05 * low);
    }

    #[test]
    fn entropy_paths_agree() {
        let law = ConditionalRadialDensity::new(6.0, 1.0).unwrap();
        let h = entropy(&law, &SPEC).unwrap();
        let via_mi = mi_phase_uniform(6.0, 1.0, &SPEC).unwrap() + noise_entropy(1.0);
        assert!((h - via_mi).abs() < 1e-8);
        let zero = entropy(&ConditionalRadialDensity::new(0.0, 2.0).unwrap(), &SPEC).unwrap();
        assert!((zero - noise_entropy(2.0)).abs() < 1e-10);
    }

    #[test]
    fn unit_circle_disk_matches_phase_mi() {
        let cfg = ChannelConfig::reference(5.0).unwrap();
        let a = cfg.power_budget().sqrt();
        let unit = MassPointDistribution::unit_circle();
        let d = mi_disk_conditional(&unit, a, &cfg, &SPEC).unwrap();
        let m = mi_phase_uniform(cfg.full_amplitude(), 1.0, &SPEC).unwrap();
        assert!((d - m).abs() < 1e-7);
        let origin = MassPointDistribution::single(0.0, Constraint::UnitDisk).unwrap();
        assert_eq!(mi_disk_conditional(&origin, a, &cfg, &SPEC).unwrap(), 0.0);
    }

    #[test]
    fn two_circle_generic_path_matches_single_circle_limit() {
        let cfg = ChannelConfig::reference(5.0).unwrap();
        let a = cfg.power_budget().sqrt();
        // A second ring with negligible weight barely moves the generic mixture path.
        let d = MassPointDistribution::from_pairs(&[(0.5, 1e-12), (1.0, 1.0 - 1e-12)], Constraint::UnitDisk).unwrap();
        let mixed = mi_disk_conditional(&d, a, &cfg, &SPEC).unwrap();
        let single = mi_phase_uniform(cfg.full_amplitude(), 1.0, &SPEC).unwrap();
        assert!((mixed - single).abs() < 1e-7);
    }

    #[test]
    fn corner_c_from_single_point() {
        let cfg = ChannelConfig::reference(5.0).unwrap();
        let p = cfg.power_budget();
        let d = MassPointDistribution::single(p.sqrt(), Constraint::AveragePower { power: p }).unwrap();
        let pair = rates_discrete_amplitude(&d, &SecondaryInput::UnitModulus, &cfg, &SPEC).unwrap();
        assert_eq!(pair.r1, 0.0);
        assert!((pair.r2 - c2_unit_modulus(&cfg, &SPEC).unwrap()).abs() < 1e-12);
        let zero = MassPointDistribution::single(0.0, Constraint::AveragePower { power: p }).unwrap();
        let z = rates_discrete_amplitude(&zero, &SecondaryInput::UnitModulus, &cfg, &SPEC).unwrap();
        assert_eq!((z.r1, z.r2), (0.0, 0.0));
        let too_big = MassPointDistribution::single(2.0 * p.sqrt(), Constraint::AveragePower { power: 4.0 * p }).unwrap();
        assert!(rates_discrete_amplitude(&too_big, &SecondaryInput::UnitModulus, &cfg, &SPEC).is_err());
    }

    #[test]
    fn marginal_entropy_identities() {
        let cfg = ChannelConfig::reference(0.0).unwrap();
        let p = cfg.power_budget();
        let c = Constraint::AveragePower { power: p };
        let x2 = SecondaryInput::UnitModulus;
        let single = MassPointDistribution::single(0.9, c).unwrap();
        let w = marginal_entropy(0.9, &single, &x2, &cfg, &SPEC).unwrap();
        assert!((w - h_y_given_amplitude(0.9, &cfg, &SPEC).unwrap()).abs() < 1e-8);

        let d = MassPointDistribution::from_pairs(&[(0.0, 0.2), (0.8, 0.4), (1.3, 0.4)], c).unwrap();
        let mix: f64 = d
            .points()
            .iter()
            .map(|pt| pt.probability * marginal_entropy(pt.location, &d, &x2, &cfg, &SPEC).unwrap())
            .sum();
        let hy = entropy(&output_law(&d, &x2, &cfg).unwrap(), &SPEC).unwrap();
        assert!((mix - hy).abs() < 1e-8);
        for a in [0.0, 0.4, 1.0, 2.5] {
            let w = marginal_entropy(a, &d, &x2, &cfg, &SPEC).unwrap();
            assert!(w >= h_y_given_amplitude(a, &cfg, &SPEC).unwrap() - 1e-9);
        }
        assert!((h_y_given_amplitude(0.0, &cfg, &SPEC).unwrap() - noise_entropy(1.0)).abs() < 1e-12);
    }

    #[test]
    fn mixture_normalized() {
        let m = MixtureRadialDensity::from_amplitudes(&[(0.0, 0.3), (2.0, 0.3), (9.0, 0.4)], 1.5).unwrap();
        let one = integrate_radial_multi(|r| m.pdf(r), &m.centers(), 1.5f64.sqrt(), &SPEC).unwrap();
        assert!((one - 1.0).abs() < 1e-9);
        let single = ConditionalRadialDensity::new(3.0, 1.0).unwrap();
        let one = integrate_radial(|r| single.pdf(r), 3.0, 1.0, &SPEC).unwrap();
        assert!((one - 1.0).abs() < 1e-9);
        assert!(MixtureRadialDensity::from_amplitudes(&[(1.0, 0.5)], 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rates_within_sum_capacity(
            locs in proptest::collection::vec(0.0f64..2.0, 1..5),
            weights in proptest::collection::vec(0.05f64..1.0, 5),
            snr_db in -5.0f64..10.0,
        ) {
            let cfg = ChannelConfig::reference(snr_db).unwrap();
            let pairs: Vec<(f64, f64)> = locs.iter().zip(&weights).map(|(&l, &w)| (l, w)).collect();
            let total: f64 = pairs.iter().map(|p| p.1).sum();
            let m2: f64 = pairs.iter().map(|p| p.1 / total * p.0 * p.0).sum();
            // Rescale to meet the budget.
            let scale = if m2 > 0.0 { (cfg.power_budget() / m2).sqrt().min(1.0) } else { 1.0 };
            let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(l, w)| (l * scale, w)).collect();
            let d = MassPointDistribution::from_pairs(&scaled, Constraint::AveragePower { power: cfg.power_budget() }).unwrap();
            let pair = rates_discrete_amplitude(&d, &SecondaryInput::UnitModulus, &cfg, &SPEC).unwrap();
            let cs = crate::channel::c_sum_max(&cfg);
            prop_assert!(pair.r1 >= 0.0 && pair.r2 >= 0.0);
            prop_assert!(pair.r1 + pair.r2 <= cs + 1e-6);
        }

        #[test]
        fn mi_nonnegative_and_bounded(s in 0.0f64..40.0) {
            let i = mi_phase_uniform(s, 1.0, &SPEC).unwrap();
            prop_assert!(i >= 0.0);
            prop_assert!(i <= (s * s).ln_1p() + 1e-6);
        }
    }
}
