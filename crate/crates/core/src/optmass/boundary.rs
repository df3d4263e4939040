//! Support escalation for a single weighted boundary point, the disk
//! secondary capacity, and related summaries.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, ReflectionConstraint, BITS_PER_NAT};
use crate::error::{Error, Result};
use crate::mi::radial::rates_discrete_amplitude_nats;
use crate::mi::{rates_discrete_amplitude, Provenance, RatePair};
use crate::numerics::QuadratureSpec;
use crate::optmass::grid::{blahut_arimoto, clusters, GridModel};
use crate::optmass::kkt::{complete_support, worst_in_bulk, KktReport};
use crate::optmass::solver::{better, Context, FixedSupportSolution, SolverOptions, Start};
use crate::optmass::{BoundaryWeights, Constraint, MassPointDistribution, SecondaryInput};

const WARM_ITERATIONS: usize = 3000;
const WARM_TOL: f64 = 1e-7;
const CLUSTER_MASS: f64 = 1e-5;
const INSERT_MASS: f64 = 0.02;
const COMPLETION_STEPS: usize = 30;
const BULK_PROBE_POINTS: usize = 200;
const REFINE_FLOOR: f64 = 1e-12;
const REFINE_ITERATIONS: usize = 50000;
const REFINE_GAP: f64 = 0.1;
const REFINE_PRUNE: f64 = 1e-15;

/// `mu1 I(X1;Y) + mu2 I(X2;Y|X1)` in nats via adaptive quadrature.
pub fn weighted_objective(
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    weights: BoundaryWeights,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (r1, r2) = rates_discrete_amplitude_nats(dist_a, x2, cfg, spec)?;
    Ok(weights.mu1 * r1 + weights.mu2 * r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscalationStep {
    pub points: usize,
    pub circles: usize,
    /// Nats, on the solver's fixed nodes.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub weights: BoundaryWeights,
    pub constraint: ReflectionConstraint,
    pub amplitude: MassPointDistribution,
    pub secondary: SecondaryInput,
    /// Bits.
    pub rates: RatePair,
    /// Disk points only: the unit-modulus solution the disk search starts
    /// from, still achievable under `|X2| <= 1`. Bits.
    pub unit_stage: Option<RatePair>,
    /// Nats, adaptive quadrature.
    pub objective: f64,
    pub kkt: KktReport,
    pub converged: bool,
    /// Support size found by escalation, before tail completion.
    pub core_points: usize,
    pub history: Vec<EscalationStep>,
}

impl BoundaryPoint {
    /// Every rate pair this search showed to be achievable.
    pub fn achieved(&self) -> Vec<RatePair> {
        std::iter::once(self.rates).chain(self.unit_stage).collect()
    }
}

struct Candidate {
    sol: FixedSupportSolution,
    kkt: KktReport,
    core: MassPointDistribution,
}

impl Context<'_> {
    /// Clusters of a grid Blahut-Arimoto solution for the amplitude with
    /// the ring law held fixed.
    fn warm_amplitude(&self, rings: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
        let n = self.opts.warm_grid_points;
        let a_max = 4.0 * self.power().sqrt();
        let grid: Vec<f64> = (0..n).map(|i| a_max * i as f64 / (n - 1) as f64).collect();
        let table: Vec<Vec<f64>> = grid.iter().map(|&a| self.model.conditional(a, rings)).collect();
        let ratio = self.weights.mu2 / self.weights.mu1;
        let n0 = self.model.noise_entropy();
        let bonus: Vec<f64> = table.iter().map(|row| ratio * (self.model.entropy_of(row) - n0)).collect();
        let cost: Vec<f64> = grid.iter().map(|a| a * a).collect();
        let ba = blahut_arimoto(&self.model, &table, &bonus, Some((&cost, self.power())), None, WARM_ITERATIONS, WARM_TOL)?;
        Ok(clusters(&grid, &ba.probabilities, CLUSTER_MASS))
    }

    /// Blahut-Arimoto over a fine amplitude grid plus the current support,
    /// started from the current law, so the small tail masses that the
    /// objective cannot resolve are set by the optimality conditions.
    fn refine(&self, amp: &MassPointDistribution, rings: &[(f64, f64)]) -> Result<MassPointDistribution> {
        let span = self.opts.kkt_grid_factor * self.power().sqrt();
        let n = self.opts.kkt_grid_points;
        let mut nodes: Vec<(f64, f64)> = (0..n).map(|i| (span * i as f64 / (n - 1) as f64, REFINE_FLOOR)).collect();
        nodes.extend(amp.points().iter().map(|p| (p.location, p.probability)));
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (grid, init): (Vec<f64>, Vec<f64>) = nodes.into_iter().unzip();
        let table: Vec<Vec<f64>> = grid.iter().map(|&a| self.model.conditional(a, rings)).collect();
        let ratio = self.weights.mu2 / self.weights.mu1;
        let n0 = self.model.noise_entropy();
        let bonus: Vec<f64> = table.iter().map(|row| ratio * (self.model.entropy_of(row) - n0)).collect();
        let cost: Vec<f64> = grid.iter().map(|a| a * a).collect();
        let ba = blahut_arimoto(
            &self.model,
            &table,
            &bonus,
            Some((&cost, self.power())),
            Some(&init),
            REFINE_ITERATIONS,
            REFINE_GAP * self.opts.kkt_tol,
        )?;
        let kept: Vec<(f64, f64)> =
            grid.iter().zip(&ba.probabilities).filter(|(_, &p)| p > REFINE_PRUNE).map(|(&a, &p)| (a, p)).collect();
        let total: f64 = kept.iter().map(|k| k.1).sum();
        let kept: Vec<(f64, f64)> = kept.iter().map(|&(a, p)| (a, p / total)).collect();
        let m2: f64 = kept.iter().map(|(a, p)| p * a * a).sum();
        let c = if m2 > self.power() { (self.power() / m2).sqrt() * (1.0 - 1e-12) } else { 1.0 };
        let kept: Vec<(f64, f64)> = kept.iter().map(|&(a, p)| (a * c, p)).collect();
        MassPointDistribution::from_pairs(&kept, amp.constraint())
    }

    fn start_from(&self, amp: &[(f64, f64)], rings: &[(f64, f64)]) -> Start {
        let (a, p) = amp.iter().cloned().unzip();
        let (rho, q) = rings.iter().cloned().unzip();
        self.feasible(Start { a, p, rho, q })
    }
}

fn pairs(d: &MassPointDistribution) -> Vec<(f64, f64)> {
    d.points().iter().map(|p| (p.location, p.probability)).collect()
}

/// Merges the closest neighbours until `target` points remain.
fn reduce(mut pts: Vec<(f64, f64)>, target: usize) -> Vec<(f64, f64)> {
    while pts.len() > target && pts.len() > 1 {
        let i = (0..pts.len() - 1).min_by(|&i, &j| (pts[i + 1].0 - pts[i].0).total_cmp(&(pts[j + 1].0 - pts[j].0))).unwrap_or(0);
        let (x0, p0) = pts[i];
        let (x1, p1) = pts[i + 1];
        pts[i] = ((p0 * x0 + p1 * x1) / (p0 + p1), p0 + p1);
        pts.remove(i + 1);
    }
    pts
}

/// Warm starts for `target` points grown from `pts`: a new light point
/// past the outermost one, and a split of the heaviest point.
fn grow(pts: &[(f64, f64)], target: usize, spacing: f64) -> Vec<Vec<(f64, f64)>> {
    let mut outer: Vec<(f64, f64)> = pts.iter().map(|&(x, p)| (x, p * (1.0 - INSERT_MASS))).collect();
    let last = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    outer.push((last + 6.0 * spacing, INSERT_MASS));
    let mut split = pts.to_vec();
    for v in [&mut outer, &mut split] {
        fill(v, target, spacing);
    }
    vec![outer, split]
}

/// Splits the heaviest point until `target` points remain, then sorts.
fn fill(v: &mut Vec<(f64, f64)>, target: usize, spacing: f64) {
    while v.len() < target {
        let i = (0..v.len()).max_by(|&i, &j| v[i].1.total_cmp(&v[j].1)).unwrap_or(0);
        let (x, p) = v[i];
        v[i] = ((x - spacing).max(0.0), 0.5 * p);
        v.push((x + spacing, 0.5 * p));
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
}

/// Smith step: a light point where the optimality condition fails worst.
fn insert_at(pts: &[(f64, f64)], at: f64, target: usize, spacing: f64) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = pts.iter().map(|&(x, p)| (x, p * (1.0 - INSERT_MASS))).collect();
    if v.iter().any(|p| (p.0 - at).abs() < 1e-9) {
        v.iter_mut().for_each(|p| p.1 /= 1.0 - INSERT_MASS);
    } else {
        v.push((at, INSERT_MASS));
    }
    fill(&mut v, target, spacing);
    v
}

impl Context<'_> {
    /// Certificate after completing the tail; `None` if it fails.
    fn certified(&self, sol: &FixedSupportSolution, spec: &QuadratureSpec) -> Result<(Candidate, bool)> {
        let root = self.power().sqrt();
        let polished = self.refine(&sol.amplitude, &sol.secondary.rings())?;
        let (amplitude, kkt) = complete_support(
            &polished,
            &sol.secondary,
            self.weights,
            self.cfg,
            spec,
            self.opts.kkt_grid_factor * root,
            self.opts.kkt_grid_points,
            self.opts.kkt_tol,
            COMPLETION_STEPS,
        )?;
        let ok = kkt.satisfied(self.opts.kkt_tol);
        let core = sol.amplitude.clone();
        Ok((Candidate { sol: FixedSupportSolution { amplitude, ..sol.clone() }, kkt, core }, ok))
    }
}

/// Grows the amplitude support (unit-modulus secondary) until the gain and
/// certificate tests pass.
fn escalate_amplitude(ctx: &Context, spec: &QuadratureSpec, history: &mut Vec<EscalationStep>) -> Result<(Candidate, bool)> {
    let rings = [(1.0, 1.0)];
    let warm = ctx.warm_amplitude(&rings)?;
    let spacing = 0.05 * ctx.power().sqrt();
    let mut current: Option<FixedSupportSolution> = None;
    let mut probe: Option<f64> = None;
    for m in 1..=ctx.opts.max_points {
        let mut starts = Vec::new();
        if warm.len() >= m {
            starts.push(ctx.start_from(&reduce(warm.clone(), m), &rings));
        }
        if let Some(c) = &current {
            for g in grow(&pairs(&c.amplitude), m, spacing) {
                starts.push(ctx.start_from(&g, &rings));
            }
            if let Some(at) = probe {
                starts.push(ctx.start_from(&insert_at(&pairs(&c.amplitude), at, m, spacing), &rings));
            }
        }
        let sol = ctx.solve(m, 1, starts)?;
        history.push(EscalationStep { points: sol.amplitude.len(), circles: 1, objective: sol.objective });
        let Some(prev) = current.take() else {
            current = Some(sol);
            continue;
        };
        let gain = sol.objective - prev.objective;
        let keep = if sol.objective >= prev.objective { sol } else { prev };
        let (worst, at) = worst_in_bulk(&keep.amplitude, &keep.secondary, ctx.weights, ctx.cfg, spec, BULK_PROBE_POINTS)?;
        probe = (worst > 0.5 * ctx.opts.kkt_tol).then_some(at);
        if gain < ctx.opts.gain_tol {
            let (cand, ok) = ctx.certified(&keep, spec)?;
            if ok {
                return Ok((cand, true));
            }
        }
        current = Some(keep);
    }
    let last = current.ok_or_else(|| Error::Infeasible("no support size was tried".into()))?;
    let (cand, _) = ctx.certified(&last, spec)?;
    Ok((cand, false))
}

/// Alternates amplitude and ring growth from the unit-modulus solution.
fn escalate_disk(
    ctx: &Context,
    unit: &MassPointDistribution,
    spec: &QuadratureSpec,
    history: &mut Vec<EscalationStep>,
) -> Result<(Candidate, bool)> {
    let seed = ctx.start_from(&pairs(unit), &[(1.0, 1.0)]);
    let mut current = ctx.solve(unit.len(), 1, vec![seed])?;
    history.push(EscalationStep {
        points: current.amplitude.len(),
        circles: current.secondary.rings().len(),
        objective: current.objective,
    });
    let spacing = 0.05 * ctx.power().sqrt();
    loop {
        let amp = pairs(&current.amplitude);
        let rings = current.secondary.rings();
        let (m, l) = (amp.len(), rings.len());
        let mut tries: Vec<FixedSupportSolution> = Vec::new();
        if l < ctx.opts.max_circles {
            let inner = rings[0].0;
            let mut at = vec![0.0, 0.5 * inner];
            at.extend(rings.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)));
            let starts = at
                .into_iter()
                .map(|r| {
                    let mut next: Vec<(f64, f64)> = rings.iter().map(|&(x, q)| (x, q * (1.0 - INSERT_MASS))).collect();
                    next.push((r, INSERT_MASS));
                    next.sort_by(|a, b| a.0.total_cmp(&b.0));
                    ctx.start_from(&amp, &next)
                })
                .collect();
            tries.push(ctx.solve(m, l + 1, starts)?);
        }
        if m < ctx.opts.max_points {
            let starts = grow(&amp, m + 1, spacing).iter().map(|g| ctx.start_from(g, &rings)).collect();
            tries.push(ctx.solve(m + 1, l, starts)?);
        }
        let best = tries.into_iter().reduce(|x, y| if better(&y, &x) { y } else { x });
        let gain = best.as_ref().map_or(0.0, |b| b.objective - current.objective);
        if gain < ctx.opts.gain_tol {
            return ctx.certified(&current, spec);
        }
        let best = best.expect("gain is positive only with a candidate");
        history.push(EscalationStep {
            points: best.amplitude.len(),
            circles: best.secondary.rings().len(),
            objective: best.objective,
        });
        current = best;
    }
}

/// Optimal weighted boundary point with grown supports and its
/// certificate.
pub fn optimize_boundary_point(
    weights: BoundaryWeights,
    constraint: ReflectionConstraint,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
    opts: &SolverOptions,
) -> Result<BoundaryPoint> {
    let mut history = Vec::new();
    let unit_ctx = Context::new(cfg, weights, ReflectionConstraint::UnitModulus, opts)?;
    let (unit, unit_ok) = escalate_amplitude(&unit_ctx, spec, &mut history)?;
    let (best, converged, unit_stage) = match constraint {
        ReflectionConstraint::UnitModulus => (unit, unit_ok, None),
        ReflectionConstraint::UnitDisk => {
            let stage = rates_discrete_amplitude(&unit.sol.amplitude, &unit.sol.secondary, cfg, spec)?
                .with_provenance(Provenance::MuUnit { mu1: weights.mu1 });
            let disk_ctx = Context::new(cfg, weights, ReflectionConstraint::UnitDisk, opts)?;
            let (best, ok) = escalate_disk(&disk_ctx, &unit.core, spec, &mut history)?;
            (best, ok, Some(stage))
        }
    };
    let rates = rates_discrete_amplitude(&best.sol.amplitude, &best.sol.secondary, cfg, spec)?
        .with_provenance(Provenance::Mu { mu1: weights.mu1 });
    let objective = (weights.mu1 * rates.r1 + weights.mu2 * rates.r2) / BITS_PER_NAT;
    Ok(BoundaryPoint {
        weights,
        constraint,
        amplitude: best.sol.amplitude,
        secondary: best.sol.secondary,
        rates,
        unit_stage,
        objective,
        kkt: best.kkt,
        converged,
        core_points: best.core.len(),
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskCapacity {
    /// Bits.
    pub capacity: f64,
    /// Certified distance to the optimum over the radius grid, in bits.
    pub gap: f64,
    pub radii: MassPointDistribution,
}

/// Secondary capacity under `|X2| <= 1` with the primary at full power:
/// Blahut-Arimoto over concentric circles on a radius grid whose spacing
/// maps to a quarter noise standard deviation at the receiver.
pub fn c2_disk(cfg: &ChannelConfig) -> Result<DiskCapacity> {
    let s = cfg.full_amplitude();
    let sigma = cfg.noise_power().sqrt();
    let count = ((4.0 * s / sigma).ceil() as usize + 1).clamp(41, 4001);
    let weights = BoundaryWeights::new(0.25)?;
    let model = GridModel::new(cfg, weights, s)?;
    let amplitude = cfg.power_budget().sqrt();
    let radii: Vec<f64> = (0..count).map(|i| i as f64 / (count - 1) as f64).collect();
    let table: Vec<Vec<f64>> = radii.iter().map(|&r| model.conditional(amplitude, &[(r, 1.0)])).collect();
    // The phase on each circle carries H(Y | ring) - H(Z) on top of what
    // the radius carries.
    let n0 = model.noise_entropy();
    let bonus: Vec<f64> = table.iter().map(|row| model.entropy_of(row) - n0).collect();
    let ba = blahut_arimoto(&model, &table, &bonus, None, None, 20000, 1e-9)?;
    let rings = clusters(&radii, &ba.probabilities, CLUSTER_MASS);
    let capacity = ba.value * BITS_PER_NAT;
    let gap = ba.gap * BITS_PER_NAT;
    if let Some((polished, law)) = polish_rings(cfg, weights, &rings)? {
        if polished > capacity {
            return Ok(DiskCapacity { capacity: polished, gap, radii: law });
        }
    }
    let radii = MassPointDistribution::from_pairs(&rings, Constraint::UnitDisk)?;
    Ok(DiskCapacity { capacity, gap, radii })
}

/// Frees the grid radii and rescores with adaptive quadrature. A single
/// full-power amplitude makes `I(X1; Y)` vanish, so the weighted solve
/// maximizes `I(X2; Y | X1)` alone. Returns bits.
fn polish_rings(
    cfg: &ChannelConfig,
    weights: BoundaryWeights,
    rings: &[(f64, f64)],
) -> Result<Option<(f64, MassPointDistribution)>> {
    let opts = SolverOptions { multistarts: 0, ..SolverOptions::default() };
    if rings.is_empty() || rings.len() > opts.max_circles {
        return Ok(None);
    }
    let ctx = Context::new(cfg, weights, ReflectionConstraint::UnitDisk, &opts)?;
    let start = ctx.start_from(&[(ctx.power().sqrt(), 1.0)], rings);
    let sol = ctx.solve(1, rings.len(), vec![start])?;
    let r2 = rates_discrete_amplitude(&sol.amplitude, &sol.secondary, cfg, &QuadratureSpec::default())?.r2;
    Ok(Some((r2, sol.secondary.distribution())))
}

/// Kolmogorov-Smirnov distance between a discrete amplitude law and the
/// Rayleigh law of second moment `power`.
pub fn rayleigh_ks_distance(dist: &MassPointDistribution, power: f64) -> f64 {
    let cdf = |a: f64| 1.0 - (-a * a / power).exp();
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    for p in dist.points() {
        let f = cdf(p.location);
        worst = worst.max((f - below).abs());
        below += p.probability;
        worst = worst.max((f - below).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_against_known_values() {
        let d = MassPointDistribution::single(1.0, Constraint::AveragePower { power: 1.0 }).unwrap();
        let f = 1.0 - (-1.0f64).exp();
        assert!((rayleigh_ks_distance(&d, 1.0) - f.max(1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn disk_capacity_sits_between_unit_circle_and_peak_bound() {
        for snr_db in [0.0, 15.0] {
            let cfg = ChannelConfig::reference(snr_db).unwrap();
            let disk = c2_disk(&cfg).unwrap();
            let unit = crate::mi::c2_unit_modulus(&cfg, &QuadratureSpec::default()).unwrap();
            let peak = crate::mi::upper_bound_mckellips(cfg.receive_snr());
            assert!(disk.capacity > unit && disk.capacity < peak, "{snr_db}: {} vs {unit}, {peak}", disk.capacity);
            assert!(disk.gap < 1e-4);
        }
    }

    #[test]
    fn grow_and_reduce_keep_counts() {
        let pts = vec![(0.5, 0.5), (1.5, 0.5)];
        for g in grow(&pts, 4, 0.05) {
            assert_eq!(g.len(), 4);
            assert!((g.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(reduce(g, 2).len(), 2);
        }
    }
}
