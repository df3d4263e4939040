//! Optimality certificate for an amplitude law on the weighted boundary.
//!
//! With `k = mu2/mu1 - 1` and `l = lambda/mu1`, an optimal law satisfies
//! `omega(a) + k h(a) - l a^2 <= T0` for every `a`, with equality on the
//! support, where `omega` is the cross-entropy of the output at amplitude
//! `a` against the output law and `h(a) = H(Y | |X1| = a)`. Everything is
//! reported in nats after division by `mu1`.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::mi::{conditional_law, cross_entropy, h_y_given_amplitude_with, output_law, MixtureRadialDensity};
use crate::numerics::QuadratureSpec;
use crate::optmass::{BoundaryWeights, MassPointDistribution, SecondaryInput};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktGrid {
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub lambda: f64,
    pub t0: f64,
    /// Largest `LHS - RHS` over the grid and the support; not clamped.
    pub max_inequality_violation: f64,
    /// Amplitude where the largest excess occurs.
    pub worst_amplitude: f64,
    pub max_equality_residual: f64,
    pub grid: KktGrid,
}

impl KktReport {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.max_inequality_violation < tol
    }
}

struct Scorer<'a> {
    x2: &'a SecondaryInput,
    cfg: &'a ChannelConfig,
    spec: &'a QuadratureSpec,
    out: MixtureRadialDensity,
    k: f64,
}

impl Scorer<'_> {
    /// `omega(a) + k h(a)`.
    fn score(&self, a: f64) -> Result<f64> {
        let f = conditional_law(a, self.x2, self.cfg)?;
        let omega = cross_entropy(&f, &self.out, self.spec)?;
        Ok(omega + self.k * h_y_given_amplitude_with(a, self.x2, self.cfg, self.spec)?)
    }
}

/// Evaluates the optimality conditions on `[0, grid_max]` (`grid_n`
/// points) plus the support. The multiplier is a least-squares fit of the
/// equality and stationarity conditions at the support points.
pub fn verify_kkt(
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    weights: BoundaryWeights,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
    grid_max: f64,
    grid_n: usize,
) -> Result<KktReport> {
    Ok(evaluate(dist_a, x2, weights, cfg, spec, grid_max, grid_n)?.0)
}

/// Report plus the excess `LHS - RHS` at every grid amplitude.
fn evaluate(
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    weights: BoundaryWeights,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
    grid_max: f64,
    grid_n: usize,
) -> Result<(KktReport, Vec<(f64, f64)>)> {
    if dist_a.is_empty() {
        return Err(Error::Domain("amplitude law has no support".into()));
    }
    if !(grid_max > 0.0) || grid_n < 2 {
        return Err(Error::Domain("KKT grid needs a positive span and two points".into()));
    }
    let power = cfg.power_budget();
    let scorer = Scorer { x2, cfg, spec, out: output_law(dist_a, x2, cfg)?, k: weights.mu2 / weights.mu1 - 1.0 };
    let support = dist_a.points();
    let g_support: Vec<f64> = par::map(support, |p| scorer.score(p.location)).into_iter().collect::<Result<_>>()?;
    let mean: f64 = support.iter().zip(&g_support).map(|(p, g)| p.probability * g).sum();

    let root = power.sqrt();
    let step = 1e-4 * root;
    let interior: Vec<f64> = support.iter().map(|p| p.location).filter(|&a| a > 2.0 * step).collect();
    let slopes: Vec<f64> = par::map(&interior, |&a| -> Result<f64> {
        Ok((scorer.score(a + step)? - scorer.score(a - step)?) / (2.0 * step))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    // Rows weighted by probability so negligible tail points do not steer
    // the multiplier.
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (p, g) in support.iter().zip(&g_support) {
        let x = p.location * p.location - power;
        sxy += p.probability * x * (g - mean);
        sxx += p.probability * x * x;
    }
    let interior_p = support.iter().filter(|p| p.location > 2.0 * step).map(|p| p.probability);
    for ((a, s), w) in interior.iter().zip(&slopes).zip(interior_p) {
        let x = 2.0 * a * root;
        sxy += w * x * s * root;
        sxx += w * x * x;
    }
    let ell = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let t0 = mean - ell * power;

    let grid: Vec<f64> = (0..grid_n).map(|i| grid_max * i as f64 / (grid_n - 1) as f64).collect();
    let g_grid: Vec<f64> = par::map(&grid, |&a| scorer.score(a)).into_iter().collect::<Result<_>>()?;
    let rows: Vec<(f64, f64)> = grid
        .iter()
        .zip(&g_grid)
        .chain(support.iter().map(|p| &p.location).zip(&g_support))
        .map(|(&a, &g)| (a, g))
        .collect();

    let max_equality_residual = support
        .iter()
        .zip(&g_support)
        .map(|(p, g)| (g - ell * p.location * p.location - t0).abs())
        .fold(0.0, f64::max);

    let mut worst = (f64::NEG_INFINITY, 0.0);
    for (a, g) in rows.iter().copied() {
        let excess = g - ell * a * a - t0;
        if excess > worst.0 {
            worst = (excess, a);
        }
    }
    let profile = grid.iter().zip(&g_grid).map(|(&a, g)| (a, g - ell * a * a - t0)).collect();
    let report = KktReport {
        lambda: ell * weights.mu1,
        t0,
        max_inequality_violation: worst.0,
        worst_amplitude: worst.1,
        max_equality_residual,
        grid: KktGrid { max: grid_max, points: grid_n },
    };
    Ok((report, profile))
}

/// Adds a point `(at, e^ln_p)` to `base` (scaled by `1 - p`), shrinking all
/// locations if the power budget would be exceeded.
fn with_point(
    base: &[(f64, f64)],
    at: f64,
    ln_p: f64,
    power: f64,
    constraint: crate::optmass::Constraint,
) -> Result<MassPointDistribution> {
    let p = ln_p.exp();
    let total: f64 = base.iter().map(|b| b.1).sum();
    let mut pts: Vec<(f64, f64)> = base.iter().map(|&(x, q)| (x, q / total * (1.0 - p))).collect();
    pts.push((at, p));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m2: f64 = pts.iter().map(|(x, q)| q * x * x).sum();
    if m2 > power {
        let c = (power / m2).sqrt() * (1.0 - 1e-12);
        pts.iter_mut().for_each(|e| e.0 *= c);
    }
    MassPointDistribution::from_pairs(&pts, constraint)
}

/// Largest excess on `[0, outermost support point]` and where it occurs.
pub(crate) fn worst_in_bulk(
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    weights: BoundaryWeights,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
    grid_n: usize,
) -> Result<(f64, f64)> {
    let edge = dist_a.locations().last().copied().unwrap_or(0.0);
    if edge <= 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let (report, _) = evaluate(dist_a, x2, weights, cfg, spec, edge, grid_n)?;
    Ok((report.max_inequality_violation, report.worst_amplitude))
}

/// Smith-style completion of the tail. Beyond the outermost support point,
/// working outwards, each new point goes to the farthest grid amplitude
/// at which the mass that makes the condition hold with equality there
/// also keeps every grid amplitude in between within `tol / 2`. The exact
/// optimum carries such points with masses far below what the objective
/// can resolve. Runs only once the bulk (up to the outermost point)
/// already satisfies the condition.
#[allow(clippy::too_many_arguments)]
pub fn complete_support(
    dist_a: &MassPointDistribution,
    x2: &SecondaryInput,
    weights: BoundaryWeights,
    cfg: &ChannelConfig,
    spec: &QuadratureSpec,
    grid_max: f64,
    grid_n: usize,
    tol: f64,
    max_insertions: usize,
) -> Result<(MassPointDistribution, KktReport)> {
    let power = cfg.power_budget();
    let k = weights.mu2 / weights.mu1 - 1.0;
    let mut dist = dist_a.clone();
    let mut edge = dist.locations().last().copied().unwrap_or(0.0);
    let (report, profile) = evaluate(&dist, x2, weights, cfg, spec, grid_max, grid_n)?;
    let bulk = profile.iter().filter(|(a, _)| *a <= edge).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if bulk >= tol || !profile.iter().any(|&(a, e)| a > edge && e > 0.5 * tol) {
        return Ok((dist, report));
    }
    // Tail masses are far too small to move the multiplier or the level.
    let ell = report.lambda / weights.mu1;
    let t0 = report.t0;
    let nodes: Vec<f64> = profile.iter().map(|p| p.0).collect();
    let excess_at = |d: &MassPointDistribution, a: f64| -> Result<f64> {
        let scorer = Scorer { x2, cfg, spec, out: output_law(d, x2, cfg)?, k };
        Ok(scorer.score(a)? - ell * a * a - t0)
    };
    let with = |base: &MassPointDistribution, at: f64, ln_p: f64| -> Result<MassPointDistribution> {
        let pts: Vec<(f64, f64)> = base.points().iter().map(|b| (b.location, b.probability)).collect();
        with_point(&pts, at, ln_p, power, base.constraint())
    };
    // Equality mass at `at`, then whether the nodes strictly between
    // `edge` and `at` stay within tol / 2.
    // `None` when even a heavy point cannot close the gap: that is not a
    // tail effect and completion stops.
    let place = |base: &MassPointDistribution, edge: f64, at: f64| -> Result<Option<(MassPointDistribution, bool)>> {
        let top = 0.05f64.ln();
        if excess_at(&with(base, at, top)?, at)? > 0.0 {
            return Ok(None);
        }
        let (mut lo, mut hi) = (-700.0, top);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if excess_at(&with(base, at, mid)?, at)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let d = with(base, at, hi)?;
        for &a in nodes.iter().filter(|&&a| a > edge && a < at) {
            if excess_at(&d, a)? > 0.5 * tol {
                return Ok(Some((d, false)));
            }
        }
        Ok(Some((d, true)))
    };

    for _ in 0..max_insertions {
        let mut first = None;
        for (i, &a) in nodes.iter().enumerate().filter(|(_, &a)| a > edge) {
            if excess_at(&dist, a)? > 0.5 * tol {
                first = Some(i);
                break;
            }
        }
        let Some(first) = first else { break };
        let Some((mut best, _)) = place(&dist, edge, nodes[first])? else { break };
        let mut best_at = nodes[first];
        let (mut lo, mut hi) = (first, nodes.len() - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            match place(&dist, edge, nodes[mid])? {
                Some((d, true)) => (best, best_at, lo) = (d, nodes[mid], mid),
                _ => hi = mid - 1,
            }
        }
        dist = best;
        edge = best_at;
    }
    let (report, _) = evaluate(&dist, x2, weights, cfg, spec, grid_max, grid_n)?;
    Ok((dist, report))
}
