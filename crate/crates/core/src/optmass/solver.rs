//! Log-barrier quasi-Newton ascent over mass-point locations and weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, ReflectionConstraint};
use crate::error::{Error, Result};
use crate::optmass::grid::GridModel;
use crate::optmass::{BoundaryWeights, Constraint, MassPointDistribution, SecondaryInput};
use crate::oracle::splitmix;
use crate::par;

/// Amplitudes are searched in `[0, AMPLITUDE_CAP * sqrt(P)]`.
pub(crate) const AMPLITUDE_CAP: f64 = 5.0;
const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub seed: u64,
    /// Random starts per support size, on top of the warm starts.
    pub multistarts: usize,
    pub max_points: usize,
    pub max_circles: usize,
    /// Nats.
    pub kkt_tol: f64,
    /// Nats.
    pub gain_tol: f64,
    /// Relative to `sqrt(P)` for amplitudes, absolute for radii.
    pub merge_tol: f64,
    pub min_probability: f64,
    pub barrier_start: f64,
    pub barrier_end: f64,
    /// Quasi-Newton iterations per barrier stage.
    pub max_iterations: usize,
    pub kkt_grid_points: usize,
    /// KKT grid spans `[0, kkt_grid_factor * sqrt(P)]`.
    pub kkt_grid_factor: f64,
    /// Candidate count of the grid warm start.
    pub warm_grid_points: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            multistarts: 8,
            max_points: 24,
            max_circles: 8,
            kkt_tol: 1e-3,
            gain_tol: 1e-4,
            merge_tol: 1e-3,
            min_probability: 1e-5,
            barrier_start: 1e-2,
            barrier_end: 1e-7,
            max_iterations: 300,
            kkt_grid_points: 400,
            kkt_grid_factor: 3.0,
            warm_grid_points: 160,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.kkt_tol, self.gain_tol, self.merge_tol, self.barrier_start, self.barrier_end, self.kkt_grid_factor];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.barrier_end > self.barrier_start {
            return Err(Error::Config("barrier_end must not exceed barrier_start".into()));
        }
        if !(0.0..0.5).contains(&self.min_probability) {
            return Err(Error::Config("min_probability must lie in [0, 0.5)".into()));
        }
        if self.max_points == 0 || self.max_circles == 0 || self.max_iterations == 0 || self.kkt_grid_points < 2 {
            return Err(Error::Config("solver counts must be positive".into()));
        }
        if self.warm_grid_points < 8 {
            return Err(Error::Config("warm_grid_points must be at least 8".into()));
        }
        Ok(())
    }
}

/// Outcome of a single support-size solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedSupportSolution {
    pub amplitude: MassPointDistribution,
    pub secondary: SecondaryInput,
    /// Weighted objective in nats on the solver's fixed nodes.
    pub objective: f64,
    pub converged: bool,
}

/// Natural-space point of the search.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Start {
    pub a: Vec<f64>,
    pub p: Vec<f64>,
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
}

pub(crate) struct Context<'a> {
    pub cfg: &'a ChannelConfig,
    pub weights: BoundaryWeights,
    pub opts: &'a SolverOptions,
    pub model: GridModel,
    pub disk: bool,
    a_cap: f64,
}

impl<'a> Context<'a> {
    pub fn new(
        cfg: &'a ChannelConfig,
        weights: BoundaryWeights,
        constraint: ReflectionConstraint,
        opts: &'a SolverOptions,
    ) -> Result<Self> {
        opts.validate()?;
        let a_cap = AMPLITUDE_CAP * cfg.power_budget().sqrt();
        let model = GridModel::new(cfg, weights, cfg.composite_gain() * a_cap)?;
        Ok(Self { cfg, weights, opts, model, disk: constraint == ReflectionConstraint::UnitDisk, a_cap })
    }

    pub fn power(&self) -> f64 {
        self.cfg.power_budget()
    }

    pub fn amplitude_constraint(&self) -> Constraint {
        Constraint::AveragePower { power: self.power() }
    }
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - top).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Increasing values in `(0, cap)` from `n + 1` logits (last one is slack).
fn cumulative(v: &[f64], cap: f64) -> (Vec<f64>, Vec<f64>) {
    let f = softmax(v);
    let mut acc = 0.0;
    let vals = f[..f.len() - 1]
        .iter()
        .map(|x| {
            acc += x;
            cap * acc
        })
        .collect();
    (vals, f)
}

fn cumulative_grad(f: &[f64], g_vals: &[f64], cap: f64) -> Vec<f64> {
    let n = g_vals.len();
    let mut gf = vec![0.0; n + 1];
    let mut tail = 0.0;
    for j in (0..n).rev() {
        tail += g_vals[j];
        gf[j] = cap * tail;
    }
    softmax_grad(f, &gf)
}

fn softmax_grad(f: &[f64], gf: &[f64]) -> Vec<f64> {
    let mean: f64 = f.iter().zip(gf).map(|(a, b)| a * b).sum();
    f.iter().zip(gf).map(|(fi, gi)| fi * (gi - mean)).collect()
}

fn encode_cumulative(vals: &[f64], cap: f64) -> Vec<f64> {
    let mut prev = 0.0;
    let mut out: Vec<f64> = vals
        .iter()
        .map(|&v| {
            let d = ((v - prev) / cap).max(FLOOR);
            prev = prev.max(v);
            d.ln()
        })
        .collect();
    out.push(((cap - prev) / cap).max(FLOOR).ln());
    out
}

impl Context<'_> {
    fn dims(&self, m: usize, l: usize) -> usize {
        2 * m + 1 + if self.disk { 2 * l + 1 } else { 0 }
    }

    fn encode(&self, s: &Start) -> Vec<f64> {
        let mut x: Vec<f64> = s.p.iter().map(|p| p.max(FLOOR).ln()).collect();
        x.extend(encode_cumulative(&s.a, self.a_cap));
        if self.disk {
            x.extend(s.q.iter().map(|q| q.max(FLOOR).ln()));
            x.extend(encode_cumulative(&s.rho, 1.0));
        }
        x
    }

    fn decode(&self, x: &[f64], m: usize, l: usize) -> (Start, Vec<f64>, Vec<f64>) {
        let p = softmax(&x[..m]);
        let (a, fa) = cumulative(&x[m..2 * m + 1], self.a_cap);
        if self.disk {
            let o = 2 * m + 1;
            let q = softmax(&x[o..o + l]);
            let (rho, fr) = cumulative(&x[o + l..o + 2 * l + 1], 1.0);
            (Start { a, p, rho, q }, fa, fr)
        } else {
            (Start { a, p, rho: vec![1.0], q: vec![1.0] }, fa, Vec::new())
        }
    }

    /// Barrier objective to minimize; `None` outside the power constraint.
    fn barrier(&self, x: &[f64], m: usize, l: usize, tau: f64) -> Option<(f64, Vec<f64>)> {
        let (s, fa, fr) = self.decode(x, m, l);
        let slack = self.power() - s.p.iter().zip(&s.a).map(|(p, a)| p * a * a).sum::<f64>();
        if !(slack > 0.0) {
            return None;
        }
        let e = self.model.eval(&s.a, &s.p, &s.rho, &s.q, true);
        let f = -e.value - tau * slack.ln();
        let ga: Vec<f64> = (0..m).map(|i| -e.da[i] + 2.0 * tau * s.p[i] * s.a[i] / slack).collect();
        let gp: Vec<f64> = (0..m).map(|i| -e.dp[i] + tau * s.a[i] * s.a[i] / slack).collect();
        let mut g = softmax_grad(&s.p, &gp);
        g.extend(cumulative_grad(&fa, &ga, self.a_cap));
        if self.disk {
            let gq: Vec<f64> = e.dq.iter().map(|v| -v).collect();
            let gr: Vec<f64> = e.drho.iter().map(|v| -v).collect();
            g.extend(softmax_grad(&s.q, &gq));
            g.extend(cumulative_grad(&fr, &gr, 1.0));
        }
        Some((f, g))
    }

    /// Pulls a start strictly inside the power constraint.
    pub fn feasible(&self, mut s: Start) -> Start {
        let cap = self.a_cap * (1.0 - 1e-9);
        for a in s.a.iter_mut() {
            *a = a.clamp(0.0, cap);
        }
        let m2: f64 = s.p.iter().zip(&s.a).map(|(p, a)| p * a * a).sum();
        let target = 0.999 * self.power();
        if m2 > target {
            let k = (target / m2).sqrt();
            s.a.iter_mut().for_each(|a| *a *= k);
        }
        for r in s.rho.iter_mut() {
            *r = r.clamp(0.0, 1.0 - 1e-9);
        }
        s
    }

    pub fn random_start(&self, m: usize, l: usize, index: usize) -> Start {
        let key = splitmix(self.opts.seed ^ splitmix(((m as u64) << 40) ^ ((l as u64) << 20) ^ index as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let root = self.power().sqrt();
        let mut a: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.5 * root).collect();
        a.sort_by(f64::total_cmp);
        let p = normalized((0..m).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect());
        let (rho, q) = if self.disk {
            let mut rho: Vec<f64> = (0..l).map(|_| rng.random::<f64>()).collect();
            rho.sort_by(f64::total_cmp);
            rho[l - 1] = 1.0;
            (rho, normalized((0..l).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect()))
        } else {
            (vec![1.0], vec![1.0])
        };
        self.feasible(Start { a, p, rho, q })
    }

    /// Runs the barrier schedule from one start.
    fn run(&self, start: &Start) -> (Start, bool) {
        let (m, l) = (start.a.len(), start.rho.len());
        let mut x = self.encode(&self.feasible(start.clone()));
        debug_assert_eq!(x.len(), self.dims(m, l));
        let mut tau = self.opts.barrier_start;
        let mut converged;
        loop {
            let out = bfgs(|x| self.barrier(x, m, l, tau), &x, self.opts.max_iterations);
            x = out.0;
            converged = out.1;
            if tau <= self.opts.barrier_end * (1.0 + 1e-12) {
                break;
            }
            tau = (tau * 0.1).max(self.opts.barrier_end);
        }
        (self.decode(&x, m, l).0, converged)
    }

    /// Merges near-duplicates and rebuilds validated distributions.
    pub fn finish(&self, s: &Start) -> Result<(MassPointDistribution, SecondaryInput)> {
        let root = self.power().sqrt();
        let pairs: Vec<(f64, f64)> = s.a.iter().cloned().zip(s.p.iter().cloned()).collect();
        let amp = MassPointDistribution::from_pairs(&pairs, self.amplitude_constraint())?
            .merged(self.opts.merge_tol * root, self.opts.min_probability)?;
        let secondary = if self.disk {
            let rings: Vec<(f64, f64)> = s.rho.iter().map(|r| r.min(1.0)).zip(s.q.iter().cloned()).collect();
            let radii = MassPointDistribution::from_pairs(&rings, Constraint::UnitDisk)?
                .merged(self.opts.merge_tol, self.opts.min_probability)?;
            SecondaryInput::circles(radii)?
        } else {
            SecondaryInput::UnitModulus
        };
        Ok((amp, secondary))
    }

    pub fn objective_of(&self, amp: &MassPointDistribution, secondary: &SecondaryInput) -> f64 {
        let rings = secondary.rings();
        let (rho, q): (Vec<f64>, Vec<f64>) = rings.into_iter().unzip();
        self.model.eval(&amp.locations(), &amp.probabilities(), &rho, &q, false).value
    }

    /// Best of the warm starts plus the configured random starts.
    pub fn solve(&self, m: usize, l: usize, warm: Vec<Start>) -> Result<FixedSupportSolution> {
        if m == 0 || l == 0 {
            return Err(Error::Domain("support sizes must be at least 1".into()));
        }
        if !self.disk && l != 1 {
            return Err(Error::Domain("unit modulus admits a single circle".into()));
        }
        let mut starts: Vec<Start> = warm.into_iter().filter(|s| s.a.len() == m && s.rho.len() == l).collect();
        starts.extend((0..self.opts.multistarts).map(|i| self.random_start(m, l, i)));
        if starts.is_empty() {
            return Err(Error::Infeasible("no feasible start".into()));
        }
        let results = par::map(&starts, |s| -> Result<FixedSupportSolution> {
            let (end, converged) = self.run(s);
            let (amplitude, secondary) = self.finish(&end)?;
            let objective = self.objective_of(&amplitude, &secondary);
            Ok(FixedSupportSolution { amplitude, secondary, objective, converged })
        });
        let mut best: Option<FixedSupportSolution> = None;
        for r in results {
            let r = r?;
            best = match best {
                Some(b) if !better(&r, &b) => Some(b),
                _ => Some(r),
            };
        }
        best.ok_or_else(|| Error::Infeasible("no start produced a solution".into()))
    }
}

/// Higher objective wins; near ties go to fewer points, then smaller
/// locations.
pub(crate) fn better(x: &FixedSupportSolution, y: &FixedSupportSolution) -> bool {
    if (x.objective - y.objective).abs() > 1e-12 {
        return x.objective > y.objective;
    }
    if x.amplitude.len() != y.amplitude.len() {
        return x.amplitude.len() < y.amplitude.len();
    }
    let (lx, ly) = (x.amplitude.locations(), y.amplitude.locations());
    lx.iter().zip(&ly).find(|(a, b)| a != b).map_or(false, |(a, b)| a < b)
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let z: f64 = v.iter().sum();
    v.into_iter().map(|x| x / z).collect()
}

/// Minimizes `f` by BFGS with backtracking; `f` returns `None` where
/// undefined. Returns the final point and whether a stopping test fired.
fn bfgs<F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>>(f: F, x0: &[f64], max_iter: usize) -> (Vec<f64>, bool) {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = match f(&x) {
        Some(v) => v,
        None => return (x, false),
    };
    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut h = identity(n);
    let mut stall = 0;
    for _ in 0..max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < 1e-10 {
            return (x, true);
        }
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut t = if dmax > 5.0 { 5.0 / dmax } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if let Some((ft, gt)) = f(&xt) {
                if ft <= fx + 1e-4 * t * slope {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            return (x, gnorm < 1e-6);
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-14 * norm(&s) * norm(&y) {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        let drop = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        if drop <= 1e-15 * (1.0 + fx.abs()) {
            stall += 1;
            if stall >= 4 {
                return (x, true);
            }
        } else {
            stall = 0;
        }
    }
    (x, false)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the fixed-size problem with `m` amplitude points and, for the
/// disk, `l` circles.
pub fn optimize_fixed_support(
    m: usize,
    l: usize,
    weights: BoundaryWeights,
    constraint: ReflectionConstraint,
    cfg: &ChannelConfig,
    opts: &SolverOptions,
) -> Result<FixedSupportSolution> {
    let ctx = Context::new(cfg, weights, constraint, opts)?;
    ctx.solve(m, l, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mi::c2_unit_modulus;
    use crate::numerics::QuadratureSpec;
    use crate::channel::BITS_PER_NAT;

    #[test]
    fn parameter_maps_round_trip() {
        let vals = [0.1, 0.5, 0.5, 1.7];
        let x = encode_cumulative(&vals, 2.0);
        let (back, _) = cumulative(&x, 2.0);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn single_point_sits_at_full_power() {
        let cfg = ChannelConfig::reference(5.0).unwrap();
        let opts = SolverOptions { multistarts: 2, ..Default::default() };
        let w = BoundaryWeights::new(0.2).unwrap();
        let sol = optimize_fixed_support(1, 1, w, ReflectionConstraint::UnitModulus, &cfg, &opts).unwrap();
        let root = cfg.power_budget().sqrt();
        assert!((sol.amplitude.locations()[0] - root).abs() < 1e-5 * root);
        let c2 = c2_unit_modulus(&cfg, &QuadratureSpec::default()).unwrap() / BITS_PER_NAT;
        assert!((sol.objective - 0.8 * c2).abs() < 1e-6);
    }
}
