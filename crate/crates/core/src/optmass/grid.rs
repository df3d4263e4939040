//! Fixed-node evaluation of the weighted objective, its gradient, and
//! Blahut-Arimoto iterations over amplitude or radius grids.

use crate::channel::{noise_entropy, ChannelConfig};
use crate::error::{Error, Result};
use crate::numerics::{ln_i0_and_ratio, RadialGrid};
use crate::optmass::BoundaryWeights;

const PANEL_ORDER: usize = 16;
const TAIL_SIGMAS: f64 = 10.0;
/// Log-density drop beyond which a component is treated as zero.
const CUTOFF: f64 = 50.0;

/// Radial nodes with the `2r / sigma^2` Jacobian folded into the weights.
#[derive(Debug, Clone)]
pub(crate) struct GridModel {
    gain: f64,
    s2: f64,
    mu1: f64,
    mu2: f64,
    n0: f64,
    ln_pi_s2: f64,
    r: Vec<f64>,
    w: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Eval {
    pub value: f64,
    pub h_cond: Vec<f64>,
    pub da: Vec<f64>,
    pub dp: Vec<f64>,
    pub drho: Vec<f64>,
    pub dq: Vec<f64>,
}

impl GridModel {
    /// Covers received amplitudes up to `max_noncentrality`.
    pub fn new(cfg: &ChannelConfig, weights: BoundaryWeights, max_noncentrality: f64) -> Result<Self> {
        let s2 = cfg.noise_power();
        let sigma = s2.sqrt();
        let grid = RadialGrid::new(0.0, max_noncentrality + TAIL_SIGMAS * sigma, sigma, PANEL_ORDER)?;
        let w = grid.nodes.iter().zip(&grid.weights).map(|(&r, &w)| w * 2.0 * r / s2).collect();
        Ok(Self {
            gain: cfg.composite_gain(),
            s2,
            mu1: weights.mu1,
            mu2: weights.mu2,
            n0: noise_entropy(s2),
            ln_pi_s2: (std::f64::consts::PI * s2).ln(),
            r: grid.nodes,
            w,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn noise_entropy(&self) -> f64 {
        self.n0
    }

    /// Node range outside which `kappa(.; s)` is below `exp(-CUTOFF)`.
    fn window(&self, s: f64) -> (usize, usize) {
        let half = (CUTOFF * self.s2).sqrt();
        let lo = self.r.partition_point(|&r| r < s - half);
        let hi = self.r.partition_point(|&r| r <= s + half);
        (lo, hi)
    }

    /// `kappa(r_k; s)` and optionally its derivative in `s`, written on the
    /// returned node range; entries outside it are left untouched.
    fn component(&self, s: f64, kap: &mut [f64], dk: Option<&mut [f64]>) -> (usize, usize) {
        let inv = 1.0 / self.s2;
        let (lo, hi) = self.window(s);
        match dk {
            Some(dk) => {
                for k in lo..hi {
                    let r = self.r[k];
                    let (l0, ratio) = ln_i0_and_ratio(2.0 * r * s * inv);
                    let v = (-(r * r + s * s) * inv + l0).exp();
                    kap[k] = v;
                    dk[k] = v * 2.0 * inv * (r * ratio - s);
                }
            }
            None => {
                for k in lo..hi {
                    let r = self.r[k];
                    let (l0, _) = ln_i0_and_ratio(2.0 * r * s * inv);
                    kap[k] = (-(r * r + s * s) * inv + l0).exp();
                }
            }
        }
        (lo, hi)
    }

    pub fn entropy_of(&self, dens: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, &v) in dens.iter().enumerate() {
            if v > 0.0 {
                acc -= self.w[k] * v * v.ln();
            }
        }
        acc + self.ln_pi_s2
    }

    /// Conditional radial density (without the Jacobian) at amplitude `a`.
    pub fn conditional(&self, a: f64, rings: &[(f64, f64)]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut tmp = vec![0.0; self.len()];
        for &(rho, q) in rings {
            let (lo, hi) = self.component(self.gain * a * rho, &mut tmp, None);
            for k in lo..hi {
                out[k] += q * tmp[k];
            }
        }
        out
    }

    /// Weighted objective `mu1 I(X1;Y) + mu2 I(X2;Y|X1)` in nats.
    pub fn eval(&self, a: &[f64], p: &[f64], rho: &[f64], q: &[f64], grad: bool) -> Eval {
        let (m, l, n) = (a.len(), rho.len(), self.len());
        let mut kap = vec![0.0; m * l * n];
        let mut dk = if grad { vec![0.0; m * l * n] } else { Vec::new() };
        let mut ranges = vec![(0, 0); m * l];
        for i in 0..m {
            for j in 0..l {
                let c = (i * l + j) * n;
                let s = self.gain * a[i] * rho[j];
                let d = if grad { Some(&mut dk[c..c + n]) } else { None };
                ranges[i * l + j] = self.component(s, &mut kap[c..c + n], d);
            }
        }
        let mut kbar = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..l {
                let c = (i * l + j) * n;
                let (lo, hi) = ranges[i * l + j];
                for k in lo..hi {
                    kbar[i * n + k] += q[j] * kap[c + k];
                }
            }
        }
        let mut ky = vec![0.0; n];
        for i in 0..m {
            for k in 0..n {
                ky[k] += p[i] * kbar[i * n + k];
            }
        }
        let h_y = self.entropy_of(&ky);
        let h_cond: Vec<f64> = (0..m).map(|i| self.entropy_of(&kbar[i * n..(i + 1) * n])).collect();
        let mean_h: f64 = p.iter().zip(&h_cond).map(|(p, h)| p * h).sum();
        let value = self.mu1 * h_y + (self.mu2 - self.mu1) * mean_h - self.mu2 * self.n0;
        let mut out = Eval { value, h_cond, ..Default::default() };
        if !grad {
            return out;
        }
        let slope = |v: f64, w: f64| if v > 0.0 { -w * (v.ln() + 1.0) } else { 0.0 };
        let ey: Vec<f64> = (0..n).map(|k| slope(ky[k], self.w[k])).collect();
        out.da = vec![0.0; m];
        out.dp = vec![0.0; m];
        out.drho = vec![0.0; l];
        out.dq = vec![0.0; l];
        let mut t = vec![0.0; n];
        for i in 0..m {
            let mut dot_y = 0.0;
            for k in 0..n {
                let kb = kbar[i * n + k];
                dot_y += ey[k] * kb;
                t[k] = self.mu1 * ey[k] + (self.mu2 - self.mu1) * slope(kb, self.w[k]);
            }
            out.dp[i] = self.mu1 * dot_y + (self.mu2 - self.mu1) * out.h_cond[i];
            for j in 0..l {
                let c = (i * l + j) * n;
                let mut td = 0.0;
                let mut tk = 0.0;
                let (lo, hi) = ranges[i * l + j];
                for k in lo..hi {
                    td += t[k] * dk[c + k];
                    tk += t[k] * kap[c + k];
                }
                out.da[i] += p[i] * q[j] * self.gain * rho[j] * td;
                out.drho[j] += p[i] * q[j] * self.gain * a[i] * td;
                out.dq[j] += p[i] * tk;
            }
        }
        out
    }
}

/// Result of a Blahut-Arimoto run over a fixed set of candidate inputs.
#[derive(Debug, Clone)]
pub(crate) struct BaResult {
    pub probabilities: Vec<f64>,
    /// Objective in nats.
    pub value: f64,
    /// Worst excess of the per-input score over its mean; an upper bound on
    /// the distance to the optimum over the candidate set.
    pub gap: f64,
}

/// Growth of the over-relaxed step after an accepted update, and its cap.
const OVERRELAX_GROWTH: f64 = 1.25;
const OVERRELAX_MAX: f64 = 200.0;

/// Maximizes `I(X; Y) + sum_i p_i bonus_i` over laws on the candidate
/// densities `table` (rows without the Jacobian), subject to
/// `sum p_i cost_i <= budget` when `cost` is given.
pub(crate) fn blahut_arimoto(
    model: &GridModel,
    table: &[Vec<f64>],
    bonus: &[f64],
    cost: Option<(&[f64], f64)>,
    init: Option<&[f64]>,
    max_iter: usize,
    tol: f64,
) -> Result<BaResult> {
    let count = table.len();
    if count == 0 || bonus.len() != count {
        return Err(Error::Domain("empty or mismatched candidate set".into()));
    }
    if let Some((c, budget)) = cost {
        if c.len() != count || !c.iter().any(|&v| v <= budget) {
            return Err(Error::Infeasible("no candidate satisfies the cost budget".into()));
        }
    }
    let n = model.len();
    // Uniform law, exponentially tilted onto the budget when needed.
    let mut p = vec![1.0 / count as f64; count];
    if let Some(start) = init {
        if start.len() != count || start.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("initial law must be positive on every candidate".into()));
        }
        let z: f64 = start.iter().sum();
        p = start.iter().map(|v| v / z).collect();
    } else if let Some((c, budget)) = cost {
        let lm = cost_multiplier(&p, &vec![0.0; count], c, budget);
        let w: Vec<f64> = c.iter().map(|&v| (-lm * v).exp()).collect();
        let z: f64 = w.iter().sum();
        p = w.iter().map(|v| v / z).collect();
    }
    // Each row is zero outside a window around its own amplitude.
    let span: Vec<(usize, usize)> = table
        .iter()
        .map(|row| {
            let lo = row.iter().position(|&v| v > 0.0).unwrap_or(0);
            let hi = row.iter().rposition(|&v| v > 0.0).map_or(lo, |i| i + 1);
            (lo, hi)
        })
        .collect();
    let self_term: Vec<f64> = table
        .iter()
        .map(|row| row.iter().zip(&model.w).map(|(&v, &w)| if v > 0.0 { w * v * v.ln() } else { 0.0 }).sum())
        .collect();
    let scores = |p: &[f64]| -> (Vec<f64>, f64) {
        let mut ky = vec![0.0; n];
        for ((pi, row), &(lo, hi)) in p.iter().zip(table).zip(&span) {
            if *pi > 0.0 {
                for (y, v) in ky[lo..hi].iter_mut().zip(&row[lo..hi]) {
                    *y += pi * v;
                }
            }
        }
        let lny: Vec<f64> = ky.iter().map(|&v| if v > 0.0 { v.ln() } else { 0.0 }).collect();
        let score: Vec<f64> = (0..count)
            .map(|i| {
                let (lo, hi) = span[i];
                let cross: f64 =
                    table[i][lo..hi].iter().zip(&lny[lo..hi]).zip(&model.w[lo..hi]).map(|((&v, &l), &w)| w * v * l).sum();
                self_term[i] - cross + bonus[i]
            })
            .collect();
        let value = p.iter().zip(&score).map(|(p, s)| p * s).sum();
        (score, value)
    };
    // Multiplicative update with step `step`; 1 is the classical one.
    let tilt = |p: &[f64], score: &[f64], step: f64| -> Vec<f64> {
        let scaled: Vec<f64> = score.iter().map(|s| step * s).collect();
        let lm = cost.map_or(0.0, |(c, budget)| cost_multiplier(p, &scaled, c, budget));
        let exps: Vec<f64> = (0..count)
            .map(|i| if p[i] > 0.0 { p[i].ln() + scaled[i] - cost.map_or(0.0, |(c, _)| lm * c[i]) } else { f64::NEG_INFINITY })
            .collect();
        let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut next: Vec<f64> = exps.iter().map(|&e| (e - top).exp()).collect();
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= z);
        next
    };
    let (mut score, mut value) = scores(&p);
    let mut gap = f64::INFINITY;
    let mut step = 1.0;
    for _ in 0..max_iter {
        let multiplier = cost.map_or(0.0, |(c, budget)| cost_multiplier(&p, &score, c, budget));
        let penalized = |i: usize| score[i] - cost.map_or(0.0, |(c, _)| multiplier * c[i]);
        let pen_mean: f64 = (0..count).map(|i| p[i] * penalized(i)).sum();
        gap = (0..count).map(|i| penalized(i) - pen_mean).fold(f64::NEG_INFINITY, f64::max);
        if gap < tol {
            break;
        }
        // Over-relaxed steps are kept while the objective still rises.
        loop {
            let next = tilt(&p, &score, step);
            let (s, v) = scores(&next);
            if v >= value - 1e-15 || step == 1.0 {
                p = next;
                score = s;
                value = v;
                step = (step * OVERRELAX_GROWTH).min(OVERRELAX_MAX);
                break;
            }
            step = (0.5 * step).max(1.0);
        }
    }
    Ok(BaResult { probabilities: p, value, gap })
}

/// Smallest multiplier whose exponential tilt keeps the updated law within
/// budget.
fn cost_multiplier(p: &[f64], score: &[f64], cost: &[f64], budget: f64) -> f64 {
    let base: Vec<f64> = p.iter().zip(score).map(|(&p, &s)| if p > 0.0 { p.ln() + s } else { f64::NEG_INFINITY }).collect();
    // Mean and variance of the cost under the law tilted by `lm`.
    let moments = |lm: f64| -> (f64, f64) {
        let top = base.iter().zip(cost).map(|(b, c)| b - lm * c).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (b, &c) in base.iter().zip(cost) {
            let v = (b - lm * c - top).exp();
            z += v;
            m1 += v * c;
            m2 += v * c * c;
        }
        let mean = m1 / z;
        (mean, (m2 / z - mean * mean).max(0.0))
    };
    if moments(0.0).0 <= budget {
        return 0.0;
    }
    let mut hi = 1.0 / budget.max(1e-300);
    let mut guard = 0;
    while moments(hi).0 > budget && guard < 200 {
        hi *= 2.0;
        guard += 1;
    }
    // Newton on the decreasing tilted mean, kept inside the bracket.
    let (mut lo, mut lm) = (0.0, hi);
    for _ in 0..100 {
        let (mean, var) = moments(lm);
        let f = mean - budget;
        if f > 0.0 {
            lo = lm;
        } else {
            hi = lm;
            if f > -1e-13 * budget {
                break;
            }
        }
        let newton = if var > 0.0 { lm + f / var } else { f64::NAN };
        lm = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * hi {
            lm = hi;
            break;
        }
    }
    // Feasible side of the root.
    if moments(lm).0 > budget {
        hi
    } else {
        lm
    }
}

/// Collapses runs of grid mass into `(location, probability)` clusters.
pub(crate) fn clusters(locations: &[f64], probabilities: &[f64], threshold: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut acc: Option<(f64, f64)> = None;
    for (&x, &p) in locations.iter().zip(probabilities) {
        if p > threshold {
            let e = acc.get_or_insert((0.0, 0.0));
            e.0 += p * x;
            e.1 += p;
        } else if let Some((sx, sp)) = acc.take() {
            out.push((sx / sp, sp));
        }
    }
    if let Some((sx, sp)) = acc {
        out.push((sx / sp, sp));
    }
    let total: f64 = out.iter().map(|c| c.1).sum();
    out.iter_mut().for_each(|c| c.1 /= total);
    out
}
