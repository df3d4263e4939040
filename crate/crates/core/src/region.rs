//! Capacity region boundary: scheme points on the maximum-sum-rate segment,
//! optimized weighted points towards the `R2` axis, and time sharing.

use serde::{Deserialize, Serialize};

use crate::channel::{c_sum_max, ChannelConfig, ReflectionConstraint};
use crate::error::{Error, Result};
use crate::mi::{c2_unit_modulus, scheme_rate_pair, DecodeOrder, PhaseScheme, Provenance, RatePair, SchemeKind};
use crate::numerics::QuadratureSpec;
use crate::optmass::{c2_disk, optimize_boundary_point, BoundaryPoint, BoundaryWeights, SolverOptions};
use crate::par;

/// Points closer than this to the upper envelope are kept on it.
pub const HULL_TOL: f64 = 1e-6;

/// Scheme rate pairs on the maximum-sum-rate segment, plus a note for
/// every angle that is not `pi / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbSegment {
    pub points: Vec<RatePair>,
    pub warnings: Vec<String>,
}

/// Evaluates both schemes with `X1` decoded first for every valid
/// `alpha = pi / n`. The segment does not depend on the reflection
/// constraint: maximum sum rate needs `|X2| = 1`.
pub fn boundary_ab(cfg: &ChannelConfig, alphas: &[f64], spec: &QuadratureSpec) -> Result<AbSegment> {
    let mut warnings = Vec::new();
    let mut schemes = Vec::new();
    for &alpha in alphas {
        for kind in [SchemeKind::I, SchemeKind::II] {
            match PhaseScheme::from_alpha(kind, alpha) {
                Ok(s) => schemes.push(s),
                Err(e) => {
                    if kind == SchemeKind::I {
                        warnings.push(format!("skipped alpha = {alpha}: {e}"));
                    }
                }
            }
        }
    }
    let points = par::map(&schemes, |s| scheme_rate_pair(*s, DecodeOrder::X1First, cfg, spec))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(AbSegment { points, warnings })
}

/// `alpha = pi / n` for `n = 1..=n_max`.
pub fn alpha_grid(n_max: u32) -> Vec<f64> {
    (1..=n_max).map(|n| std::f64::consts::PI / n as f64).collect()
}

/// One optimized weighted point per `mu1`, in grid order. Points that
/// miss their certificate are returned with `converged = false`.
pub fn boundary_bc(
    cfg: &ChannelConfig,
    constraint: ReflectionConstraint,
    mu1_grid: &[f64],
    spec: &QuadratureSpec,
    opts: &SolverOptions,
) -> Result<Vec<BoundaryPoint>> {
    let weights = mu1_grid.iter().map(|&m| BoundaryWeights::new(m)).collect::<Result<Vec<_>>>()?;
    par::map(&weights, |w| optimize_boundary_point(*w, constraint, cfg, spec, opts)).into_iter().collect()
}

/// `C2` under the reflection constraint, in bits.
pub fn c2_for(constraint: ReflectionConstraint, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<f64> {
    match constraint {
        ReflectionConstraint::UnitModulus => c2_unit_modulus(cfg, spec),
        ReflectionConstraint::UnitDisk => Ok(c2_disk(cfg)?.capacity),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corners {
    pub a: RatePair,
    pub b: RatePair,
    pub c: RatePair,
}

impl Corners {
    pub fn compute(constraint: ReflectionConstraint, cfg: &ChannelConfig, spec: &QuadratureSpec) -> Result<Self> {
        let csum = c_sum_max(cfg);
        let b = scheme_rate_pair(PhaseScheme::new(SchemeKind::II, 1)?, DecodeOrder::X1First, cfg, spec)?;
        let c2 = c2_for(constraint, cfg, spec)?;
        Ok(Self {
            a: RatePair::new(csum, 0.0, Provenance::CornerA),
            b: b.with_provenance(Provenance::CornerB),
            c: RatePair::new(0.0, c2, Provenance::CornerC),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub constraint: ReflectionConstraint,
    pub cfg: ChannelConfig,
    pub corners: Corners,
    /// Upper envelope, ordered by decreasing `r1`.
    pub points: Vec<RatePair>,
    /// Inputs that fell strictly inside the envelope.
    pub dominated: Vec<RatePair>,
    pub hull_tol: f64,
}

fn is_corner(p: &RatePair) -> bool {
    matches!(p.provenance, Provenance::CornerA | Provenance::CornerB | Provenance::CornerC)
}

/// Height of the chord `a -> c` above `b`; positive when `b` is below.
fn below(a: &RatePair, b: &RatePair, c: &RatePair) -> f64 {
    let span = c.r1 - a.r1;
    if span.abs() < 1e-15 {
        return if b.r2 < a.r2.max(c.r2) { f64::INFINITY } else { 0.0 };
    }
    let t = (b.r1 - a.r1) / span;
    a.r2 + t * (c.r2 - a.r2) - b.r2
}

/// Upper concave envelope of the corners and the supplied points.
/// Straight segments between consecutive points are two-point time
/// sharing.
pub fn assemble_region(
    constraint: ReflectionConstraint,
    cfg: &ChannelConfig,
    corners: &Corners,
    ab: &[RatePair],
    bc: &[RatePair],
) -> RegionBoundary {
    let mut all: Vec<RatePair> = vec![corners.a, corners.b, corners.c];
    all.extend_from_slice(ab);
    all.extend_from_slice(bc);
    let (mut cand, mut dominated): (Vec<RatePair>, Vec<RatePair>) =
        all.into_iter().partition(|p| p.r1.is_finite() && p.r2.is_finite() && p.r1 >= 0.0 && p.r2 >= 0.0);
    // Ascending r1, descending r2, then label so ties are deterministic.
    cand.sort_by(|x, y| {
        x.r1.total_cmp(&y.r1).then(y.r2.total_cmp(&x.r2)).then(x.provenance.label().cmp(&y.provenance.label()))
    });

    let mut hull: Vec<RatePair> = Vec::with_capacity(cand.len());
    for p in cand {
        if let Some(q) = hull.last_mut().filter(|q| p.r1 - q.r1 <= HULL_TOL && p.r2 <= q.r2 + HULL_TOL) {
            // Near-duplicates keep the corner label.
            if is_corner(&p) && !is_corner(q) {
                dominated.push(std::mem::replace(q, p));
            } else {
                dominated.push(p);
            }
            continue;
        }
        while hull.len() >= 2 && below(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) > HULL_TOL {
            dominated.push(hull.pop().expect("len checked"));
        }
        hull.push(p);
    }
    // The frontier is nonincreasing; points left of the highest one are
    // covered by the horizontal segment to the axis.
    while hull.len() >= 2 && hull[1].r2 > hull[0].r2 + HULL_TOL {
        dominated.push(hull.remove(0));
    }
    hull.reverse();
    dominated.sort_by(|x, y| y.r1.total_cmp(&x.r1).then(y.r2.total_cmp(&x.r2)));
    RegionBoundary { constraint, cfg: cfg.clone(), corners: *corners, points: hull, dominated, hull_tol: HULL_TOL }
}

impl RegionBoundary {
    /// Largest `r2` on the boundary at `r1`, zero past the `R1` corner.
    pub fn r2_at(&self, r1: f64) -> f64 {
        let pts = &self.points;
        if pts.is_empty() || r1 > pts[0].r1 {
            return 0.0;
        }
        if r1 <= pts[pts.len() - 1].r1 {
            return pts[pts.len() - 1].r2;
        }
        for w in pts.windows(2) {
            let (hi, lo) = (&w[0], &w[1]);
            if r1 <= hi.r1 && r1 >= lo.r1 {
                let span = hi.r1 - lo.r1;
                if span <= 0.0 {
                    return hi.r2.max(lo.r2);
                }
                let t = (r1 - lo.r1) / span;
                return lo.r2 + t * (hi.r2 - lo.r2);
            }
        }
        0.0
    }

    /// `min over r1 of self.r2_at(r1) - other.r2_at(r1)` on `n` shared
    /// abscissae; negative where `other` pokes out.
    pub fn slack_over(&self, other: &RegionBoundary, n: usize) -> f64 {
        let top = self.points.first().map_or(0.0, |p| p.r1).max(other.points.first().map_or(0.0, |p| p.r1));
        (0..=n)
            .map(|i| top * i as f64 / n as f64)
            .map(|r1| self.r2_at(r1) - other.r2_at(r1))
            .fold(f64::INFINITY, f64::min)
    }

    /// Runs the envelope again on its own output.
    pub fn reassembled(&self) -> RegionBoundary {
        let mut rest = self.points.clone();
        rest.retain(|p| !is_corner(p));
        assemble_region(self.constraint, &self.cfg, &self.corners, &[], &rest)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("slope fit needs at least two paired values".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("slope fit needs distinct abscissae".into()));
    }
    Ok(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofFit {
    pub slope: f64,
    pub snr_db: Vec<f64>,
    /// Bits.
    pub c2: Vec<f64>,
}

/// High-SNR slope of `C2` against `log2 P`. Needs at least three
/// increasing SNR values reaching 25 dB.
pub fn dof_slope(
    constraint: ReflectionConstraint,
    cfg_base: &ChannelConfig,
    snr_db: &[f64],
    spec: &QuadratureSpec,
) -> Result<DofFit> {
    if snr_db.len() < 3 {
        return Err(Error::Domain(format!("slope fit needs at least 3 SNR points, got {}", snr_db.len())));
    }
    if snr_db.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("SNR points must be strictly increasing".into()));
    }
    if snr_db[snr_db.len() - 1] < 25.0 {
        return Err(Error::Domain("slope fit needs an SNR point at or above 25 dB".into()));
    }
    let cfgs = snr_db.iter().map(|&s| cfg_base.with_snr_db(s)).collect::<Result<Vec<_>>>()?;
    let c2 = par::map(&cfgs, |c| c2_for(constraint, c, spec)).into_iter().collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = cfgs.iter().map(|c| c.power_budget().log2()).collect();
    Ok(DofFit { slope: least_squares_slope(&xs, &c2)?, snr_db: snr_db.to_vec(), c2 })
}

/// Every piece of one region computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub boundary: RegionBoundary,
    pub ab: AbSegment,
    pub bc: Vec<BoundaryPoint>,
}

impl RegionReport {
    pub fn all_converged(&self) -> bool {
        self.bc.iter().all(|p| p.converged)
    }
}

pub fn compute_region(
    cfg: &ChannelConfig,
    constraint: ReflectionConstraint,
    alphas: &[f64],
    mu1_grid: &[f64],
    spec: &QuadratureSpec,
    opts: &SolverOptions,
) -> Result<RegionReport> {
    let corners = Corners::compute(constraint, cfg, spec)?;
    let ab = boundary_ab(cfg, alphas, spec)?;
    let bc = boundary_bc(cfg, constraint, mu1_grid, spec, opts)?;
    let bc_pairs: Vec<RatePair> = bc.iter().flat_map(|p| p.achieved()).collect();
    let boundary = assemble_region(constraint, cfg, &corners, &ab.points, &bc_pairs);
    Ok(RegionReport { boundary, ab, bc })
}

/// Largest excess of `p` over `R1 <= C1`, `R2 <= c2`, `R1 + R2 <= C_sum`.
pub fn max_outer_bound_excess(p: &RatePair, cfg: &ChannelConfig, c2: f64) -> f64 {
    let csum = c_sum_max(cfg);
    (p.r1 - csum).max(p.r2 - c2).max(p.sum() - csum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(r1: f64, r2: f64) -> RatePair {
        RatePair::new(r1, r2, Provenance::Evaluated)
    }

    fn toy(a: (f64, f64), b: (f64, f64), c: (f64, f64), pts: &[(f64, f64)]) -> RegionBoundary {
        let corners = Corners {
            a: RatePair::new(a.0, a.1, Provenance::CornerA),
            b: RatePair::new(b.0, b.1, Provenance::CornerB),
            c: RatePair::new(c.0, c.1, Provenance::CornerC),
        };
        let pts: Vec<RatePair> = pts.iter().map(|&(x, y)| pair(x, y)).collect();
        assemble_region(ReflectionConstraint::UnitModulus, &ChannelConfig::reference(0.0).unwrap(), &corners, &[], &pts)
    }

    fn concave(b: &RegionBoundary) -> bool {
        let p = &b.points;
        p.windows(2).all(|w| w[1].r1 <= w[0].r1 && w[1].r2 >= w[0].r2 - HULL_TOL)
            && p.windows(3).all(|w| below(&w[0], &w[1], &w[2]) <= HULL_TOL)
    }

    #[test]
    fn single_interior_point_is_kept() {
        let b = toy((2.0, 0.0), (2.0, 0.0), (0.0, 1.5), &[(1.0, 1.0)]);
        let xy: Vec<(f64, f64)> = b.points.iter().map(|p| (p.r1, p.r2)).collect();
        assert_eq!(xy, vec![(2.0, 0.0), (1.0, 1.0), (0.0, 1.5)]);
        assert_eq!(b.dominated.len(), 1);
    }

    #[test]
    fn dominated_point_is_dropped() {
        let b = toy((2.0, 0.0), (2.0, 0.0), (0.0, 1.5), &[(0.5, 0.5)]);
        assert_eq!(b.points.len(), 2);
        assert!(b.dominated.iter().any(|p| p.r1 == 0.5));
    }

    #[test]
    fn corner_wins_a_near_tie() {
        let b = toy((2.0, 0.0), (1.0, 1.0), (0.0, 1.5), &[(2.0 - 1e-15, 1e-15)]);
        assert_eq!(b.points[0].provenance, Provenance::CornerA);
    }

    #[test]
    fn collinear_points_stay_on_the_segment() {
        let b = toy((3.0, 0.0), (1.0, 2.0), (0.0, 2.2), &[(2.0, 1.0), (2.5, 0.5)]);
        assert_eq!(b.points.len(), 5);
        assert!(concave(&b));
    }

    #[test]
    fn interpolation_follows_segments() {
        let b = toy((2.0, 0.0), (2.0, 0.0), (0.0, 1.5), &[(1.0, 1.0)]);
        assert!((b.r2_at(1.5) - 0.5).abs() < 1e-15);
        assert!((b.r2_at(0.5) - 1.25).abs() < 1e-15);
        assert_eq!(b.r2_at(2.5), 0.0);
    }

    #[test]
    fn constant_values_have_zero_slope() {
        assert_eq!(least_squares_slope(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap(), 0.0);
        assert!((least_squares_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn slope_needs_high_points() {
        let cfg = ChannelConfig::reference(0.0).unwrap();
        let spec = QuadratureSpec::default();
        assert!(dof_slope(ReflectionConstraint::UnitModulus, &cfg, &[0.0, 5.0], &spec).is_err());
        assert!(dof_slope(ReflectionConstraint::UnitModulus, &cfg, &[0.0, 5.0, 10.0], &spec).is_err());
        assert!(dof_slope(ReflectionConstraint::UnitModulus, &cfg, &[30.0, 25.0, 20.0], &spec).is_err());
    }

    #[test]
    fn invalid_alpha_is_reported() {
        let cfg = ChannelConfig::reference(0.0).unwrap();
        let seg = boundary_ab(&cfg, &[std::f64::consts::PI, 1.0], &QuadratureSpec::default()).unwrap();
        assert_eq!(seg.points.len(), 2);
        assert_eq!(seg.warnings.len(), 1);
    }

    proptest! {
        #[test]
        fn hull_is_concave_and_idempotent(raw in prop::collection::vec((0.0f64..3.0, 0.0f64..2.0), 0..12)) {
            let b = toy((3.0, 0.0), (2.0, 1.0), (0.0, 2.0), &raw);
            prop_assert!(concave(&b));
            let again = b.reassembled();
            prop_assert_eq!(&again.points, &b.points);
            for p in &raw {
                prop_assert!(p.1 <= b.r2_at(p.0) + 1e-9);
            }
        }
    }
}
