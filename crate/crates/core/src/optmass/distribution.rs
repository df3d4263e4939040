use serde::{Deserialize, Serialize};

use crate::channel::ReflectionConstraint;
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// `sum p a^2 <= power`.
    AveragePower { power: f64 },
    /// Every location in `[0, 1]`.
    UnitDisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassPoint {
    pub location: f64,
    pub probability: f64,
}

/// Discrete law on nonnegative locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct MassPointDistribution {
    points: Vec<MassPoint>,
    constraint: Constraint,
}

#[derive(Deserialize)]
struct RawDistribution {
    points: Vec<MassPoint>,
    constraint: Constraint,
}

impl TryFrom<RawDistribution> for MassPointDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        MassPointDistribution::new(raw.points, raw.constraint)
    }
}

impl MassPointDistribution {
    /// Validates ordering, normalization and the constraint.
    pub fn new(points: Vec<MassPoint>, constraint: Constraint) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("distribution has no mass points".into()));
        }
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            if !(p.location >= 0.0 && p.location.is_finite()) {
                return Err(Error::Domain(format!("location {} is not a nonnegative number", p.location)));
            }
            if !(0.0..=1.0).contains(&p.probability) {
                return Err(Error::Domain(format!("probability {} outside [0, 1]", p.probability)));
            }
            if i > 0 && p.location <= points[i - 1].location {
                return Err(Error::Domain("locations must be strictly increasing".into()));
            }
            total += p.probability;
        }
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        let dist = Self { points, constraint };
        match constraint {
            Constraint::AveragePower { power } => {
                if !(power > 0.0) {
                    return Err(Error::Domain(format!("power budget must be positive, got {power}")));
                }
                let m2 = dist.second_moment();
                if m2 > power + POWER_TOL {
                    return Err(Error::Domain(format!("second moment {m2} exceeds power budget {power}")));
                }
            }
            Constraint::UnitDisk => {
                if dist.points.last().map_or(false, |p| p.location > 1.0) {
                    return Err(Error::Domain("unit-disk radius exceeds 1".into()));
                }
            }
        }
        Ok(dist)
    }

    /// Sorts, merges coincident locations and renormalizes before validating.
    pub fn from_pairs(pairs: &[(f64, f64)], constraint: Constraint) -> Result<Self> {
        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (x, p) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += p,
                _ => merged.push((x, p)),
            }
        }
        let total: f64 = merged.iter().map(|m| m.1).sum();
        if !(total > 0.0) {
            return Err(Error::Domain("distribution has no probability mass".into()));
        }
        let points = merged
            .into_iter()
            .map(|(location, p)| MassPoint { location, probability: (p / total).min(1.0) })
            .collect();
        Self::new(points, constraint)
    }

    pub fn single(location: f64, constraint: Constraint) -> Result<Self> {
        Self::new(vec![MassPoint { location, probability: 1.0 }], constraint)
    }

    /// The unit circle as a radius law.
    pub fn unit_circle() -> Self {
        Self { points: vec![MassPoint { location: 1.0, probability: 1.0 }], constraint: Constraint::UnitDisk }
    }

    pub fn points(&self) -> &[MassPoint] {
        &self.points
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.location).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.probability).collect()
    }

    pub fn second_moment(&self) -> f64 {
        self.points.iter().map(|p| p.probability * p.location * p.location).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.points.iter().filter(|p| p.location <= x).map(|p| p.probability).sum()
    }

    /// Merges neighbours closer than `tol` into their probability-weighted
    /// mean, then folds points lighter than `min_prob` into the nearest
    /// neighbour. Both steps keep the second moment from growing.
    pub fn merged(&self, tol: f64, min_prob: f64) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.location, p.probability)).collect();
        loop {
            let mut changed = false;
            let mut i = 0;
            while i + 1 < pts.len() {
                if pts[i + 1].0 - pts[i].0 < tol {
                    let (x0, p0) = pts[i];
                    let (x1, p1) = pts[i + 1];
                    let p = p0 + p1;
                    pts[i] = ((p0 * x0 + p1 * x1) / p, p);
                    pts.remove(i + 1);
                    changed = true;
                } else {
                    i += 1;
                }
            }
            if pts.len() > 1 {
                let light = pts
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.1 < min_prob)
                    .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                    .map(|(i, _)| i);
                if let Some(i) = light {
                    let j = if i == 0 {
                        1
                    } else if i + 1 == pts.len() || pts[i].0 - pts[i - 1].0 <= pts[i + 1].0 - pts[i].0 {
                        i - 1
                    } else {
                        i + 1
                    };
                    let (x0, p0) = pts[i];
                    let (x1, p1) = pts[j];
                    let p = p0 + p1;
                    pts[j] = ((p0 * x0 + p1 * x1) / p, p);
                    pts.remove(i);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let Constraint::UnitDisk = self.constraint {
            for p in pts.iter_mut() {
                p.0 = p.0.min(1.0);
            }
        }
        Self::from_pairs(&pts, self.constraint)
    }
}

/// Law of the secondary symbol magnitude `|X2|`; its phase is uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "radii", rename_all = "snake_case")]
pub enum SecondaryInput {
    UnitModulus,
    Circles(MassPointDistribution),
}

impl SecondaryInput {
    pub fn circles(dist: MassPointDistribution) -> Result<Self> {
        if dist.constraint() != Constraint::UnitDisk {
            return Err(Error::Domain("secondary radii must carry the unit-disk constraint".into()));
        }
        Ok(SecondaryInput::Circles(dist))
    }

    /// `(radius, probability)` pairs.
    pub fn rings(&self) -> Vec<(f64, f64)> {
        match self {
            SecondaryInput::UnitModulus => vec![(1.0, 1.0)],
            SecondaryInput::Circles(d) => d.points().iter().map(|p| (p.location, p.probability)).collect(),
        }
    }

    pub fn constraint(&self) -> ReflectionConstraint {
        match self {
            SecondaryInput::UnitModulus => ReflectionConstraint::UnitModulus,
            SecondaryInput::Circles(_) => ReflectionConstraint::UnitDisk,
        }
    }

    pub fn distribution(&self) -> MassPointDistribution {
        match self {
            SecondaryInput::UnitModulus => MassPointDistribution::unit_circle(),
            SecondaryInput::Circles(d) => d.clone(),
        }
    }
}

/// Weights of the weighted-sum rate on the part of the boundary where the
/// secondary rate is favoured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeights {
    pub mu1: f64,
    pub mu2: f64,
}

impl BoundaryWeights {
    pub fn new(mu1: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu1 < 0.5) {
            return Err(Error::Domain(format!("mu1 must lie in (0, 0.5), got {mu1}")));
        }
        Ok(Self { mu1, mu2: 1.0 - mu1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn power(p: f64) -> Constraint {
        Constraint::AveragePower { power: p }
    }

    #[test]
    fn invariants_enforced() {
        let ok = MassPointDistribution::from_pairs(&[(0.0, 0.2), (1.0, 0.8)], power(1.0)).unwrap();
        assert_eq!(ok.len(), 2);
        assert!((ok.second_moment() - 0.8).abs() < 1e-15);
        let unordered = vec![
            MassPoint { location: 1.0, probability: 0.5 },
            MassPoint { location: 0.5, probability: 0.5 },
        ];
        assert!(MassPointDistribution::new(unordered, power(1.0)).is_err());
        assert!(MassPointDistribution::single(2.0, power(1.0)).is_err());
        assert!(MassPointDistribution::single(1.1, Constraint::UnitDisk).is_err());
        let bad_sum = vec![MassPoint { location: 1.0, probability: 0.9 }];
        assert!(MassPointDistribution::new(bad_sum, power(1.0)).is_err());
    }

    #[test]
    fn weights() {
        let w = BoundaryWeights::new(0.3).unwrap();
        assert_eq!(w.mu1 + w.mu2, 1.0);
        assert!(BoundaryWeights::new(0.5).is_err());
        assert!(BoundaryWeights::new(0.0).is_err());
    }

    #[test]
    fn json_round_trip_revalidates() {
        let d = MassPointDistribution::from_pairs(&[(0.2, 0.5), (0.9, 0.5)], Constraint::UnitDisk).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<MassPointDistribution>(&text).unwrap(), d);
        let broken = text.replace("0.9", "1.9");
        assert!(serde_json::from_str::<MassPointDistribution>(&broken).is_err());
    }

    #[test]
    fn merge_examples() {
        let d = MassPointDistribution::from_pairs(&[(0.5, 0.25), (0.5005, 0.25), (1.2, 0.5)], power(2.0)).unwrap();
        let m = d.merged(1e-3, 1e-5).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.locations()[0] - 0.50025).abs() < 1e-12);
        let light = MassPointDistribution::from_pairs(&[(0.0, 1e-7), (1.0, 1.0 - 1e-7)], power(1.0)).unwrap();
        assert_eq!(light.merged(1e-3, 1e-5).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn merging_keeps_feasibility(raw in proptest::collection::vec((0.0f64..3.0, 1e-7f64..1.0), 1..12)) {
            let total: f64 = raw.iter().map(|r| r.1).sum();
            let m2: f64 = raw.iter().map(|r| r.1 / total * r.0 * r.0).sum();
            let d = MassPointDistribution::from_pairs(&raw, power(m2.max(1e-12) * (1.0 + 1e-9))).unwrap();
            let merged = d.merged(0.05, 1e-3).unwrap();
            prop_assert!(merged.second_moment() <= d.second_moment() + 1e-12);
            prop_assert!(merged.len() <= d.len());
            for w in merged.locations().windows(2) {
                prop_assert!(w[1] - w[0] >= 0.05);
            }
        }
    }
}
