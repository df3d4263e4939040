//! Browser bindings. Every export returns a JSON string so the page needs
//! no glue beyond `JSON.parse`.

use mmac_core::channel::{c1_primary_capacity, c_sum_max};
use mmac_core::mi::{c2_unit_modulus, scheme_rate_pair, upper_bound_average_power, upper_bound_mckellips};
use mmac_core::optmass::{c2_disk, optimize_boundary_point};
use mmac_core::{
    BoundaryWeights, ChannelConfig, DecodeOrder, PhaseScheme, QuadratureSpec, ReflectionConstraint, SchemeKind,
    SolverOptions,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Disk capacity runs a Blahut-Arimoto over many rings; above this the
/// page waits too long.
const DISK_SNR_LIMIT_DB: f64 = 20.0;

fn to_js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(to_js)
}

#[derive(Serialize)]
struct CapacityPoint {
    snr_db: f64,
    c1: f64,
    c2_unit: f64,
    c2_disk: Option<f64>,
    ub_mckellips: f64,
    ub_avgpower: f64,
}

/// Capacities in bits on `steps` evenly spaced SNRs of the reference
/// scenario.
#[wasm_bindgen]
pub fn capacity_curves(snr_min_db: f64, snr_max_db: f64, steps: u32) -> Result<String, JsError> {
    if steps < 2 || !(snr_max_db > snr_min_db) {
        return Err(JsError::new("need at least two steps and snr_max > snr_min"));
    }
    let spec = QuadratureSpec::default();
    let mut out = Vec::with_capacity(steps as usize);
    for i in 0..steps {
        let snr_db = snr_min_db + (snr_max_db - snr_min_db) * i as f64 / (steps - 1) as f64;
        let cfg = ChannelConfig::reference(snr_db).map_err(to_js)?;
        let rx = cfg.receive_snr();
        let c2_disk = if snr_db <= DISK_SNR_LIMIT_DB { Some(c2_disk(&cfg).map_err(to_js)?.capacity) } else { None };
        out.push(CapacityPoint {
            snr_db,
            c1: c1_primary_capacity(&cfg),
            c2_unit: c2_unit_modulus(&cfg, &spec).map_err(to_js)?,
            c2_disk,
            ub_mckellips: upper_bound_mckellips(rx),
            ub_avgpower: upper_bound_average_power(rx),
        });
    }
    json(&out)
}

#[derive(Serialize)]
struct SchemeRow {
    scheme: &'static str,
    n: u32,
    order: &'static str,
    r1: f64,
    r2: f64,
}

#[derive(Serialize)]
struct SchemeTable {
    csum: f64,
    rows: Vec<SchemeRow>,
}

/// Rate pairs of both schemes, both decoding orders, `alpha = pi / n`.
#[wasm_bindgen]
pub fn scheme_pairs(snr_db: f64, n_max: u32) -> Result<String, JsError> {
    if n_max == 0 || n_max > 16 {
        return Err(JsError::new("n_max must lie in 1..=16"));
    }
    let cfg = ChannelConfig::reference(snr_db).map_err(to_js)?;
    let spec = QuadratureSpec::default();
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for (kind, name) in [(SchemeKind::I, "I"), (SchemeKind::II, "II")] {
            for order in [DecodeOrder::X1First, DecodeOrder::X2First] {
                let s = PhaseScheme::new(kind, n).map_err(to_js)?;
                let p = scheme_rate_pair(s, order, &cfg, &spec).map_err(to_js)?;
                rows.push(SchemeRow { scheme: name, n, order: order.label(), r1: p.r1, r2: p.r2 });
            }
        }
    }
    json(&SchemeTable { csum: c_sum_max(&cfg), rows })
}

#[derive(Serialize)]
struct PointView {
    r1: f64,
    r2: f64,
    converged: bool,
    kkt_violation: f64,
    amplitude: Vec<(f64, f64)>,
    radii: Vec<(f64, f64)>,
}

/// One weighted boundary point with a lighter search than the command
/// line uses (fewer restarts and points).
#[wasm_bindgen]
pub fn boundary_point(snr_db: f64, mu1: f64, disk: bool, max_points: u32) -> Result<String, JsError> {
    let cfg = ChannelConfig::reference(snr_db).map_err(to_js)?;
    let weights = BoundaryWeights::new(mu1).map_err(to_js)?;
    let opts = SolverOptions {
        multistarts: 2,
        max_points: max_points.clamp(1, 16) as usize,
        max_circles: 4,
        ..SolverOptions::default()
    };
    let constraint = if disk { ReflectionConstraint::UnitDisk } else { ReflectionConstraint::UnitModulus };
    let p = optimize_boundary_point(weights, constraint, &cfg, &QuadratureSpec::default(), &opts).map_err(to_js)?;
    json(&PointView {
        r1: p.rates.r1,
        r2: p.rates.r2,
        converged: p.converged,
        kkt_violation: p.kkt.max_inequality_violation,
        amplitude: p.amplitude.points().iter().map(|m| (m.location, m.probability)).collect(),
        radii: p.secondary.rings(),
    })
}
