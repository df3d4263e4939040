use mmac_core::channel::{c1_primary_capacity, c_sum_max};
use mmac_core::mi::{bound_gap_db, c2_unit_modulus, scheme_rate_pair, upper_bound_average_power, upper_bound_mckellips};
use mmac_core::optmass::{c2_disk, optimize_boundary_point};
use mmac_core::oracle::{run_validation, validation_grid, McFamily, ValidationCase, ValidationRow};
use mmac_core::region::{alpha_grid, assemble_region, boundary_ab, boundary_bc, Corners};
use mmac_core::{BoundaryPoint, BoundaryWeights, DecodeOrder, PhaseScheme, ReflectionConstraint, SchemeKind};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{fmt12, snr_tag, Cell, Csv, Writer};

/// Every JSON file carries the resolved configuration.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    config: &'a ScenarioConfig,
    #[serde(flatten)]
    body: T,
}

fn envelope<T: Serialize>(config: &ScenarioConfig, body: T) -> Envelope<'_, T> {
    Envelope { version: env!("CARGO_PKG_VERSION"), config, body }
}

#[derive(Serialize)]
struct CapacityRow {
    snr_db: f64,
    receive_snr: f64,
    c1_bits: f64,
    c2_unit_bits: f64,
    c2_disk_bits: f64,
    c2_disk_gap_bits: f64,
    c2_ub_mckellips_bits: f64,
    c2_ub_avgpower_bits: f64,
    csum_bits: f64,
    bound_gap_db: f64,
}

pub fn capacity(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let out = Writer::new(cfg.out_dir())?;
    let mut rows = Vec::new();
    for &snr_db in &cfg.snr_db {
        let ch = cfg.channel(snr_db)?;
        let rx = ch.receive_snr();
        let disk = c2_disk(&ch)?;
        rows.push(CapacityRow {
            snr_db,
            receive_snr: rx,
            c1_bits: c1_primary_capacity(&ch),
            c2_unit_bits: c2_unit_modulus(&ch, &cfg.quadrature)?,
            c2_disk_bits: disk.capacity,
            c2_disk_gap_bits: disk.gap,
            c2_ub_mckellips_bits: upper_bound_mckellips(rx),
            c2_ub_avgpower_bits: upper_bound_average_power(rx),
            csum_bits: c_sum_max(&ch),
            bound_gap_db: bound_gap_db(rx)?,
        });
    }
    let mut csv = Csv::new(&[
        "snr_db",
        "c1_bits",
        "c2_unit_bits",
        "c2_disk_bits",
        "c2_ub_mckellips_bits",
        "c2_ub_avgpower_bits",
        "csum_bits",
    ]);
    for r in &rows {
        csv.row(&[
            Cell::Num(r.snr_db),
            Cell::Num(r.c1_bits),
            Cell::Num(r.c2_unit_bits),
            Cell::Num(r.c2_disk_bits),
            Cell::Num(r.c2_ub_mckellips_bits),
            Cell::Num(r.c2_ub_avgpower_bits),
            Cell::Num(r.csum_bits),
        ]);
    }
    print!("{}", csv.as_str());
    out.csv("capacity.csv", &csv)?;
    #[derive(Serialize)]
    struct Body<'a> {
        rows: &'a [CapacityRow],
    }
    out.json("capacity.json", &envelope(cfg, Body { rows: &rows }))?;
    Ok(())
}

pub fn scheme(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let out = Writer::new(cfg.out_dir())?;
    for &snr_db in &cfg.snr_db {
        let ch = cfg.channel(snr_db)?;
        let csum = c_sum_max(&ch);
        let mut csv = Csv::new(&["alpha", "n", "scheme", "order", "r1_bits", "r2_bits", "sum_bits", "csum_bits"]);
        for n in 1..=cfg.alpha_n_max {
            for kind in [SchemeKind::I, SchemeKind::II] {
                for order in [DecodeOrder::X1First, DecodeOrder::X2First] {
                    let s = PhaseScheme::new(kind, n)?;
                    let p = scheme_rate_pair(s, order, &ch, &cfg.quadrature)?;
                    let label = match kind {
                        SchemeKind::I => "I",
                        SchemeKind::II => "II",
                    };
                    csv.row(&[
                        Cell::Num(s.alpha()),
                        Cell::Int(n as i64),
                        Cell::Text(label.into()),
                        Cell::Text(order.label().into()),
                        Cell::Num(p.r1),
                        Cell::Num(p.r2),
                        Cell::Num(p.sum()),
                        Cell::Num(csum),
                    ]);
                }
            }
        }
        out.csv(&format!("scheme_{}.csv", snr_tag(snr_db)), &csv)?;
    }
    Ok(())
}

fn flag_unconverged(points: &[BoundaryPoint], what: &str, warnings: &mut Vec<String>) {
    for p in points.iter().filter(|p| !p.converged) {
        let w = format!(
            "{what}: mu1 = {} not certified (KKT violation {} nats)",
            fmt12(p.weights.mu1),
            fmt12(p.kkt.max_inequality_violation)
        );
        eprintln!("warning: {w}");
        warnings.push(w);
    }
}

fn strict_check(cfg_strict: bool, warnings: &[String]) -> Result<(), CliError> {
    if cfg_strict && !warnings.is_empty() {
        return Err(CliError::Strict(format!("{} boundary point(s) not certified", warnings.len())));
    }
    Ok(())
}

pub fn region(cfg: &ScenarioConfig, strict: bool) -> Result<(), CliError> {
    let out = Writer::new(cfg.out_dir())?;
    let alphas = alpha_grid(cfg.alpha_n_max);
    let mut warnings = Vec::new();
    for &snr_db in &cfg.snr_db {
        let ch = cfg.channel(snr_db)?;
        let ab = boundary_ab(&ch, &alphas, &cfg.quadrature)?;
        for &constraint in &cfg.constraints {
            let tag = format!("{}_{}", constraint.tag(), snr_tag(snr_db));
            let corners = Corners::compute(constraint, &ch, &cfg.quadrature)?;
            let bc = boundary_bc(&ch, constraint, &cfg.mu1_grid, &cfg.quadrature, &cfg.solver)?;
            let mut local = Vec::new();
            flag_unconverged(&bc, &tag, &mut local);
            let pairs: Vec<_> = bc.iter().flat_map(|p| p.achieved()).collect();
            let boundary = assemble_region(constraint, &ch, &corners, &ab.points, &pairs);

            let mut csv = Csv::new(&["r1_bits", "r2_bits", "provenance"]);
            for p in &boundary.points {
                csv.row(&[Cell::Num(p.r1), Cell::Num(p.r2), Cell::Text(p.provenance.label())]);
            }
            out.csv(&format!("region_{tag}.csv"), &csv)?;
            #[derive(Serialize)]
            struct Body<'a> {
                snr_db: f64,
                constraint: ReflectionConstraint,
                boundary: &'a mmac_core::RegionBoundary,
                ab_points: &'a [mmac_core::RatePair],
                ab_warnings: &'a [String],
                bc_points: &'a [BoundaryPoint],
                alphas: &'a [f64],
                warnings: &'a [String],
            }
            let body = Body {
                snr_db,
                constraint,
                boundary: &boundary,
                ab_points: &ab.points,
                ab_warnings: &ab.warnings,
                bc_points: &bc,
                alphas: &alphas,
                warnings: &local,
            };
            out.json(&format!("region_{tag}.json"), &envelope(cfg, body))?;
            warnings.extend(local);
        }
    }
    strict_check(strict, &warnings)
}

pub fn distributions(cfg: &ScenarioConfig, strict: bool) -> Result<(), CliError> {
    let out = Writer::new(cfg.out_dir())?;
    let mut warnings = Vec::new();
    for &snr_db in &cfg.snr_db {
        let ch = cfg.channel(snr_db)?;
        for &constraint in &cfg.constraints {
            for &mu1 in &cfg.mu1_grid {
                let w = BoundaryWeights::new(mu1)?;
                let point = optimize_boundary_point(w, constraint, &ch, &cfg.quadrature, &cfg.solver)?;
                let tag = format!("{}_{}_mu{}", constraint.tag(), snr_tag(snr_db), fmt12(mu1));
                flag_unconverged(std::slice::from_ref(&point), &tag, &mut warnings);

                let mut csv = Csv::new(&["variable", "location", "probability"]);
                for p in point.amplitude.points() {
                    csv.row(&[Cell::Text("amplitude".into()), Cell::Num(p.location), Cell::Num(p.probability)]);
                }
                for (r, q) in point.secondary.rings() {
                    csv.row(&[Cell::Text("radius".into()), Cell::Num(r), Cell::Num(q)]);
                }
                out.csv(&format!("distribution_{tag}.csv"), &csv)?;
                #[derive(Serialize)]
                struct Body<'a> {
                    snr_db: f64,
                    point: &'a BoundaryPoint,
                }
                let path = out.json(&format!("distribution_{tag}.json"), &envelope(cfg, Body { snr_db, point: &point }))?;
                reload(&path)?;
            }
        }
    }
    strict_check(strict, &warnings)
}

/// Reads an emitted distribution back through the validating constructors.
fn reload(path: &std::path::Path) -> Result<(), CliError> {
    #[derive(serde::Deserialize)]
    struct Back {
        point: BoundaryPoint,
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let back: Back = serde_json::from_str(&text)
        .map_err(|e| CliError::Core(mmac_core::Error::Numeric(format!("{} does not re-validate: {e}", path.display()))))?;
    if back.point.amplitude.is_empty() {
        return Err(CliError::Core(mmac_core::Error::Numeric(format!("{} has no support", path.display()))));
    }
    Ok(())
}

pub fn validate(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let out = Writer::new(cfg.out_dir())?;
    let mut cases = validation_grid()?;
    cases.push(ValidationCase { name: "gaussian@5dB".into(), snr_db: 5.0, family: McFamily::Gaussian });
    let base = cfg.channel(0.0)?;
    let rows: Vec<ValidationRow> = run_validation(&cases, &base, cfg.mc_samples, cfg.seed, &cfg.quadrature)?;
    let mut csv = Csv::new(&["case", "quad_nats", "mc_mean_nats", "mc_stderr_nats", "z"]);
    for r in &rows {
        csv.row(&[Cell::Text(r.case.clone()), Cell::Num(r.quad), Cell::Num(r.mc.mean), Cell::Num(r.mc.stderr), Cell::Num(r.z)]);
    }
    print!("{}", csv.as_str());
    out.csv("validate.csv", &csv)?;
    #[derive(Serialize)]
    struct Body<'a> {
        rows: &'a [ValidationRow],
    }
    out.json("validate.json", &envelope(cfg, Body { rows: &rows }))?;
    let failed: Vec<&str> = rows.iter().filter(|r| r.z.abs() > 3.0).map(|r| r.case.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("|z| > 3 for {}", failed.join(", "))))
    }
}
