//! One function per CLI verb. Each returns the rendered artifact; verbs that
//! can fail partway also hand back the failure so the caller can still write
//! what was computed.

use casimir_core::lifshitz::{
    energy_at_angles, fourier_components, sweep, torque_curve, InteractionConfig, TorqueCurve,
};
use casimir_core::oracle::{convergence_study, default_probes, zero_twist_error, ConvergenceStudy};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{json_document, render, Cell, Format, Metadata, Table};
use crate::CliError;

/// Zero-twist probes must reproduce the uniform layer to this level.
pub const ZERO_TWIST_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct CommandOutput {
    pub text: String,
    /// Set when the artifact is complete but the run must still fail.
    pub failure: Option<CliError>,
}

impl CommandOutput {
    fn ok(text: String) -> Self {
        Self {
            text,
            failure: None,
        }
    }
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        0.0
    } else {
        (numerator / denominator).abs()
    }
}

fn doubled(config: &InteractionConfig) -> InteractionConfig {
    let mut c = config.clone();
    c.quadrature.n_eta *= 2;
    c.quadrature.n_krho *= 2;
    c
}

/// `E(φ)` per configured separation, with Matsubara diagnostics and, on
/// request, the relative change under doubled `n_eta` and `n_krho`.
pub fn cmd_energy(
    run: &RunConfig,
    phi: f64,
    check_quadrature: bool,
    format: Format,
) -> Result<CommandOutput, CliError> {
    let mut columns = vec![
        "separation_m",
        "phi_rad",
        "energy_j_per_m2",
        "matsubara_terms",
        "last_term_ratio",
        "terms_monotone",
    ];
    if check_quadrature {
        columns.push("quadrature_rel_change");
    }
    let mut table = Table::new(columns);
    for a in run.separations_m() {
        let config = run.interaction(a)?;
        let report = energy_at_angles(&config, &[phi])?;
        let energy = report.energy[0];
        let last = report.terms.last().map_or(0.0, |t| t[0]);
        let mut row = vec![
            Cell::Float(a),
            Cell::Float(phi),
            Cell::Float(energy),
            Cell::Int(report.matsubara_terms() as u64),
            Cell::Float(ratio(last, energy)),
            Cell::Text(report.terms_monotone().to_string()),
        ];
        if check_quadrature {
            let fine = energy_at_angles(&doubled(&config), &[phi])?.energy[0];
            row.push(Cell::Float(ratio(fine - energy, fine)));
        }
        table.push(row);
    }
    let meta = Metadata::new(&format!("energy --phi {phi:?}"), run);
    Ok(CommandOutput::ok(render(&table, &meta, format)))
}

fn curves(run: &RunConfig) -> Result<Vec<TorqueCurve>, CliError> {
    run.separations_m()
        .into_iter()
        .map(|a| Ok(torque_curve(&run.interaction(a)?)?))
        .collect()
}

fn curve_table(curves: &[TorqueCurve]) -> Table {
    let mut table = Table::new(vec![
        "separation_m",
        "phi_rad",
        "energy_j_per_m2",
        "torque_j_per_m2_rad",
    ]);
    for c in curves {
        for ((phi, e), t) in c.phi_grid.iter().zip(&c.energy).zip(&c.torque) {
            table.push(vec![
                Cell::Float(c.separation),
                Cell::Float(*phi),
                Cell::Float(*e),
                Cell::Float(*t),
            ]);
        }
    }
    table
}

/// `(φ, E, τ)` rows on the uniform grid, one block per separation.
pub fn cmd_torque_curve(run: &RunConfig, format: Format) -> Result<CommandOutput, CliError> {
    let curves = curves(run)?;
    let meta = Metadata::new("torque-curve", run);
    let text = match format {
        Format::Csv => curve_table(&curves).to_csv(&meta),
        Format::Json => {
            let checks: Vec<Value> = curves
                .iter()
                .map(|c| {
                    json!({
                        "separation_m": c.separation,
                        "matsubara_terms": c.matsubara_terms,
                        "terms_monotone": c.terms_monotone,
                        "mean_torque_over_max": ratio(c.mean_torque(), c.max_abs_torque()),
                        "finite_difference_check": c.fd_check,
                    })
                })
                .collect();
            let payload = json!({
                "rows": curve_table(&curves).to_json_value(),
                "diagnostics": checks,
            });
            json_document(&meta, "torque_curve", payload)
        }
    };
    Ok(CommandOutput::ok(text))
}

/// `a_m`, `b_m` and their ratios to `b_1` for `m = 1..=max_order`.
pub fn fourier_table(curves: &[TorqueCurve], max_order: usize) -> Result<Table, CliError> {
    let mut table = Table::new(vec![
        "separation_m",
        "m",
        "a_m_j_per_m2_rad",
        "b_m_j_per_m2_rad",
        "a_m_over_b_1",
        "b_m_over_b_1",
    ]);
    for c in curves {
        let s = fourier_components(c, max_order)?;
        for ((m, (a, b)), (ra, rb)) in s.orders.iter().zip(s.a.iter().zip(&s.b)).zip(s.ratios()) {
            table.push(vec![
                Cell::Float(c.separation),
                Cell::Int(*m as u64),
                Cell::Float(*a),
                Cell::Float(*b),
                Cell::Float(ra),
                Cell::Float(rb),
            ]);
        }
    }
    Ok(table)
}

pub fn cmd_fourier(run: &RunConfig, format: Format) -> Result<CommandOutput, CliError> {
    let table = fourier_table(&curves(run)?, run.fourier_orders)?;
    let meta = Metadata::new("fourier", run);
    Ok(CommandOutput::ok(render(&table, &meta, format)))
}

/// Fourier spectra over the sweep grid. Failed entries get a status row and
/// do not stop the others.
pub fn cmd_sweep(run: &RunConfig, format: Format) -> Result<CommandOutput, CliError> {
    let entries = run.sweep_entries()?;
    let configs: Vec<InteractionConfig> = entries.iter().map(|e| e.config.clone()).collect();
    let results = sweep(&configs, run.fourier_orders);
    let mut table = Table::new(vec![
        "entry",
        "d_tot_m",
        "pairing",
        "separation_m",
        "status",
        "m",
        "a_m_j_per_m2_rad",
        "b_m_j_per_m2_rad",
        "a_m_over_b_1",
        "b_m_over_b_1",
    ]);
    let mut failures = Vec::new();
    for (i, (entry, result)) in entries.iter().zip(results).enumerate() {
        let head = vec![
            Cell::Int(i as u64),
            Cell::Float(entry.d_tot),
            Cell::Text(entry.pairing.as_str().to_owned()),
            Cell::Float(entry.config.separation),
        ];
        match result {
            Ok((_, s)) => {
                for ((m, (a, b)), (ra, rb)) in
                    s.orders.iter().zip(s.a.iter().zip(&s.b)).zip(s.ratios())
                {
                    let mut row = head.clone();
                    row.extend([
                        Cell::Text("ok".to_owned()),
                        Cell::Int(*m as u64),
                        Cell::Float(*a),
                        Cell::Float(*b),
                        Cell::Float(ra),
                        Cell::Float(rb),
                    ]);
                    table.push(row);
                }
            }
            Err(e) => {
                let mut row = head;
                row.push(Cell::Text(format!("error: {e}")));
                row.extend((0..5).map(|_| Cell::Text(String::new())));
                table.push(row);
                failures.push(CliError::from(e));
            }
        }
    }
    let meta = Metadata::new("sweep", run);
    let total = entries.len();
    let failure = (!failures.is_empty()).then(|| CliError::SweepFailed {
        failed: failures.len(),
        total,
        first: Box::new(failures.swap_remove(0)),
    });
    Ok(CommandOutput {
        text: render(&table, &meta, format),
        failure,
    })
}

fn study_json(
    index: usize,
    study: &ConvergenceStudy,
    zero_twist: f64,
    reference: f64,
    pass: bool,
) -> Value {
    let points: Vec<Value> = study
        .points
        .iter()
        .map(|p| {
            json!({
                "layers_per_pitch": p.layers_per_pitch,
                "delta_rad": p.delta,
                "max_error": p.max_error,
            })
        })
        .collect();
    json!({
        "slab": index,
        "points": points,
        "slope": study.slope,
        "monotone": study.is_monotone(),
        "reference_error": reference,
        "zero_twist_error": zero_twist,
        "pass": pass,
    })
}

/// Staircase-versus-discrete-stack comparison for both slabs over the fixed
/// probe set. Fails (exit status 4) when the error at the reference
/// resolution exceeds the threshold, the sequence is not monotone, or the
/// zero-twist probe disagrees.
pub fn cmd_oracle_check(run: &RunConfig, format: Format) -> Result<CommandOutput, CliError> {
    let settings = &run.oracle;
    let probes = default_probes(run.temperature_k)?;
    let mut reports = Vec::new();
    let mut table = Table::new(vec!["slab", "layers_per_pitch", "delta_rad", "max_error"]);
    let mut problems = Vec::new();
    for (i, slab) in run.slabs()?.iter().enumerate() {
        let study = convergence_study(slab, &probes, run.gap_eps, &settings.resolutions)?;
        let zero_twist =
            zero_twist_error(slab, &probes, run.gap_eps, settings.reference_resolution)?;
        let reference = study
            .points
            .iter()
            .find(|p| p.layers_per_pitch == settings.reference_resolution)
            .or(study.points.last())
            .map_or(f64::NAN, |p| p.max_error);
        let mut pass = true;
        if reference.is_nan() || reference >= settings.max_error {
            pass = false;
            problems.push(format!(
                "slab {i}: error {reference:e} at {} layers/pitch exceeds {:e}",
                settings.reference_resolution, settings.max_error
            ));
        }
        if !study.is_monotone() {
            pass = false;
            problems.push(format!("slab {i}: error does not decrease monotonically"));
        }
        if zero_twist.is_nan() || zero_twist >= ZERO_TWIST_TOL {
            pass = false;
            problems.push(format!("slab {i}: zero-twist error {zero_twist:e}"));
        }
        for p in &study.points {
            table.push(vec![
                Cell::Int(i as u64),
                Cell::Int(p.layers_per_pitch as u64),
                Cell::Float(p.delta),
                Cell::Float(p.max_error),
            ]);
        }
        reports.push(study_json(i, &study, zero_twist, reference, pass));
    }
    let meta = Metadata::new("oracle-check", run);
    let text = match format {
        Format::Csv => table.to_csv(&meta),
        Format::Json => json_document(
            &meta,
            "oracle_check",
            json!({ "probes": probes.len(), "slabs": reports }),
        ),
    };
    Ok(CommandOutput {
        text,
        failure: (!problems.is_empty()).then(|| CliError::OracleFailed(problems.join("; "))),
    })
}
