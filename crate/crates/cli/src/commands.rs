use std::path::Path;

use rayon::prelude::*;
use spinrpa::meanfield::solve_uniform;
use spinrpa::rpa::momentum_modes;

use crate::compute::{points, run_sweep, Row, Status};
use crate::config::{Methods, Plan, Tolerances};
use crate::error::CliError;
use crate::output::{list, num, opt, Table};

const SWEEP_VERSION: u32 = 1;

fn sweep_header(methods: Methods) -> Vec<&'static str> {
    let mut h = vec![
        "s",
        "subsystem",
        "B",
        "phase",
        "lambda",
        "theta",
        "omega_min",
        "f_values",
        "S_bosonic",
        "S_corrected",
        "N_global",
        "N_sub",
        "N_corrected",
    ];
    if methods.exact() {
        h.extend(["S_exact", "N_exact", "E0_exact", "E_RPA"]);
    }
    if methods == Methods::All {
        h.push("analytic_residual");
    }
    h.push("status");
    h
}

fn sweep_record(row: &Row, methods: Methods) -> Vec<String> {
    let mf = row.mean_field.as_ref();
    let b = row.bosonic.as_ref();
    let mut r = vec![
        num(row.s),
        row.subsystem.clone(),
        num(row.field),
        mf.map(|m| m.phase.label().to_string()).unwrap_or_default(),
        opt(mf.map(|m| m.lambda)),
        opt(mf.map(|m| m.theta)),
        opt(b.map(|b| b.omega_min)),
        b.map(|b| list(&b.f_values)).unwrap_or_default(),
        opt(b.map(|b| b.entropy)),
        opt(b.and_then(|b| b.entropy_corrected)),
        opt(b.map(|b| b.negativity_global)),
        opt(b.and_then(|b| b.negativity_sub)),
        opt(b.and_then(|b| b.negativity_corrected)),
    ];
    if methods.exact() {
        let e = row.exact.as_ref();
        r.extend([
            opt(e.map(|e| e.entropy)),
            opt(e.and_then(|e| e.negativity)),
            opt(e.map(|e| e.energy)),
            opt(b.and_then(|b| b.energy)),
        ]);
    }
    if methods == Methods::All {
        r.push(opt(row.analytic_residual));
    }
    r.push(row.status.label());
    r
}

fn first_error(rows: &[Row]) -> Option<String> {
    rows.iter().find_map(|r| match &r.status {
        Status::Error(m) => Some(format!(
            "s = {}, B = {}, {}: {m}",
            r.s, r.field, r.subsystem
        )),
        _ => None,
    })
}

/// Rows at `B_c` are marked unstable and kept; any other failure gives a
/// nonzero exit once the table is written.
pub fn sweep(plan: &Plan, output: Option<&Path>) -> Result<(), CliError> {
    let rows = run_sweep(plan)?;
    let methods = plan.methods();
    let mut table = Table::create(output, "sweep", SWEEP_VERSION, &sweep_header(methods))?;
    for row in &rows {
        table.row(&sweep_record(row, methods))?;
    }
    table.finish()?;
    match first_error(&rows) {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

pub fn exact(plan: &Plan, output: Option<&Path>) -> Result<(), CliError> {
    let rows = run_sweep(plan)?;
    let header = [
        "s",
        "subsystem",
        "B",
        "oracle",
        "E0_exact",
        "E1_exact",
        "parity",
        "degenerate",
        "S_exact",
        "N_exact",
        "status",
    ];
    let mut table = Table::create(output, "exact", SWEEP_VERSION, &header)?;
    for row in &rows {
        let e = row.exact.as_ref();
        table.row(&[
            num(row.s),
            row.subsystem.clone(),
            num(row.field),
            e.map(|e| e.oracle.to_string()).unwrap_or_default(),
            opt(e.map(|e| e.energy)),
            opt(e.and_then(|e| e.partner_energy)),
            e.and_then(|e| e.parity)
                .map(|p| format!("{p:?}").to_lowercase())
                .unwrap_or_default(),
            e.map(|e| e.degenerate.to_string()).unwrap_or_default(),
            opt(e.map(|e| e.entropy)),
            opt(e.and_then(|e| e.negativity)),
            row.status.label(),
        ])?;
    }
    table.finish()?;
    match first_error(&rows) {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

/// One row per `(s, B, k)`: frequency, Bogoliubov amplitudes and the vacuum
/// coefficient `Z(l)` at `l = k`.
pub fn modes(plan: &Plan, output: Option<&Path>) -> Result<(), CliError> {
    let models = points(plan)?;
    let blocks: Vec<Vec<[String; 8]>> = models
        .par_iter()
        .map(|m| {
            let (s, b) = (num(m.s()), num(m.field()));
            let result = solve_uniform(m).and_then(|mf| momentum_modes(m, &mf));
            match result {
                Ok(mm) => {
                    let z = mm.z_profile();
                    (0..mm.n())
                        .map(|k| {
                            [
                                s.clone(),
                                b.clone(),
                                k.to_string(),
                                num(mm.omega[k]),
                                num(mm.u[k]),
                                num(mm.v[k]),
                                num(z[k]),
                                "ok".into(),
                            ]
                        })
                        .collect()
                }
                Err(e) => {
                    let status = match e {
                        spinrpa::Error::Unstable { .. } => format!("unstable: {e}"),
                        _ => format!("error: {e}"),
                    };
                    vec![[
                        s,
                        b,
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        status,
                    ]]
                }
            }
        })
        .collect();
    let header = ["s", "B", "k", "omega", "u", "v", "Z_l", "status"];
    let mut table = Table::create(output, "modes", SWEEP_VERSION, &header)?;
    let mut error = None;
    for row in blocks.iter().flatten() {
        if error.is_none() && row[7].starts_with("error") {
            error = Some(format!("s = {}, B = {}: {}", row[0], row[1], row[7]));
        }
        table.row(row)?;
    }
    table.finish()?;
    match error {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub entropy: Option<f64>,
    pub negativity: Option<f64>,
    pub analytic: Option<f64>,
}

/// RPA against the exact oracle. Parity-corrected values are used when the
/// corrections are on, since the exact ground state has definite parity.
pub fn deviation(row: &Row) -> Deviation {
    let b = row.bosonic.as_ref();
    let e = row.exact.as_ref();
    let entropy = match (b, e) {
        (Some(b), Some(e)) => Some((b.entropy_corrected.unwrap_or(b.entropy) - e.entropy).abs()),
        _ => None,
    };
    let negativity = match (
        b.and_then(|b| b.negativity_corrected.or(b.negativity_sub)),
        e.and_then(|e| e.negativity),
    ) {
        (Some(x), Some(y)) => Some((x - y).abs()),
        _ => None,
    };
    Deviation {
        entropy,
        negativity,
        analytic: row.analytic_residual,
    }
}

fn exceeds(x: Option<f64>, tol: f64) -> bool {
    x.is_some_and(|x| !(x <= tol))
}

pub fn compare(
    plan: &Plan,
    tolerances: &Tolerances,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let rows = run_sweep(plan)?;
    let header = [
        "s",
        "subsystem",
        "B",
        "dS",
        "dN",
        "analytic_residual",
        "verdict",
    ];
    let mut table = Table::create(output, "compare", SWEEP_VERSION, &header)?;
    let mut worst = [0.0f64; 3];
    let mut failures = Vec::new();
    let mut unstable = Vec::new();
    for row in &rows {
        let d = deviation(row);
        let verdict = if !row.status.is_ok() {
            unstable.push(format!(
                "s = {}, B = {}, {}: {}",
                row.s,
                row.field,
                row.subsystem,
                row.status.label()
            ));
            "unstable"
        } else {
            for (w, x) in worst.iter_mut().zip([d.entropy, d.negativity, d.analytic]) {
                *w = w.max(x.unwrap_or(0.0));
            }
            let bad = exceeds(d.entropy, tolerances.entropy)
                || exceeds(d.negativity, tolerances.negativity)
                || exceeds(d.analytic, tolerances.analytic);
            if bad {
                failures.push(format!(
                    "s = {}, B = {}, {}: dS = {}, dN = {}, analytic = {}",
                    row.s,
                    row.field,
                    row.subsystem,
                    opt(d.entropy),
                    opt(d.negativity),
                    opt(d.analytic)
                ));
                "fail"
            } else {
                "pass"
            }
        };
        table.row(&[
            num(row.s),
            row.subsystem.clone(),
            num(row.field),
            opt(d.entropy),
            opt(d.negativity),
            opt(d.analytic),
            verdict.to_string(),
        ])?;
    }
    table.finish()?;
    eprintln!(
        "max |dS| = {:.3e} (tol {:e}), max |dN| = {:.3e} (tol {:e}), max analytic residual = {:.3e} (tol {:e})",
        worst[0], tolerances.entropy, worst[1], tolerances.negativity, worst[2], tolerances.analytic
    );
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("fail {f}");
        }
        return Err(CliError::Tolerance(format!(
            "{} of {} rows out of tolerance",
            failures.len(),
            rows.len()
        )));
    }
    if !unstable.is_empty() {
        for u in &unstable {
            eprintln!("unstable {u}");
        }
        return Err(CliError::Numerical(format!(
            "{} rows could not be compared",
            unstable.len()
        )));
    }
    Ok(())
}
