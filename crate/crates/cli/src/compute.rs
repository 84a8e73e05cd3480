use rayon::prelude::*;
use spinrpa::analytic::{
    fully_connected_closed_form, pair_closed_form, uniform_contraction_spectra,
};
use spinrpa::exact::{
    collective_ground_state, dense_ground_states, dicke_reduced_density, state_entanglement,
    CollectiveSpectrum, ExactOptions, ExactSpectrum, Parity,
};
use spinrpa::gaussian::{analyze, SubsystemSpec};
use spinrpa::meanfield::{solve_uniform, MeanFieldSolution, Phase};
use spinrpa::model::XyzModel;
use spinrpa::parity::{corrected_entropy, corrected_global_negativity, ParityContext};
use spinrpa::rpa::{symplectic_diagonalize, ContractionData, RpaModes, RpaSystem};
use spinrpa::Error;

use crate::config::{totals, Plan, Subsystem};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// The documented singularity at `B_c` or a lost positivity nearby.
    Unstable(String),
    Error(String),
}

impl Status {
    fn rank(&self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Unstable(_) => 1,
            Status::Error(_) => 2,
        }
    }

    /// Keeps the more severe of the two.
    fn merge(self, other: Status) -> Status {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }

    pub fn label(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Unstable(m) => format!("unstable: {m}"),
            Status::Error(m) => format!("error: {m}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        *self == Status::Ok
    }
}

fn classify(method: &str, e: &Error) -> Status {
    let msg = format!("{method}: {e}");
    match e {
        Error::Unstable { .. }
        | Error::NotPositiveDefinite(_)
        | Error::UnpairedSpectrum(_)
        | Error::NegativeOccupation(_)
        | Error::InconsistentTranspose(_)
        | Error::Singular(_) => Status::Unstable(msg),
        _ => Status::Error(msg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    pub phase: Phase,
    pub lambda: f64,
    pub theta: f64,
}

/// Gaussian-state results for one subsystem, from the dense pipeline or the
/// closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct Bosonic {
    pub omega_min: f64,
    /// Reduced symplectic occupations, largest first.
    pub f_values: Vec<f64>,
    pub entropy: f64,
    pub entropy_corrected: Option<f64>,
    pub negativity_global: f64,
    pub negativity_sub: Option<f64>,
    pub negativity_corrected: Option<f64>,
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactValues {
    pub oracle: &'static str,
    pub energy: f64,
    pub partner_energy: Option<f64>,
    pub parity: Option<Parity>,
    pub degenerate: bool,
    pub entropy: f64,
    pub negativity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub s: f64,
    pub subsystem: String,
    pub field: f64,
    pub mean_field: Option<MeanField>,
    pub bosonic: Option<Bosonic>,
    pub analytic_residual: Option<f64>,
    pub exact: Option<ExactValues>,
    pub status: Status,
}

enum Oracle {
    Dense(ExactSpectrum),
    Collective(CollectiveSpectrum),
}

impl Oracle {
    fn run(plan: &Plan, model: &XyzModel) -> spinrpa::Result<Self> {
        let opts = ExactOptions {
            dimension_cap: plan.config.exact.dimension_cap,
            ..ExactOptions::default()
        };
        if plan.collective(model.s()) {
            collective_ground_state(model, &opts).map(Oracle::Collective)
        } else {
            dense_ground_states(&model.to_spin_model(), &opts).map(Oracle::Dense)
        }
    }

    fn values(&self, sub: &Subsystem) -> spinrpa::Result<ExactValues> {
        match self {
            Oracle::Dense(spec) => {
                let e = state_entanglement(&spec.basis, spec.ground(), &sub.spec)?;
                Ok(ExactValues {
                    oracle: "dense",
                    energy: e.energy,
                    partner_energy: spec.states.get(1).map(|s| s.energy),
                    parity: e.parity,
                    degenerate: spec.degenerate,
                    entropy: e.entropy,
                    negativity: e.negativity,
                })
            }
            Oracle::Collective(spec) => {
                let ground = spec.ground();
                let d = dicke_reduced_density(ground, sub.spec.len(), sub.split())?;
                Ok(ExactValues {
                    oracle: "collective",
                    energy: ground.energy,
                    partner_energy: spec.states.get(1).map(|s| s.energy),
                    parity: Some(ground.parity),
                    degenerate: spec.degenerate,
                    entropy: d.entropy,
                    negativity: d.negativity,
                })
            }
        }
    }
}

struct Numeric {
    modes: RpaModes,
    data: ContractionData,
}

fn numeric(model: &XyzModel, mf: &MeanFieldSolution) -> spinrpa::Result<Numeric> {
    let system = RpaSystem::from_uniform(model, mf)?;
    let modes = symplectic_diagonalize(&system)?;
    let data = ContractionData::from_modes(&modes);
    Ok(Numeric { modes, data })
}

fn numeric_values(num: &Numeric, sub: &Subsystem) -> spinrpa::Result<Bosonic> {
    let rep = analyze(&num.data, &sub.spec)?;
    let n = num.data.n();
    // The pure-state formula takes square roots of occupations that are zero
    // up to rounding, so go through the transposed spectrum of the whole array.
    let global = if sub.is_global(n) {
        0.0
    } else {
        let whole = SubsystemSpec::bipartition(sub.spec.complement(n), sub.spec.sites().to_vec())?;
        analyze(&num.data, &whole)?
            .negativity
            .unwrap_or(rep.global_negativity)
    };
    let mut f_values = rep.spectrum.values.clone();
    f_values.sort_by(|a, b| b.total_cmp(a));
    Ok(Bosonic {
        omega_min: num.modes.omega_min(),
        f_values,
        entropy: rep.entropy,
        entropy_corrected: None,
        negativity_global: global,
        negativity_sub: rep.negativity,
        negativity_corrected: None,
        energy: Some(num.modes.energy),
    })
}

fn diverged() -> Error {
    Error::Unstable {
        mode: 0,
        detail: "closed form diverges at B_c".into(),
    }
}

/// Closed forms for the pair and the complete graph; only subsystem sizes
/// matter there.
fn analytic_values(model: &XyzModel, sub: &Subsystem) -> spinrpa::Result<Bosonic> {
    let n = model.n();
    let j = totals(model);
    let field = model.field();
    let len = sub.spec.len();
    let split = sub.split();
    let (omega_min, f, entropy, global, sub_neg);
    if n == 2 {
        let p = pair_closed_form(j[0], j[1], j[2], field)?;
        if p.divergent {
            return Err(diverged());
        }
        omega_min = p.frequencies.omega0.min(p.frequencies.omega1);
        if len == 1 {
            (f, entropy, global, sub_neg) = (p.f, p.entropy, p.negativity, None);
        } else {
            (f, entropy, global, sub_neg) = (0.0, 0.0, 0.0, split.map(|_| p.negativity));
        }
    } else {
        let probe = fully_connected_closed_form(n, j, field, 2, 1)?;
        if probe.divergent {
            return Err(diverged());
        }
        omega_min = probe.frequencies.omega0.min(probe.frequencies.omega1);
        global = if len < n {
            fully_connected_closed_form(n, j, field, n, len)?.negativity
        } else {
            0.0
        };
        if len == n {
            f = 0.0;
            entropy = 0.0;
            sub_neg = match split {
                Some(m) => Some(fully_connected_closed_form(n, j, field, n, m)?.negativity),
                None => None,
            };
        } else if len == 1 {
            f = uniform_contraction_spectra(probe.contractions, 1, None)?.f_block;
            entropy = spinrpa::gaussian::bosonic_entropy(f);
            sub_neg = None;
        } else {
            let r = fully_connected_closed_form(n, j, field, len, split.unwrap_or(1))?;
            f = r.f;
            entropy = r.entropy;
            sub_neg = split.map(|_| r.negativity);
        }
    }
    Ok(Bosonic {
        omega_min,
        f_values: vec![f],
        entropy,
        entropy_corrected: None,
        negativity_global: global,
        negativity_sub: sub_neg,
        negativity_corrected: None,
        energy: None,
    })
}

fn scaled(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn residual(numeric: &Bosonic, analytic: &Bosonic) -> f64 {
    let mut r = scaled(numeric.f_values[0], analytic.f_values[0])
        .max(scaled(numeric.entropy, analytic.entropy))
        .max(scaled(
            numeric.negativity_global,
            analytic.negativity_global,
        ));
    if let (Some(a), Some(b)) = (numeric.negativity_sub, analytic.negativity_sub) {
        r = r.max(scaled(a, b));
    }
    r
}

fn apply_parity(b: &mut Bosonic, ctx: &ParityContext, sub: &Subsystem, n: usize) {
    let global = sub.is_global(n);
    b.entropy_corrected = Some(if global {
        b.entropy
    } else {
        corrected_entropy(b.entropy, ctx, sub.spec.len())
    });
    b.negativity_corrected = b.negativity_sub.map(|neg| {
        if global {
            corrected_global_negativity(neg, ctx)
        } else {
            neg
        }
    });
}

/// All rows for one `(s, B)` point, one per subsystem in config order.
pub fn evaluate_point(plan: &Plan, model: &XyzModel) -> Vec<Row> {
    let methods = plan.methods();
    let n = model.n();
    let mf = solve_uniform(model);
    let mean_field = mf.as_ref().ok().map(|mf| MeanField {
        phase: mf.phase,
        lambda: mf.lambda_magnitude(0),
        theta: mf.tilt.unwrap_or(0.0),
    });
    let num = match (&mf, methods.rpa()) {
        (Ok(mf), true) => Some(numeric(model, mf)),
        _ => None,
    };
    let uniform = model.is_complete_graph();
    let oracle = methods.exact().then(|| Oracle::run(plan, model));
    let ctx = ParityContext::uniform(model)
        .map(|c| c.with_threshold(plan.config.corrections.overlap_threshold));

    plan.subsystems
        .iter()
        .map(|sub| {
            let mut status = match &mf {
                Ok(_) => Status::Ok,
                Err(e) => classify("mean field", e),
            };
            let numeric_row = num.as_ref().map(|r| match r {
                Ok(num) => numeric_values(num, sub),
                Err(e) => Err(e.clone()),
            });
            let analytic_row =
                (methods.analytic() && uniform && mf.is_ok()).then(|| analytic_values(model, sub));
            if methods.analytic() && !uniform {
                status = status.merge(Status::Error(
                    "analytic: closed forms need the pair or complete graph".into(),
                ));
            }

            let mut analytic_residual = None;
            let mut bosonic = None;
            match (numeric_row, analytic_row) {
                (Some(Ok(a)), Some(Ok(b))) => {
                    analytic_residual = Some(residual(&a, &b));
                    bosonic = Some(a);
                }
                (Some(Ok(a)), other) => {
                    if let Some(Err(e)) = other {
                        status = status.merge(classify("analytic", &e));
                    }
                    bosonic = Some(a);
                }
                (Some(Err(e)), other) => {
                    status = status.merge(classify("rpa", &e));
                    if let Some(Err(e)) = other {
                        status = status.merge(classify("analytic", &e));
                    }
                }
                (None, Some(Ok(b))) => bosonic = Some(b),
                (None, Some(Err(e))) => status = status.merge(classify("analytic", &e)),
                (None, None) => {}
            }
            if let (Some(b), true) = (bosonic.as_mut(), plan.config.corrections.parity) {
                match &ctx {
                    Ok(ctx) => apply_parity(b, ctx, sub, n),
                    Err(e) => status = status.merge(classify("parity", e)),
                }
            }

            let exact = match &oracle {
                Some(Ok(o)) => match o.values(sub) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        status = status.merge(classify("exact", &e));
                        None
                    }
                },
                Some(Err(e)) => {
                    status = status.merge(classify("exact", e));
                    None
                }
                None => None,
            };

            Row {
                s: model.s(),
                subsystem: sub.label.clone(),
                field: model.field(),
                mean_field: mean_field.clone(),
                bosonic,
                analytic_residual,
                exact,
                status,
            }
        })
        .collect()
}

/// Every `(s, B)` point of the plan, in spin-major order.
pub fn points(plan: &Plan) -> Result<Vec<XyzModel>, CliError> {
    let mut out = Vec::new();
    for &s in &plan.spins {
        let base = plan.model(s)?;
        for b in plan.fields(&base) {
            out.push(base.with_field(b));
        }
    }
    Ok(out)
}

/// Evaluates every point in parallel; rows come back in grid order.
pub fn run_sweep(plan: &Plan) -> Result<Vec<Row>, CliError> {
    let models = points(plan)?;
    let rows: Vec<Vec<Row>> = models.par_iter().map(|m| evaluate_point(plan, m)).collect();
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepConfig;

    fn plan(methods: &str, geometry: &str, extra: &str) -> Plan {
        let text = format!(
            r#"
            methods = "{methods}"
            [model]
            geometry = "{geometry}"
            {extra}
            s = 0.5
            couplings = [1.0, 0.5, 0.0]
            [sweep]
            b_min = 0.5
            b_max = 2.0
            points = 3
            [[subsystems]]
            block = 1
            [[subsystems]]
            block = 2
            split = 1
            "#
        );
        SweepConfig::parse(&text, false).unwrap().plan().unwrap()
    }

    #[test]
    fn status_keeps_worst() {
        let s = Status::Ok
            .merge(Status::Unstable("a".into()))
            .merge(Status::Ok);
        assert_eq!(s.label(), "unstable: a");
        let s = s
            .merge(Status::Error("b".into()))
            .merge(Status::Unstable("c".into()));
        assert_eq!(s.label(), "error: b");
    }

    #[test]
    fn pair_rows_agree_with_closed_form() {
        let p = plan("all", "pair", "");
        let rows = run_sweep(&p).unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert!(row.status.is_ok(), "{:?}", row.status);
            assert!(row.analytic_residual.unwrap() < 1e-10, "{row:?}");
            assert!(row.exact.is_some());
        }
        let single = &rows[4];
        let closed = pair_closed_form(1.0, 0.5, 0.0, 2.0).unwrap();
        let b = single.bosonic.as_ref().unwrap();
        assert!((b.entropy - closed.entropy).abs() < 1e-12);
        assert!((b.negativity_global - closed.negativity).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_single_site_and_global_split() {
        let p = plan("all", "complete", "n = 6");
        let rows = run_sweep(&p).unwrap();
        for row in &rows {
            assert!(row.status.is_ok(), "{:?}", row.status);
            assert!(row.analytic_residual.unwrap() < 1e-10, "{row:?}");
            assert_eq!(row.exact.as_ref().unwrap().oracle, "collective");
        }
    }

    #[test]
    fn broken_phase_corrections_applied() {
        let p = plan("rpa", "pair", "");
        let rows = run_sweep(&p).unwrap();
        // B = 0.5 < B_c = 1
        let single = rows[0].bosonic.as_ref().unwrap();
        assert_eq!(rows[0].mean_field.as_ref().unwrap().phase, Phase::Broken);
        // one site at s = 1/2: overlap B/B_c = 1/2, so q_+ = 3/4
        let mixing = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((single.entropy_corrected.unwrap() - single.entropy - mixing).abs() < 1e-12);
        let pair = rows[1].bosonic.as_ref().unwrap();
        let n = pair.negativity_sub.unwrap();
        assert!((pair.negativity_corrected.unwrap() - (2.0 * n + 0.5)).abs() < 1e-12);
    }
}
