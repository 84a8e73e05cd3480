#![allow(dead_code)]

use spinrpa::gaussian::{analyze, EntanglementReport, SubsystemSpec};
use spinrpa::meanfield::{solve_uniform, MeanFieldSolution};
use spinrpa::model::XyzModel;
use spinrpa::rpa::{symplectic_diagonalize, ContractionData, RpaModes, RpaSystem};

pub struct Pipeline {
    pub mf: MeanFieldSolution,
    pub modes: RpaModes,
    pub data: ContractionData,
}

/// Mean field, dense RPA on the general (frame-rotated) path, contractions.
pub fn dense_pipeline(model: &XyzModel) -> spinrpa::Result<Pipeline> {
    let mf = solve_uniform(model)?;
    let system = RpaSystem::from_model(&model.to_spin_model(), &mf)?;
    let modes = symplectic_diagonalize(&system)?;
    let data = ContractionData::from_modes(&modes);
    Ok(Pipeline { mf, modes, data })
}

pub fn report(data: &ContractionData, spec: &SubsystemSpec) -> EntanglementReport {
    analyze(data, spec).expect("gaussian analysis")
}

pub fn largest(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    num / den
}
