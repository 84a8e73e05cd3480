//! Self-consistent mean field: `lambda_i = B_i - sum_j J^{ij} <s_j>`,
//! `<s_i> = -s_i lambda_i / |lambda_i|`.

use crate::error::{Error, Result};
use crate::model::{Axis, SpinModel, XyzModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Normal,
    Broken,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Normal => "normal",
            Phase::Broken => "broken",
        }
    }
}

/// Orthonormal local axes; `axes[a]` holds the lab components of local axis
/// `a` (x', y', z'). The local z' axis points along the mean field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub axes: [[f64; 3]; 3],
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        axes: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Minimal rotation carrying the lab z axis onto `direction`. An
    /// antiparallel direction uses the rotation by pi about y.
    pub fn along(direction: [f64; 3]) -> Self {
        let len = norm(&direction);
        let d = [direction[0] / len, direction[1] / len, direction[2] / len];
        let cos_t = d[2].clamp(-1.0, 1.0);
        let sin_t = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if sin_t < 1e-15 {
            return if cos_t > 0.0 {
                Self::IDENTITY
            } else {
                Frame {
                    axes: [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
                }
            };
        }
        let k = [-d[1] / sin_t, d[0] / sin_t, 0.0];
        let rotate = |v: [f64; 3]| {
            let kv = cross(&k, &v);
            let kd = dot(&k, &v) * (1.0 - cos_t);
            [
                v[0] * cos_t + kv[0] * sin_t + k[0] * kd,
                v[1] * cos_t + kv[1] * sin_t + k[1] * kd,
                v[2] * cos_t + kv[2] * sin_t + k[2] * kd,
            ]
        };
        Frame {
            axes: [
                rotate([1.0, 0.0, 0.0]),
                rotate([0.0, 1.0, 0.0]),
                rotate([0.0, 0.0, 1.0]),
            ],
        }
    }

    pub fn to_lab(&self, local: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, axis) in self.axes.iter().enumerate() {
            for mu in 0..3 {
                out[mu] += axis[mu] * local[a];
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSolution {
    /// Mean-field vector `lambda_i` per site.
    pub lambda: Vec<[f64; 3]>,
    /// `<s_i>_0 = -s_i lambda_i / |lambda_i|`.
    pub magnetization: Vec<[f64; 3]>,
    pub frames: Vec<Frame>,
    pub energy: f64,
    pub phase: Phase,
    /// Tilt angle from the z axis for uniform solutions.
    pub tilt: Option<f64>,
    pub critical_field: Option<f64>,
    pub factorizing_field: Option<f64>,
    /// Common anisotropy `chi`, when defined.
    pub anisotropy: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl MeanFieldSolution {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda_magnitude(&self, i: usize) -> f64 {
        norm(&self.lambda[i])
    }

    pub fn lambda_magnitudes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.lambda_magnitude(i)).collect()
    }

    /// The degenerate solution related by the parity `P_z` (a pi rotation
    /// about z).
    pub fn parity_partner(&self) -> Self {
        let flip = |v: &[f64; 3]| [-v[0], -v[1], v[2]];
        let lambda: Vec<[f64; 3]> = self.lambda.iter().map(flip).collect();
        Self {
            frames: lambda.iter().map(|l| Frame::along(*l)).collect(),
            magnetization: self.magnetization.iter().map(flip).collect(),
            lambda,
            tilt: self.tilt.map(|t| -t),
            ..self.clone()
        }
    }
}

/// Direct evaluation of `<H>_0` for a product state with the given spin
/// expectation vectors.
pub fn product_state_energy(model: &SpinModel, magnetization: &[[f64; 3]]) -> f64 {
    let mut e: f64 = model
        .fields()
        .iter()
        .zip(magnetization)
        .map(|(b, m)| dot(b, m))
        .sum();
    for (i, j, block) in model.pairs() {
        let mut pair = 0.0;
        for mu in 0..3 {
            for nu in 0..3 {
                pair += block[mu][nu] * magnetization[i][mu] * magnetization[j][nu];
            }
        }
        // both orderings of the pair
        e -= pair;
    }
    e
}

/// `<H>_0 = 1/2 sum_i (lambda_i + B_i) . <s_i>_0`.
pub fn mf_energy(model: &SpinModel, solution: &MeanFieldSolution) -> f64 {
    0.5 * model
        .fields()
        .iter()
        .zip(&solution.lambda)
        .zip(&solution.magnetization)
        .map(|((b, l), m)| dot(&[l[0] + b[0], l[1] + b[1], l[2] + b[2]], m))
        .sum::<f64>()
}

fn local_fields(model: &SpinModel, magnetization: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut lambda: Vec<[f64; 3]> = model.fields().to_vec();
    for (i, j, block) in model.pairs() {
        for mu in 0..3 {
            for nu in 0..3 {
                lambda[i][mu] -= block[mu][nu] * magnetization[j][nu];
                lambda[j][nu] -= block[mu][nu] * magnetization[i][mu];
            }
        }
    }
    lambda
}

fn magnetization_from(model: &SpinModel, lambda: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let scale = lambda.iter().map(norm).fold(1.0, f64::max);
    lambda
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let len = norm(l);
            if !(len > 1e-13 * scale) {
                return Err(Error::VanishingField { site: i });
            }
            let s = model.spin(i);
            Ok([-s * l[0] / len, -s * l[1] / len, -s * l[2] / len])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Linear mixing weight `m` in `lambda <- (1 - m) lambda_old + m lambda_new`.
    pub mixing: f64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 10_000,
            mixing: 0.5,
        }
    }
}

fn classify(model: &SpinModel, lambda: &[[f64; 3]]) -> Phase {
    let aligned = model.fields().iter().zip(lambda).all(|(b, l)| {
        let (nb, nl) = (norm(b), norm(l));
        nb > 0.0 && norm(&cross(b, l)) <= 1e-8 * nb * nl
    });
    if aligned {
        Phase::Normal
    } else {
        Phase::Broken
    }
}

fn assemble(
    model: &SpinModel,
    lambda: Vec<[f64; 3]>,
    iterations: usize,
    residual: f64,
) -> Result<MeanFieldSolution> {
    let magnetization = magnetization_from(model, &lambda)?;
    let frames = lambda.iter().map(|l| Frame::along(*l)).collect();
    let phase = classify(model, &lambda);
    let mut sol = MeanFieldSolution {
        lambda,
        magnetization,
        frames,
        energy: 0.0,
        phase,
        tilt: None,
        critical_field: None,
        factorizing_field: None,
        anisotropy: None,
        iterations,
        residual,
    };
    sol.energy = mf_energy(model, &sol);
    Ok(sol)
}

/// Fixed-point iteration of the mean-field equations with linear mixing,
/// starting from spins pointing against `initial_directions`.
pub fn solve_general_iterative(
    model: &SpinModel,
    initial_directions: &[[f64; 3]],
    options: IterationOptions,
) -> Result<MeanFieldSolution> {
    let n = model.n();
    if initial_directions.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} initial directions for {} sites",
            initial_directions.len(),
            n
        )));
    }
    if !(options.mixing > 0.0 && options.mixing <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mixing {} outside (0, 1]",
            options.mixing
        )));
    }
    for (i, d) in initial_directions.iter().enumerate() {
        if (norm(d) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "initial direction {i} is not a unit vector"
            )));
        }
    }
    let start: Vec<[f64; 3]> = initial_directions
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let s = model.spin(i);
            [-s * d[0], -s * d[1], -s * d[2]]
        })
        .collect();
    let mut lambda = local_fields(model, &start);
    let mut residual = f64::INFINITY;
    for iteration in 1..=options.max_iterations {
        let mag = magnetization_from(model, &lambda)?;
        let next = local_fields(model, &mag);
        residual = lambda
            .iter()
            .zip(&next)
            .map(|(a, b)| norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
            .fold(0.0, f64::max);
        if residual < options.tolerance {
            return assemble(model, next, iteration, residual);
        }
        let m = options.mixing;
        for (l, nl) in lambda.iter_mut().zip(&next) {
            for mu in 0..3 {
                l[mu] = (1.0 - m) * l[mu] + m * nl[mu];
            }
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        residual,
    })
}

/// Uniform solution of the transverse-field XYZ array.
///
/// `B_c = J_x^0 - J_z^0`. For `|B| >= B_c` the spins align against the field
/// with `lambda = |B| + J_z^0`; below it they tilt by `cos(theta) = B / B_c`
/// with `lambda = J_x^0`.
pub fn solve_uniform(model: &XyzModel) -> Result<MeanFieldSolution> {
    if !model.is_ferromagnetic_type() {
        return Err(Error::InvalidModel(
            "uniform solver needs J_x(l) >= 0 and |J_y(l)| <= J_x(l)".into(),
        ));
    }
    let n = model.n();
    let s = model.s();
    let b = model.field();
    let jx0 = model.total_strength(Axis::X);
    let jz0 = model.total_strength(Axis::Z);
    let bc = jx0 - jz0;

    let (phase, magnitude, cos_t, sin_t, theta) = if b.abs() >= bc {
        let lambda = b.abs() + jz0;
        if !(lambda > 0.0) {
            return Err(Error::VanishingField { site: 0 });
        }
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        (
            Phase::Normal,
            lambda,
            sign,
            0.0,
            if b < 0.0 { std::f64::consts::PI } else { 0.0 },
        )
    } else {
        if !(bc > 0.0) {
            return Err(Error::Degenerate(format!(
                "critical field {bc} is not positive"
            )));
        }
        let c = b / bc;
        let theta = c.acos();
        (Phase::Broken, jx0, c, theta.sin(), theta)
    };

    // energy per site in units of s
    let e_site = match phase {
        Phase::Normal => -b.abs() - 0.5 * jz0,
        Phase::Broken => -b * cos_t - 0.5 * (jx0 * sin_t * sin_t + jz0 * cos_t * cos_t),
    };
    if phase == Phase::Broken {
        let normal = -b.abs() - 0.5 * jz0;
        debug_assert!(e_site <= normal + 1e-12 * normal.abs().max(1.0));
    }

    let dir = [sin_t, 0.0, cos_t];
    let lambda = vec![[magnitude * dir[0], 0.0, magnitude * dir[2]]; n];
    let magnetization = vec![[-s * dir[0], 0.0, -s * dir[2]]; n];
    let frame = Frame::along(dir);
    let (factorizing_field, anisotropy) = match common_anisotropy(model) {
        Some(chi) => (factorizing_field(model), Some(chi)),
        None => (None, None),
    };
    Ok(MeanFieldSolution {
        lambda,
        magnetization,
        frames: vec![frame; n],
        energy: n as f64 * s * e_site,
        phase,
        tilt: Some(theta),
        critical_field: Some(bc),
        factorizing_field,
        anisotropy,
        iterations: 0,
        residual: 0.0,
    })
}

/// `chi = (J_y(l) - J_z(l)) / (J_x(l) - J_z(l))` when it does not depend on `l`.
pub fn common_anisotropy(model: &XyzModel) -> Option<f64> {
    let (jx, jy, jz) = (
        model.profile(Axis::X),
        model.profile(Axis::Y),
        model.profile(Axis::Z),
    );
    let mut chi: Option<f64> = None;
    for l in 1..model.n() {
        let den = jx[l] - jz[l];
        let num = jy[l] - jz[l];
        let scale = jx[l].abs().max(jy[l].abs()).max(jz[l].abs());
        if den.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            if num.abs() > 1e-14 * scale {
                return None;
            }
            continue;
        }
        let r = num / den;
        match chi {
            None => chi = Some(r),
            Some(c) if (c - r).abs() > 1e-10 * c.abs().max(1.0) => return None,
            _ => {}
        }
    }
    chi
}

/// `B_s = B_c sqrt(chi)` for a common anisotropy `chi` in `[0, 1]`.
pub fn factorizing_field(model: &XyzModel) -> Option<f64> {
    let chi = common_anisotropy(model)?;
    let bc = model.critical_field();
    if (0.0..=1.0).contains(&chi) && bc > 0.0 {
        Some(bc * chi.sqrt())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn pair(b: f64) -> XyzModel {
        XyzModel::pair(0.5, [1.0, 0.5, 0.0], b).unwrap()
    }

    #[test]
    fn uniform_normal_pair() {
        let sol = solve_uniform(&pair(2.0)).unwrap();
        assert_eq!(sol.phase, Phase::Normal);
        assert_eq!(sol.lambda_magnitude(0), 2.0);
        assert_eq!(sol.tilt, Some(0.0));
        assert!((sol.energy + 2.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_broken_pair() {
        let sol = solve_uniform(&pair(0.5)).unwrap();
        assert_eq!(sol.phase, Phase::Broken);
        assert!((sol.lambda_magnitude(0) - 1.0).abs() < 1e-15);
        assert!((sol.tilt.unwrap() - FRAC_PI_3).abs() < 1e-14);
        // B sum <s_z> - (1/s) J_x <s_x>^2 = 0.5 * 2 * (-1/4) - 2 * (3/16)
        assert!((sol.energy + 0.625).abs() < 1e-14);
        let direct = product_state_energy(&pair(0.5).to_spin_model(), &sol.magnetization);
        assert!((direct - sol.energy).abs() < 1e-14);
    }

    #[test]
    fn branches_meet_at_critical_field() {
        let at = solve_uniform(&pair(1.0)).unwrap();
        assert_eq!(at.tilt, Some(0.0));
        assert_eq!(at.phase, Phase::Normal);
        let below = solve_uniform(&pair(1.0 - 1e-12)).unwrap();
        assert!((below.lambda_magnitude(0) - at.lambda_magnitude(0)).abs() < 1e-9);
        assert!((below.energy - at.energy).abs() < 1e-9);
    }

    #[test]
    fn zero_field_broken_is_perpendicular() {
        let sol = solve_uniform(&pair(0.0)).unwrap();
        assert_eq!(sol.tilt, Some(std::f64::consts::FRAC_PI_2));
    }

    #[test]
    fn factorizing_fields() {
        let bs = factorizing_field(&pair(1.0)).unwrap();
        assert!((bs - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let isotropic_yz = XyzModel::pair(0.5, [1.0, 0.2, 0.2], 1.0).unwrap();
        assert_eq!(factorizing_field(&isotropic_yz), Some(0.0));
        let varying = XyzModel::new(
            4,
            0.5,
            vec![0.0, 1.0, 0.4, 1.0],
            vec![0.0, 0.5, 0.1, 0.5],
            vec![0.0; 4],
            1.0,
        )
        .unwrap();
        assert_eq!(factorizing_field(&varying), None);
    }

    #[test]
    fn iterative_matches_uniform_normal() {
        let m = pair(2.0);
        let sm = m.to_spin_model();
        let sol = solve_general_iterative(&sm, &[[0.0, 0.0, 1.0]; 2], IterationOptions::default())
            .unwrap();
        let uni = solve_uniform(&m).unwrap();
        for i in 0..2 {
            for mu in 0..3 {
                assert!((sol.lambda[i][mu] - uni.lambda[i][mu]).abs() < 1e-10);
            }
        }
        assert!((sol.energy - uni.energy).abs() < 1e-10);
        assert_eq!(sol.phase, Phase::Normal);
    }

    #[test]
    fn decoupled_fixed_point_after_one_iteration() {
        let sm = XyzModel::new(3, 1.0, vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], 0.7)
            .unwrap()
            .to_spin_model();
        let sol = solve_general_iterative(&sm, &[[0.0, 0.0, 1.0]; 3], IterationOptions::default())
            .unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.lambda.iter().all(|l| *l == [0.0, 0.0, 0.7]));
    }

    #[test]
    fn broken_guesses_give_degenerate_partners() {
        let m = pair(0.5);
        let sm = m.to_spin_model();
        let t = 1.0f64;
        let plus = solve_general_iterative(
            &sm,
            &[[t.sin(), 0.0, t.cos()]; 2],
            IterationOptions::default(),
        )
        .unwrap();
        let minus = solve_general_iterative(
            &sm,
            &[[-t.sin(), 0.0, t.cos()]; 2],
            IterationOptions::default(),
        )
        .unwrap();
        assert_eq!(plus.phase, Phase::Broken);
        assert!((plus.energy - minus.energy).abs() < 1e-12);
        assert!((plus.lambda[0][0] + minus.lambda[0][0]).abs() < 1e-10);
        let uni = solve_uniform(&m).unwrap();
        assert!((plus.lambda[0][0] - uni.lambda[0][0]).abs() < 1e-10);
        let partner = uni.parity_partner();
        assert!((partner.lambda[0][0] - minus.lambda[0][0]).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_reported() {
        let sm = pair(0.5).to_spin_model();
        let opts = IterationOptions {
            max_iterations: 2,
            ..Default::default()
        };
        let err = solve_general_iterative(&sm, &[[0.6, 0.0, 0.8]; 2], opts).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 2, .. }));
    }

    #[test]
    fn vanishing_field_reported() {
        let sm = XyzModel::new(2, 0.5, vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], 0.0)
            .unwrap()
            .to_spin_model();
        let err = solve_general_iterative(&sm, &[[0.0, 0.0, 1.0]; 2], IterationOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::VanishingField { .. }));
    }

    #[test]
    fn free_spins_at_zero_field_have_zero_energy() {
        let sm = XyzModel::new(2, 0.5, vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], 0.0)
            .unwrap()
            .to_spin_model();
        let sol = MeanFieldSolution {
            lambda: vec![[0.0; 3]; 2],
            magnetization: vec![[0.0, 0.0, -0.5]; 2],
            frames: vec![Frame::IDENTITY; 2],
            energy: 0.0,
            phase: Phase::Normal,
            tilt: None,
            critical_field: None,
            factorizing_field: None,
            anisotropy: None,
            iterations: 0,
            residual: 0.0,
        };
        assert_eq!(mf_energy(&sm, &sol), 0.0);
    }

    #[test]
    fn frame_is_rotation_about_y_for_xz_directions() {
        let t = 0.4f64;
        let f = Frame::along([t.sin(), 0.0, t.cos()]);
        let x = f.axes[0];
        assert!((x[0] - t.cos()).abs() < 1e-15 && (x[2] + t.sin()).abs() < 1e-15);
        assert!((f.axes[1][1] - 1.0).abs() < 1e-15);
    }
}
