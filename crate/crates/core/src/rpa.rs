//! Bosonized fluctuations around the mean field and their Bogoliubov
//! diagonalization.
//!
//! With `s_+ -> sqrt(2s) b^dagger`, `s_z -> -s + b^dagger b` in each local
//! frame, the quadratic Hamiltonian is
//! `1/2 (b^dagger, b) H (b, b^dagger)^T` with
//! `H = [[Lambda - D+, -D-], [-conj(D-), Lambda - conj(D+)]]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::meanfield::{Frame, MeanFieldSolution, Phase};
use crate::model::{fourier_couplings, phase_angle, Axis, SpinModel, XyzModel};

/// Frequencies below this fraction of the largest `lambda` count as unstable.
pub const MARGINAL_STABILITY: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RpaSystem {
    pub lambda: Vec<f64>,
    /// Hermitian, zero diagonal.
    pub delta_plus: CMatrix,
    /// Symmetric, zero diagonal.
    pub delta_minus: CMatrix,
    /// Mean-field energy the RPA correction is added to.
    pub mf_energy: f64,
}

fn rotate_block(block: &[[f64; 3]; 3], fi: &Frame, fj: &Frame) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = 0.0;
            for mu in 0..3 {
                for nu in 0..3 {
                    acc += fi.axes[a][mu] * block[mu][nu] * fj.axes[b][nu];
                }
            }
            out[a][b] = acc;
        }
    }
    out
}

fn check_lambda(mf: &MeanFieldSolution) -> Result<Vec<f64>> {
    let lambda = mf.lambda_magnitudes();
    for (i, &l) in lambda.iter().enumerate() {
        if !(l > 0.0) {
            return Err(Error::VanishingField { site: i });
        }
    }
    Ok(lambda)
}

impl RpaSystem {
    /// General path: couplings are rotated into the local mean-field frames.
    pub fn from_model(model: &SpinModel, mf: &MeanFieldSolution) -> Result<Self> {
        let n = model.n();
        if mf.n() != n || mf.frames.len() != n {
            return Err(Error::InvalidArgument(format!(
                "mean field has {} sites and {} frames for a {n}-site model",
                mf.n(),
                mf.frames.len()
            )));
        }
        let lambda = check_lambda(mf)?;
        let mut delta_plus = CMatrix::zeros(n, n);
        let mut delta_minus = CMatrix::zeros(n, n);
        for (i, j, block) in model.pairs() {
            let r = rotate_block(block, &mf.frames[i], &mf.frames[j]);
            let w = 0.5 * (model.spin(i) * model.spin(j)).sqrt();
            let (xx, yy, xy, yx) = (r[0][0], r[1][1], r[0][1], r[1][0]);
            let dp = Complex64::new(w * (xx + yy), -w * (yx - xy));
            let dm = Complex64::new(w * (xx - yy), -w * (yx + xy));
            delta_plus[(i, j)] = dp;
            delta_plus[(j, i)] = dp.conj();
            delta_minus[(i, j)] = dm;
            delta_minus[(j, i)] = dm;
        }
        Ok(Self {
            lambda,
            delta_plus,
            delta_minus,
            mf_energy: mf.energy,
        })
    }

    /// Uniform transverse-field path in rescaled units, with
    /// `J_x -> J_x cos^2(theta) + J_z sin^2(theta)` in the broken phase.
    pub fn from_uniform(model: &XyzModel, mf: &MeanFieldSolution) -> Result<Self> {
        let n = model.n();
        let lambda = check_lambda(mf)?;
        if lambda.len() != n {
            return Err(Error::InvalidArgument("mean field size mismatch".into()));
        }
        let jx = tilted_x_profile(model, mf);
        let jy = model.profile(Axis::Y);
        let mut delta_plus = CMatrix::zeros(n, n);
        let mut delta_minus = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let l = (i + n - j) % n;
                    delta_plus[(i, j)] = Complex64::new(0.5 * (jx[l] + jy[l]), 0.0);
                    delta_minus[(i, j)] = Complex64::new(0.5 * (jx[l] - jy[l]), 0.0);
                }
            }
        }
        Ok(Self {
            lambda,
            delta_plus,
            delta_minus,
            mf_energy: mf.energy,
        })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn hamiltonian(&self) -> CMatrix {
        let n = self.n();
        let mut h = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { self.lambda[i] } else { 0.0 };
                let dp = self.delta_plus[(i, j)];
                let dm = self.delta_minus[(i, j)];
                h[(i, j)] = Complex64::new(diag, 0.0) - dp;
                h[(i, n + j)] = -dm;
                h[(n + i, j)] = -dm.conj();
                h[(n + i, n + j)] = Complex64::new(diag, 0.0) - dp.conj();
            }
        }
        h
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }
}

fn tilted_x_profile(model: &XyzModel, mf: &MeanFieldSolution) -> Vec<f64> {
    let jx = model.profile(Axis::X);
    match (mf.phase, mf.tilt) {
        (Phase::Broken, Some(theta)) => {
            let (s, c) = theta.sin_cos();
            let jz = model.profile(Axis::Z);
            jx.iter()
                .zip(jz)
                .map(|(x, z)| x * c * c + z * s * s)
                .collect()
        }
        _ => jx.to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct RpaModes {
    /// Positive frequencies, ascending.
    pub omega: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
    /// `Z = V conj(U)^{-1}`.
    pub z: CMatrix,
    /// `E_0 + 1/2 sum (omega - lambda)`.
    pub energy: f64,
    /// `max |W M W^dagger - M|`.
    pub symplectic_residual: f64,
    /// `max |W^dagger H W - diag(Omega, Omega)|`.
    pub diagonal_residual: f64,
}

impl RpaModes {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn omega_min(&self) -> f64 {
        self.omega.first().copied().unwrap_or(f64::INFINITY)
    }

    /// `W = [[U, V], [conj(V), conj(U)]]`.
    pub fn bogoliubov_matrix(&self) -> CMatrix {
        let n = self.n();
        let mut w = CMatrix::zeros(2 * n, 2 * n);
        w.view_mut((0, 0), (n, n)).copy_from(&self.u);
        w.view_mut((0, n), (n, n)).copy_from(&self.v);
        w.view_mut((n, 0), (n, n))
            .copy_from(&self.v.map(|z| z.conj()));
        w.view_mut((n, n), (n, n))
            .copy_from(&self.u.map(|z| z.conj()));
        w
    }
}

fn lowest_index(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Positive symplectic eigenvalues of `H` and the Bogoliubov blocks.
/// Fails with [`Error::Unstable`] when `H` is not positive definite or the
/// lowest frequency is marginal.
pub fn symplectic_diagonalize(system: &RpaSystem) -> Result<RpaModes> {
    let n = system.n();
    let h = system.hamiltonian();
    let dec = match linalg::symplectic_decompose(&h) {
        Ok(dec) => dec,
        Err(Error::NotPositiveDefinite(lowest)) => {
            let eig = linalg::hermitian_eigen(&h);
            let col = eig.vectors.column(0);
            let weights: Vec<f64> = (0..n)
                .map(|i| -(col[i].norm_sqr() + col[n + i].norm_sqr()))
                .collect();
            return Err(Error::Unstable {
                mode: lowest_index(&weights),
                detail: format!("RPA matrix not positive definite (lowest eigenvalue {lowest:e})"),
            });
        }
        Err(e) => return Err(e),
    };
    let lambda_max = system.lambda_max();
    if dec.values[0] < MARGINAL_STABILITY * lambda_max {
        return Err(Error::Unstable {
            mode: 0,
            detail: format!("lowest frequency {:e} is marginal", dec.values[0]),
        });
    }
    if dec.pairing_residual > 1e-9 {
        return Err(Error::UnpairedSpectrum(dec.pairing_residual));
    }
    let u = dec.vectors.rows(0, n).into_owned();
    let v = dec.vectors.rows(n, n).map(|z| z.conj());
    let u_bar = u.map(|z| z.conj());
    let u_bar_inv = u_bar
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("conj(U) is not invertible".into()))?;
    let z = &v * u_bar_inv;
    let energy = system.mf_energy
        + 0.5 * (dec.values.iter().sum::<f64>() - system.lambda.iter().sum::<f64>());
    let mut modes = RpaModes {
        omega: dec.values,
        u,
        v,
        z,
        energy,
        symplectic_residual: 0.0,
        diagonal_residual: 0.0,
    };
    let w = modes.bogoliubov_matrix();
    let metric = CMatrix::from_diagonal(&linalg::CVector::from_iterator(
        2 * n,
        linalg::metric_signs(n)
            .into_iter()
            .map(|x| Complex64::new(x, 0.0)),
    ));
    modes.symplectic_residual = linalg::max_abs_diff(&(&w * &metric * w.adjoint()), &metric);
    let omega_diag = CMatrix::from_diagonal(&linalg::CVector::from_iterator(
        2 * n,
        modes
            .omega
            .iter()
            .chain(modes.omega.iter())
            .map(|&x| Complex64::new(x, 0.0)),
    ));
    let scale = modes.omega.last().copied().unwrap_or(1.0).max(1.0);
    modes.diagonal_residual = linalg::max_abs_diff(&(w.adjoint() * &h * &w), &omega_diag) / scale;
    Ok(modes)
}

/// `Z = V conj(U)^{-1}` of already diagonalized modes.
pub fn vacuum_coefficients(modes: &RpaModes) -> &CMatrix {
    &modes.z
}

/// Translation-invariant modes of a uniform transverse-field model.
#[derive(Debug, Clone)]
pub struct MomentumModes {
    pub lambda: f64,
    pub delta_plus: Vec<f64>,
    pub delta_minus: Vec<f64>,
    pub omega: Vec<f64>,
    pub u: Vec<f64>,
    /// Carries the sign of `delta_minus`; zero where `delta_minus` vanishes.
    pub v: Vec<f64>,
    pub energy: f64,
}

impl MomentumModes {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn omega_min(&self) -> f64 {
        self.omega.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn profile(&self, per_k: impl Fn(usize) -> f64) -> Vec<f64> {
        let n = self.n();
        let table: Vec<f64> = (0..n).map(per_k).collect();
        (0..n)
            .map(|l| {
                table
                    .iter()
                    .enumerate()
                    .map(|(k, x)| phase_angle(k, l, n).cos() * x)
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    }

    /// `F(l) = 1/n sum_k cos(2 pi k l / n) v_k^2`.
    pub fn f_profile(&self) -> Vec<f64> {
        self.profile(|k| self.v[k] * self.v[k])
    }

    /// `G(l) = 1/n sum_k cos(2 pi k l / n) u_k v_k`.
    pub fn g_profile(&self) -> Vec<f64> {
        self.profile(|k| self.u[k] * self.v[k])
    }

    /// `Z(l) = 1/n sum_k cos(2 pi k l / n) v_k / u_k`.
    pub fn z_profile(&self) -> Vec<f64> {
        self.profile(|k| self.v[k] / self.u[k])
    }
}

pub fn momentum_modes(model: &XyzModel, mf: &MeanFieldSolution) -> Result<MomentumModes> {
    let n = model.n();
    let lambda = mf.lambda_magnitude(0);
    if !(lambda > 0.0) {
        return Err(Error::VanishingField { site: 0 });
    }
    if mf
        .lambda_magnitudes()
        .iter()
        .any(|l| (l - lambda).abs() > 1e-12 * lambda)
    {
        return Err(Error::InvalidArgument(
            "momentum path needs a uniform mean field".into(),
        ));
    }
    let tilted = model.with_profile(Axis::X, tilted_x_profile(model, mf))?;
    let fourier = fourier_couplings(&tilted)?;
    let mut out = MomentumModes {
        lambda,
        delta_plus: Vec::with_capacity(n),
        delta_minus: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        energy: 0.0,
    };
    for k in 0..n {
        let dp = fourier.delta_plus(k);
        let dm = fourier.delta_minus(k);
        let a = lambda - dp;
        let radicand = (a - dm) * (a + dm);
        if !(a > 0.0 && radicand > 0.0) {
            return Err(Error::Unstable {
                mode: k,
                detail: format!(
                    "|delta_-| = {:e} not below lambda - delta_+ = {a:e}",
                    dm.abs()
                ),
            });
        }
        let w = radicand.sqrt();
        if w < MARGINAL_STABILITY * lambda {
            return Err(Error::Unstable {
                mode: k,
                detail: format!("frequency {w:e} is marginal"),
            });
        }
        let v2 = dm * dm / (2.0 * w * (a + w));
        let v = if dm == 0.0 {
            0.0
        } else {
            dm.signum() * v2.sqrt()
        };
        out.delta_plus.push(dp);
        out.delta_minus.push(dm);
        out.omega.push(w);
        out.u.push((1.0 + v2).sqrt());
        out.v.push(v);
    }
    out.energy = mf.energy + 0.5 * (out.omega.iter().sum::<f64>() - n as f64 * lambda);
    Ok(out)
}

/// Vacuum contractions `F_ij = <b_j^dagger b_i>` and `G_ij = <b_j b_i>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionData {
    pub f: CMatrix,
    pub g: CMatrix,
}

impl ContractionData {
    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    /// `F = V V^dagger`, `G = V U^T`.
    pub fn from_modes(modes: &RpaModes) -> Self {
        Self {
            f: &modes.v * modes.v.adjoint(),
            g: &modes.v * modes.u.transpose(),
        }
    }

    pub fn from_momentum(modes: &MomentumModes) -> Self {
        let n = modes.n();
        let (fl, gl) = (modes.f_profile(), modes.g_profile());
        let at = |p: &[f64], i: usize, j: usize| Complex64::new(p[(i + n - j) % n], 0.0);
        Self {
            f: CMatrix::from_fn(n, n, |i, j| at(&fl, i, j)),
            g: CMatrix::from_fn(n, n, |i, j| at(&gl, i, j)),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            f: CMatrix::zeros(n, n),
            g: CMatrix::zeros(n, n),
        }
    }

    /// The full contraction matrix `[[F, G], [conj(G), 1 + conj(F)]]`.
    pub fn full_matrix(&self) -> CMatrix {
        let n = self.n();
        let mut d = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] = self.f[(i, j)];
                d[(i, n + j)] = self.g[(i, j)];
                d[(n + i, j)] = self.g[(i, j)].conj();
                d[(n + i, n + j)] = self.f[(i, j)].conj() + if i == j { 1.0 } else { 0.0 };
            }
        }
        d
    }

    pub fn is_real(&self) -> bool {
        linalg::max_abs_imag(&self.f) == 0.0 && linalg::max_abs_imag(&self.g) == 0.0
    }
}

/// RPA spin averages in the local mean-field frames.
#[derive(Debug, Clone)]
pub struct SpinCorrelations {
    pub spins: Vec<f64>,
    /// `<s_iz> = F_ii - s_i`.
    pub sz: Vec<f64>,
    /// `<s_i+ s_j-> = 2 sqrt(s_i s_j) F_ji`.
    pub plus_minus: CMatrix,
    /// `<s_i- s_j-> = 2 sqrt(s_i s_j) G_ji`.
    pub minus_minus: CMatrix,
    /// `<s_iz s_jz>` for `i != j`; the diagonal is left at zero.
    pub zz: DMatrix<f64>,
}

pub fn rpa_spin_observables(data: &ContractionData, spins: &[f64]) -> Result<SpinCorrelations> {
    let n = data.n();
    if spins.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} spins for {n} sites",
            spins.len()
        )));
    }
    let sz: Vec<f64> = (0..n).map(|i| data.f[(i, i)].re - spins[i]).collect();
    let scale = |i: usize, j: usize| 2.0 * (spins[i] * spins[j]).sqrt();
    let plus_minus = CMatrix::from_fn(n, n, |i, j| data.f[(j, i)] * scale(i, j));
    let minus_minus = CMatrix::from_fn(n, n, |i, j| data.g[(j, i)] * scale(i, j));
    let zz = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            sz[i] * sz[j] + data.f[(i, j)].norm_sqr() + data.g[(i, j)].norm_sqr()
        }
    });
    Ok(SpinCorrelations {
        spins: spins.to_vec(),
        sz,
        plus_minus,
        minus_minus,
        zz,
    })
}

impl SpinCorrelations {
    /// `<s_i>` in the lab frame; transverse local components vanish at this order.
    pub fn lab_magnetization(&self, frames: &[Frame]) -> Vec<[f64; 3]> {
        self.sz
            .iter()
            .zip(frames)
            .map(|(&z, frame)| frame.to_lab([0.0, 0.0, z]))
            .collect()
    }

    /// Local-frame tensor `<s_ia s_jb>` for `i != j`.
    pub fn local_tensor(&self, i: usize, j: usize) -> [[Complex64; 3]; 3] {
        let pm = self.plus_minus[(i, j)];
        let mp = self.plus_minus[(j, i)];
        let mm = self.minus_minus[(i, j)];
        let pp = self.minus_minus[(j, i)].conj();
        let q = Complex64::new(0.25, 0.0);
        let mi = Complex64::new(0.0, -0.25);
        let mut t = [[ZERO; 3]; 3];
        t[0][0] = q * (pp + pm + mp + mm);
        t[1][1] = -q * (pp - pm - mp + mm);
        t[0][1] = mi * (pp - pm + mp - mm);
        t[1][0] = mi * (pp + pm - mp - mm);
        t[2][2] = Complex64::new(self.zz[(i, j)], 0.0);
        t
    }

    /// `<s_i^mu s_j^nu>` in the lab frame for `i != j`.
    pub fn lab_tensor(&self, i: usize, j: usize, frames: &[Frame]) -> [[Complex64; 3]; 3] {
        let t = self.local_tensor(i, j);
        let mut out = [[ZERO; 3]; 3];
        for mu in 0..3 {
            for nu in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        out[mu][nu] += t[a][b] * (frames[i].axes[a][mu] * frames[j].axes[b][nu]);
                    }
                }
            }
        }
        out
    }
}
