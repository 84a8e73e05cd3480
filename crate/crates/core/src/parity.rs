//! Parity restoration for broken-phase results and the second-order RPA
//! spin density of small subsystems.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{subsystem_contraction, SubsystemContraction};
use crate::linalg::{self, CMatrix, ZERO};
use crate::meanfield::{Frame, Phase};
use crate::model::XyzModel;
use crate::rpa::ContractionData;

/// Default overlap below which the two mean-field branches count as orthogonal.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1e-3;

/// Largest single-site occupation for which the truncated density is trusted.
pub const OCCUPATION_WARNING: f64 = 0.1;

/// Largest product-basis dimension built for a spin density.
pub const PRODUCT_DIMENSION_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityContext {
    pub phase: Phase,
    /// `|B| / B_c`, in `[0, 1]` for the broken phase.
    pub ratio: f64,
    pub spin: f64,
    pub overlap_threshold: f64,
}

impl ParityContext {
    pub fn new(phase: Phase, ratio: f64, spin: f64) -> Result<Self> {
        if phase == Phase::Broken && !(0.0..=1.0).contains(&ratio) {
            return Err(Error::InvalidArgument(format!(
                "field ratio {ratio} outside [0, 1] in the broken phase"
            )));
        }
        if !(spin > 0.0) {
            return Err(Error::InvalidSpin(spin));
        }
        Ok(Self {
            phase,
            ratio,
            spin,
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
        })
    }

    pub fn normal(spin: f64) -> Self {
        Self {
            phase: Phase::Normal,
            ratio: 1.0,
            spin,
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
        }
    }

    pub fn uniform(model: &XyzModel) -> Result<Self> {
        let bc = model.critical_field();
        let b = model.field().abs();
        if b >= bc {
            Ok(Self::normal(model.s()))
        } else {
            Self::new(Phase::Broken, b / bc, model.s())
        }
    }

    pub fn with_threshold(self, overlap_threshold: f64) -> Self {
        Self {
            overlap_threshold,
            ..self
        }
    }

    /// `(|B| / B_c)^{2 s n_A}`; one in the normal phase.
    pub fn overlap(&self, sites: usize) -> f64 {
        match self.phase {
            Phase::Normal => 1.0,
            Phase::Broken => self.ratio.powf(2.0 * self.spin * sites as f64),
        }
    }

    /// `q_+ = (1 + overlap) / 2`.
    pub fn mixture_weight(&self, sites: usize) -> f64 {
        0.5 * (1.0 + self.overlap(sites))
    }
}

fn binary_entropy(q: f64) -> f64 {
    linalg::shannon_bits([q, 1.0 - q])
}

/// Adds the entropy of the two-branch mixture in the broken phase: one bit
/// when the branches are orthogonal on `A`, `h(q_+)` otherwise.
pub fn corrected_entropy(entropy: f64, ctx: &ParityContext, sites: usize) -> f64 {
    match ctx.phase {
        Phase::Normal => entropy,
        Phase::Broken => {
            let overlap = ctx.overlap(sites);
            if overlap < ctx.overlap_threshold {
                entropy + 1.0
            } else {
                entropy + binary_entropy(ctx.mixture_weight(sites))
            }
        }
    }
}

/// `2 N + 1/2` in the broken phase for a global `(A, complement)` negativity.
pub fn corrected_global_negativity(negativity: f64, ctx: &ParityContext) -> f64 {
    match ctx.phase {
        Phase::Normal => negativity,
        Phase::Broken => 2.0 * negativity + 0.5,
    }
}

/// Label of a truncated basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Excitation {
    Pair(usize, usize),
    Single(usize),
    Vacuum,
}

#[derive(Debug, Clone)]
pub struct ProductDensity {
    /// Local dimensions `2 s_i + 1`, first site most significant.
    pub dims: Vec<usize>,
    pub matrix: CMatrix,
    /// Basis is the lab `s_z` basis when true, the local one otherwise.
    pub lab_frame: bool,
    pub parity_projected: bool,
}

/// Reduced spin density of `A` correct to second order in the boson
/// amplitudes, on the basis of pair excitations, single excitations and the
/// vacuum (in this order).
#[derive(Debug, Clone)]
pub struct SpinDensity {
    pub sites: Vec<usize>,
    pub basis: Vec<Excitation>,
    pub matrix: CMatrix,
    pub form: DensityForm,
    /// `F_A - G_A G_A^dagger` with the diagonal of `G_A` dropped, whatever the form.
    pub central_block: CMatrix,
    /// `G_A` with its diagonal dropped.
    pub g: CMatrix,
    pub product: Option<ProductDensity>,
    pub max_occupation: f64,
    /// Set when `max F_ii` exceeds [`OCCUPATION_WARNING`].
    pub truncation_warning: bool,
}

fn pair_index(sites: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..sites {
        for j in i + 1..sites {
            out.push((i, j));
        }
    }
    out
}

/// Which central block the truncated density uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityForm {
    /// Local contractions only: `F_A - G_A G_A^dagger`, vacuum weight
    /// `1 - tr F_A + |G_A|^2`.
    #[default]
    Local,
    /// Exact partial trace of the normalized pair state
    /// `|0> + sum_{i<j} G_ij |1_i 1_j>`; positive by construction.
    Traced,
}

fn truncated_density(
    data: &ContractionData,
    sub: &SubsystemContraction,
    form: DensityForm,
) -> (Vec<Excitation>, CMatrix, CMatrix, CMatrix) {
    let l = sub.len();
    let mut g = sub.g.clone();
    for i in 0..l {
        g[(i, i)] = ZERO;
    }
    let local_central = &sub.f - &g * g.adjoint();
    let pairs = pair_index(l);
    let np = pairs.len();
    let dim = np + l + 1;
    let column: Vec<Complex64> = pairs.iter().map(|&(i, j)| g[(i, j)]).collect();
    let norm2: f64 = column.iter().map(|z| z.norm_sqr()).sum();
    let (scale, central, vacuum) = match form {
        DensityForm::Local => {
            let trace_f: f64 = (0..l).map(|i| sub.f[(i, i)].re).sum();
            (1.0, local_central.clone(), 1.0 - trace_f + norm2)
        }
        DensityForm::Traced => {
            let n = data.n();
            let outside: Vec<usize> = (0..n).filter(|s| !sub.sites.contains(s)).collect();
            let cross =
                CMatrix::from_fn(l, outside.len(), |a, k| data.g[(sub.sites[a], outside[k])]);
            let mut rest = 0.0;
            for (x, &k) in outside.iter().enumerate() {
                for &m in &outside[x + 1..] {
                    rest += data.g[(k, m)].norm_sqr();
                }
            }
            let total = 1.0 + norm2 + rest + cross.iter().map(|z| z.norm_sqr()).sum::<f64>();
            (1.0 / total, &cross * cross.adjoint(), 1.0 + rest)
        }
    };
    let mut rho = CMatrix::zeros(dim, dim);
    let vac = dim - 1;
    for a in 0..np {
        for b in 0..np {
            rho[(a, b)] = column[a] * column[b].conj() * scale;
        }
        rho[(a, vac)] = column[a] * scale;
        rho[(vac, a)] = column[a].conj() * scale;
    }
    for i in 0..l {
        for j in 0..l {
            rho[(np + i, np + j)] = central[(i, j)] * scale;
        }
    }
    rho[(vac, vac)] = Complex64::new(vacuum * scale, 0.0);
    let mut basis: Vec<Excitation> = pairs
        .iter()
        .map(|&(i, j)| Excitation::Pair(sub.sites[i], sub.sites[j]))
        .collect();
    basis.extend(sub.sites.iter().map(|&s| Excitation::Single(s)));
    basis.push(Excitation::Vacuum);
    (basis, rho, local_central, g)
}

/// Matrix of `s_y` in the `s_z` basis ordered by `m = -s, ..., s`.
fn spin_matrices(twice: usize) -> (DMatrix<f64>, CMatrix) {
    let dim = twice + 1;
    let s = twice as f64 / 2.0;
    let mut sz = DMatrix::zeros(dim, dim);
    let mut sy = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let m = k as f64 - s;
        sz[(k, k)] = m;
        if k + 1 < dim {
            // <m+1| s_+ |m>
            let c = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            sy[(k + 1, k)] = Complex64::new(0.0, -0.5 * c);
            sy[(k, k + 1)] = Complex64::new(0.0, 0.5 * c);
        }
    }
    (sz, sy)
}

/// Rotation operator carrying `s_z` states onto states quantized along the
/// frame's z axis, `exp(-i phi s_z) exp(-i theta s_y) exp(i phi s_z)`.
pub fn frame_rotation(twice: usize, frame: &Frame) -> CMatrix {
    let z = frame.axes[2];
    let theta = z[2].clamp(-1.0, 1.0).acos();
    let phi = if z[0].abs() + z[1].abs() < 1e-15 {
        0.0
    } else {
        z[1].atan2(z[0])
    };
    let (sz, sy) = spin_matrices(twice);
    let eig = linalg::hermitian_eigen(&sy);
    let dim = twice + 1;
    let mut scaled = eig.vectors.clone();
    for (c, &mu) in eig.values.iter().enumerate() {
        let w = Complex64::from_polar(1.0, -theta * mu);
        for r in 0..dim {
            scaled[(r, c)] *= w;
        }
    }
    let ry = scaled * eig.vectors.adjoint();
    let phase = |sign: f64| {
        CMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                Complex64::from_polar(1.0, sign * phi * sz[(r, r)])
            } else {
                ZERO
            }
        })
    };
    phase(-1.0) * ry * phase(1.0)
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

fn product_index(levels: &[usize], dims: &[usize]) -> usize {
    levels.iter().zip(dims).fold(0, |acc, (&k, &d)| acc * d + k)
}

fn level_parity(mut index: usize, dims: &[usize]) -> usize {
    let mut total = 0;
    for &d in dims.iter().rev() {
        total += index % d;
        index /= d;
    }
    total % 2
}

fn embed(basis: &[Excitation], rho: &CMatrix, sites: &[usize], dims: &[usize]) -> CMatrix {
    let dim: usize = dims.iter().product();
    let position = |site: usize| sites.iter().position(|&s| s == site).unwrap_or(0);
    let index_of = |e: &Excitation| {
        let mut levels = vec![0usize; sites.len()];
        match *e {
            Excitation::Pair(i, j) => {
                levels[position(i)] = 1;
                levels[position(j)] = 1;
            }
            Excitation::Single(i) => levels[position(i)] = 1,
            Excitation::Vacuum => {}
        }
        product_index(&levels, dims)
    };
    let idx: Vec<usize> = basis.iter().map(index_of).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            out[(ia, ib)] = rho[(a, b)];
        }
    }
    out
}

/// Builds the density of `A`. In the broken phase the product-basis density
/// is rotated to the lab frame and its parity-breaking elements removed.
pub fn spin_density(
    data: &ContractionData,
    sites: &[usize],
    spins_twice: &[usize],
    frames: &[Frame],
    ctx: &ParityContext,
    form: DensityForm,
) -> Result<SpinDensity> {
    let sub = subsystem_contraction(data, sites)?;
    if spins_twice.len() != data.n() || frames.len() != data.n() {
        return Err(Error::InvalidArgument(
            "spins and frames must cover every site".into(),
        ));
    }
    let (basis, matrix, central_block, g) = truncated_density(data, &sub, form);
    let max_occupation = (0..sub.len()).map(|i| sub.f[(i, i)].re).fold(0.0, f64::max);
    let dims: Vec<usize> = sites.iter().map(|&s| spins_twice[s] + 1).collect();
    let dim = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let product = match dim {
        Some(dim) if dim <= PRODUCT_DIMENSION_CAP => {
            let local = embed(&basis, &matrix, sites, &dims);
            Some(match ctx.phase {
                Phase::Normal => ProductDensity {
                    dims: dims.clone(),
                    matrix: local,
                    lab_frame: false,
                    parity_projected: false,
                },
                Phase::Broken => {
                    let rotation = sites
                        .iter()
                        .map(|&s| frame_rotation(spins_twice[s], &frames[s]))
                        .reduce(|acc, r| kron(&acc, &r))
                        .unwrap_or_else(|| CMatrix::identity(1, 1));
                    let mut lab = &rotation * local * rotation.adjoint();
                    for r in 0..dim {
                        for c in 0..dim {
                            if level_parity(r, &dims) != level_parity(c, &dims) {
                                lab[(r, c)] = ZERO;
                            }
                        }
                    }
                    ProductDensity {
                        dims: dims.clone(),
                        matrix: lab,
                        lab_frame: true,
                        parity_projected: true,
                    }
                }
            })
        }
        _ => None,
    };
    Ok(SpinDensity {
        sites: sites.to_vec(),
        basis,
        form,
        matrix,
        central_block,
        g,
        product,
        max_occupation,
        truncation_warning: max_occupation > OCCUPATION_WARNING,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinEntanglement {
    /// From the eigenvalues of the (parity-projected, when present) density.
    pub entropy: f64,
    /// `tr rho1 (log2 e - log2 rho1)` with `rho1` the central block.
    pub entropy_leading: f64,
    /// Sum of the singular values of `G_BC`.
    pub negativity_first_order: f64,
    /// From the partial transpose of the product-basis density, when built.
    pub negativity: Option<f64>,
}

fn partial_transpose_product(rho: &CMatrix, dims: &[usize], transposed: &[bool]) -> CMatrix {
    let dim = rho.nrows();
    let split = |mut index: usize| {
        let mut levels = vec![0usize; dims.len()];
        for (p, &d) in dims.iter().enumerate().rev() {
            levels[p] = index % d;
            index /= d;
        }
        levels
    };
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let lr = split(r);
        for c in 0..dim {
            let lc = split(c);
            let (mut nr, mut nc) = (lr.clone(), lc.clone());
            for p in 0..dims.len() {
                if transposed[p] {
                    nr[p] = lc[p];
                    nc[p] = lr[p];
                }
            }
            out[(product_index(&nr, dims), product_index(&nc, dims))] = rho[(r, c)];
        }
    }
    out
}

fn entropy_of(matrix: &CMatrix) -> f64 {
    linalg::shannon_bits(linalg::hermitian_eigenvalues(matrix))
}

/// Entropy of `A` and negativity between `B = A \ C` and `C`.
pub fn spin_entropy_and_negativity(
    density: &SpinDensity,
    transposed: &[usize],
) -> Result<SpinEntanglement> {
    if let Some(s) = transposed.iter().find(|s| !density.sites.contains(s)) {
        return Err(Error::InvalidBipartition(format!(
            "site {s} is not in the subsystem"
        )));
    }
    let in_c: Vec<bool> = density
        .sites
        .iter()
        .map(|s| transposed.contains(s))
        .collect();
    let entropy = match &density.product {
        Some(p) => entropy_of(&p.matrix),
        None => entropy_of(&density.matrix),
    };
    let entropy_leading: f64 = linalg::hermitian_eigenvalues(&density.central_block)
        .into_iter()
        .filter(|&p| p > 1e-300)
        .map(|p| p * (std::f64::consts::LOG2_E - p.log2()))
        .sum();
    let b_pos: Vec<usize> = (0..in_c.len()).filter(|&p| !in_c[p]).collect();
    let c_pos: Vec<usize> = (0..in_c.len()).filter(|&p| in_c[p]).collect();
    let negativity_first_order = if b_pos.is_empty() || c_pos.is_empty() {
        0.0
    } else {
        let gbc = CMatrix::from_fn(b_pos.len(), c_pos.len(), |r, c| {
            density.g[(b_pos[r], c_pos[c])]
        });
        gbc.singular_values().iter().sum()
    };
    let negativity = density.product.as_ref().map(|p| {
        let pt = partial_transpose_product(&p.matrix, &p.dims, &in_c);
        let trace_norm: f64 = linalg::hermitian_eigenvalues(&pt)
            .iter()
            .map(|x| x.abs())
            .sum();
        0.5 * (trace_norm - 1.0)
    });
    Ok(SpinEntanglement {
        entropy,
        entropy_leading,
        negativity_first_order,
        negativity,
    })
}
