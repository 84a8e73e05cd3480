//! Exact ground states for validation: a product-basis oracle for any small
//! `SpinModel`, and a Dicke-basis oracle for the spin-1/2 complete graph.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::SubsystemSpec;
use crate::linalg::{self, CMatrix, CVector, ZERO};
use crate::model::{Axis, SpinModel, XyzModel};

/// Default cap on the product-basis dimension.
pub const DIMENSION_CAP: usize = 4096;

/// Sectors up to this size are diagonalized densely, larger ones by Lanczos.
pub const DENSE_SECTOR_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    pub dimension_cap: usize,
    /// Sector ground energies closer than this count as degenerate.
    pub degeneracy_tolerance: f64,
    /// Required `|H psi - E psi|` for the iterative solver.
    pub residual_tolerance: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            dimension_cap: DIMENSION_CAP,
            degeneracy_tolerance: 1e-12,
            residual_tolerance: 1e-11,
        }
    }
}

/// Parity `exp(i pi sum_i (s_iz + s_i))` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    fn of(excitations: usize) -> Self {
        if excitations % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Product basis with site 0 as the most significant digit. Digit `k` at site
/// `i` is the level `s_iz = -s_i + k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductBasis {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl ProductBasis {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Self { dims, strides }
    }

    pub fn for_model(model: &SpinModel) -> Self {
        Self::new(model.spins().iter().map(|s| s.multiplicity()).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    pub fn excitations(&self, index: usize) -> usize {
        (0..self.dims.len()).map(|i| self.digit(index, i)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct DenseGroundState {
    pub energy: f64,
    /// Amplitudes over the full product basis.
    pub amplitudes: CVector,
    /// `None` when the Hamiltonian does not conserve parity.
    pub parity: Option<Parity>,
    /// `|H psi - E psi|`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ExactSpectrum {
    pub basis: ProductBasis,
    /// One ground state per parity sector, lowest energy first.
    pub states: Vec<DenseGroundState>,
    /// The two sector ground energies agree within the degeneracy tolerance.
    pub degenerate: bool,
}

impl ExactSpectrum {
    pub fn ground(&self) -> &DenseGroundState {
        &self.states[0]
    }

    pub fn sector(&self, parity: Parity) -> Option<&DenseGroundState> {
        self.states.iter().find(|s| s.parity == Some(parity))
    }
}

/// Hermitian matrix in compressed rows.
#[derive(Debug, Clone)]
struct SparseHermitian {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseHermitian {
    fn apply(&self, x: &CVector) -> CVector {
        let mut y = CVector::zeros(self.dim);
        for r in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
        y
    }

    fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_start[r]..self.row_start[r + 1] {
                m[(r, self.cols[k])] += self.values[k];
            }
        }
        m
    }
}

/// Local operator component: `s_+`, `s_-` or `s_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ladder {
    Raise,
    Lower,
    Diagonal,
}

const LADDERS: [Ladder; 3] = [Ladder::Raise, Ladder::Lower, Ladder::Diagonal];

/// `s_mu = sum_a c_{mu a} L_a` over `(s_+, s_-, s_z)`.
fn ladder_coefficients(axis: usize) -> [Complex64; 3] {
    let half = Complex64::new(0.5, 0.0);
    let i_half = Complex64::new(0.0, 0.5);
    match axis {
        0 => [half, half, ZERO],
        1 => [-i_half, i_half, ZERO],
        _ => [ZERO, ZERO, Complex64::new(1.0, 0.0)],
    }
}

/// Action of a ladder component on level `k` of a spin with `dim` levels.
fn act(op: Ladder, k: usize, dim: usize) -> Option<(usize, f64)> {
    let s = 0.5 * (dim - 1) as f64;
    let m = -s + k as f64;
    match op {
        Ladder::Diagonal => Some((k, m)),
        Ladder::Raise if k + 1 < dim => Some((k + 1, (s * (s + 1.0) - m * (m + 1.0)).sqrt())),
        Ladder::Lower if k > 0 => Some((k - 1, (s * (s + 1.0) - m * (m - 1.0)).sqrt())),
        _ => None,
    }
}

/// Every term commutes with the parity when fields lie along `z` and
/// couplings never mix `z` with `x` or `y`.
pub fn conserves_parity(model: &SpinModel) -> bool {
    let fields_ok = model.fields().iter().all(|b| b[0] == 0.0 && b[1] == 0.0);
    let couplings_ok = model.pairs().all(|(_, _, block)| {
        block[0][2] == 0.0 && block[1][2] == 0.0 && block[2][0] == 0.0 && block[2][1] == 0.0
    });
    fields_ok && couplings_ok
}

/// Columns of `H` restricted to `states` (global indices), rows in the same
/// local numbering.
fn build_sector(
    model: &SpinModel,
    basis: &ProductBasis,
    states: &[usize],
    lookup: &[usize],
) -> SparseHermitian {
    let n = model.n();
    let dims = basis.dims();
    let mut row_start = Vec::with_capacity(states.len() + 1);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    let mut row: Vec<(usize, Complex64)> = Vec::new();
    row_start.push(0);

    let field_terms: Vec<[Complex64; 3]> = model
        .fields()
        .iter()
        .map(|b| {
            let mut c = [ZERO; 3];
            for (mu, &bm) in b.iter().enumerate() {
                let lc = ladder_coefficients(mu);
                for a in 0..3 {
                    c[a] += lc[a] * bm;
                }
            }
            c
        })
        .collect();
    let pair_terms: Vec<(usize, usize, [[Complex64; 3]; 3])> = model
        .pairs()
        .map(|(i, j, block)| {
            let mut c = [[ZERO; 3]; 3];
            for mu in 0..3 {
                for nu in 0..3 {
                    if block[mu][nu] == 0.0 {
                        continue;
                    }
                    let (ci, cj) = (ladder_coefficients(mu), ladder_coefficients(nu));
                    for a in 0..3 {
                        for b in 0..3 {
                            c[a][b] -= ci[a] * cj[b] * block[mu][nu];
                        }
                    }
                }
            }
            (i, j, c)
        })
        .collect();

    // H is Hermitian, so row r is the conjugate of column r; build columns
    // and conjugate.
    for &col in states {
        row.clear();
        for i in 0..n {
            let k = basis.digit(col, i);
            for (a, &op) in LADDERS.iter().enumerate() {
                let c = field_terms[i][a];
                if c == ZERO {
                    continue;
                }
                if let Some((k2, amp)) = act(op, k, dims[i]) {
                    let target = col + k2 * basis.strides[i] - k * basis.strides[i];
                    row.push((target, c * amp));
                }
            }
        }
        for &(i, j, ref c) in &pair_terms {
            let ki = basis.digit(col, i);
            let kj = basis.digit(col, j);
            for (a, &opi) in LADDERS.iter().enumerate() {
                let Some((ki2, ampi)) = act(opi, ki, dims[i]) else {
                    continue;
                };
                for (b, &opj) in LADDERS.iter().enumerate() {
                    if c[a][b] == ZERO {
                        continue;
                    }
                    let Some((kj2, ampj)) = act(opj, kj, dims[j]) else {
                        continue;
                    };
                    let target = col + ki2 * basis.strides[i] + kj2 * basis.strides[j]
                        - ki * basis.strides[i]
                        - kj * basis.strides[j];
                    row.push((target, c[a][b] * (ampi * ampj)));
                }
            }
        }
        row.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(target, v) in row.iter() {
            let local = lookup[target];
            debug_assert!(local != usize::MAX, "term leaves the sector");
            if last == Some(local) {
                *values.last_mut().unwrap() += v.conj();
            } else {
                cols.push(local);
                values.push(v.conj());
                last = Some(local);
            }
        }
        row_start.push(cols.len());
    }
    SparseHermitian {
        dim: states.len(),
        row_start,
        cols,
        values,
    }
}

/// Full Hamiltonian on the product basis, for tests and small systems.
pub fn dense_hamiltonian(model: &SpinModel, cap: usize) -> Result<CMatrix> {
    let basis = ProductBasis::for_model(model);
    let dim = checked_dim(&basis, cap)?;
    let states: Vec<usize> = (0..dim).collect();
    Ok(build_sector(model, &basis, &states, &states).to_dense())
}

fn checked_dim(basis: &ProductBasis, cap: usize) -> Result<usize> {
    let dim = basis
        .dims()
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(dim)
}

/// Ground states of `H`, one per parity sector when parity is conserved.
pub fn dense_ground_states(model: &SpinModel, options: &ExactOptions) -> Result<ExactSpectrum> {
    let basis = ProductBasis::for_model(model);
    let dim = checked_dim(&basis, options.dimension_cap)?;
    let sectors: Vec<(Option<Parity>, Vec<usize>)> = if conserves_parity(model) {
        let (even, odd): (Vec<usize>, Vec<usize>) =
            (0..dim).partition(|&x| basis.excitations(x) % 2 == 0);
        vec![(Some(Parity::Even), even), (Some(Parity::Odd), odd)]
    } else {
        vec![(None, (0..dim).collect())]
    };

    let mut states = Vec::with_capacity(sectors.len());
    let mut lookup = vec![usize::MAX; dim];
    for (parity, members) in sectors {
        if members.is_empty() {
            continue;
        }
        for (local, &g) in members.iter().enumerate() {
            lookup[g] = local;
        }
        let h = build_sector(model, &basis, &members, &lookup);
        let (energy, local_vec) = if members.len() <= DENSE_SECTOR_LIMIT {
            let eig = linalg::hermitian_eigen(&h.to_dense());
            (eig.values[0], eig.vectors.column(0).into_owned())
        } else {
            lanczos_ground(&h, options.residual_tolerance)?
        };
        let residual = (h.apply(&local_vec) - local_vec.scale(energy)).norm();
        let mut amplitudes = CVector::zeros(dim);
        for (local, &g) in members.iter().enumerate() {
            amplitudes[g] = local_vec[local];
            lookup[g] = usize::MAX;
        }
        states.push(DenseGroundState {
            energy,
            amplitudes: fix_phase(amplitudes),
            parity,
            residual,
        });
    }
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let degenerate = states.len() > 1
        && (states[1].energy - states[0].energy).abs()
            <= options.degeneracy_tolerance * states[0].energy.abs().max(1.0);
    Ok(ExactSpectrum {
        basis,
        states,
        degenerate,
    })
}

/// Makes the largest amplitude real and positive.
fn fix_phase(mut v: CVector) -> CVector {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ZERO);
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
    v
}

const LANCZOS_BLOCK: usize = 160;
const LANCZOS_RESTARTS: usize = 60;

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
fn lanczos_ground(h: &SparseHermitian, tolerance: f64) -> Result<(f64, CVector)> {
    let dim = h.dim;
    // fixed, asymmetric start so results are reproducible
    let mut start = CVector::from_fn(dim, |i, _| {
        Complex64::new(1.0 + 0.37 * ((i as f64) * 1.618).sin(), 0.0)
    });
    start.unscale_mut(start.norm());
    let steps = LANCZOS_BLOCK.min(dim);
    let mut best = (f64::INFINITY, f64::INFINITY);
    for _ in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<CVector> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(steps);
        let mut beta: Vec<f64> = Vec::with_capacity(steps);
        for j in 0..steps {
            let mut w = h.apply(&basis[j]);
            alpha.push(basis[j].dotc(&w).re);
            for _ in 0..2 {
                for v in &basis {
                    let overlap = v.dotc(&w);
                    w.axpy(-overlap, v, Complex64::new(1.0, 0.0));
                }
            }
            let b = w.norm();
            if j + 1 == steps || b < 1e-13 {
                break;
            }
            beta.push(b);
            basis.push(w.unscale(b));
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let lowest = (0..m)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap_or(0);
        let energy = eig.eigenvalues[lowest];
        let mut ritz = CVector::zeros(dim);
        for (i, v) in basis.iter().enumerate().take(m) {
            ritz.axpy(
                Complex64::new(eig.eigenvectors[(i, lowest)], 0.0),
                v,
                Complex64::new(1.0, 0.0),
            );
        }
        ritz.unscale_mut(ritz.norm());
        let residual = (h.apply(&ritz) - ritz.scale(energy)).norm();
        if residual <= tolerance * energy.abs().max(1.0) {
            return Ok((energy, ritz));
        }
        best = (energy, residual);
        start = ritz;
    }
    Err(Error::Eigensolver(format!(
        "Lanczos stalled at energy {} with residual {:e}",
        best.0, best.1
    )))
}

/// Reduced density of `sites` (in the given order) from a pure state.
pub fn reduced_density(basis: &ProductBasis, psi: &CVector, sites: &[usize]) -> Result<CMatrix> {
    let seen = site_mask(basis.dims().len(), sites)?;
    let psi_matrix = split_amplitudes(basis, psi, sites, &seen);
    Ok(&psi_matrix * psi_matrix.adjoint())
}

fn site_mask(n: usize, sites: &[usize]) -> Result<Vec<bool>> {
    let mut seen = vec![false; n];
    for &s in sites {
        if s >= n {
            return Err(Error::SiteOutOfRange { site: s, n });
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidBipartition(format!("site {s} repeated")));
        }
    }
    Ok(seen)
}

/// Schmidt coefficients of a pure state across `sites` and the rest.
pub fn schmidt_coefficients(
    basis: &ProductBasis,
    psi: &CVector,
    sites: &[usize],
) -> Result<Vec<f64>> {
    let seen = site_mask(basis.dims().len(), sites)?;
    let psi_matrix = split_amplitudes(basis, psi, sites, &seen);
    Ok(psi_matrix.singular_values().iter().copied().collect())
}

/// `psi` reshaped to rows over `sites` and columns over the other sites.
fn split_amplitudes(
    basis: &ProductBasis,
    psi: &CVector,
    sites: &[usize],
    seen: &[bool],
) -> CMatrix {
    let rest: Vec<usize> = (0..seen.len()).filter(|&i| !seen[i]).collect();
    let (kept, kept_dim) = sub_indices(basis, sites);
    let (other, other_dim) = sub_indices(basis, &rest);
    let mut psi_matrix = CMatrix::zeros(kept_dim, other_dim);
    for x in 0..basis.dim() {
        psi_matrix[(kept[x], other[x])] = psi[x];
    }
    psi_matrix
}

/// Index of each basis state within the product of the chosen sites.
fn sub_indices(basis: &ProductBasis, sites: &[usize]) -> (Vec<usize>, usize) {
    let dim: usize = sites.iter().map(|&s| basis.dims()[s]).product();
    let idx = (0..basis.dim())
        .map(|x| {
            sites
                .iter()
                .fold(0, |acc, &s| acc * basis.dims()[s] + basis.digit(x, s))
        })
        .collect();
    (idx, dim)
}

/// `rho^{T_C}` for `rho` on `B (x) C` with dimensions `dim_b`, `dim_c`.
pub fn partial_transpose_second(rho: &CMatrix, dim_b: usize, dim_c: usize) -> CMatrix {
    let dim = dim_b * dim_c;
    CMatrix::from_fn(dim, dim, |r, c| {
        let (b, cc) = (r / dim_c, r % dim_c);
        let (b2, cc2) = (c / dim_c, c % dim_c);
        rho[(b * dim_c + cc2, b2 * dim_c + cc)]
    })
}

/// `(Tr |rho^{T_C}| - 1) / 2`.
pub fn negativity_of(rho: &CMatrix, dim_b: usize, dim_c: usize) -> f64 {
    let pt = partial_transpose_second(rho, dim_b, dim_c);
    let norm: f64 = linalg::hermitian_eigenvalues(&pt)
        .iter()
        .map(|v| v.abs())
        .sum();
    0.5 * (norm - 1.0)
}

pub fn entropy_of(rho: &CMatrix) -> f64 {
    linalg::shannon_bits(linalg::hermitian_eigenvalues(rho))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactEntanglement {
    pub energy: f64,
    pub parity: Option<Parity>,
    /// Entropy of `A` in bits.
    pub entropy: f64,
    /// Negativity across the `(B, C)` split of `A`, when one is given.
    pub negativity: Option<f64>,
}

/// Entropy and negativity of a pure state. Entropies use the smaller side of
/// the cut; a split of the whole system uses the Schmidt coefficients.
pub fn state_entanglement(
    basis: &ProductBasis,
    state: &DenseGroundState,
    spec: &SubsystemSpec,
) -> Result<ExactEntanglement> {
    let n = basis.dims().len();
    let sites = spec.sites();
    let complement = spec.complement(n);
    let dim_of = |s: &[usize]| s.iter().map(|&i| basis.dims()[i]).product::<usize>();
    let entropy = if complement.is_empty() {
        0.0
    } else {
        let side = if dim_of(sites) <= dim_of(&complement) {
            sites.to_vec()
        } else {
            complement.clone()
        };
        entropy_of(&reduced_density(basis, &state.amplitudes, &side)?)
    };
    let negativity = if spec.has_bipartition() {
        let kept = spec.kept();
        let transposed = spec.transposed();
        if complement.is_empty() {
            let side = if dim_of(&kept) <= dim_of(transposed) {
                kept
            } else {
                transposed.to_vec()
            };
            let roots: f64 = schmidt_coefficients(basis, &state.amplitudes, &side)?
                .iter()
                .sum();
            Some(0.5 * (roots * roots - 1.0))
        } else {
            let order: Vec<usize> = kept.iter().chain(transposed).copied().collect();
            let rho = reduced_density(basis, &state.amplitudes, &order)?;
            Some(negativity_of(&rho, dim_of(&kept), dim_of(transposed)))
        }
    } else {
        None
    };
    Ok(ExactEntanglement {
        energy: state.energy,
        parity: state.parity,
        entropy,
        negativity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactReport {
    /// Lowest state.
    pub ground: ExactEntanglement,
    /// The other sector's ground state when the level is degenerate.
    pub partner: Option<ExactEntanglement>,
    /// Ground energy of each parity sector.
    pub sector_energies: Vec<(Option<Parity>, f64)>,
    pub degenerate: bool,
}

/// Exact ground-state energy, entropy of `A` and, given a split, the
/// negativity of `rho_A`.
pub fn exact_entanglement(
    model: &SpinModel,
    spec: &SubsystemSpec,
    options: &ExactOptions,
) -> Result<ExactReport> {
    let spectrum = dense_ground_states(model, options)?;
    let ground = state_entanglement(&spectrum.basis, spectrum.ground(), spec)?;
    let partner = if spectrum.degenerate {
        Some(state_entanglement(
            &spectrum.basis,
            &spectrum.states[1],
            spec,
        )?)
    } else {
        None
    };
    Ok(ExactReport {
        ground,
        partner,
        sector_energies: spectrum
            .states
            .iter()
            .map(|s| (s.parity, s.energy))
            .collect(),
        degenerate: spectrum.degenerate,
    })
}

/// Ground state of the spin-1/2 complete graph on the Dicke states
/// `|n/2, M>`, indexed by the number of raised spins `K = M + n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveGroundState {
    pub n: usize,
    pub energy: f64,
    pub amplitudes: Vec<f64>,
    pub parity: Parity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveSpectrum {
    /// One state per parity sector, lowest energy first.
    pub states: Vec<CollectiveGroundState>,
    pub degenerate: bool,
}

impl CollectiveSpectrum {
    pub fn ground(&self) -> &CollectiveGroundState {
        &self.states[0]
    }
}

/// `H = B S_z - sum_mu J_mu (S_mu^2 - n/4) / (n - 1)` on the maximal-spin
/// sector.
pub fn collective_ground_state(
    model: &XyzModel,
    options: &ExactOptions,
) -> Result<CollectiveSpectrum> {
    if !model.is_complete_graph() {
        return Err(Error::InvalidModel(
            "collective oracle needs uniform all-to-all couplings".into(),
        ));
    }
    if model.spin().twice() != 1 {
        return Err(Error::InvalidModel(format!(
            "collective oracle needs s = 1/2, got {}",
            model.s()
        )));
    }
    let n = model.n();
    if n < 2 {
        return Err(Error::InvalidModel(
            "collective oracle needs at least two sites".into(),
        ));
    }
    // pair coupling of H = B S_z - 1/(2s) sum_{i != j} J_mu s_imu s_jmu at s = 1/2
    let pair = |axis: Axis| model.profile(axis)[1];
    let (jx, jy, jz) = (pair(Axis::X), pair(Axis::Y), pair(Axis::Z));
    let b = model.field();
    let j = 0.5 * n as f64;
    let quarter_n = 0.25 * n as f64;

    // S_x^2 and S_y^2 from S_+ S_+, S_- S_-, S_+ S_- and S_- S_+
    let dim = n + 1;
    let m_of = |k: usize| k as f64 - j;
    let raise = |k: usize| {
        let m = m_of(k);
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    };
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let m = m_of(k);
        let up = if k + 1 < dim { raise(k) } else { 0.0 };
        let down = if k > 0 { raise(k - 1) } else { 0.0 };
        // <k| S_x^2 |k> = <k| S_y^2 |k> = (<k| S_+ S_- + S_- S_+ |k>) / 4
        let transverse = 0.25 * (down * down + up * up);
        h[(k, k)] = b * m
            - jx * (transverse - quarter_n)
            - jy * (transverse - quarter_n)
            - jz * (m * m - quarter_n);
        if k + 2 < dim {
            // <k+2| S_x^2 |k> = -<k+2| S_y^2 |k> = <k+2| S_+^2 |k> / 4
            let value = -(jx - jy) * 0.25 * raise(k) * raise(k + 1);
            h[(k + 2, k)] = value;
            h[(k, k + 2)] = value;
        }
    }

    let mut states = Vec::with_capacity(2);
    for parity in [Parity::Even, Parity::Odd] {
        let members: Vec<usize> = (0..dim).filter(|&k| Parity::of(k) == parity).collect();
        if members.is_empty() {
            continue;
        }
        let sub = DMatrix::from_fn(members.len(), members.len(), |r, c| {
            h[(members[r], members[c])]
        });
        let eig = sub.symmetric_eigen();
        let lowest = (0..members.len())
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap_or(0);
        let mut amplitudes = vec![0.0; dim];
        for (r, &k) in members.iter().enumerate() {
            amplitudes[k] = eig.eigenvectors[(r, lowest)];
        }
        let pivot = amplitudes
            .iter()
            .copied()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            amplitudes.iter_mut().for_each(|v| *v = -*v);
        }
        states.push(CollectiveGroundState {
            n,
            energy: eig.eigenvalues[lowest],
            amplitudes,
            parity,
        });
    }
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let degenerate = (states[1].energy - states[0].energy).abs()
        <= options.degeneracy_tolerance * states[0].energy.abs().max(1.0);
    Ok(CollectiveSpectrum { states, degenerate })
}

/// `ln k!` for `k = 0..=n`.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

fn log_binomial(lf: &[f64], n: usize, k: usize) -> f64 {
    lf[n] - lf[k] - lf[n - k]
}

/// Amplitude of `|L/2, a> (x) |(n-L)/2, K-a>` in `|n/2, K>`.
fn branching(lf: &[f64], n: usize, len: usize, total: usize, part: usize) -> f64 {
    if part > len || part > total || total - part > n - len {
        return 0.0;
    }
    (0.5 * (log_binomial(lf, len, part) + log_binomial(lf, n - len, total - part)
        - log_binomial(lf, n, total)))
    .exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DickeReduced {
    pub len: usize,
    /// `rho_L` on the symmetric `L`-site states, indexed by raised spins.
    pub density: DMatrix<f64>,
    pub entropy: f64,
    /// Negativity between `m` and `L - m` of the sites, when requested.
    pub negativity: Option<f64>,
}

/// Reduced density of `L` sites of a Dicke-basis state and, given `m`, the
/// negativity between `m` and `L - m` of them.
pub fn dicke_reduced_density(
    state: &CollectiveGroundState,
    len: usize,
    split: Option<usize>,
) -> Result<DickeReduced> {
    let n = state.n;
    if len == 0 || len > n {
        return Err(Error::InvalidBipartition(format!(
            "need 1 <= L <= n, got L = {len}, n = {n}"
        )));
    }
    if let Some(m) = split {
        if m == 0 || m >= len {
            return Err(Error::InvalidBipartition(format!(
                "need 1 <= m < L, got m = {m}, L = {len}"
            )));
        }
    }
    let lf = log_factorials(n);
    let dim = len + 1;
    let rest = n - len;
    let mut rho = DMatrix::<f64>::zeros(dim, dim);
    for r in 0..=rest {
        for a in 0..dim {
            let ka = a + r;
            let ca = state.amplitudes[ka] * branching(&lf, n, len, ka, a);
            if ca == 0.0 {
                continue;
            }
            for b in 0..dim {
                let kb = b + r;
                rho[(a, b)] += ca * state.amplitudes[kb] * branching(&lf, n, len, kb, b);
            }
        }
    }
    let values = rho.clone().symmetric_eigenvalues();
    let entropy = linalg::shannon_bits(values.iter().copied());
    let negativity = split.map(|m| {
        let p = len - m;
        if len == n {
            // pure state: Schmidt coefficients across m | n - m
            let coeffs = DMatrix::<f64>::from_fn(m + 1, p + 1, |a, b| {
                state.amplitudes[a + b] * branching(&lf, n, m, a + b, a)
            });
            let sum: f64 = coeffs.singular_values().iter().sum();
            return 0.5 * (sum * sum - 1.0);
        }
        let lf_l = log_factorials(len);
        // |L/2, k> = sum_a c(k, a) |m/2, a> (x) |p/2, k - a>
        let embed_dim = (m + 1) * (p + 1);
        let mut embed = DMatrix::<f64>::zeros(embed_dim, dim);
        for k in 0..dim {
            for a in 0..=m.min(k) {
                if k - a <= p {
                    embed[(a * (p + 1) + (k - a), k)] = branching(&lf_l, len, m, k, a);
                }
            }
        }
        let full = &embed * &rho * embed.transpose();
        negativity_of(&linalg::real_to_complex(&full), m + 1, p + 1)
    });
    Ok(DickeReduced {
        len,
        density: rho,
        entropy,
        negativity,
    })
}
