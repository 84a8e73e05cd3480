//! Entropies and negativities of Gaussian boson states from their
//! contraction matrices.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rpa::ContractionData;

/// Reduced spectra may dip this far below zero before being rejected.
pub const OCCUPATION_CLAMP: f64 = 1e-10;

/// Maximum mismatch tolerated between the `+nu` and `-nu` branches.
pub const PAIRING_TOL: f64 = 1e-9;

/// Ordered site list `A`, optionally split into `(B, C)` with `C` the
/// transposed part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemSpec {
    sites: Vec<usize>,
    transposed: Vec<usize>,
}

fn check_distinct(sites: &[usize], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &s in sites {
        if !seen.insert(s) {
            return Err(Error::InvalidBipartition(format!(
                "site {s} repeated in {what}"
            )));
        }
    }
    Ok(())
}

impl SubsystemSpec {
    pub fn new(sites: Vec<usize>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidBipartition("empty subsystem".into()));
        }
        check_distinct(&sites, "subsystem")?;
        Ok(Self {
            sites,
            transposed: Vec::new(),
        })
    }

    /// `A = B followed by C`.
    pub fn bipartition(b: Vec<usize>, c: Vec<usize>) -> Result<Self> {
        if let Some(s) = b.iter().find(|s| c.contains(s)) {
            return Err(Error::InvalidBipartition(format!(
                "site {s} in both halves"
            )));
        }
        let mut sites = b;
        sites.extend(c.iter().copied());
        let mut spec = Self::new(sites)?;
        spec.transposed = c;
        Ok(spec)
    }

    /// Sites `0..len`.
    pub fn block(len: usize) -> Result<Self> {
        Self::new((0..len).collect())
    }

    /// The first `m` sites of a block of `len` sites against the other `len - m`.
    pub fn split_block(len: usize, m: usize) -> Result<Self> {
        Self::bipartition((0..m).collect(), (m..len).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn transposed(&self) -> &[usize] {
        &self.transposed
    }

    pub fn kept(&self) -> Vec<usize> {
        self.sites
            .iter()
            .copied()
            .filter(|s| !self.transposed.contains(s))
            .collect()
    }

    pub fn has_bipartition(&self) -> bool {
        !self.transposed.is_empty() && self.transposed.len() < self.sites.len()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Sites of `0..n` not in `A`, ascending.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|s| !self.sites.contains(s)).collect()
    }
}

/// `F` and `G` restricted to an ordered site list.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemContraction {
    pub sites: Vec<usize>,
    pub f: CMatrix,
    pub g: CMatrix,
}

impl SubsystemContraction {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// `D_A = [[F_A, G_A], [conj(G_A), 1 + conj(F_A)]]`.
    pub fn matrix(&self) -> CMatrix {
        ContractionData {
            f: self.f.clone(),
            g: self.g.clone(),
        }
        .full_matrix()
    }
}

pub fn subsystem_contraction(
    data: &ContractionData,
    sites: &[usize],
) -> Result<SubsystemContraction> {
    let n = data.n();
    if sites.is_empty() {
        return Err(Error::InvalidBipartition("empty subsystem".into()));
    }
    if let Some(&bad) = sites.iter().find(|&&s| s >= n) {
        return Err(Error::SiteOutOfRange { site: bad, n });
    }
    check_distinct(sites, "subsystem")?;
    let m = sites.len();
    Ok(SubsystemContraction {
        sites: sites.to_vec(),
        f: CMatrix::from_fn(m, m, |a, b| data.f[(sites[a], sites[b])]),
        g: CMatrix::from_fn(m, m, |a, b| data.g[(sites[a], sites[b])]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Reduced,
    PartiallyTransposed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    /// Ascending.
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
    pub pairing_residual: f64,
}

/// The branch `{f}` of the eigenvalues `f, -1 - f` of `D M`.
///
/// Shifting by `M/2` gives `C = D + M/2`, whose symplectic eigenvalues
/// `f + 1/2` are the positive eigenvalues of `C^{1/2} M C^{1/2}`.
pub fn symplectic_spectrum(d: &CMatrix, kind: SpectrumKind) -> Result<SymplecticSpectrum> {
    let dim = d.nrows();
    if dim % 2 != 0 || d.ncols() != dim || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "contraction matrix is {}x{}",
            dim,
            d.ncols()
        )));
    }
    let m = dim / 2;
    let mut shifted = d.clone();
    for i in 0..dim {
        shifted[(i, i)] += if i < m { 0.5 } else { -0.5 };
    }
    let root = match linalg::sqrt_positive_definite(&shifted) {
        Ok(r) => r,
        Err(Error::NotPositiveDefinite(lowest)) => {
            return Err(match kind {
                SpectrumKind::Reduced => Error::NegativeOccupation(lowest),
                SpectrumKind::PartiallyTransposed => Error::InconsistentTranspose(lowest - 0.5),
            })
        }
        Err(e) => return Err(e),
    };
    let k = &root * linalg::metric_left(&root);
    let eig = linalg::hermitian_eigenvalues(&k);
    let pairing_residual = (0..m)
        .map(|i| (eig[m + i] + eig[m - 1 - i]).abs())
        .fold(0.0, f64::max);
    if pairing_residual > PAIRING_TOL {
        return Err(Error::UnpairedSpectrum(pairing_residual));
    }
    let mut values: Vec<f64> = eig[m..].iter().map(|nu| nu - 0.5).collect();
    match kind {
        SpectrumKind::Reduced => {
            for f in values.iter_mut() {
                if *f < -OCCUPATION_CLAMP {
                    return Err(Error::NegativeOccupation(*f));
                }
                if *f < 0.0 {
                    *f = 0.0;
                }
            }
        }
        SpectrumKind::PartiallyTransposed => {
            if let Some(&f) = values.iter().find(|&&f| f <= -0.5) {
                return Err(Error::InconsistentTranspose(f));
            }
        }
    }
    values.sort_by(f64::total_cmp);
    Ok(SymplecticSpectrum {
        values,
        kind,
        pairing_residual,
    })
}

/// `(1 + f) log2(1 + f) - f log2 f`, zero at `f = 0`.
pub fn bosonic_entropy(f: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    (1.0 + f) * (1.0 + f).log2() - f * f.log2()
}

pub fn entanglement_entropy(spectrum: &SymplecticSpectrum) -> Result<f64> {
    if spectrum.kind != SpectrumKind::Reduced {
        return Err(Error::InvalidArgument(
            "entropy needs a reduced spectrum".into(),
        ));
    }
    Ok(spectrum.values.iter().map(|&f| bosonic_entropy(f)).sum())
}

/// Partial transpose on the sites `transposed` of `A`.
///
/// Between kept sites nothing changes; between transposed sites `F` and `G`
/// are conjugated; across the cut `F` and `G` trade places.
pub fn partial_transpose(
    sub: &SubsystemContraction,
    transposed: &[usize],
) -> Result<SubsystemContraction> {
    check_distinct(transposed, "transposed sites")?;
    let in_c: Vec<bool> = sub.sites.iter().map(|s| transposed.contains(s)).collect();
    if let Some(s) = transposed.iter().find(|s| !sub.sites.contains(s)) {
        return Err(Error::InvalidBipartition(format!(
            "transposed site {s} is not in the subsystem"
        )));
    }
    let m = sub.len();
    let mut f = CMatrix::zeros(m, m);
    let mut g = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let (fv, gv): (Complex64, Complex64) = match (in_c[i], in_c[j]) {
                (false, false) => (sub.f[(i, j)], sub.g[(i, j)]),
                (true, true) => (sub.f[(i, j)].conj(), sub.g[(i, j)].conj()),
                (false, true) => (sub.g[(i, j)], sub.f[(i, j)]),
                (true, false) => (sub.g[(j, i)].conj(), sub.f[(j, i)]),
            };
            f[(i, j)] = fv;
            g[(i, j)] = gv;
        }
    }
    Ok(SubsystemContraction {
        sites: sub.sites.clone(),
        f,
        g,
    })
}

/// `N = 1/2 (prod_{f < 0} 1 / (1 + 2 f) - 1)`.
pub fn negativity(spectrum: &SymplecticSpectrum) -> Result<f64> {
    if spectrum.kind != SpectrumKind::PartiallyTransposed {
        return Err(Error::InvalidArgument(
            "negativity needs a partially transposed spectrum".into(),
        ));
    }
    let mut product = 1.0;
    for &f in &spectrum.values {
        if f <= -0.5 {
            return Err(Error::InconsistentTranspose(f));
        }
        if f < 0.0 {
            product /= 1.0 + 2.0 * f;
        }
    }
    Ok(0.5 * (product - 1.0))
}

/// Negativity between `A` and its complement in a pure Gaussian state,
/// `1/2 (prod (sqrt f + sqrt(1 + f))^2 - 1)`.
pub fn global_negativity(spectrum: &SymplecticSpectrum) -> f64 {
    let product: f64 = spectrum
        .values
        .iter()
        .map(|&f| {
            let f = f.max(0.0);
            let t = f.sqrt() + (1.0 + f).sqrt();
            t * t
        })
        .product();
    0.5 * (product - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    pub sites: Vec<usize>,
    pub spectrum: SymplecticSpectrum,
    pub entropy: f64,
    pub global_negativity: f64,
    pub transposed_spectrum: Option<SymplecticSpectrum>,
    /// Negativity across the `(B, C)` split of `A`, when one is given.
    pub negativity: Option<f64>,
}

pub fn analyze(data: &ContractionData, spec: &SubsystemSpec) -> Result<EntanglementReport> {
    let sub = subsystem_contraction(data, spec.sites())?;
    let spectrum = symplectic_spectrum(&sub.matrix(), SpectrumKind::Reduced)?;
    let entropy = entanglement_entropy(&spectrum)?;
    let global = global_negativity(&spectrum);
    let (transposed_spectrum, neg) = if spec.has_bipartition() {
        let pt = partial_transpose(&sub, spec.transposed())?;
        let spec_pt = symplectic_spectrum(&pt.matrix(), SpectrumKind::PartiallyTransposed)?;
        let n = negativity(&spec_pt)?;
        (Some(spec_pt), Some(n))
    } else {
        (None, None)
    };
    Ok(EntanglementReport {
        sites: spec.sites().to_vec(),
        spectrum,
        entropy,
        global_negativity: global,
        transposed_spectrum,
        negativity: neg,
    })
}
