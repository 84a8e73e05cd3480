//! Dense Hermitian helpers shared by the RPA and Gaussian-state code.
//!
//! Symplectic diagonalization goes through the Hermitian matrix
//! `K = H^{1/2} M H^{1/2}`, which is similar to `M H` whenever `H` is positive
//! definite. Its eigenvectors `y` map back to eigenvectors `x = M H^{1/2} y / sqrt(w)`
//! of `M H` that are already orthonormal under the indefinite metric `M`,
//! degenerate frequencies included.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs_imag(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Diagonalizes the Hermitian part of `m`, using a real solver when the
/// matrix carries no imaginary entries.
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let dim = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let (values, vectors): (Vec<f64>, CMatrix) = if max_abs_imag(&sym) == 0.0 {
        let re = sym.map(|z| z.re);
        let eig = re.symmetric_eigen();
        (
            eig.eigenvalues.iter().copied().collect(),
            real_to_complex(&eig.eigenvectors),
        )
    } else {
        let eig = sym.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = CMatrix::from_fn(dim, dim, |r, c| vectors[(r, order[c])]);
    HermitianEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let mut values: Vec<f64> = if max_abs_imag(&sym) == 0.0 {
        sym.map(|z| z.re)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    } else {
        sym.symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    values
}

fn from_eigen(eig: &HermitianEigen, map: impl Fn(f64) -> f64) -> CMatrix {
    let dim = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for (c, &v) in eig.values.iter().enumerate() {
        let w = map(v);
        for r in 0..dim {
            scaled[(r, c)] *= w;
        }
    }
    scaled * eig.vectors.adjoint()
}

/// Principal square root of a positive-definite Hermitian matrix.
pub fn sqrt_positive_definite(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(m);
    let lowest = eig.values.first().copied().unwrap_or(0.0);
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if lowest <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveDefinite(lowest));
    }
    Ok(from_eigen(&eig, f64::sqrt))
}

/// The metric `diag(1, ..., 1, -1, ..., -1)` as a sign vector.
pub fn metric_signs(n: usize) -> Vec<f64> {
    (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect()
}

/// `M * a` for the block metric.
pub fn metric_left(a: &CMatrix) -> CMatrix {
    let n = a.nrows() / 2;
    let mut out = a.clone();
    for r in n..a.nrows() {
        for c in 0..a.ncols() {
            out[(r, c)] = -out[(r, c)];
        }
    }
    out
}

/// `a * M` for the block metric.
pub fn metric_right(a: &CMatrix) -> CMatrix {
    let n = a.ncols() / 2;
    let mut out = a.clone();
    for c in n..a.ncols() {
        for r in 0..a.nrows() {
            out[(r, c)] = -out[(r, c)];
        }
    }
    out
}

/// Result of a symplectic diagonalization of a positive-definite `2n x 2n`
/// Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SymplecticDecomposition {
    /// Positive symplectic eigenvalues, ascending.
    pub values: Vec<f64>,
    /// `2n x n` eigenvectors of `M H` for the positive eigenvalues, with
    /// `x^dagger M x = 1`.
    pub vectors: CMatrix,
    /// Largest relative mismatch between the `+w` and `-w` branches.
    pub pairing_residual: f64,
}

pub fn symplectic_decompose(h: &CMatrix) -> Result<SymplecticDecomposition> {
    let dim = h.nrows();
    if dim % 2 != 0 || h.ncols() != dim {
        return Err(Error::InvalidArgument(format!(
            "symplectic decomposition needs an even square matrix, got {}x{}",
            dim,
            h.ncols()
        )));
    }
    let n = dim / 2;
    let root = sqrt_positive_definite(h)?;
    let k = &root * metric_left(&root);
    let eig = hermitian_eigen(&k);
    if n > 0 && !(eig.values[n - 1] < 0.0 && eig.values[n] > 0.0) {
        return Err(Error::Singular(format!(
            "metric inertia lost: eigenvalues {} and {} around the midpoint",
            eig.values[n - 1],
            eig.values[n]
        )));
    }
    let values: Vec<f64> = eig.values[n..].to_vec();
    let pairing_residual = (0..n)
        .map(|i| {
            let pos = values[i];
            let neg = -eig.values[n - 1 - i];
            (pos - neg).abs() / pos.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    let ys = eig.vectors.columns(n, n).into_owned();
    let mut vectors = metric_left(&(&root * ys));
    for (c, &w) in values.iter().enumerate() {
        let norm = 1.0 / w.sqrt();
        for r in 0..dim {
            vectors[(r, c)] *= norm;
        }
    }
    Ok(SymplecticDecomposition {
        values,
        vectors,
        pairing_residual,
    })
}

/// Von Neumann entropy in bits of a spectrum of probabilities; entries at or
/// below `1e-300` contribute nothing.
pub fn shannon_bits(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    probabilities
        .into_iter()
        .filter(|&p| p > 1e-300)
        .map(|p| -p * p.log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sqrt_squares_back() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(1.0, 0.0)]);
        let r = sqrt_positive_definite(&m).unwrap();
        assert!(max_abs_diff(&(&r * &r), &m) < 1e-13);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            sqrt_positive_definite(&m),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn single_mode_squeezing() {
        // H = [[a, -d], [-d, a]] has symplectic eigenvalue sqrt(a^2 - d^2).
        let (a, d) = (2.0, 0.7);
        let h = CMatrix::from_row_slice(2, 2, &[c(a, 0.0), c(-d, 0.0), c(-d, 0.0), c(a, 0.0)]);
        let dec = symplectic_decompose(&h).unwrap();
        assert!((dec.values[0] - (a * a - d * d).sqrt()).abs() < 1e-14);
        let x = dec.vectors.column(0);
        let norm = x[0].norm_sqr() - x[1].norm_sqr();
        assert!((norm - 1.0).abs() < 1e-13);
    }

    #[test]
    fn shannon_of_fair_coin_is_one_bit() {
        assert!((shannon_bits([0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert_eq!(shannon_bits([1.0, 0.0]), 0.0);
    }
}
