//! Closed-form RPA entanglement for the spin pair and the fully connected
//! array, plus the symplectic spectra of translation-free uniform contractions.
//!
//! Couplings are given as totals `J_mu = J_mu^0`: the pair has
//! `J_mu^k = (-1)^k J_mu`, the complete graph `J_mu^k = -J_mu / (n - 1)` for
//! `k != 0`. The field is in the same rescaled units, so that
//! `lambda = |B| + J_z` above `B_c = J_x - J_z` and `lambda = J_x` below.

use crate::error::{Error, Result};
use crate::gaussian::bosonic_entropy;
use crate::meanfield::Phase;

/// Occupations `f0, f1, g0, g1` of `F_ij = f0 delta_ij + f1`, same for `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformContractions {
    pub f0: f64,
    pub f1: f64,
    pub g0: f64,
    pub g1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSpectra {
    pub contractions: UniformContractions,
    pub len: usize,
    /// Non-degenerate reduced eigenvalue.
    pub f_block: f64,
    /// Reduced eigenvalue with degeneracy `len - 1`.
    pub f_rest: f64,
    pub transposed: Option<TransposedPair>,
}

/// The two non-degenerate eigenvalues of the partial transpose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransposedPair {
    pub split: usize,
    pub plus: f64,
    pub minus: f64,
}

/// Spectra of the `len`-site block of uniform contractions and, given a split
/// `m`, of its partial transpose on the last `len - m` sites.
pub fn uniform_contraction_spectra(
    c: UniformContractions,
    len: usize,
    split: Option<usize>,
) -> Result<UniformSpectra> {
    if len == 0 {
        return Err(Error::InvalidBipartition("empty block".into()));
    }
    let l = len as f64;
    let f_block = symplectic_occupation(c.f0 + l * c.f1, c.g0 + l * c.g1)?;
    let f_rest = symplectic_occupation(c.f0, c.g0)?;
    let transposed = match split {
        None => None,
        Some(m) => Some(transposed_pair(c, len, m)?),
    };
    Ok(UniformSpectra {
        contractions: c,
        len,
        f_block,
        f_rest,
        transposed,
    })
}

fn transposed_pair(c: UniformContractions, len: usize, split: usize) -> Result<TransposedPair> {
    if split == 0 || split >= len {
        return Err(Error::InvalidBipartition(format!(
            "need 1 <= m < L, got m = {split}, L = {len}"
        )));
    }
    let m = split as f64;
    let p = (len - split) as f64;
    let mp = (m * p).sqrt();
    let a_fg = [
        [0.5 + c.f0 + m * c.f1, mp * c.g1],
        [mp * c.g1, 0.5 + c.f0 + p * c.f1],
    ];
    let a_gf = [[c.g0 + m * c.g1, mp * c.f1], [mp * c.f1, c.g0 + p * c.g1]];
    let mut a = [[0.0; 4]; 4];
    for r in 0..2 {
        for s in 0..2 {
            a[r][s] = a_fg[r][s];
            a[r][s + 2] = -a_gf[r][s];
            a[r + 2][s] = a_gf[r][s];
            a[r + 2][s + 2] = -a_fg[r][s];
        }
    }
    let trace_sq = trace_of_square(&a);
    let det = det4(&a);
    let disc = trace_sq * trace_sq - 16.0 * det;
    if disc < 0.0 || trace_sq < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "inconsistent contractions: Tr A^2 = {trace_sq:e}, discriminant {disc:e}"
        )));
    }
    let root = disc.sqrt();
    let minus = trace_sq - root;
    if minus < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "negative radicand {minus:e}"
        )));
    }
    Ok(TransposedPair {
        split,
        plus: 0.5 * (trace_sq + root).sqrt() - 0.5,
        minus: 0.5 * minus.sqrt() - 0.5,
    })
}

fn symplectic_occupation(f: f64, g: f64) -> Result<f64> {
    let radicand = (f + 0.5 - g) * (f + 0.5 + g);
    if radicand < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "negative radicand {radicand:e}"
        )));
    }
    Ok(radicand.sqrt() - 0.5)
}

fn trace_of_square(a: &[[f64; 4]; 4]) -> f64 {
    let mut t = 0.0;
    for r in 0..4 {
        for s in 0..4 {
            t += a[r][s] * a[s][r];
        }
    }
    t
}

fn det4(a: &[[f64; 4]; 4]) -> f64 {
    let mut m = *a;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap_or(col);
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..4 {
            let factor = m[r][col] / m[col][col];
            for s in col..4 {
                m[r][s] -= factor * m[col][s];
            }
        }
    }
    det
}

/// Mean field and RPA frequencies shared by the pair and the complete graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFrequencies {
    pub phase: Phase,
    pub critical_field: f64,
    pub lambda: f64,
    /// `J_x^0`, tilted in the broken phase.
    pub jx: f64,
    pub jy: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub omega_bar: f64,
    /// `lambda^2 - omega_bar^2`, evaluated without cancellation in `lambda - omega_k`.
    pub gap: f64,
}

impl UniformFrequencies {
    pub fn new(n: usize, j: [f64; 3], field: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least two sites, got {n}"
            )));
        }
        let [jx, jy, jz] = j;
        if !(jx >= jy.abs()) {
            return Err(Error::InvalidModel(format!(
                "need J_x >= |J_y|, got {jx}, {jy}"
            )));
        }
        let bc = jx - jz;
        if !(bc > 0.0) {
            return Err(Error::Degenerate(format!(
                "critical field {bc} is not positive"
            )));
        }
        let b = field.abs();
        // lambda - J'_x stays exact in the broken phase: B_c sin^2(theta)
        let (phase, lambda, jx_eff, lambda_minus_jx) = if b >= bc {
            (Phase::Normal, b + jz, jx, b - bc)
        } else {
            let sin2 = (bc - b) * (bc + b) / (bc * bc);
            (Phase::Broken, jx, jx - bc * sin2, bc * sin2)
        };
        if !(lambda > 0.0) {
            return Err(Error::VanishingField { site: 0 });
        }
        let rest = 1.0 / (n - 1) as f64;
        let omega0 = (lambda_minus_jx * (lambda - jy)).sqrt();
        let omega1 = ((lambda + jx_eff * rest) * (lambda + jy * rest)).sqrt();
        // lambda^2 - omega^2 = lambda (a + b) - a b for omega^2 = (lambda - a)(lambda - b)
        let shift = |a: f64, b: f64, omega: f64| (lambda * (a + b) - a * b) / (lambda + omega);
        let d0 = shift(jx_eff, jy, omega0);
        let d1 = shift(-jx_eff * rest, -jy * rest, omega1);
        let nf = n as f64;
        let lambda_minus_bar = (d0 + (nf - 1.0) * d1) / nf;
        let omega_bar = (omega0 + (nf - 1.0) * omega1) / nf;
        Ok(Self {
            phase,
            critical_field: bc,
            lambda,
            jx: jx_eff,
            jy,
            omega0,
            omega1,
            omega_bar,
            gap: lambda_minus_bar * (lambda + omega_bar),
        })
    }

    /// `Delta = n^2 (lambda^2 - omega_bar^2) / (2 (n - 1) omega0 omega1)`.
    fn delta(&self, n: usize) -> f64 {
        let nf = n as f64;
        if self.omega0 == 0.0 {
            return f64::INFINITY;
        }
        (nf * nf * self.gap / (2.0 * (nf - 1.0) * self.omega0 * self.omega1)).max(0.0)
    }

    fn contractions(&self, n: usize) -> UniformContractions {
        let nf = n as f64;
        let rest = 1.0 / (nf - 1.0);
        let dp0 = 0.5 * (self.jx + self.jy);
        let dm0 = 0.5 * (self.jx - self.jy);
        let dp1 = -rest * dp0;
        let dm1 = -rest * dm0;
        let a1 = (self.lambda - dp1) / self.omega1;
        let b1 = dm1 / self.omega1;
        UniformContractions {
            f0: 0.5 * (a1 - 1.0),
            f1: ((self.lambda - dp0) / self.omega0 - a1) / (2.0 * nf),
            g0: 0.5 * b1,
            g1: (dm0 / self.omega0 - b1) / (2.0 * nf),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullyConnectedResult {
    pub n: usize,
    pub len: usize,
    pub split: usize,
    pub frequencies: UniformFrequencies,
    pub contractions: UniformContractions,
    pub delta: f64,
    /// `L (n - L) / n^2`.
    pub alpha: f64,
    /// `m (L - m) / n^2`.
    pub beta: f64,
    pub gamma: f64,
    pub f: f64,
    pub entropy: f64,
    pub entropy_corrected: f64,
    pub f_tilde: f64,
    pub negativity: f64,
    pub negativity_corrected: f64,
    /// Set at `|B| = B_c`, where `f` and `Delta` are infinite.
    pub divergent: bool,
}

/// Entropy of `L` sites and negativity between `m` and `L - m` of them in the
/// complete-graph array.
///
/// Broken-phase corrections assume negligible branch overlaps: one bit is
/// added to the entropy of a proper subsystem, and a global negativity
/// (`L = n`) becomes `2 N + 1/2`.
pub fn fully_connected_closed_form(
    n: usize,
    j: [f64; 3],
    field: f64,
    len: usize,
    split: usize,
) -> Result<FullyConnectedResult> {
    if !(1 <= split && split < len && len <= n) {
        return Err(Error::InvalidBipartition(format!(
            "need 1 <= m < L <= n, got m = {split}, L = {len}, n = {n}"
        )));
    }
    let freq = UniformFrequencies::new(n, j, field)?;
    let delta = freq.delta(n);
    let divergent = !delta.is_finite();
    let nf = n as f64;
    let alpha = (len * (n - len)) as f64 / (nf * nf);
    let beta = (split * (len - split)) as f64 / (nf * nf);
    let gamma = alpha + 4.0 * beta;

    let f = block_occupation(alpha, delta);
    let entropy = if divergent {
        f64::INFINITY
    } else {
        bosonic_entropy(f)
    };
    let f_tilde = transposed_occupation(beta, gamma, delta);
    let negativity = -f_tilde / (1.0 + 2.0 * f_tilde);

    let broken = freq.phase == Phase::Broken;
    let entropy_corrected = if broken && len < n {
        entropy + 1.0
    } else {
        entropy
    };
    let negativity_corrected = if broken && len == n {
        2.0 * negativity + 0.5
    } else {
        negativity
    };
    Ok(FullyConnectedResult {
        n,
        len,
        split,
        frequencies: freq,
        contractions: freq.contractions(n),
        delta,
        alpha,
        beta,
        gamma,
        f,
        entropy,
        entropy_corrected,
        f_tilde,
        negativity,
        negativity_corrected,
        divergent,
    })
}

/// `(sqrt(1 + 2 alpha Delta) - 1) / 2`.
fn block_occupation(alpha: f64, delta: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    if !delta.is_finite() {
        return f64::INFINITY;
    }
    let x = 2.0 * alpha * delta;
    0.5 * x / ((1.0 + x).sqrt() + 1.0)
}

/// `(sqrt(1 + gamma Delta - sqrt(8 beta Delta + gamma^2 Delta^2)) - 1) / 2`,
/// rewritten as `-y / (2 (1 + sqrt(1 - y)))` with
/// `y = 8 beta / (gamma + sqrt(gamma^2 + 8 beta / Delta))`, which stays finite
/// as `Delta -> infinity`.
fn transposed_occupation(beta: f64, gamma: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let y = 8.0 * beta / (gamma + (gamma * gamma + 8.0 * beta / delta).sqrt());
    let y = y.min(1.0);
    -0.5 * y / (1.0 + (1.0 - y).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResult {
    pub frequencies: UniformFrequencies,
    pub contractions: UniformContractions,
    pub f: f64,
    pub entropy: f64,
    pub entropy_corrected: f64,
    pub f_tilde: f64,
    pub negativity: f64,
    pub negativity_corrected: f64,
    pub divergent: bool,
}

/// Entropy of one spin and negativity of the pair, in the closed forms
/// `f = (sqrt(1 + (lambda^2 - omega_bar^2) / (omega0 omega1)) - 1) / 2`,
/// `f~ = f - sqrt(f (f + 1))`, `N = f + sqrt(f (f + 1))`.
pub fn pair_closed_form(jx: f64, jy: f64, jz: f64, field: f64) -> Result<PairResult> {
    let freq = UniformFrequencies::new(2, [jx, jy, jz], field)?;
    let divergent = freq.omega0 == 0.0;
    let (f, f_tilde, negativity) = if divergent {
        (f64::INFINITY, -0.5, f64::INFINITY)
    } else {
        let x = (freq.gap / (freq.omega0 * freq.omega1)).max(0.0);
        let f = 0.5 * x / ((1.0 + x).sqrt() + 1.0);
        let root = (f * (f + 1.0)).sqrt();
        // f - root = -f / (f + root) avoids the cancellation for small f
        let f_tilde = if f == 0.0 { 0.0 } else { -f / (f + root) };
        (f, f_tilde, f + root)
    };
    let entropy = if divergent {
        f64::INFINITY
    } else {
        bosonic_entropy(f)
    };
    let broken = freq.phase == Phase::Broken;
    Ok(PairResult {
        frequencies: freq,
        contractions: freq.contractions(2),
        f,
        entropy,
        entropy_corrected: if broken { entropy + 1.0 } else { entropy },
        f_tilde,
        negativity,
        negativity_corrected: if broken {
            2.0 * negativity + 0.5
        } else {
            negativity
        },
        divergent,
    })
}
