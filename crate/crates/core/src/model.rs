//! Spin arrays with general quadratic couplings, and the translationally
//! invariant XYZ array in a transverse field.
//!
//! `SpinModel` holds the Hamiltonian
//!
//! ```text
//! H = sum_{i,mu} B^{i mu} s_{i mu} - 1/2 sum_{i != j} J^{i mu, j nu} s_{i mu} s_{j nu}
//! ```
//!
//! `XyzModel` holds separation profiles `J_mu(l)` already divided by the common
//! spin `s`, i.e. `H = B sum_i s_iz - 1/(2s) sum_{i != j} J_mu(i-j) s_{i mu} s_{j mu}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Cartesian spin component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    General,
    Cyclic1D,
    CompleteGraph,
}

/// A spin magnitude `s`, stored as the integer `2s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };

    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !(s > 0.0) || (twice - twice.round()).abs() > 1e-12 || twice > u32::MAX as f64 {
            return Err(Error::InvalidSpin(s));
        }
        Ok(Spin {
            twice: twice.round() as u32,
        })
    }

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin(0.0));
        }
        Ok(Spin { twice })
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    /// Local Hilbert-space dimension `2s + 1`.
    pub fn multiplicity(self) -> usize {
        self.twice as usize + 1
    }
}

/// One coupling entry `J^{i mu, j nu}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub i: usize,
    pub mu: Axis,
    pub j: usize,
    pub nu: Axis,
    pub value: f64,
}

impl CouplingEntry {
    pub fn new(i: usize, mu: Axis, j: usize, nu: Axis, value: f64) -> Self {
        Self {
            i,
            mu,
            j,
            nu,
            value,
        }
    }
}

/// `block[mu][nu] = J^{i mu, j nu}` for a site pair `i < j`.
pub type CouplingBlock = [[f64; 3]; 3];

fn transpose(b: &CouplingBlock) -> CouplingBlock {
    let mut t = [[0.0; 3]; 3];
    for (mu, row) in b.iter().enumerate() {
        for (nu, v) in row.iter().enumerate() {
            t[nu][mu] = *v;
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinModel {
    geometry: Geometry,
    spins: Vec<Spin>,
    fields: Vec<[f64; 3]>,
    couplings: BTreeMap<(usize, usize), CouplingBlock>,
}

impl SpinModel {
    /// Builds a validated model. Entries may be given for one or both
    /// orderings of a pair; `J^{j nu, i mu}` is filled from `J^{i mu, j nu}`.
    pub fn new(
        geometry: Geometry,
        spins: &[f64],
        fields: Vec<[f64; 3]>,
        couplings: &[CouplingEntry],
    ) -> Result<Self> {
        let n = spins.len();
        if n == 0 {
            return Err(Error::InvalidModel("no sites".into()));
        }
        if fields.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} field vectors for {} sites",
                fields.len(),
                n
            )));
        }
        let spins = spins
            .iter()
            .map(|&s| Spin::new(s))
            .collect::<Result<Vec<_>>>()?;

        let mut slots: BTreeMap<(usize, usize), [[Option<f64>; 3]; 3]> = BTreeMap::new();
        for e in couplings {
            for site in [e.i, e.j] {
                if site >= n {
                    return Err(Error::SiteOutOfRange { site, n });
                }
            }
            if e.i == e.j {
                return Err(Error::SelfCoupling { site: e.i });
            }
            let (a, b, mu, nu) = if e.i < e.j {
                (e.i, e.j, e.mu.index(), e.nu.index())
            } else {
                (e.j, e.i, e.nu.index(), e.mu.index())
            };
            let slot = &mut slots.entry((a, b)).or_insert([[None; 3]; 3])[mu][nu];
            match *slot {
                Some(prev)
                    if (prev - e.value).abs() > 1e-12 * prev.abs().max(e.value.abs()).max(1.0) =>
                {
                    return Err(Error::ConflictingCoupling {
                        i: a,
                        j: b,
                        a: prev,
                        b: e.value,
                    });
                }
                _ => *slot = Some(e.value),
            }
        }
        let couplings = slots
            .into_iter()
            .map(|(k, s)| {
                let mut block = [[0.0; 3]; 3];
                for mu in 0..3 {
                    for nu in 0..3 {
                        block[mu][nu] = s[mu][nu].unwrap_or(0.0);
                    }
                }
                (k, block)
            })
            .filter(|(_, b)| b.iter().flatten().any(|v| *v != 0.0))
            .collect();
        Ok(Self {
            geometry,
            spins,
            fields,
            couplings,
        })
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn spin(&self, i: usize) -> f64 {
        self.spins[i].value()
    }

    pub fn fields(&self) -> &[[f64; 3]] {
        &self.fields
    }

    /// `block[mu][nu] = J^{i mu, j nu}`; zero for uncoupled pairs and `i == j`.
    pub fn coupling(&self, i: usize, j: usize) -> CouplingBlock {
        if i < j {
            self.couplings
                .get(&(i, j))
                .copied()
                .unwrap_or([[0.0; 3]; 3])
        } else if i > j {
            self.couplings
                .get(&(j, i))
                .map(transpose)
                .unwrap_or([[0.0; 3]; 3])
        } else {
            [[0.0; 3]; 3]
        }
    }

    /// Nonzero coupling blocks with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &CouplingBlock)> + '_ {
        self.couplings.iter().map(|(&(i, j), b)| (i, j, b))
    }

    /// Coupled partners of each site, in ascending order.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n()];
        for (i, j, _) in self.pairs() {
            out[i].push(j);
            out[j].push(i);
        }
        for v in &mut out {
            v.sort_unstable();
        }
        out
    }
}

/// Translationally invariant XYZ array in a uniform transverse field, with
/// couplings stored after division by the common spin.
#[derive(Debug, Clone, PartialEq)]
pub struct XyzModel {
    n: usize,
    spin: Spin,
    profiles: [Vec<f64>; 3],
    field: f64,
    geometry: Geometry,
}

const PROFILE_TOL: f64 = 1e-12;

impl XyzModel {
    /// `jx[l]`, `jy[l]`, `jz[l]` for `l = 0..n`, with `l = 0` entries zero and
    /// `J(l) = J(n - l)`.
    pub fn new(
        n: usize,
        s: f64,
        jx: Vec<f64>,
        jy: Vec<f64>,
        jz: Vec<f64>,
        field: f64,
    ) -> Result<Self> {
        Self::with_geometry(Geometry::Cyclic1D, n, s, [jx, jy, jz], field)
    }

    pub fn with_geometry(
        geometry: Geometry,
        n: usize,
        s: f64,
        profiles: [Vec<f64>; 3],
        field: f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 sites, got {n}"
            )));
        }
        let spin = Spin::new(s)?;
        for (axis, p) in Axis::ALL.iter().zip(&profiles) {
            if p.len() != n {
                return Err(Error::InvalidModel(format!(
                    "J_{} profile has length {}, expected {}",
                    axis.label(),
                    p.len(),
                    n
                )));
            }
            if p[0] != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "J_{}(0) = {} is a self-coupling",
                    axis.label(),
                    p[0]
                )));
            }
            for l in 1..n {
                let (a, b) = (p[l], p[n - l]);
                if (a - b).abs() > PROFILE_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidModel(format!(
                        "J_{}({}) = {} differs from J_{}({}) = {}",
                        axis.label(),
                        l,
                        a,
                        axis.label(),
                        n - l,
                        b
                    )));
                }
            }
        }
        if !field.is_finite() {
            return Err(Error::InvalidModel(format!("field {field} is not finite")));
        }
        Ok(Self {
            n,
            spin,
            profiles,
            field,
            geometry,
        })
    }

    /// Two spins coupled by `J = (jx, jy, jz)`.
    pub fn pair(s: f64, j: [f64; 3], field: f64) -> Result<Self> {
        let p = |v: f64| vec![0.0, v];
        Self::with_geometry(Geometry::Cyclic1D, 2, s, [p(j[0]), p(j[1]), p(j[2])], field)
    }

    /// Cyclic chain with nearest-neighbour coupling `J`.
    pub fn nearest_neighbor_chain(n: usize, s: f64, j: [f64; 3], field: f64) -> Result<Self> {
        if n == 2 {
            return Self::pair(s, j, field);
        }
        let profile = |v: f64| {
            let mut p = vec![0.0; n];
            if n >= 2 {
                p[1] = v;
                p[n - 1] = v;
            }
            p
        };
        Self::with_geometry(
            Geometry::Cyclic1D,
            n,
            s,
            [profile(j[0]), profile(j[1]), profile(j[2])],
            field,
        )
    }

    /// Uniform all-to-all couplings `J_mu(l) = J_mu / (n - 1)` for `l != 0`.
    pub fn fully_connected(n: usize, s: f64, j: [f64; 3], field: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 sites, got {n}"
            )));
        }
        let scale = 1.0 / (n as f64 - 1.0);
        let profile = |v: f64| {
            let mut p = vec![v * scale; n];
            p[0] = 0.0;
            p
        };
        Self::with_geometry(
            Geometry::CompleteGraph,
            n,
            s,
            [profile(j[0]), profile(j[1]), profile(j[2])],
            field,
        )
    }

    pub fn with_field(&self, field: f64) -> Self {
        Self {
            field,
            ..self.clone()
        }
    }

    /// Replaces one separation profile, revalidating the model.
    pub fn with_profile(&self, axis: Axis, profile: Vec<f64>) -> Result<Self> {
        let mut profiles = self.profiles.clone();
        profiles[axis.index()] = profile;
        Self::with_geometry(self.geometry, self.n, self.s(), profiles, self.field)
    }

    pub fn with_spin(&self, s: f64) -> Result<Self> {
        Ok(Self {
            spin: Spin::new(s)?,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn s(&self) -> f64 {
        self.spin.value()
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn profile(&self, axis: Axis) -> &[f64] {
        &self.profiles[axis.index()]
    }

    /// `J_mu^0 = sum_l J_mu(l)`.
    pub fn total_strength(&self, axis: Axis) -> f64 {
        self.profile(axis).iter().sum()
    }

    /// `B_c = J_x^0 - J_z^0`.
    pub fn critical_field(&self) -> f64 {
        self.total_strength(Axis::X) - self.total_strength(Axis::Z)
    }

    /// `J_x(l) >= 0` and `|J_y(l)| <= J_x(l)` for every separation.
    pub fn is_ferromagnetic_type(&self) -> bool {
        let (jx, jy) = (self.profile(Axis::X), self.profile(Axis::Y));
        jx.iter()
            .zip(jy)
            .all(|(&x, &y)| x >= 0.0 && y.abs() <= x + PROFILE_TOL * x.abs().max(1.0))
    }

    /// Whether every site couples to every other with the same strength.
    pub fn is_complete_graph(&self) -> bool {
        self.profiles.iter().all(|p| {
            let first = p[1];
            p[1..]
                .iter()
                .all(|&v| (v - first).abs() <= PROFILE_TOL * first.abs().max(1.0))
        })
    }

    /// Embeds into the general representation, restoring `J^{i mu, j mu} = J_mu(i - j) / s`.
    pub fn to_spin_model(&self) -> SpinModel {
        let n = self.n;
        let s = self.s();
        let mut couplings = BTreeMap::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let l = (i + n - j) % n;
                let mut block = [[0.0; 3]; 3];
                for axis in Axis::ALL {
                    block[axis.index()][axis.index()] = self.profile(axis)[l] / s;
                }
                if block.iter().flatten().any(|v| *v != 0.0) {
                    couplings.insert((i, j), block);
                }
            }
        }
        SpinModel {
            geometry: self.geometry,
            spins: vec![self.spin; n],
            fields: vec![[0.0, 0.0, self.field]; n],
            couplings,
        }
    }

    /// Inverse of [`XyzModel::to_spin_model`]; fails unless the model is a
    /// uniform, translationally invariant XYZ array in a z field.
    pub fn from_spin_model(model: &SpinModel) -> Result<Self> {
        let n = model.n();
        let spin = model.spins()[0];
        if model.spins().iter().any(|&s| s != spin) {
            return Err(Error::InvalidModel("spins are not uniform".into()));
        }
        let field = model.fields()[0][2];
        if model
            .fields()
            .iter()
            .any(|f| f[0] != 0.0 || f[1] != 0.0 || f[2] != field)
        {
            return Err(Error::InvalidModel("field is not uniform along z".into()));
        }
        let s = spin.value();
        let mut profiles = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for l in 1..n {
            let block = model.coupling(l, 0);
            for axis in Axis::ALL {
                profiles[axis.index()][l] = block[axis.index()][axis.index()] * s;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let block = model.coupling(i, j);
                let l = (i + n - j) % n;
                for mu in 0..3 {
                    for nu in 0..3 {
                        let expected = if mu == nu { profiles[mu][l] / s } else { 0.0 };
                        if (block[mu][nu] - expected).abs() > PROFILE_TOL * expected.abs().max(1.0)
                        {
                            return Err(Error::InvalidModel(format!(
                                "coupling between sites {i} and {j} breaks XYZ translational invariance"
                            )));
                        }
                    }
                }
            }
        }
        let geometry = match model.geometry() {
            Geometry::General => Geometry::Cyclic1D,
            g => g,
        };
        Self::with_geometry(geometry, n, s, profiles, field)
    }
}

/// Momentum-space couplings `J_mu^k = sum_l exp(i 2 pi k l / n) J_mu(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCouplings {
    n: usize,
    components: [Vec<f64>; 3],
}

/// Tolerance on the imaginary part: `|Im| <= 1e-10 * max(1, |Re|)`.
pub const FOURIER_IMAG_TOL: f64 = 1e-10;

pub(crate) fn phase_angle(k: usize, l: usize, n: usize) -> f64 {
    2.0 * PI * ((k * l) % n) as f64 / n as f64
}

pub fn fourier_couplings(model: &XyzModel) -> Result<FourierCouplings> {
    let n = model.n();
    let mut components = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for axis in Axis::ALL {
        let profile = model.profile(axis);
        for k in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for (l, &j) in profile.iter().enumerate() {
                let a = phase_angle(k, l, n);
                re += a.cos() * j;
                im += a.sin() * j;
            }
            if im.abs() > FOURIER_IMAG_TOL * re.abs().max(1.0) {
                return Err(Error::ComplexFourier {
                    component: axis.label(),
                    k,
                    imag: im,
                });
            }
            components[axis.index()][k] = re;
        }
    }
    Ok(FourierCouplings { n, components })
}

impl FourierCouplings {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component(&self, axis: Axis) -> &[f64] {
        &self.components[axis.index()]
    }

    pub fn get(&self, axis: Axis, k: usize) -> f64 {
        self.components[axis.index()][k]
    }

    /// Normal-phase `Delta_+^k = (J_x^k + J_y^k) / 2`.
    pub fn delta_plus(&self, k: usize) -> f64 {
        0.5 * (self.get(Axis::X, k) + self.get(Axis::Y, k))
    }

    /// Normal-phase `Delta_-^k = (J_x^k - J_y^k) / 2`.
    pub fn delta_minus(&self, k: usize) -> f64 {
        0.5 * (self.get(Axis::X, k) - self.get(Axis::Y, k))
    }

    /// Separation profiles recovered by the inverse transform.
    pub fn inverse(&self) -> [Vec<f64>; 3] {
        let n = self.n;
        let inv = |c: &Vec<f64>| {
            (0..n)
                .map(|l| {
                    c.iter()
                        .enumerate()
                        .map(|(k, v)| phase_angle(k, l, n).cos() * v)
                        .sum::<f64>()
                        / n as f64
                })
                .collect::<Vec<f64>>()
        };
        [
            inv(&self.components[0]),
            inv(&self.components[1]),
            inv(&self.components[2]),
        ]
    }
}
