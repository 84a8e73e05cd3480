use std::path::{Path, PathBuf};

use serde::Deserialize;
use spinrpa::gaussian::SubsystemSpec;
use spinrpa::model::{Axis, XyzModel};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Pair,
    Chain,
    Complete,
    /// Explicit `J_mu(l)` profiles.
    Profile,
}

/// How uniform couplings are read: `total` is the summed strength
/// `J_mu^0 = sum_l J_mu(l)`, `bond` the value on each coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    #[default]
    Total,
    Bond,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub geometry: GeometryKind,
    pub n: Option<usize>,
    pub s: Option<f64>,
    /// Several spin values swept in one run; overrides `s`.
    pub spins: Option<Vec<f64>>,
    pub couplings: Option<[f64; 3]>,
    #[serde(default)]
    pub scaling: Scaling,
    pub jx: Option<Vec<f64>>,
    pub jy: Option<Vec<f64>>,
    pub jz: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldUnits {
    #[default]
    Absolute,
    /// Grid values are multiples of `B_c`.
    Critical,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub b_min: f64,
    pub b_max: f64,
    pub points: usize,
    #[serde(default)]
    pub units: FieldUnits,
}

/// A subsystem `A`, given as a leading block (`block`, optional `split`),
/// an explicit site list (`sites`), or a bipartition (`b`, `c`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemConfig {
    pub name: Option<String>,
    pub block: Option<usize>,
    pub split: Option<usize>,
    pub sites: Option<Vec<usize>>,
    pub b: Option<Vec<usize>>,
    pub c: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Methods {
    #[default]
    Rpa,
    Analytic,
    Exact,
    All,
}

impl Methods {
    pub fn rpa(self) -> bool {
        matches!(self, Methods::Rpa | Methods::All)
    }

    pub fn analytic(self) -> bool {
        matches!(self, Methods::Analytic | Methods::All)
    }

    pub fn exact(self) -> bool {
        matches!(self, Methods::Exact | Methods::All)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corrections {
    #[serde(default = "yes")]
    pub parity: bool,
    #[serde(default = "default_threshold")]
    pub overlap_threshold: f64,
}

fn yes() -> bool {
    true
}

fn default_threshold() -> f64 {
    spinrpa::parity::DEFAULT_OVERLAP_THRESHOLD
}

impl Default for Corrections {
    fn default() -> Self {
        Self {
            parity: true,
            overlap_threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactBlock {
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
}

fn default_cap() -> usize {
    spinrpa::exact::DIMENSION_CAP
}

impl Default for ExactBlock {
    fn default() -> Self {
        Self {
            dimension_cap: default_cap(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_spin_tol")]
    pub entropy: f64,
    #[serde(default = "default_spin_tol")]
    pub negativity: f64,
    #[serde(default = "default_analytic_tol")]
    pub analytic: f64,
}

fn default_spin_tol() -> f64 {
    0.03
}

fn default_analytic_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            entropy: default_spin_tol(),
            negativity: default_spin_tol(),
            analytic: default_analytic_tol(),
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            entropy: tol,
            negativity: tol,
            analytic: tol,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelConfig,
    pub sweep: SweepBlock,
    pub subsystems: Vec<SubsystemConfig>,
    #[serde(default)]
    pub methods: Methods,
    #[serde(default)]
    pub corrections: Corrections,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub exact: ExactBlock,
    #[serde(default)]
    pub compare: Tolerances,
}

/// A validated subsystem with its CSV label.
#[derive(Debug, Clone)]
pub struct Subsystem {
    pub label: String,
    pub spec: SubsystemSpec,
}

impl Subsystem {
    /// Whether `A` covers every site.
    pub fn is_global(&self, n: usize) -> bool {
        self.spec.len() == n
    }

    /// Size of the transposed part, when `A` is split.
    pub fn split(&self) -> Option<usize> {
        self.spec
            .has_bipartition()
            .then(|| self.spec.transposed().len())
    }
}

fn join(sites: &[usize]) -> String {
    sites
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

impl SubsystemConfig {
    fn resolve(&self, n: usize) -> Result<Subsystem, String> {
        let (spec, label) =
            match (self.block, &self.sites, &self.b, &self.c) {
                (Some(len), None, None, None) => match self.split {
                    Some(m) => (SubsystemSpec::split_block(len, m), format!("L{len}m{m}")),
                    None => (SubsystemSpec::block(len), format!("L{len}")),
                },
                (None, Some(sites), None, None) if self.split.is_none() => {
                    (SubsystemSpec::new(sites.clone()), join(sites))
                }
                (None, None, Some(b), Some(c)) if self.split.is_none() => (
                    SubsystemSpec::bipartition(b.clone(), c.clone()),
                    format!("{}|{}", join(b), join(c)),
                ),
                _ => return Err(
                    "give exactly one of `block` (with optional `split`), `sites`, or `b` and `c`"
                        .into(),
                ),
            };
        let spec = spec.map_err(|e| e.to_string())?;
        if let Some(&bad) = spec.sites().iter().find(|&&i| i >= n) {
            return Err(format!("site {bad} out of range for {n} sites"));
        }
        Ok(Subsystem {
            label: self.name.clone().unwrap_or(label),
            spec,
        })
    }
}

/// A config checked against its own model: spin values, field grid and
/// subsystems resolved.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: SweepConfig,
    pub spins: Vec<f64>,
    pub ratios_or_fields: Vec<f64>,
    pub subsystems: Vec<Subsystem>,
    pub n: usize,
}

impl Plan {
    pub fn model(&self, s: f64) -> Result<XyzModel, CliError> {
        build_model(&self.config.model, self.n, s).map_err(CliError::Config)
    }

    /// Field values for spin `s`, in absolute units.
    pub fn fields(&self, model: &XyzModel) -> Vec<f64> {
        match self.config.sweep.units {
            FieldUnits::Absolute => self.ratios_or_fields.clone(),
            FieldUnits::Critical => {
                let bc = model.critical_field();
                self.ratios_or_fields.iter().map(|r| r * bc).collect()
            }
        }
    }

    pub fn methods(&self) -> Methods {
        self.config.methods
    }

    /// Whether the collective (Dicke) oracle replaces the product basis.
    pub fn collective(&self, s: f64) -> bool {
        self.config.model.geometry == GeometryKind::Complete && s == 0.5
    }
}

fn model_n(cfg: &ModelConfig) -> Result<usize, String> {
    match cfg.geometry {
        GeometryKind::Pair => match cfg.n {
            None | Some(2) => Ok(2),
            Some(n) => Err(format!("model.n = {n} for a pair")),
        },
        GeometryKind::Profile => {
            let len = cfg
                .jx
                .as_ref()
                .map(|p| p.len())
                .ok_or("model.jx is required for a profile model")?;
            match cfg.n {
                Some(n) if n != len => Err(format!("model.n = {n} but model.jx has {len} entries")),
                _ => Ok(len),
            }
        }
        _ => cfg.n.ok_or_else(|| "model.n is required".to_string()),
    }
}

fn build_model(cfg: &ModelConfig, n: usize, s: f64) -> Result<XyzModel, String> {
    let err = |e: spinrpa::Error| format!("model: {e}");
    if cfg.geometry == GeometryKind::Profile {
        let get = |p: &Option<Vec<f64>>, axis: char| {
            p.clone()
                .ok_or_else(|| format!("model.j{axis} is required for a profile model"))
        };
        return XyzModel::new(
            n,
            s,
            get(&cfg.jx, 'x')?,
            get(&cfg.jy, 'y')?,
            get(&cfg.jz, 'z')?,
            0.0,
        )
        .map_err(err);
    }
    let j = cfg.couplings.ok_or("model.couplings is required")?;
    if cfg.jx.is_some() || cfg.jy.is_some() || cfg.jz.is_some() {
        return Err("model.jx/jy/jz only apply to geometry = \"profile\"".into());
    }
    // bonds touching one site
    let degree = match cfg.geometry {
        GeometryKind::Pair => 1.0,
        GeometryKind::Chain if n == 2 => 1.0,
        GeometryKind::Chain => 2.0,
        _ => n as f64 - 1.0,
    };
    let j = match cfg.scaling {
        Scaling::Total => j,
        Scaling::Bond => j.map(|v| v * degree),
    };
    let j_chain = j.map(|v| v / degree);
    match cfg.geometry {
        GeometryKind::Pair => XyzModel::pair(s, j, 0.0),
        GeometryKind::Chain => XyzModel::nearest_neighbor_chain(n, s, j_chain, 0.0),
        _ => XyzModel::fully_connected(n, s, j, 0.0),
    }
    .map_err(err)
}

/// Summed couplings `[J_x^0, J_y^0, J_z^0]` of a uniform model.
pub fn totals(model: &XyzModel) -> [f64; 3] {
    [Axis::X, Axis::Y, Axis::Z].map(|a| model.total_strength(a))
}

impl SweepConfig {
    pub fn parse(text: &str, json: bool) -> Result<Self, String> {
        if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    /// Reads TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, json).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn plan(self) -> Result<Plan, CliError> {
        let fail = |msg: String| CliError::Config(msg);
        let n = model_n(&self.model).map_err(fail)?;
        let spins = match (&self.model.spins, self.model.s) {
            (Some(list), _) if !list.is_empty() => list.clone(),
            (Some(_), _) => return Err(fail("model.spins is empty".into())),
            (None, Some(s)) => vec![s],
            (None, None) => return Err(fail("model.s or model.spins is required".into())),
        };
        for &s in &spins {
            build_model(&self.model, n, s).map_err(fail)?;
        }

        let sw = &self.sweep;
        if sw.points == 0 {
            return Err(fail("sweep.points must be positive".into()));
        }
        if !sw.b_min.is_finite() || !sw.b_max.is_finite() {
            return Err(fail("sweep.b_min and sweep.b_max must be finite".into()));
        }
        if sw.points > 1 && !(sw.b_max > sw.b_min) {
            return Err(fail(format!(
                "sweep grid must increase strictly: b_min = {}, b_max = {}",
                sw.b_min, sw.b_max
            )));
        }
        let grid: Vec<f64> = if sw.points == 1 {
            vec![sw.b_min]
        } else {
            let step = (sw.b_max - sw.b_min) / (sw.points - 1) as f64;
            (0..sw.points)
                .map(|k| {
                    if k + 1 == sw.points {
                        sw.b_max
                    } else {
                        sw.b_min + step * k as f64
                    }
                })
                .collect()
        };

        if self.subsystems.is_empty() {
            return Err(fail("at least one [[subsystems]] entry is required".into()));
        }
        let subsystems = self
            .subsystems
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.resolve(n)
                    .map_err(|e| fail(format!("subsystems[{k}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let plan = Plan {
            spins,
            ratios_or_fields: grid,
            subsystems,
            n,
            config: self,
        };
        if plan.methods().exact() {
            plan.check_exact_size()?;
        }
        if !(plan.config.corrections.overlap_threshold > 0.0) {
            return Err(fail(
                "corrections.overlap_threshold must be positive".into(),
            ));
        }
        Ok(plan)
    }

    pub fn with_methods(mut self, methods: Methods) -> Self {
        self.methods = methods;
        self
    }
}

impl Plan {
    pub(crate) fn check_exact_size(&self) -> Result<(), CliError> {
        let cap = self.config.exact.dimension_cap;
        for &s in &self.spins {
            if self.collective(s) {
                continue;
            }
            let local = (2.0 * s).round() as u32 + 1;
            let dim = (local as f64).powi(self.n as i32);
            if dim > cap as f64 {
                return Err(CliError::Config(format!(
                    "exact oracle needs a {dim:.0}-dimensional space for n = {}, s = {s}, above the cap {cap}; \
                     reduce n or s (or use s = 1/2 on the complete graph)",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"
        [model]
        geometry = "pair"
        spins = [0.5, 10]
        couplings = [1.0, 0.5, 0.0]

        [sweep]
        b_min = 0.0
        b_max = 2.0
        points = 5

        [[subsystems]]
        block = 1

        [[subsystems]]
        block = 2
        split = 1
    "#;

    #[test]
    fn pair_config_resolves() {
        let plan = SweepConfig::parse(PAIR, false).unwrap().plan().unwrap();
        assert_eq!(plan.n, 2);
        assert_eq!(plan.spins, vec![0.5, 10.0]);
        assert_eq!(plan.ratios_or_fields, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(plan.subsystems[1].label, "L2m1");
        assert_eq!(plan.subsystems[1].split(), Some(1));
    }

    #[test]
    fn json_and_toml_agree() {
        let json = r#"{
            "model": {"geometry": "pair", "spins": [0.5, 10], "couplings": [1.0, 0.5, 0.0]},
            "sweep": {"b_min": 0.0, "b_max": 2.0, "points": 5},
            "subsystems": [{"block": 1}, {"block": 2, "split": 1}]
        }"#;
        let a = SweepConfig::parse(PAIR, false).unwrap().plan().unwrap();
        let b = SweepConfig::parse(json, true).unwrap().plan().unwrap();
        assert_eq!(a.ratios_or_fields, b.ratios_or_fields);
        assert_eq!(a.spins, b.spins);
    }

    #[test]
    fn unknown_key_names_line_and_field() {
        let text = PAIR.replace("points = 5", "points = 5\nstep = 0.1");
        let err = SweepConfig::parse(&text, false).unwrap_err();
        assert!(err.contains("step"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn bad_grid_and_sites_rejected() {
        let text = PAIR.replace("b_max = 2.0", "b_max = -1.0");
        assert!(SweepConfig::parse(&text, false).unwrap().plan().is_err());
        let text = PAIR.replace("block = 1", "sites = [3]");
        let err = SweepConfig::parse(&text, false)
            .unwrap()
            .plan()
            .unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn bond_scaling_matches_total() {
        let mut cfg = SweepConfig::parse(PAIR, false).unwrap().model;
        cfg.geometry = GeometryKind::Complete;
        let total = build_model(&cfg, 5, 0.5).unwrap();
        cfg.scaling = Scaling::Bond;
        cfg.couplings = Some([0.25, 0.125, 0.0]);
        let bond = build_model(&cfg, 5, 0.5).unwrap();
        assert_eq!(totals(&total), totals(&bond));
        cfg.geometry = GeometryKind::Chain;
        cfg.couplings = Some([1.0, 0.5, 0.0]);
        let chain = build_model(&cfg, 6, 0.5).unwrap();
        assert_eq!(totals(&chain), [2.0, 1.0, 0.0]);
    }

    #[test]
    fn exact_cap_suggests_smaller_model() {
        let text = format!(
            "methods = \"exact\"\n{}",
            PAIR.replace("geometry = \"pair\"", "geometry = \"chain\"\nn = 14")
        );
        let err = SweepConfig::parse(&text, false)
            .unwrap()
            .plan()
            .unwrap_err();
        assert!(err.to_string().contains("reduce n or s"), "{err}");
    }
}
