//! Run configuration: TOML with nested sections, defaults for every field,
//! unknown keys rejected, and `key.path=value` overrides.

use crate::configuration::Psi;
use crate::error::{Error, Result};
use crate::gibbs_kernels::{McmcConfig, MoveMix};
use crate::loop_measures::LoopMeasureSpec;
use crate::loop_paths::Domain;
use crate::potentials::{Family, ModelParams, Potential};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub measure: MeasureSection,
    pub domain: DomainSection,
    pub mcmc: McmcSection,
    pub seeds: SeedSection,
    pub output: OutputSection,
    pub verify: VerifySection,
    pub tempered: TemperedSection,
    pub gn: GnSection,
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dim: usize,
    pub beta: f64,
    pub mu: f64,
    pub potential: PotentialSection,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { dim: 3, beta: 1.0, mu: 0.0, potential: PotentialSection::default() }
    }
}

/// `family` is one of `none`, `hard_core`, `gaussian`, `compact_bump`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_cut: Option<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { family: "none".into(), amplitude: None, sigma: None, a: None, r_cut: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Grid steps per period β.
    pub m: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { m: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureSection {
    pub j_max: usize,
    pub tail_tolerance: f64,
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self { j_max: 64, tail_tolerance: 1e-2 }
    }
}

/// Either explicit corners or `side` for the centred cube; the default is `[0, 2]^d`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    /// Snapshot file with the conditioning configuration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub birth: f64,
    pub death: f64,
    pub rebridge: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_segment: Option<usize>,
    pub rejection_cap: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_every: Option<u64>,
    pub neighbor_grid: bool,
    /// `length`, `diameter` or `length_pow`.
    pub psi: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi_power: Option<f64>,
}

impl Default for McmcSection {
    fn default() -> Self {
        let c = McmcConfig::default();
        Self {
            steps: c.steps,
            burn_in: c.burn_in,
            thinning: c.thinning,
            birth: c.mix.birth,
            death: c.mix.death,
            rebridge: c.mix.rebridge,
            max_segment: None,
            rejection_cap: c.rejection_cap,
            verify_every: None,
            neighbor_grid: true,
            psi: "length".into(),
            psi_power: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub master: u64,
    pub replicas: u32,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self { master: 0, replicas: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub snapshots: bool,
    /// Snapshots larger than this are skipped.
    pub snapshot_max_bytes: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "run".into(), snapshots: false, snapshot_max_bytes: 16 << 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Independent draws for Monte Carlo estimators.
    pub samples: usize,
    /// Level of distributional tests.
    pub alpha: f64,
    /// Standard errors allowed in mean comparisons.
    pub z: f64,
    /// Inner-chain steps of the consistency test.
    pub inner_steps: u64,
    /// Window `Δ`; defaults to the middle third of the box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_upper: Option<Vec<f64>>,
    /// Exponent of the exp-moment test.
    pub c: f64,
    pub decay_js: Vec<usize>,
    pub tail_js: Vec<usize>,
    pub tail_points: usize,
    /// `dir`, `free` or `exc` for `estimate-z`.
    pub kind: String,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            samples: 4000,
            alpha: 0.01,
            z: 3.0,
            inner_steps: 2000,
            window_lower: None,
            window_upper: None,
            c: 0.1,
            decay_js: vec![4, 8, 12, 16, 20, 24],
            tail_js: vec![1, 4, 16],
            tail_points: 12,
            kind: "dir".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperedSection {
    pub alpha: f64,
    pub eps: f64,
    pub n_max: usize,
    pub calibration_samples: usize,
}

impl Default for TemperedSection {
    fn default() -> Self {
        Self { alpha: 0.5, eps: 0.01, n_max: 4, calibration_samples: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnSection {
    pub n: usize,
    /// Tiles `z ∈ {-window..window}^d`.
    pub window: usize,
}

impl Default for GnSection {
    fn default() -> Self {
        Self { n: 2, window: 0 }
    }
}

fn cfg_err<T>(path: &str, msg: impl Into<String>) -> Result<T> {
    Err(Error::Config { path: path.into(), msg: msg.into() })
}

fn with_path<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Domain(m) | Error::Structural(m) => Error::Config { path: path.into(), msg: m },
        other => other,
    })
}

/// Everything a run needs, built from a validated [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Resolved {
    pub params: ModelParams,
    pub spec: LoopMeasureSpec,
    pub mcmc: McmcConfig,
    pub window: Domain,
    /// `to_echo_toml` of the source config.
    pub resolved_toml: String,
}

impl RunConfig {
    /// Parse TOML text, reporting the dotted path of the offending field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| Error::Config { path: "<file>".into(), msg: e.message().to_string() })?;
        Self::from_value(value)
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::Config { path, msg: e.into_inner().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config { path: path.display().to_string(), msg: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    /// Apply `key.path=value` overrides; values parse as TOML, else as strings.
    pub fn with_overrides(&self, sets: &[String]) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Format(e.to_string()))?;
        for s in sets {
            let (key, raw) = s.split_once('=').ok_or_else(|| Error::Config { path: s.clone(), msg: "override must look like key.path=value".into() })?;
            let key = key.trim();
            let value = parse_scalar(raw.trim());
            let mut node = &mut root;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                let table = node.as_table_mut().ok_or_else(|| Error::Config { path: key.into(), msg: "not a section".into() })?;
                if i + 1 == parts.len() {
                    table.insert(part.to_string(), value.clone());
                    break;
                }
                node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            }
        }
        Self::from_value(root)
    }

    /// Resolved config as TOML, with the code version in a leading comment.
    pub fn to_resolved_toml(&self) -> String {
        format!("# loopsoup {}\n{}", env!("CARGO_PKG_VERSION"), toml::to_string(self).expect("config serializes"))
    }

    /// Resolved TOML with the run directory blanked, so equal runs written
    /// to different places produce identical files.
    pub fn to_echo_toml(&self) -> String {
        let mut c = self.clone();
        c.output.dir.clear();
        c.to_resolved_toml()
    }

    pub fn potential(&self) -> Result<Potential> {
        let p = &self.model.potential;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config { path: format!("model.potential.{name}"), msg: format!("required for family `{}`", p.family) });
        let family = match p.family.as_str() {
            "none" => Family::None,
            "hard_core" => Family::HardCore { a: need(p.a, "a")? },
            "gaussian" => Family::Gaussian { amplitude: need(p.amplitude, "amplitude")?, sigma: need(p.sigma, "sigma")? },
            "compact_bump" => Family::CompactBump { amplitude: need(p.amplitude, "amplitude")?, a: need(p.a, "a")? },
            other => return cfg_err("model.potential.family", format!("unknown family `{other}`")),
        };
        let unused = match family {
            Family::None => [p.amplitude.map(|_| "amplitude"), p.sigma.map(|_| "sigma"), p.a.map(|_| "a")],
            Family::HardCore { .. } => [p.amplitude.map(|_| "amplitude"), p.sigma.map(|_| "sigma"), None],
            Family::Gaussian { .. } => [p.a.map(|_| "a"), None, None],
            Family::CompactBump { .. } => [p.sigma.map(|_| "sigma"), None, None],
        };
        if let Some(name) = unused.into_iter().flatten().next() {
            return cfg_err(&format!("model.potential.{name}"), format!("not a parameter of family `{}`", p.family));
        }
        with_path("model.potential", Potential::new(family, p.r_cut))
    }

    pub fn domain(&self) -> Result<Domain> {
        let d = self.model.dim;
        let dm = &self.domain;
        match (&dm.lower, &dm.upper, dm.side) {
            (None, None, None) => with_path("domain", Domain::cube(d, 0.0, 2.0)),
            (None, None, Some(s)) => with_path("domain.side", Domain::centered_cube(d, s)),
            (Some(lo), Some(hi), None) => {
                if lo.len() != d || hi.len() != d {
                    return cfg_err("domain.lower", format!("corners must have {d} coordinates"));
                }
                with_path("domain", Domain::new(lo.clone(), hi.clone()))
            }
            (_, _, Some(_)) => cfg_err("domain.side", "give either side or lower/upper, not both"),
            _ => cfg_err("domain.upper", "lower and upper must be given together"),
        }
    }

    pub fn psi(&self) -> Result<Psi> {
        match (self.mcmc.psi.as_str(), self.mcmc.psi_power) {
            ("length", None) => Ok(Psi::Length),
            ("diameter", None) => Ok(Psi::Diameter),
            ("length_pow", Some(p)) if p.is_finite() => Ok(Psi::LengthPow(p)),
            ("length_pow", _) => cfg_err("mcmc.psi_power", "required and finite for psi = length_pow"),
            ("length" | "diameter", Some(_)) => cfg_err("mcmc.psi_power", "only used with psi = length_pow"),
            (other, _) => cfg_err("mcmc.psi", format!("unknown observable `{other}`")),
        }
    }

    pub fn mcmc_config(&self) -> Result<McmcConfig> {
        let m = &self.mcmc;
        let c = McmcConfig {
            steps: m.steps,
            burn_in: m.burn_in,
            thinning: m.thinning,
            mix: MoveMix { birth: m.birth, death: m.death, rebridge: m.rebridge },
            max_segment: m.max_segment,
            neighbor_grid: m.neighbor_grid,
            verify_every: m.verify_every,
            log_moves: false,
            psi: self.psi()?,
            rejection_cap: m.rejection_cap,
        };
        with_path("mcmc", c.validate())?;
        Ok(c)
    }

    pub fn window(&self, dom: &Domain) -> Result<Domain> {
        let v = &self.verify;
        let w = match (&v.window_lower, &v.window_upper) {
            (Some(lo), Some(hi)) => with_path("verify.window_lower", Domain::new(lo.clone(), hi.clone()))?,
            (None, None) => {
                let lo: Vec<f64> = dom.lower().iter().zip(dom.upper()).map(|(a, b)| a + (b - a) / 3.0).collect();
                let hi: Vec<f64> = dom.lower().iter().zip(dom.upper()).map(|(a, b)| a + 2.0 * (b - a) / 3.0).collect();
                Domain::new(lo, hi)?
            }
            _ => return cfg_err("verify.window_upper", "window_lower and window_upper must be given together"),
        };
        if !w.is_subset_of(dom) {
            return cfg_err("verify.window_lower", "window must lie inside the domain");
        }
        Ok(w)
    }

    /// Validate every field and build the run objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let pot = self.potential()?;
        let md = &self.model;
        if md.dim < 3 {
            return cfg_err("model.dim", "dimension must be at least 3");
        }
        if !(md.beta > 0.0 && md.beta.is_finite()) {
            return cfg_err("model.beta", "must be positive and finite");
        }
        if md.mu.is_nan() || md.mu == f64::INFINITY {
            return cfg_err("model.mu", "must be a number below +inf");
        }
        let params = with_path("model", ModelParams::new(md.dim, md.beta, md.mu, pot))?;
        if self.grid.m < 2 {
            return cfg_err("grid.m", "need at least 2 steps per period");
        }
        if self.measure.j_max == 0 {
            return cfg_err("measure.j_max", "must be at least 1");
        }
        if !(self.measure.tail_tolerance > 0.0) {
            return cfg_err("measure.tail_tolerance", "must be positive");
        }
        let dom = self.domain()?;
        let spec = with_path("measure", LoopMeasureSpec::new(dom.clone(), params, self.grid.m, self.measure.j_max, self.measure.tail_tolerance))?;
        let mcmc = self.mcmc_config()?;
        if self.seeds.replicas == 0 {
            return cfg_err("seeds.replicas", "must be at least 1");
        }
        let v = &self.verify;
        if v.samples < 2 {
            return cfg_err("verify.samples", "must be at least 2");
        }
        if !(v.alpha > 0.0 && v.alpha < 1.0) {
            return cfg_err("verify.alpha", "must lie in (0, 1)");
        }
        if !(v.z > 0.0) {
            return cfg_err("verify.z", "must be positive");
        }
        if !v.c.is_finite() {
            return cfg_err("verify.c", "must be finite");
        }
        if v.decay_js.len() < 3 || v.decay_js.contains(&0) {
            return cfg_err("verify.decay_js", "need at least three positive loop lengths");
        }
        if v.tail_js.is_empty() || v.tail_js.contains(&0) {
            return cfg_err("verify.tail_js", "need positive loop lengths");
        }
        if v.tail_points < 3 {
            return cfg_err("verify.tail_points", "need at least 3 thresholds");
        }
        if !["dir", "free", "exc"].contains(&v.kind.as_str()) {
            return cfg_err("verify.kind", "must be dir, free or exc");
        }
        let t = &self.tempered;
        if !(t.alpha > 0.0 && t.alpha <= 1.0) {
            return cfg_err("tempered.alpha", "must lie in (0, 1]");
        }
        if !(t.eps > 0.0 && t.eps < 1.0) {
            return cfg_err("tempered.eps", "must lie in (0, 1)");
        }
        if t.n_max == 0 || t.calibration_samples == 0 {
            return cfg_err("tempered.n_max", "window and calibration sample count must be positive");
        }
        if self.gn.n == 0 {
            return cfg_err("gn.n", "must be at least 1");
        }
        let window = self.window(&dom)?;
        Ok(Resolved { params, spec, mcmc, window, resolved_toml: self.to_echo_toml() })
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
