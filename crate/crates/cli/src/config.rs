//! Run configuration: a versioned TOML schema with unknown keys rejected.

use std::path::{Path, PathBuf};

use magnon_probe::hybrid::CavityParams;
use magnon_probe::{LatticeSpec, LogBase, ModelParams, PathSegment, ProbeMode, SqueezeBranch, Wavevector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_owned(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    Square,
    Cubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub lattice: Lattice,
    #[serde(default = "one")]
    pub lattice_constant: f64,
    /// `J` in meV.
    pub exchange: f64,
    /// `K_z` in meV.
    pub anisotropy: f64,
    pub spin: f64,
    /// `μ_B B` in meV.
    pub zeeman: Option<f64>,
    /// `B` in tesla; converted with the Bohr magneton.
    pub field_tesla: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub a0: f64,
    pub omega_c: f64,
    pub d: Option<f64>,
    #[serde(default)]
    pub phase_kr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tuning {
    /// `ω_q = ω_mode` and `d ω_c = |g_mph|` at every k.
    ZeroDetuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonSection {
    pub e_c: Option<f64>,
    pub e_j: Option<f64>,
    pub omega_q: Option<f64>,
    pub tune: Option<Tuning>,
}

/// How the qubit frequency is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QubitSpec {
    Transmon { e_c: f64, e_j: f64 },
    Direct(f64),
    ZeroDetuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 }).collect()
    }

    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        if self.count == 0 {
            return Err(invalid(field, "count must be at least 1"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(invalid(field, "bounds must be finite"));
        }
        if self.stop < self.start {
            return Err(invalid(field, "stop must not be below start"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub path: Vec<Segment>,
    /// Also run the dispersion and Rabi sweeps at zero field.
    #[serde(default)]
    pub compare_zero_field: bool,
    pub r_grid: Option<Grid>,
    /// Δ-indexed entanglement variant.
    pub epr_grid: Option<Grid>,
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    #[default]
    Nats,
    Bits,
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::Nats => LogBase::Nats,
            Base::Bits => LogBase::Bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub log_base: Base,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_dir(), formats: default_formats(), log_base: Base::Nats }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Pi,
    Zero,
}

impl From<Branch> for SqueezeBranch {
    fn from(b: Branch) -> Self {
        match b {
            Branch::Pi => SqueezeBranch::Pi,
            Branch::Zero => SqueezeBranch::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertSection {
    pub f_measured: Option<f64>,
    pub branch: Branch,
    /// Wavevector whose `λ = A₀|k|√S` and mode frequency are used.
    pub k: Option<[f64; 3]>,
    /// Direct `λ`, instead of `k`.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    #[default]
    Alpha,
    Beta,
}

impl From<Probe> for ProbeMode {
    fn from(p: Probe) -> Self {
        match p {
            Probe::Alpha => ProbeMode::Alpha,
            Probe::Beta => ProbeMode::Beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub probe_mode: Probe,
    pub model: Option<ModelSection>,
    pub cavity: Option<CavitySection>,
    pub transmon: Option<TransmonSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    pub invert: Option<InvertSection>,
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.to_owned(), message },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: PathBuf::from("<config>"), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that apply regardless of the command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if let Some(m) = &self.model {
            positive("model.lattice_constant", m.lattice_constant)?;
            finite("model.exchange", m.exchange)?;
            finite("model.anisotropy", m.anisotropy)?;
            positive("model.spin", m.spin)?;
            match (m.zeeman, m.field_tesla) {
                (Some(_), Some(_)) => return Err(invalid("model", "give at most one of zeeman and field_tesla")),
                (Some(z), None) => finite("model.zeeman", z)?,
                (None, Some(b)) => finite("model.field_tesla", b)?,
                (None, None) => {}
            }
        }
        if let Some(c) = &self.cavity {
            finite("cavity.a0", c.a0)?;
            positive("cavity.omega_c", c.omega_c)?;
            if let Some(d) = c.d {
                finite("cavity.d", d)?;
            }
            finite("cavity.phase_kr", c.phase_kr)?;
        }
        if self.transmon.is_some() {
            self.qubit()?;
        }
        for (i, s) in self.sweep.path.iter().enumerate() {
            if s.count < 2 {
                return Err(invalid(&format!("sweep.path[{i}].count"), "a segment needs at least 2 points"));
            }
            if s.start.iter().chain(&s.end).any(|v| !v.is_finite()) {
                return Err(invalid(&format!("sweep.path[{i}]"), "coordinates must be finite"));
            }
        }
        if let Some(g) = &self.sweep.r_grid {
            g.validate("sweep.r_grid")?;
            if g.start < 0.0 {
                return Err(invalid("sweep.r_grid.start", "r must be non-negative"));
            }
        }
        if let Some(g) = &self.sweep.epr_grid {
            g.validate("sweep.epr_grid")?;
            if g.start <= 0.0 {
                return Err(invalid("sweep.epr_grid.start", "Δ must be positive"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "at least one of csv, json"));
        }
        if let Some(inv) = &self.invert {
            match (inv.k.is_some(), inv.lambda.is_some()) {
                (true, true) | (false, false) => return Err(invalid("invert", "give exactly one of k and lambda")),
                _ => {}
            }
            if let Some(l) = inv.lambda {
                positive("invert.lambda", l)?;
            }
            if let Some(f) = inv.f_measured {
                positive("invert.f_measured", f)?;
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelParams<f64>, ConfigError> {
        let m = self.model.as_ref().ok_or_else(|| invalid("model", "section is required for this command"))?;
        let lattice = match m.lattice {
            Lattice::Square => LatticeSpec::square(),
            Lattice::Cubic => LatticeSpec::cubic(),
        };
        let lattice = LatticeSpec { lattice_constant: m.lattice_constant, ..lattice };
        let mut p = ModelParams::new(lattice, m.exchange, m.anisotropy, m.spin);
        if let Some(z) = m.zeeman {
            p = p.with_zeeman(z);
        }
        if let Some(b) = m.field_tesla {
            p = p.with_field_tesla(b);
        }
        p.validate().map_err(|e| invalid("model", e.to_string()))?;
        Ok(p)
    }

    pub fn cavity(&self) -> Result<CavityParams<f64>, ConfigError> {
        let c = self.cavity.as_ref().ok_or_else(|| invalid("cavity", "section is required for this command"))?;
        Ok(CavityParams { a0: c.a0, omega_c: c.omega_c, d: c.d.unwrap_or(0.0), phase_kr: c.phase_kr })
    }

    pub fn qubit(&self) -> Result<QubitSpec, ConfigError> {
        let t = self.transmon.as_ref().ok_or_else(|| invalid("transmon", "section is required for this command"))?;
        let spec = match (t.e_c, t.e_j, t.omega_q, t.tune) {
            (Some(e_c), Some(e_j), None, None) => {
                positive("transmon.e_c", e_c)?;
                positive("transmon.e_j", e_j)?;
                QubitSpec::Transmon { e_c, e_j }
            }
            (None, None, Some(w), None) => {
                positive("transmon.omega_q", w)?;
                QubitSpec::Direct(w)
            }
            (None, None, None, Some(Tuning::ZeroDetuning)) => QubitSpec::ZeroDetuning,
            (Some(_), None, _, _) | (None, Some(_), _, _) => {
                return Err(invalid("transmon", "e_c and e_j must be given together"))
            }
            _ => return Err(invalid("transmon", "give exactly one of {e_c, e_j}, omega_q, tune")),
        };
        Ok(spec)
    }

    /// The qubit plus the cavity detuning it needs; `d` is derived under zero-detuning tuning.
    pub fn probe_setup(&self) -> Result<(CavityParams<f64>, QubitSpec), ConfigError> {
        let qubit = self.qubit()?;
        let cavity = self.cavity()?;
        if qubit != QubitSpec::ZeroDetuning && self.cavity.as_ref().is_some_and(|c| c.d.is_none()) {
            return Err(invalid("cavity.d", "required unless transmon.tune = \"zero-detuning\""));
        }
        Ok((cavity, qubit))
    }

    pub fn path(&self) -> Result<Vec<Wavevector<f64>>, ConfigError> {
        let segs: Vec<PathSegment<f64>> =
            self.sweep.path.iter().map(|s| PathSegment { start: s.start, end: s.end, count: s.count }).collect();
        let lattice = self.model()?.lattice;
        magnon_probe::kpath(&lattice, &segs).map_err(|e| invalid("sweep.path", e.to_string()))
    }

    /// Semantic fingerprint: everything except where and in which formats the
    /// output is written.
    pub fn hash(&self, extra: &str) -> String {
        let mut semantic = self.clone();
        semantic.output.directory = PathBuf::new();
        semantic.output.formats.clear();
        let canon = serde_json::to_string(&semantic).expect("config serialises");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        h.update([0u8]);
        h.update(extra.as_bytes());
        hex::encode(h.finalize())[..12].to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema = 1
[model]
lattice = "square"
exchange = 1.0
anisotropy = 0.01
spin = 0.5
[[sweep.path]]
start = [0.0, 0.0, 0.0]
end = [3.141592653589793, 0.0, 0.0]
count = 5
"#;

    #[test]
    fn parses_minimal() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.path().unwrap().len(), 5);
        assert_eq!(c.output.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn unknown_key_is_an_error_with_location() {
        let err = RunConfig::parse(&BASE.replace("spin = 0.5", "spin = 0.5\nspn = 1.0")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("spn") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn schema_version_checked() {
        let err = RunConfig::parse(&BASE.replace("schema = 1", "schema = 7")).unwrap_err();
        assert!(err.to_string().starts_with("schema"));
    }

    #[test]
    fn transmon_exclusivity() {
        let with = |t: &str| {
            RunConfig::parse(&format!("{BASE}[cavity]\na0 = 1.0\nomega_c = 0.05\nd = 0.1\n[transmon]\n{t}\n"))
        };
        assert!(with("omega_q = 3.0").is_ok());
        assert!(with("e_c = 0.2\ne_j = 20.0").is_ok());
        assert!(with("tune = \"zero-detuning\"").is_ok());
        assert!(with("e_c = 0.2\ne_j = 20.0\nomega_q = 3.0").is_err());
        assert!(with("e_c = 0.2").is_err());
        assert!(with("").is_err());
    }

    #[test]
    fn hash_tracks_semantics_only() {
        let a = RunConfig::parse(BASE).unwrap();
        let mut b = a.clone();
        b.output.directory = PathBuf::from("elsewhere");
        b.output.formats = vec![Format::Json];
        assert_eq!(a.hash(""), b.hash(""));
        b.model.as_mut().unwrap().spin = 1.0;
        assert_ne!(a.hash(""), b.hash(""));
        let mut c = a.clone();
        c.output.log_base = Base::Bits;
        assert_ne!(a.hash(""), c.hash(""));
        assert_ne!(a.hash("seed=1"), a.hash("seed=2"));
        assert_eq!(a.hash("").len(), 12);
    }

    #[test]
    fn field_options_exclusive() {
        let t = BASE.replace("spin = 0.5", "spin = 0.5\nzeeman = 1.0\nfield_tesla = 2.0");
        assert!(RunConfig::parse(&t).is_err());
    }

    #[test]
    fn grid_points_hit_endpoints() {
        let g = Grid { start: 0.0, stop: 2.0, count: 41 };
        let p = g.points();
        assert_eq!(p.len(), 41);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[40], 2.0);
        assert!((p[20] - 1.0).abs() < 1e-15);
    }
}
