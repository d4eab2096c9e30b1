//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Unknown or repeated keys
//! are errors.

use crate::assembly::MassKind;
use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    PlateTrimmed,
    RotatedPlate,
    PlateCutout,
    FuselageWindow,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] =
        [ExampleId::PlateTrimmed, ExampleId::RotatedPlate, ExampleId::PlateCutout, ExampleId::FuselageWindow];

    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::PlateTrimmed => "plate_trimmed",
            ExampleId::RotatedPlate => "rotated_plate",
            ExampleId::PlateCutout => "plate_cutout",
            ExampleId::FuselageWindow => "fuselage_window",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| Error::Config(format!("unknown example '{s}'")))
    }

    /// Default relative trimming parameter.
    pub fn default_eps(&self) -> f64 {
        match self {
            ExampleId::RotatedPlate => 1e-9,
            _ => 1e-8,
        }
    }
}

/// How the time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtPolicy {
    /// `safety · Δt_c` of the row-sum lumped mass on the run's space (shared by all variants).
    LumpedCritical,
    /// `safety · Δt_c` of the run's own mass.
    Critical,
    /// `time.dt`.
    Fixed,
}

impl DtPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            DtPolicy::LumpedCritical => "lumped_critical",
            DtPolicy::Critical => "critical",
            DtPolicy::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lumped_critical" => Ok(DtPolicy::LumpedCritical),
            "critical" => Ok(DtPolicy::Critical),
            "fixed" => Ok(DtPolicy::Fixed),
            _ => Err(Error::Config(format!("unknown time.dt_policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub example: ExampleId,
    pub p: usize,
    pub elements: usize,
    /// Gauss points per direction; `None` means `p + 1`.
    pub quad_order: Option<usize>,
    /// `None` uses the example default.
    pub eps: Option<f64>,
    /// Boundary-fitted grid instead of the trimmed one.
    pub fitted: bool,
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
    pub tau: f64,
    pub mass_kind: MassKind,
    /// `None` picks central differences for lumped and Newmark for consistent masses.
    pub scheme: Option<Scheme>,
    pub t1: f64,
    pub dt_policy: DtPolicy,
    pub dt: Option<f64>,
    pub safety: f64,
    pub gamma: f64,
    pub min_eigs: usize,
    pub out_dir: Option<PathBuf>,
    /// Snapshot times as fractions of `t1`.
    pub snapshots: Vec<f64>,
    pub vtk_n: usize,
    pub error_every: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            example: ExampleId::PlateTrimmed,
            p: 3,
            elements: 16,
            quad_order: None,
            eps: None,
            fitted: false,
            young: 1.0,
            poisson: 0.25,
            density: 1.0,
            tau: 0.05,
            mass_kind: MassKind::StabilizedLumped,
            scheme: None,
            t1: 10.0,
            dt_policy: DtPolicy::LumpedCritical,
            dt: None,
            safety: 0.9,
            gamma: crate::stabilization::DEFAULT_GAMMA,
            min_eigs: 6,
            out_dir: None,
            snapshots: vec![0.25, 0.5, 1.0],
            vtk_n: 50,
            error_every: 10,
            seed: 0,
        }
    }
}

pub const KEYS: [&str; 23] = [
    "example.id",
    "disc.p",
    "disc.elements",
    "disc.quad_order",
    "trim.eps",
    "trim.fitted",
    "mat.E",
    "mat.nu",
    "mat.rho",
    "mat.tau",
    "mass.kind",
    "time.scheme",
    "time.t1",
    "time.dt_policy",
    "time.dt",
    "time.safety",
    "stab.gamma",
    "spec.min_eigs",
    "out.dir",
    "out.snapshots",
    "out.vtk_n",
    "out.error_every",
    "seed",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("invalid value '{v}' for {key}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("invalid value '{v}' for {key} (expected true or false)"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {k}", no + 1)));
            }
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "example.id" => self.example = ExampleId::parse(v)?,
            "disc.p" => self.p = num(key, v)?,
            "disc.elements" => self.elements = num(key, v)?,
            "disc.quad_order" => self.quad_order = Some(num(key, v)?),
            "trim.eps" => self.eps = Some(num(key, v)?),
            "trim.fitted" => self.fitted = boolean(key, v)?,
            "mat.E" => self.young = num(key, v)?,
            "mat.nu" => self.poisson = num(key, v)?,
            "mat.rho" => self.density = num(key, v)?,
            "mat.tau" => self.tau = num(key, v)?,
            "mass.kind" => self.mass_kind = MassKind::parse(v)?,
            "time.scheme" => {
                self.scheme = if v == "auto" { None } else { Some(Scheme::parse(v)?) };
            }
            "time.t1" => self.t1 = num(key, v)?,
            "time.dt_policy" => self.dt_policy = DtPolicy::parse(v)?,
            "time.dt" => self.dt = Some(num(key, v)?),
            "time.safety" => self.safety = num(key, v)?,
            "stab.gamma" => self.gamma = num(key, v)?,
            "spec.min_eigs" => self.min_eigs = num(key, v)?,
            "out.dir" => self.out_dir = Some(PathBuf::from(v)),
            "out.snapshots" => {
                self.snapshots = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|s| num(key, s.trim())).collect::<Result<_>>()?
                };
            }
            "out.vtk_n" => self.vtk_n = num(key, v)?,
            "out.error_every" => self.error_every = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.p < 1 {
            return bad("disc.p must be at least 1");
        }
        if self.elements < 3 {
            return bad("disc.elements must be at least 3");
        }
        if let Some(q) = self.quad_order {
            if q < 1 {
                return bad("disc.quad_order must be at least 1");
            }
        }
        let eps = self.trim_eps();
        if !(eps > 0.0 && eps < 0.5) {
            return bad("trim.eps must lie in (0, 0.5)");
        }
        if !(self.tau > 0.0) {
            return bad("mat.tau must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("stab.gamma must lie in [0, 1]");
        }
        if !(self.t1 > 0.0) {
            return bad("time.t1 must be positive");
        }
        if !(self.safety > 0.0) {
            return bad("time.safety must be positive");
        }
        if self.dt_policy == DtPolicy::Fixed && !self.dt.is_some_and(|d| d > 0.0) {
            return bad("time.dt_policy = fixed requires a positive time.dt");
        }
        if self.snapshots.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad("out.snapshots entries must lie in [0, 1]");
        }
        if self.vtk_n < 2 {
            return bad("out.vtk_n must be at least 2");
        }
        if self.error_every < 1 {
            return bad("out.error_every must be at least 1");
        }
        Ok(())
    }

    pub fn trim_eps(&self) -> f64 {
        self.eps.unwrap_or_else(|| self.example.default_eps())
    }

    pub fn quad(&self) -> usize {
        self.quad_order.unwrap_or(self.p + 1)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme.unwrap_or(if self.mass_kind.is_lumped() { Scheme::CentralDifference } else { Scheme::Newmark })
    }

    /// All keys with their effective values, in canonical order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let rows: Vec<(&str, String)> = vec![
            ("example.id", self.example.name().into()),
            ("disc.p", self.p.to_string()),
            ("disc.elements", self.elements.to_string()),
            ("disc.quad_order", self.quad().to_string()),
            ("trim.eps", format!("{:e}", self.trim_eps())),
            ("trim.fitted", self.fitted.to_string()),
            ("mat.E", format!("{:e}", self.young)),
            ("mat.nu", format!("{:e}", self.poisson)),
            ("mat.rho", format!("{:e}", self.density)),
            ("mat.tau", format!("{:e}", self.tau)),
            ("mass.kind", self.mass_kind.name().into()),
            ("time.scheme", self.scheme().name().into()),
            ("time.t1", format!("{:e}", self.t1)),
            ("time.dt_policy", self.dt_policy.name().into()),
            ("time.dt", self.dt.map(|d| format!("{d:e}")).unwrap_or_default()),
            ("time.safety", format!("{:e}", self.safety)),
            ("stab.gamma", format!("{:e}", self.gamma)),
            ("spec.min_eigs", self.min_eigs.to_string()),
            ("out.dir", self.out_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("out.snapshots", list(&self.snapshots)),
            ("out.vtk_n", self.vtk_n.to_string()),
            ("out.error_every", self.error_every.to_string()),
            ("seed", self.seed.to_string()),
        ];
        for (k, v) in rows {
            if k == "time.dt" && self.dt.is_none() || k == "out.dir" && self.out_dir.is_none() {
                continue;
            }
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Config key varied by a sweep axis (`eps`, `p`, `tau`, `h`), or the key itself.
pub fn axis_key(axis: &str) -> Result<&'static str> {
    match axis {
        "eps" | "epsilon" => Ok("trim.eps"),
        "p" => Ok("disc.p"),
        "tau" => Ok("mat.tau"),
        "h" => Ok("disc.elements"),
        other => KEYS
            .iter()
            .copied()
            .find(|k| *k == other)
            .ok_or_else(|| Error::Config(format!("unknown sweep axis '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# comment\nexample.id = plate_cutout\ndisc.p = 2\n\ntrim.eps=1e-4\nmass.kind = lumped\nout.snapshots = 0.5, 1\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.example, ExampleId::PlateCutout);
        assert_eq!(cfg.p, 2);
        assert_eq!(cfg.trim_eps(), 1e-4);
        assert_eq!(cfg.mass_kind, MassKind::Lumped);
        assert_eq!(cfg.scheme(), Scheme::CentralDifference);
        assert_eq!(cfg.snapshots, vec![0.5, 1.0]);
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again.to_text(), cfg.to_text());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("disc.colour = red").is_err());
        assert!(ExperimentConfig::parse("disc.p = 2\ndisc.p = 3").is_err());
        assert!(ExperimentConfig::parse("disc.p = two").is_err());
        assert!(ExperimentConfig::parse("trim.eps = 0.5").is_err());
        assert!(ExperimentConfig::parse("mat.tau = 0").is_err());
        assert!(ExperimentConfig::parse("stab.gamma = 1.5").is_err());
        assert!(ExperimentConfig::parse("time.dt_policy = fixed").is_err());
        assert!(ExperimentConfig::parse("example.id = b_pillar").is_err());
        assert!(ExperimentConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn example_defaults() {
        assert_eq!(ExperimentConfig::parse("example.id = rotated_plate").unwrap().trim_eps(), 1e-9);
        assert_eq!(ExperimentConfig::default().quad(), 4);
        assert_eq!(axis_key("eps").unwrap(), "trim.eps");
        assert_eq!(axis_key("mat.nu").unwrap(), "mat.nu");
        assert!(axis_key("colour").is_err());
    }
}
