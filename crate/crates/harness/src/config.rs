//! Flat `key = value` configuration with one `[section]` per experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anharmonic_core::equilibrium::ModelParams;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    Theorem1,
    Theorem2,
    Theorem3,
    Equilibrium,
    Hydro,
    Simulate,
    SpectralSuite,
    IdentitySuite,
    ChaosSuite,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::Theorem1,
        Self::Theorem2,
        Self::Theorem3,
        Self::Equilibrium,
        Self::Hydro,
        Self::Simulate,
        Self::SpectralSuite,
        Self::IdentitySuite,
        Self::ChaosSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Theorem1 => "theorem1",
            Self::Theorem2 => "theorem2",
            Self::Theorem3 => "theorem3",
            Self::Equilibrium => "equilibrium",
            Self::Hydro => "hydro",
            Self::Simulate => "simulate",
            Self::SpectralSuite => "spectral-suite",
            Self::IdentitySuite => "identity-suite",
            Self::ChaosSuite => "chaos-suite",
        }
    }

    pub fn is_theorem(self) -> bool {
        matches!(self, Self::Theorem1 | Self::Theorem2 | Self::Theorem3)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(HarnessError::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// Everything a run needs. Defaults follow the experiment kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: ModelParams<f64>,
    /// Macroscopic times; a theorem run always includes `t = 0`.
    pub ts: Vec<f64>,
    /// Target offsets, relative to where the frame carries them.
    pub centers: Vec<f64>,
    /// Half-width of the target bumps.
    pub f_width: f64,
    /// Half-width of the time-zero bump, centered at 0.
    pub g_width: f64,
    /// Velocity of the frame the targets ride in: `none`, `sound` (the moving frame) or a number.
    pub frame: Frame,
    pub replicas: usize,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
    /// `theorem3` only: also run with `gamma = 0`.
    pub universality: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Lab,
    Sound,
    Fixed(f64),
}

impl FromStr for Frame {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "lab" => Ok(Self::Lab),
            "sound" => Ok(Self::Sound),
            v => v
                .parse::<f64>()
                .map(Self::Fixed)
                .map_err(|_| HarnessError::Config(format!("bad frame `{v}`"))),
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lab => f.write_str("none"),
            Self::Sound => f.write_str("sound"),
            Self::Fixed(v) => write!(f, "{v}"),
        }
    }
}

fn grid(lo: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + step * i as f64).collect()
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            params: ModelParams::standard(0.0).with_n(64),
            ts: vec![0.0],
            centers: vec![0.0],
            f_width: 0.1,
            g_width: 0.25,
            frame: Frame::Lab,
            replicas: 100,
            seed: 1,
            threads: 0,
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
            universality: false,
        };
        match kind {
            ExperimentKind::Theorem1 => {
                let n = 256;
                Self {
                    params: ModelParams::standard(0.01).with_n(n).with_a(1.0),
                    ts: vec![0.0, 0.05, 0.1, 0.15],
                    centers: grid(-4.0 / n as f64, 1.0 / n as f64, 9),
                    frame: Frame::Fixed(-2.0),
                    replicas: 10_000,
                    ..base
                }
            }
            ExperimentKind::Theorem2 => Self {
                params: ModelParams::standard(0.0).with_n(128).with_a(2.0).with_schedule(1.0, 1.0),
                ts: vec![0.0, 0.25],
                centers: grid(-0.14, 0.04, 8),
                frame: Frame::Sound,
                replicas: 5_000,
                ..base
            },
            ExperimentKind::Theorem3 => Self {
                params: ModelParams::standard(0.0).with_n(128).with_a(1.5).with_schedule(1.0, 0.5),
                ts: vec![0.0, 0.2],
                centers: grid(-0.2, 0.05, 9),
                f_width: 0.05,
                replicas: 5_000,
                universality: true,
                ..base
            },
            ExperimentKind::Simulate => Self {
                params: ModelParams::standard(0.1).with_n(64).with_a(1.0),
                ts: vec![0.0, 0.25, 0.5, 1.0],
                ..base
            },
            _ => base,
        }
    }

    /// Defaults overridden by the `[kind]` section of `text` (or by top-level keys when the
    /// text has no sections).
    pub fn parse(kind: ExperimentKind, text: &str) -> Result<Self, HarnessError> {
        let sections = parse_sections(text)?;
        let mut cfg = Self::defaults(kind);
        let empty = BTreeMap::new();
        let global = sections.get("").unwrap_or(&empty);
        let own = sections.get(kind.name()).unwrap_or(&empty);
        for (key, (line, value)) in global.iter().chain(own.iter()) {
            cfg.set(key, value).map_err(|e| match e {
                HarnessError::Config(m) => HarnessError::Config(format!("line {line}: {m}")),
                other => other,
            })?;
        }
        for name in sections.keys() {
            if !name.is_empty() && name.parse::<ExperimentKind>().is_err() {
                return Err(HarnessError::Config(format!("unknown section [{name}]")));
            }
        }
        cfg.params.refresh_gamma();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(kind: ExperimentKind, path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(kind, &text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let num = |v: &str| -> Result<f64, HarnessError> {
            v.parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("`{key}` expects a number, got `{v}`")))
        };
        let int = |v: &str| -> Result<u64, HarnessError> {
            v.parse::<u64>()
                .map_err(|_| HarnessError::Config(format!("`{key}` expects an integer, got `{v}`")))
        };
        let list = |v: &str| -> Result<Vec<f64>, HarnessError> {
            if v.trim().is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|x| num(x.trim())).collect()
        };
        match key {
            "beta" => self.params.beta = num(value)?,
            "tau" => self.params.tau = num(value)?,
            "gamma" => {
                self.params.gamma = num(value)?;
                self.params.schedule = None;
            }
            "c" => {
                let b = self.params.schedule.map_or(0.0, |s| s.1);
                self.params.schedule = Some((num(value)?, b));
            }
            "b" => {
                let c = self.params.schedule.map_or(1.0, |s| s.0);
                self.params.schedule = Some((c, num(value)?));
            }
            "n" => self.params.n = int(value)? as usize,
            "a" => self.params.a = num(value)?,
            "t" | "times" => self.ts = list(value)?,
            "centers" | "f_centers" => self.centers = list(value)?,
            "f_width" => self.f_width = num(value)?,
            "g_width" => self.g_width = num(value)?,
            "frame" => self.frame = value.parse()?,
            "replicas" | "m" => self.replicas = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            "threads" => self.threads = int(value)? as usize,
            "out" => self.out = PathBuf::from(value),
            "format" => self.format = value.parse()?,
            "universality" => {
                self.universality = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    v => return Err(HarnessError::Config(format!("`universality` expects a boolean, got `{v}`"))),
                }
            }
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.ts.iter().any(|t| !(*t >= 0.0)) || self.ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config("times must be non-negative and increasing".into()));
        }
        if !(self.f_width > 0.0 && self.g_width > 0.0) {
            return Err(HarnessError::Config("bump widths must be positive".into()));
        }
        if self.kind.is_theorem() {
            if self.replicas < 100 {
                return Err(HarnessError::Config("theorem runs need at least 100 replicas".into()));
            }
            if !self.centers.is_empty() && self.ts.is_empty() {
                return Err(HarnessError::Config("theorem runs need a time grid".into()));
            }
        }
        Ok(())
    }

    /// The configuration echoed as key/value strings.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let p = &self.params;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.kind.name().into());
        m.insert("beta".into(), format!("{}", p.beta));
        m.insert("tau".into(), format!("{}", p.tau));
        m.insert("gamma".into(), format!("{}", p.gamma));
        if let Some((c, b)) = p.schedule {
            m.insert("c".into(), format!("{c}"));
            m.insert("b".into(), format!("{b}"));
        }
        m.insert("n".into(), format!("{}", p.n));
        m.insert("a".into(), format!("{}", p.a));
        m.insert("t".into(), join(&self.ts));
        m.insert("centers".into(), join(&self.centers));
        m.insert("f_width".into(), format!("{}", self.f_width));
        m.insert("g_width".into(), format!("{}", self.g_width));
        m.insert("frame".into(), self.frame.to_string());
        m.insert("replicas".into(), format!("{}", self.replicas));
        m.insert("seed".into(), format!("{}", self.seed));
        m.insert("universality".into(), format!("{}", self.universality));
        m
    }
}

type Section = BTreeMap<String, (usize, String)>;

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, HarnessError> {
    let mut out: BTreeMap<String, Section> = BTreeMap::new();
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| HarnessError::Config(format!("line {}: unterminated section header", i + 1)))?;
            current = name.trim().to_string();
            out.entry(current.clone()).or_default();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", i + 1)))?;
        let section = out.entry(current.clone()).or_default();
        if section.insert(k.trim().to_string(), (i + 1, v.trim().to_string())).is_some() {
            return Err(HarnessError::Config(format!("line {}: duplicate key `{}`", i + 1, k.trim())));
        }
    }
    Ok(out)
}
