//! Run configuration files.
//!
//! Flat `key = value` lines grouped under `[section]` headers. Blank lines and
//! lines starting with `#` or `;` are ignored.
//!
//! ```text
//! [system]
//! sigma = 1
//! signal = trig:2;1,0.8,0
//!
//! [run]
//! t0 = 0
//! n = 10000
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::SignalSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sigma: f64,
    pub signal: Option<SignalSpec>,
    pub t0: f64,
    pub n: usize,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub analyses: Analyses,
    pub isi: IsiOptions,
    pub scan: ScanOptions,
    pub density: DensityOptions,
    pub compare: CompareOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analyses {
    /// Locking detection in `rotation`.
    pub locking: bool,
    /// Regularity classification in `isi`.
    pub classify: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsiOptions {
    pub bins: usize,
    pub burn_in: usize,
    pub period: Option<usize>,
    pub cluster_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Signal grammar with `{p}` or `{c*p}` placeholders for the parameter.
    pub family: Option<String>,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub locking: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOptions {
    pub points: usize,
    pub root_grid: usize,
    pub unchecked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub sigma: Option<f64>,
    pub signal: Option<SignalSpec>,
    pub grid: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sigma: 0.0,
            signal: None,
            t0: 0.0,
            n: 10_000,
            tol: None,
            out: None,
            summary: None,
            analyses: Analyses {
                locking: true,
                classify: true,
            },
            isi: IsiOptions {
                bins: crate::isidist::DEFAULT_BINS,
                burn_in: crate::isidist::DEFAULT_BURN_IN,
                period: None,
                cluster_tol: 1e-4,
            },
            scan: ScanOptions {
                family: None,
                from: 0.0,
                to: 0.0,
                step: 0.1,
                locking: false,
            },
            density: DensityOptions {
                points: 400,
                root_grid: 1024,
                unchecked: false,
            },
            compare: CompareOptions {
                sigma: None,
                signal: None,
                grid: 1000,
            },
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("bad boolean for {key}: {v:?}"))),
    }
}

impl RunConfig {
    /// Checks ranges that the parser cannot.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")))
            }
        };
        if let Some(t) = self.tol {
            positive("tol", t)?;
        }
        positive("cluster_tol", self.isi.cluster_tol)?;
        positive("step", self.scan.step)?;
        if !self.sigma.is_finite() || !self.t0.is_finite() {
            return Err(Error::InvalidArgument("sigma and t0 must be finite".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        if self.isi.bins == 0 || self.density.points == 0 {
            return Err(Error::InvalidArgument("bin and point counts must be >= 1".into()));
        }
        if self.isi.period == Some(0) {
            return Err(Error::InvalidArgument("period must be >= 1".into()));
        }
        Ok(())
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        match (section, key) {
            ("system", "sigma") => self.sigma = num(key, v)?,
            ("system", "signal") => self.signal = Some(v.parse()?),
            ("run", "t0") => self.t0 = num(key, v)?,
            ("run", "n") => self.n = num(key, v)?,
            ("run", "tol") => self.tol = Some(num(key, v)?),
            ("output", "out") => self.out = Some(PathBuf::from(v)),
            ("output", "summary") => self.summary = Some(PathBuf::from(v)),
            ("analyses", "locking") => self.analyses.locking = boolean(key, v)?,
            ("analyses", "classify") => self.analyses.classify = boolean(key, v)?,
            ("isi", "bins") => self.isi.bins = num(key, v)?,
            ("isi", "burn_in") => self.isi.burn_in = num(key, v)?,
            ("isi", "period") => self.isi.period = Some(num(key, v)?),
            ("isi", "cluster_tol") => self.isi.cluster_tol = num(key, v)?,
            ("scan", "family") => self.scan.family = Some(v.to_string()),
            ("scan", "from") => self.scan.from = num(key, v)?,
            ("scan", "to") => self.scan.to = num(key, v)?,
            ("scan", "step") => self.scan.step = num(key, v)?,
            ("scan", "locking") => self.scan.locking = boolean(key, v)?,
            ("density", "points") => self.density.points = num(key, v)?,
            ("density", "root_grid") => self.density.root_grid = num(key, v)?,
            ("density", "unchecked") => self.density.unchecked = boolean(key, v)?,
            ("compare", "sigma") => self.compare.sigma = Some(num(key, v)?),
            ("compare", "signal") => self.compare.signal = Some(v.parse()?),
            ("compare", "grid") => self.compare.grid = num(key, v)?,
            _ => return Err(Error::Parse(format!("unknown key {key:?} in section [{section}]"))),
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse(format!("line {}: unterminated section header", i + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            if section.is_empty() {
                return Err(Error::Parse(format!("line {}: key outside of a section", i + 1)));
            }
            cfg.set(&section, k.trim(), v.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Canonical form: every section in a fixed order, unset optional keys omitted.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[system]")?;
        writeln!(f, "sigma = {}", self.sigma)?;
        if let Some(s) = &self.signal {
            writeln!(f, "signal = {s}")?;
        }
        writeln!(f, "\n[run]")?;
        writeln!(f, "t0 = {}", self.t0)?;
        writeln!(f, "n = {}", self.n)?;
        if let Some(t) = self.tol {
            writeln!(f, "tol = {t}")?;
        }
        if self.out.is_some() || self.summary.is_some() {
            writeln!(f, "\n[output]")?;
            if let Some(p) = &self.out {
                writeln!(f, "out = {}", p.display())?;
            }
            if let Some(p) = &self.summary {
                writeln!(f, "summary = {}", p.display())?;
            }
        }
        writeln!(f, "\n[analyses]")?;
        writeln!(f, "locking = {}", self.analyses.locking)?;
        writeln!(f, "classify = {}", self.analyses.classify)?;
        writeln!(f, "\n[isi]")?;
        writeln!(f, "bins = {}", self.isi.bins)?;
        writeln!(f, "burn_in = {}", self.isi.burn_in)?;
        if let Some(q) = self.isi.period {
            writeln!(f, "period = {q}")?;
        }
        writeln!(f, "cluster_tol = {}", self.isi.cluster_tol)?;
        writeln!(f, "\n[scan]")?;
        if let Some(fam) = &self.scan.family {
            writeln!(f, "family = {fam}")?;
        }
        writeln!(f, "from = {}", self.scan.from)?;
        writeln!(f, "to = {}", self.scan.to)?;
        writeln!(f, "step = {}", self.scan.step)?;
        writeln!(f, "locking = {}", self.scan.locking)?;
        writeln!(f, "\n[density]")?;
        writeln!(f, "points = {}", self.density.points)?;
        writeln!(f, "root_grid = {}", self.density.root_grid)?;
        writeln!(f, "unchecked = {}", self.density.unchecked)?;
        writeln!(f, "\n[compare]")?;
        if let Some(s) = self.compare.sigma {
            writeln!(f, "sigma = {s}")?;
        }
        if let Some(s) = &self.compare.signal {
            writeln!(f, "signal = {s}")?;
        }
        writeln!(f, "grid = {}", self.compare.grid)
    }
}
