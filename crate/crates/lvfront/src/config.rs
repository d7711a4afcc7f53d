//! Experiment documents: TOML with an `include` list for shared coefficient families.
//!
//! Included files are merged first, in order; keys of the including file win.
//! Paths are relative to the file that names them.

use crate::periodic_fn::{example_family, CoeffError, SystemConfig};
use crate::wavespeed::{QuadratureSpec, SpeedSettings};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("include depth exceeds {0} (cycle?)")]
    IncludeDepth(usize),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    SpeedSweep,
    LimitsSmall,
    LimitsLarge,
    SignCriteria,
    SignChangeExample,
    KineticsReport,
    ResidualCheck,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::SpeedSweep => "speed-sweep",
            Tag::LimitsSmall => "limits-small",
            Tag::LimitsLarge => "limits-large",
            Tag::SignCriteria => "sign-criteria",
            Tag::SignChangeExample => "sign-change-example",
            Tag::KineticsReport => "kinetics-report",
            Tag::ResidualCheck => "residual-check",
        }
    }
}

/// A coefficient system, written out or generated from the example family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Preset(Preset),
    Explicit(SystemConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// Step family with `r2` switching between `lo` and `hi`.
    Example {
        lo: f64,
        hi: f64,
        #[serde(default)]
        delta: f64,
        #[serde(default = "one")]
        period: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl SystemSpec {
    pub fn resolve(&self) -> Result<SystemConfig, ConfigError> {
        let sys = match self {
            SystemSpec::Preset(Preset::Example { lo, hi, delta, period }) => example_family(*lo, *hi, *delta, *period)?,
            SystemSpec::Explicit(s) => s.clone(),
        };
        sys.validate()?;
        Ok(sys)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    /// `k1 ≤ k2`, `r1 ≥ r2`.
    I,
    /// `k1 ≥ k2`, `r1 ≤ r2`.
    Ii,
    /// `k1 ≡ k2`, `r1 ≡ r2`.
    Symmetric,
}

/// One configuration of the sign-criteria experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignCase {
    pub name: String,
    pub kind: CaseKind,
    /// Also measure the species-swapped system and compare.
    #[serde(default)]
    pub swap: bool,
    pub system: SystemSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub tag: Tag,
    /// Periods to run; for the sign-change experiment `[T1, T2]`.
    #[serde(default)]
    pub periods: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Allowed max/min ratio of a scaled deviation column.
    #[serde(default = "default_band")]
    pub band: f64,
    /// Starting points for the interior fixed point search.
    #[serde(default)]
    pub seeds: Vec<[f64; 2]>,
    /// Frozen phases at which separatrices are sampled.
    #[serde(default)]
    pub sections: Vec<f64>,
    /// Kinetic steps per period; `None` picks a default from the period.
    #[serde(default)]
    pub m: Option<usize>,
    /// Simulation horizon for `simulate`, in periods (time units when autonomous).
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Barrier amplitude for the residual check.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Front-shift gain of the wave barriers.
    #[serde(default = "default_barrier_k")]
    pub barrier_k: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn default_tol() -> f64 {
    1e-3
}
fn default_band() -> f64 {
    4.0
}
fn default_horizon() -> f64 {
    10.0
}
fn default_snapshots() -> usize {
    5
}
fn default_eps() -> f64 {
    0.01
}
fn default_barrier_k() -> f64 {
    50.0
}
fn default_threads() -> usize {
    1
}

impl ExperimentSpec {
    pub fn new(tag: Tag) -> Self {
        Self {
            tag,
            periods: Vec::new(),
            tol: default_tol(),
            band: default_band(),
            seeds: Vec::new(),
            sections: Vec::new(),
            m: None,
            horizon: default_horizon(),
            snapshots: default_snapshots(),
            eps: default_eps(),
            barrier_k: default_barrier_k(),
            out: None,
            threads: default_threads(),
        }
    }
}

/// The resolved document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub cases: Vec<SignCase>,
    #[serde(default)]
    pub speed: SpeedSettings,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl ExperimentFile {
    pub fn new(tag: Tag, system: SystemConfig) -> Self {
        Self {
            experiment: ExperimentSpec::new(tag),
            system: Some(SystemSpec::Explicit(system)),
            cases: Vec::new(),
            speed: SpeedSettings::default(),
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn system(&self) -> Result<SystemConfig, ConfigError> {
        self.system
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing [system]".into()))?
            .resolve()
    }

    /// Checks the invariants that do not need the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Some(t) = e.periods.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return bad(format!("period {t} is not positive"));
        }
        let needs_periods = matches!(
            e.tag,
            Tag::SpeedSweep | Tag::LimitsSmall | Tag::LimitsLarge | Tag::SignChangeExample
        );
        if needs_periods && e.periods.is_empty() {
            return bad(format!("{} needs a nonempty `periods` list", e.tag.as_str()));
        }
        if e.tag == Tag::SignChangeExample && e.periods.len() != 2 {
            return bad("sign-change-example needs periods = [T1, T2]".into());
        }
        if e.tag == Tag::SignCriteria {
            if self.cases.is_empty() {
                return bad("sign-criteria needs at least one [[cases]] entry".into());
            }
            for c in &self.cases {
                c.system.resolve()?;
            }
        } else {
            self.system()?;
        }
        if !(e.tol > 0.0 && e.band >= 1.0 && e.eps > 0.0 && e.threads >= 1) {
            return bad("tol, eps must be positive, band >= 1, threads >= 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Applies `h=<v>,L=<v>,m=<v>` (any subset).
    pub fn apply_grid(&mut self, arg: &str) -> Result<(), ConfigError> {
        for part in arg.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("grid override `{part}`")))?;
            let num: f64 = v
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("grid value `{v}`")))?;
            match k.trim() {
                "h" => self.speed.h = num,
                "L" => self.speed.half_width = num,
                "m" => {
                    if num < 1.0 || num.fract() != 0.0 {
                        return Err(ConfigError::Invalid(format!("m = {num}")));
                    }
                    self.speed.m_min = num as usize;
                    self.experiment.m = Some(num as usize);
                }
                other => return Err(ConfigError::Invalid(format!("unknown grid key `{other}`"))),
            }
        }
        Ok(())
    }

    /// Applies `<run>,<discard>` sample counts.
    pub fn apply_periods(&mut self, arg: &str) -> Result<(), ConfigError> {
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| ConfigError::Invalid(format!("period count `{s}`")))
        };
        let (run, discard) = arg
            .split_once(',')
            .ok_or_else(|| ConfigError::Invalid(format!("--periods expects run,discard, got `{arg}`")))?;
        let (run, discard) = (parse(run)?, parse(discard)?);
        if run <= discard + 2 {
            return Err(ConfigError::Invalid(format!("run {run} must exceed discard {discard} by at least 3")));
        }
        self.speed.run_periods = Some(run);
        self.speed.discard_periods = Some(discard);
        Ok(())
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

const MAX_DEPTH: usize = 8;

fn load_table(path: &Path, depth: usize) -> Result<Table, ConfigError> {
    if depth > MAX_DEPTH {
        return Err(ConfigError::IncludeDepth(MAX_DEPTH));
    }
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut table: Table = text.parse().map_err(|source| ConfigError::Parse {
        path: path.to_owned(),
        source,
    })?;
    let includes = match table.remove("include") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                other => Err(ConfigError::Invalid(format!("include entry {other}"))),
            })
            .collect::<Result<_, _>>()?,
        Some(Value::String(s)) => vec![s],
        Some(other) => return Err(ConfigError::Invalid(format!("include = {other}"))),
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut merged = Table::new();
    for inc in includes {
        merge(&mut merged, load_table(&dir.join(inc), depth + 1)?);
    }
    merge(&mut merged, table);
    Ok(merged)
}

/// Reads, merges includes, and validates.
pub fn load(path: &Path) -> Result<ExperimentFile, ConfigError> {
    let table = load_table(path, 0)?;
    let file: ExperimentFile = Value::Table(table).try_into().map_err(|source| ConfigError::Parse {
        path: path.to_owned(),
        source,
    })?;
    file.validate()?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn include_merges_and_outer_wins() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("family.toml"),
            "[system]\npreset = \"example\"\nlo = 3.5\nhi = 12.0\ndelta = 0.02\n\n[speed]\nh = 0.05\nhalf_width = 40.0\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("run.toml"),
            "include = [\"family.toml\"]\n[experiment]\ntag = \"limits-small\"\nperiods = [0.4, 0.2]\n[speed]\nh = 0.1\n",
        )
        .unwrap();
        let f = load(&dir.path().join("run.toml")).unwrap();
        assert_eq!(f.speed.h, 0.1);
        assert_eq!(f.speed.half_width, 40.0);
        assert_eq!(f.experiment.tag, Tag::LimitsSmall);
        let sys = f.system().unwrap();
        assert!(crate::periodic_fn::matches_example_family(&sys));
        assert_eq!(f.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_documents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.toml");
        fs::write(&p, "include = [\"a.toml\"]\n").unwrap();
        assert!(matches!(load(&p), Err(ConfigError::IncludeDepth(_))));
        fs::write(&p, "[experiment]\ntag = \"nonsense\"\n").unwrap();
        assert!(matches!(load(&p), Err(ConfigError::Parse { .. })));
        fs::write(&p, "[experiment]\ntag = \"limits-large\"\n[system]\npreset = \"example\"\nlo = 3.5\nhi = 12.0\n").unwrap();
        assert!(matches!(load(&p), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn overrides() {
        let sys = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        let mut f = ExperimentFile::new(Tag::SpeedSweep, sys);
        let before = f.hash();
        f.apply_grid("h=0.05,L=60,m=2048").unwrap();
        assert_eq!((f.speed.h, f.speed.half_width, f.speed.m_min), (0.05, 60.0, 2048));
        f.apply_periods("60,20").unwrap();
        assert_eq!((f.speed.run_periods, f.speed.discard_periods), (Some(60), Some(20)));
        assert_ne!(f.hash(), before);
        assert!(f.apply_grid("q=1").is_err());
        assert!(f.apply_periods("10,9").is_err());
        let text = toml::to_string(&f).unwrap();
        let back: ExperimentFile = toml::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
