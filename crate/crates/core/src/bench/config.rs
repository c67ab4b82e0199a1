use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corrparam::FamilySpec;
use crate::error::{Error, Result};
use crate::gpcore::FitOptions;
use crate::testbed::SlicedFunction;

/// Experiment description, read from TOML.
///
/// ```toml
/// functions = ["ackley", "ackley_upended"]
/// s_values = [4]
/// n_values = [4, 8]
/// families = ["EC", "MC", "LRC", "UC"]   # "LRC" means every rank 2..s-1
/// replications = 20
/// base_seed = 1
/// individual = false                       # also fit per-slice models ("IK")
/// record_timing = false                    # fill fit_seconds in records.csv
///
/// [fit]
/// starts = 10
///
/// [empirical]
/// resolution = 100
///
/// [test_set]
/// size = 1000
/// seed = 12345
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub functions: Vec<String>,
    #[serde(default = "default_s_values")]
    pub s_values: Vec<usize>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub individual: bool,
    #[serde(default)]
    pub record_timing: bool,
    /// Where empirical matrices and test sets are cached; defaults to
    /// `<out>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub empirical: EmpiricalSection,
    #[serde(default)]
    pub test_set: TestSetSection,
}

fn default_s_values() -> Vec<usize> {
    vec![4, 6]
}
fn default_n_values() -> Vec<usize> {
    vec![4, 8]
}
fn default_families() -> Vec<String> {
    ["EC", "MC", "LRC", "UC"].map(String::from).to_vec()
}
fn default_replications() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub starts: usize,
    pub max_evals: Option<usize>,
    pub nugget: f64,
    pub lengthscale_min: f64,
    pub lengthscale_max: f64,
    pub standardize: bool,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            starts: d.starts,
            max_evals: d.max_evals,
            nugget: d.nugget,
            lengthscale_min: d.lengthscale_bounds.0,
            lengthscale_max: d.lengthscale_bounds.1,
            standardize: d.standardize,
        }
    }
}

impl FitSection {
    pub fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            starts: self.starts,
            seed,
            max_evals: self.max_evals,
            nugget: self.nugget,
            lengthscale_bounds: (self.lengthscale_min, self.lengthscale_max),
            standardize: self.standardize,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmpiricalSection {
    pub resolution: usize,
}

impl Default for EmpiricalSection {
    fn default() -> Self {
        Self { resolution: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestSetSection {
    pub size: usize,
    pub seed: u64,
}

impl Default for TestSetSection {
    fn default() -> Self {
        Self { size: 1000, seed: 12345 }
    }
}

/// A model family as it appears in the records: a correlation family or the
/// per-slice baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Joint(FamilySpec),
    Individual,
}

impl ModelKind {
    pub fn family_name(&self) -> &'static str {
        match self {
            ModelKind::Joint(spec) => spec.family().name(),
            ModelKind::Individual => "IK",
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self {
            ModelKind::Joint(spec) => spec.rank(),
            ModelKind::Individual => None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Model families applicable at `s`, in configuration order. `LRC`
    /// expands to ranks `2..s-1`; an explicit `LRC<r>` applies only where
    /// `r < s`.
    pub fn models_for(&self, s: usize) -> Result<Vec<ModelKind>> {
        let mut out = Vec::new();
        for label in &self.families {
            let up = label.trim().to_ascii_uppercase();
            if up == "LRC" {
                for r in 2..s {
                    out.push(ModelKind::Joint(FamilySpec::lrc(s, r)?));
                }
                continue;
            }
            if up == "IK" {
                out.push(ModelKind::Individual);
                continue;
            }
            match FamilySpec::parse(label, s) {
                Ok(spec) => out.push(ModelKind::Joint(spec)),
                Err(Error::RankOutOfRange { rank, .. }) if rank >= s => {}
                Err(e) => return Err(e),
            }
        }
        if self.individual && !out.contains(&ModelKind::Individual) {
            out.push(ModelKind::Individual);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.functions.is_empty() {
            return bad("`functions` is empty".into());
        }
        if self.s_values.is_empty() || self.n_values.is_empty() {
            return bad("`s_values` and `n_values` must be non-empty".into());
        }
        if self.replications < 1 {
            return bad("`replications` must be at least 1".into());
        }
        if let Some(n) = self.n_values.iter().find(|n| **n < 1) {
            return bad(format!("invalid n_per_slice {n}"));
        }
        if self.fit.starts < 1 {
            return bad("`fit.starts` must be at least 1".into());
        }
        if !(self.fit.nugget >= 0.0) {
            return bad("`fit.nugget` must be nonnegative".into());
        }
        if !(self.fit.lengthscale_min > 0.0 && self.fit.lengthscale_min < self.fit.lengthscale_max) {
            return bad("lengthscale bounds must satisfy 0 < min < max".into());
        }
        if self.empirical.resolution < 2 {
            return bad("`empirical.resolution` must be at least 2".into());
        }
        if self.test_set.size < 2 {
            return bad("`test_set.size` must be at least 2".into());
        }
        for label in &self.families {
            let up = label.trim().to_ascii_uppercase();
            if up == "LRC" || up == "IK" {
                continue;
            }
            let applies = self.s_values.iter().any(|s| FamilySpec::parse(label, *s).is_ok());
            if !applies {
                // surface the parse or rank error for the first s
                FamilySpec::parse(label, self.s_values[0])?;
            }
        }
        for &s in &self.s_values {
            if self.models_for(s)?.is_empty() {
                return bad(format!("no model family applies at s = {s}"));
            }
            for f in &self.functions {
                // cheap name check; slice maxima are computed later
                let name = f.split("_upended").next().unwrap_or(f);
                crate::testbed::lookup(name)?;
                if f.ends_with("_upended") && crate::testbed::default_upend_set(s).is_none() {
                    return bad(format!("`{f}` has no default upend set at s = {s}"));
                }
            }
        }
        Ok(())
    }

    /// Resolves every (function, s) pair, computing slice maxima.
    pub fn sliced_functions(&self) -> Result<Vec<SlicedFunction>> {
        let mut out = Vec::new();
        for f in &self.functions {
            for &s in &self.s_values {
                out.push(SlicedFunction::from_id(f, s)?);
            }
        }
        Ok(out)
    }
}
