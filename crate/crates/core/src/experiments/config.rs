use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::lattice::Norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TsparseDisc,
    Llt,
    UnitDisc,
    Spanningness,
    Mixing,
    Threshold,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TsparseDisc => "tsparse-disc",
            ExperimentKind::Llt => "llt",
            ExperimentKind::UnitDisc => "unit-disc",
            ExperimentKind::Spanningness => "spanningness",
            ExperimentKind::Mixing => "mixing",
            ExperimentKind::Threshold => "threshold",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    /// Threshold constant `c`.
    pub c: f64,
    /// Spanningness value for thresholds; defaults to the proven bound.
    pub s: Option<f64>,
    /// Stand-in for the constant in the `I₁` bound.
    pub i1_c: f64,
    /// Desk threshold on the LLT pass rate.
    pub pass_rate: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { c: 1.0, s: None, i1_c: 1.0, pass_rate: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Restarts per local search.
    pub local_search: usize,
    /// Restarts for the spreading estimate.
    pub alpha: usize,
    /// Samples for the pseudodual search.
    pub search: usize,
    /// Descents feeding the smoothed-mass certificate.
    pub smoothed: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { local_search: 8, alpha: 200, search: 20_000, smoothed: 256 }
    }
}

fn one() -> usize {
    1
}

fn full_check() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default = "one")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_norm")]
    pub norm: Norm,
    /// Fraction of tsparse-disc trials whose closed form is cross-checked.
    #[serde(default = "full_check")]
    pub subsample_check: f64,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_norm() -> Norm {
    Norm::Sup
}

pub const MIN_SUBSAMPLE: f64 = 0.05;

impl ExperimentConfig {
    /// Parses and validates; errors carry the 1-based line of the problem.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config { line: e.line().max(1), msg: e.to_string() })?;
        cfg.validate_with(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with("")
    }

    /// Semantic checks; `text` (the source, if any) locates offending keys.
    pub fn validate_with(&self, text: &str) -> Result<()> {
        let err = |key: &str, msg: String| Error::Config { line: line_of(text, key), msg };
        if self.trials == 0 {
            return Err(err("trials", "trials must be at least 1".into()));
        }
        if let Some(g) = &self.n_grid {
            if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(err("n_grid", "n_grid must be non-empty and strictly increasing".into()));
            }
        }
        if !(MIN_SUBSAMPLE..=1.0).contains(&self.subsample_check) {
            return Err(err("subsample_check", format!("subsample_check must lie in [{MIN_SUBSAMPLE}, 1]")));
        }
        if self.workers == Some(0) {
            return Err(err("workers", "workers must be at least 1".into()));
        }
        if !(self.constants.c > 0.0) {
            return Err(err("c", "c must be positive".into()));
        }
        if self.constants.s.is_some_and(|s| !(s > 0.0)) {
            return Err(err("s", "s must be positive".into()));
        }
        let need = |v: Option<usize>, key: &str| v.ok_or_else(|| err("kind", format!("{} needs `{key}`", self.kind.name())));
        match self.kind {
            ExperimentKind::TsparseDisc => {
                let (m, t) = (need(self.m, "m")?, need(self.t, "t")?);
                need(self.n, "n")?;
                if t == 0 || t >= m {
                    return Err(err("t", format!("need 0 < t < m, got m={m}, t={t}")));
                }
                if self.norm != Norm::Sup {
                    return Err(err("norm", "tsparse-disc is defined for the sup-norm".into()));
                }
            }
            ExperimentKind::Mixing => {
                let (m, t) = (need(self.m, "m")?, need(self.t, "t")?);
                if t == 0 || t >= m {
                    return Err(err("t", format!("need 0 < t < m, got m={m}, t={t}")));
                }
            }
            ExperimentKind::Llt => {
                need(self.n, "n")?;
                if self.distribution.is_none() {
                    return Err(err("kind", "llt needs `distribution`".into()));
                }
            }
            ExperimentKind::UnitDisc => {
                need(self.m, "m")?;
            }
            ExperimentKind::Spanningness | ExperimentKind::Threshold => {
                if self.distribution.is_none() {
                    return Err(err("kind", format!("{} needs `distribution`", self.kind.name())));
                }
            }
        }
        Ok(())
    }
}

/// Line of the first occurrence of `"key"`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let pat = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&pat)).map_or(1, |i| i + 1)
}
