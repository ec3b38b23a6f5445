use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{
    build_example1, build_inline, builtin, BuiltinParams, Example1Params, InlineScenario, Scenario,
};
use crate::diffgeo::{DomainBox, Scheme};
use crate::{Error, Result};

/// Every check the runner knows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckTag {
    Closed,
    Deform,
    DirectDefect,
    DouglasKropina,
    Einstein,
    Example1Full,
    ExpBd,
    Homothety,
    Killing,
    Lemma51,
    LiftIdentity,
    MkropinaBd,
    OdeY42,
    Prop41,
    Theorem1,
    Theorem2Exp,
    Theorem2Kropina,
    Vcb2,
}

impl CheckTag {
    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }
}

impl fmt::Display for CheckTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSource {
    pub name: String,
    #[serde(default)]
    pub params: BuiltinParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Source {
    /// One of `a2`, `a3`, `b2`, `b3`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub params: Option<Example1Params>,
    #[serde(default)]
    pub domain: Option<DomainBox>,
}

impl Example1Source {
    pub fn resolve(&self) -> Result<Example1Params> {
        match (&self.preset, &self.params) {
            (Some(p), None) => match p.as_str() {
                "a2" => Ok(Example1Params::variant_a_2d()),
                "a3" => Ok(Example1Params::variant_a_3d()),
                "b2" => Ok(Example1Params::variant_b_2d()),
                "b3" => Ok(Example1Params::variant_b_3d()),
                other => Err(Error::Config(format!("unknown example1 preset {other:?}; use a2, a3, b2 or b3"))),
            },
            (None, Some(p)) => Ok(p.clone()),
            _ => Err(Error::Config("example1 needs exactly one of `preset` and `params`".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSource {
    Builtin(BuiltinSource),
    Example1(Example1Source),
    Inline(InlineScenario),
}

impl ScenarioSource {
    pub fn build(&self) -> Result<Scenario> {
        match self {
            ScenarioSource::Builtin(b) => builtin(&b.name, &b.params),
            ScenarioSource::Example1(e) => {
                let p = e.resolve()?;
                let domain = match &e.domain {
                    Some(d) => d.clone(),
                    None => p.default_domain()?,
                };
                build_example1(&p, domain)
            }
            ScenarioSource::Inline(s) => build_inline(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub count: usize,
    pub rays: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { count: 50, rays: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub default: Option<f64>,
    pub per_check: BTreeMap<CheckTag, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub checks: Vec<CheckTag>,
    #[serde(default)]
    pub samples: SampleConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

fn default_scheme() -> Scheme {
    Scheme::AnalyticWhenAvailable
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub report: Option<PathBuf>,
    pub scheme: Option<Scheme>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.checks.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        if self.samples.count == 0 {
            return Err(Error::Config("samples.count must be positive".into()));
        }
        let tols = self.tolerances.default.iter().chain(self.tolerances.per_check.values());
        for t in tols {
            if !(t.is_finite() && *t > 0.0) {
                return Err(Error::Config(format!("tolerances must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(n) = o.samples {
            self.samples.count = n;
        }
        if let Some(s) = o.seed {
            self.samples.seed = s;
        }
        if let Some(t) = o.tol {
            self.tolerances = Tolerances { default: Some(t), per_check: BTreeMap::new() };
        }
        if let Some(r) = &o.report {
            self.report = Some(r.clone());
        }
        if let Some(s) = o.scheme {
            self.scheme = s;
        }
        self.validate()
    }

    /// Selected checks, sorted and without repeats.
    pub fn sorted_checks(&self) -> Vec<CheckTag> {
        let mut c = self.checks.clone();
        c.sort();
        c.dedup();
        c
    }

    /// Explicit tolerance for a check, if the config gives one.
    pub fn explicit_tolerance(&self, tag: CheckTag) -> Option<f64> {
        self.tolerances.per_check.get(&tag).copied().or(self.tolerances.default)
    }

    pub fn tolerance(&self, tag: CheckTag) -> f64 {
        self.explicit_tolerance(tag).unwrap_or_else(|| default_tolerance(tag, self.scheme))
    }
}

/// `1e-6` for fourth-order or analytic derivatives, `1e-4` for second order;
/// curvature and closed-form ODE checks have their own levels.
pub fn default_tolerance(tag: CheckTag, scheme: Scheme) -> f64 {
    let base: f64 = if scheme == Scheme::Central2 { 1e-4 } else { 1e-6 };
    match tag {
        CheckTag::Einstein => base.max(1e-4),
        CheckTag::OdeY42 => 1e-10,
        CheckTag::Example1Full => 1e-5,
        _ => base,
    }
}
