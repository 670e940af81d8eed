//! Scenario files: a TOML document with a list of `[[scenario]]` tables.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use curvdecay::inequality::{RadialTestFunction, SubmanifoldKind};
use curvdecay::model::ModelManifold;
use curvdecay::profiles::{make_profile, CurvatureProfile, ProfileKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Seed for randomized commands; `--seed` overrides it.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Worker threads; `--workers` overrides it.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSpec>,
    pub command: CommandSpec,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    /// Values the computed quantities must reproduce.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    /// Two-column `(t, λ)` file for tabulated profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warp", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Euclidean {
        dimension: usize,
    },
    /// Warp `φ = h₁` of `profile` on `[0, r_max]`.
    Comparison {
        dimension: usize,
        profile: ProfileSpec,
        r_max: f64,
    },
    /// Two-column `(r, φ)` file on a uniform grid from `r = 0`.
    Tabulated {
        dimension: usize,
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandSpec {
    /// `B`, `b₁`, `h₁` samples, the growth exponent and, with a manifold,
    /// the volume ratio sweep.
    Constants {
        #[serde(default = "default_growth_horizon")]
        horizon: f64,
        #[serde(default)]
        h1_at: Vec<f64>,
        /// Radius of the volume ratio sweep; defaults to the model's domain.
        #[serde(default)]
        volume_horizon: Option<f64>,
    },
    /// The five comparison checks, either on the scenario profile with
    /// default parameters or on `random` seeded profiles.
    Lemmas {
        #[serde(default)]
        random: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Isoperimetric {
        radii: Vec<f64>,
        /// Require every margin to vanish (flat equality case).
        #[serde(default)]
        equality: bool,
    },
    Sobolev {
        radii: Vec<f64>,
        functions: Vec<RadialTestFunction>,
        #[serde(default)]
        equality: bool,
    },
    Submanifold {
        cases: Vec<SubmanifoldCase>,
        #[serde(default = "one")]
        value: f64,
    },
    Abp {
        ball_radius: f64,
        transport_time: f64,
        function: RadialTestFunction,
    },
}

impl CommandSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CommandSpec::Constants { .. } => "constants",
            CommandSpec::Lemmas { .. } => "lemmas",
            CommandSpec::Isoperimetric { .. } => "isoperimetric",
            CommandSpec::Sobolev { .. } => "sobolev",
            CommandSpec::Submanifold { .. } => "submanifold",
            CommandSpec::Abp { .. } => "abp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmanifoldCase {
    pub kind: SubmanifoldKind,
    pub n: usize,
    pub p: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    /// Absolute tolerance for equality checks and plain expectations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equality: Option<f64>,
    /// Allowed negative slack for lemma results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// Allowed increase of the volume ratio per step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone: Option<f64>,
    /// Allowed excess of θ over 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

pub const DEFAULT_EQUALITY_TOL: f64 = 1e-8;
pub const DEFAULT_MONOTONE_TOL: f64 = 1e-10;
pub const DEFAULT_THETA_TOL: f64 = 1e-10;

impl ToleranceOverrides {
    pub fn equality(&self) -> f64 {
        self.equality.unwrap_or(DEFAULT_EQUALITY_TOL)
    }

    pub fn monotone(&self) -> f64 {
        self.monotone.unwrap_or(DEFAULT_MONOTONE_TOL)
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or(DEFAULT_THETA_TOL)
    }
}

/// A bare number uses the scenario's equality tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expectation {
    Value(f64),
    Within {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rtol: Option<f64>,
    },
}

impl Expectation {
    pub fn value(&self) -> f64 {
        match *self {
            Expectation::Value(v) | Expectation::Within { value: v, .. } => v,
        }
    }

    /// Absolute tolerance, given the scenario default.
    pub fn tolerance(&self, default: f64) -> f64 {
        match *self {
            Expectation::Value(_) => default,
            Expectation::Within { value, tol, rtol } => match (tol, rtol) {
                (None, None) => default,
                (t, r) => t.unwrap_or(0.0).max(r.unwrap_or(0.0) * value.abs()),
            },
        }
    }
}

fn default_growth_horizon() -> f64 {
    1e4
}

fn one() -> f64 {
    1.0
}

/// A scenario with its profile and manifold built.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub profile: Option<CurvatureProfile>,
    pub manifold: Option<ModelManifold>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Check ids and build every profile and manifold. Relative table paths
    /// are taken from `base`.
    pub fn resolve(&self, base: &Path) -> Result<Vec<ResolvedScenario>, CliError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.scenarios.len());
        for sc in &self.scenarios {
            if sc.id.trim().is_empty() {
                return Err(CliError::Usage("scenario id must be nonempty".into()));
            }
            if !seen.insert(sc.id.as_str()) {
                return Err(CliError::Usage(format!("duplicate scenario id {:?}", sc.id)));
            }
            let ctx = |e: curvdecay::Error| CliError::Usage(format!("scenario {:?}: {e}", sc.id));
            let profile = sc.profile.as_ref().map(|p| p.build(base)).transpose().map_err(ctx)?;
            let manifold = sc.manifold.as_ref().map(|m| m.build(base)).transpose().map_err(ctx)?;
            check_command(sc, profile.is_some(), manifold.is_some())?;
            out.push(ResolvedScenario { config: sc.clone(), profile, manifold });
        }
        Ok(out)
    }
}

fn check_command(sc: &ScenarioConfig, has_profile: bool, has_manifold: bool) -> Result<(), CliError> {
    let usage = |msg: &str| Err(CliError::Usage(format!("scenario {:?}: {msg}", sc.id)));
    let positive = |xs: &[f64]| xs.iter().all(|&x| x > 0.0 && x.is_finite());
    match &sc.command {
        CommandSpec::Constants { .. } if !has_profile => usage("constants needs a profile"),
        CommandSpec::Lemmas { random: None, .. } if !has_profile => usage("lemmas needs a profile or `random`"),
        CommandSpec::Lemmas { random: Some(0), .. } => usage("`random` must be positive"),
        CommandSpec::Isoperimetric { radii, .. } | CommandSpec::Sobolev { radii, .. } => {
            if !(has_profile && has_manifold) {
                usage("needs both a profile and a manifold")
            } else if radii.is_empty() || !positive(radii) {
                usage("radii must be a nonempty list of positive numbers")
            } else if matches!(&sc.command, CommandSpec::Sobolev { functions, .. } if functions.is_empty()) {
                usage("functions must be nonempty")
            } else {
                Ok(())
            }
        }
        CommandSpec::Submanifold { cases, .. } if cases.is_empty() => usage("cases must be nonempty"),
        CommandSpec::Abp { .. } if !(has_profile && has_manifold) => usage("abp needs both a profile and a manifold"),
        _ => Ok(()),
    }
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ProfileSpec {
    pub fn build(&self, base: &Path) -> curvdecay::Result<CurvatureProfile> {
        match (&self.table, self.kind) {
            (Some(path), ProfileKind::Tabulated) if self.params.is_empty() => {
                CurvatureProfile::load_table(&resolve_path(base, path))
            }
            (Some(_), _) => Err(curvdecay::Error::InvalidParameter(
                "`table` is only valid for a tabulated profile without `params`".into(),
            )),
            (None, kind) => make_profile(kind, &self.params),
        }
    }
}

impl ManifoldSpec {
    pub fn build(&self, base: &Path) -> curvdecay::Result<ModelManifold> {
        match self {
            ManifoldSpec::Euclidean { dimension } => ModelManifold::euclidean(*dimension),
            ManifoldSpec::Comparison { dimension, profile, r_max } => {
                ModelManifold::comparison(*dimension, &profile.build(base)?, *r_max)
            }
            ManifoldSpec::Tabulated { dimension, path } => {
                ModelManifold::load_warp(*dimension, &resolve_path(base, path))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"
        [[scenario]]
        id = "flat"
        profile = { kind = "zero" }
        manifold = { warp = "euclidean", dimension = 2 }
        command = { kind = "isoperimetric", radii = [1.0] }
    "#;

    #[test]
    fn parses_and_resolves() {
        let cfg = ConfigFile::parse(ONE).unwrap();
        let r = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].profile.as_ref().unwrap().is_flat());
        assert_eq!(r[0].manifold.as_ref().unwrap().dimension(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = ONE.replace("radii", "radius");
        assert!(matches!(ConfigFile::parse(&typo), Err(CliError::Usage(_))));
        let top = format!("sead = 3\n{ONE}");
        assert!(ConfigFile::parse(&top).is_err());
        let tol = format!("{ONE}\ntolerances = {{ equalty = 1e-3 }}\n");
        assert!(ConfigFile::parse(&tol).is_err());
    }

    #[test]
    fn duplicate_ids_are_a_usage_error() {
        let cfg = ConfigFile::parse(&format!("{ONE}{ONE}")).unwrap();
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn missing_inputs_are_a_usage_error() {
        let cfg = ConfigFile::parse(&ONE.replace("profile = { kind = \"zero\" }", "")).unwrap();
        assert!(cfg.resolve(Path::new(".")).is_err());
        let bad = ConfigFile::parse(&ONE.replace("\"zero\"", "\"rational\", params = [-1.0]")).unwrap();
        assert!(bad.resolve(Path::new(".")).is_err());
    }

    #[test]
    fn expectation_tolerances() {
        assert_eq!(Expectation::Value(2.0).tolerance(1e-8), 1e-8);
        let rel = Expectation::Within { value: 2.0, tol: None, rtol: Some(0.01) };
        assert_eq!(rel.tolerance(1e-8), 0.02);
    }
}
