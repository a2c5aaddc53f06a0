//! Scenario files: one TOML document per scenario.
//!
//! ```toml
//! name = "fmt-basic"
//! summary = "..."
//! punctures = ["1", "-1"]
//!
//! [grid]
//! start = 2.5
//! stop = 40.0
//! count = 20
//! spacing = "linear"        # or "log"
//!
//! [tolerances]              # optional
//! quad_tol = 1e-9
//!
//! [curves]
//! line = ["1", "z"]
//!
//! [functions]
//! shifted = { numerator = "z - 3" }
//!
//! [targets]
//! h = { hyperplane = ["0", "1"] }
//! conic = { hypersurface = "x0*x1", vars = 2 }
//!
//! [[checks]]
//! theorem = "first_main"
//! curve = "line"
//! target = "h"
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use vdist::cartan::{Curve, Hyperplane, Hypersurface, Target};
use vdist::expr::parse_with_punctures;
use vdist::theorems::{example2, UniquenessConstruction};
use vdist::{Config, MeromorphicFunction, PuncturedPlane};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub summary: String,
    pub punctures: Vec<String>,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub curves: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionSpec>,
    #[serde(default)]
    pub targets: BTreeMap<String, TargetSpec>,
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl GridSpec {
    pub fn radii(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * s,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * s).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub quad_tol: Option<f64>,
    pub root_tol: Option<f64>,
    pub max_quad_nodes: Option<usize>,
    pub agreement_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub numerator: String,
    #[serde(default = "one")]
    pub denominator: String,
}

fn one() -> String {
    "1".into()
}

/// Either `hyperplane = [a_0, …]` or `hypersurface = "…"` with `vars`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperplane: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypersurface: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vars: Option<usize>,
}

/// Parameters of the Example 2 family `Σ_i (Σ_{t ≤ i} x_t)^n x_i^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSpec {
    #[serde(rename = "N")]
    pub n_dim: u32,
    pub n: u32,
    pub d: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Jensen {
        function: String,
    },
    LogDerivative {
        function: String,
    },
    FirstMain {
        curve: String,
        target: String,
    },
    SmtHyperplanes {
        curve: String,
        targets: Vec<String>,
    },
    Lemma31 {
        curve: String,
        targets: Vec<String>,
    },
    SmtHypersurfaces {
        curve: String,
        targets: Vec<String>,
        epsilon: f64,
    },
    UniquenessInequality {
        curve: String,
        construction: ConstructionSpec,
    },
    UniquenessDecision {
        curve: String,
        other: String,
        construction: ConstructionSpec,
    },
}

/// A validation failure with the field it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.to_string(),
    }
}

/// A scenario with every name resolved and every expression parsed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub plane: PuncturedPlane,
    pub r_grid: Vec<f64>,
    pub config: Config,
    pub agreement_tol: f64,
    pub curves: BTreeMap<String, Curve>,
    pub functions: BTreeMap<String, MeromorphicFunction>,
    pub targets: BTreeMap<String, Target>,
}

/// Command-line overrides of the scenario tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub quad_tol: Option<f64>,
    pub max_quad_nodes: Option<usize>,
    pub seed: Option<u64>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    toml::from_str(text).map_err(|e| err("", e))
}

fn complex(field: &str, text: &str) -> Result<Complex64, ConfigError> {
    parse_with_punctures(text, &[])
        .map_err(|e| err(field, e))?
        .as_const()
        .ok_or_else(|| err(field, format!("`{text}` is not a constant")))
}

impl Scenario {
    pub fn resolve(&self, ov: Overrides) -> Result<Resolved, ConfigError> {
        let punctures = self
            .punctures
            .iter()
            .enumerate()
            .map(|(i, s)| complex(&format!("punctures[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?;
        let plane = PuncturedPlane::new(punctures).map_err(|e| err("punctures", e))?;

        let g = &self.grid;
        if g.count < 2 {
            return Err(err("grid.count", format!("need at least 2 radii, got {}", g.count)));
        }
        if !(g.stop > g.start) {
            return Err(err("grid.stop", "stop must exceed start"));
        }
        if g.start < plane.base_radius() {
            return Err(err(
                "grid.start",
                format!("start below base radius r_0 = {}", plane.base_radius()),
            ));
        }

        let mut config = Config::default();
        let t = &self.tolerances;
        if let Some(v) = ov.quad_tol.or(t.quad_tol) {
            if !(v > 0.0) {
                return Err(err("tolerances.quad_tol", "must be positive"));
            }
            config.quad_tol = v;
        }
        if let Some(v) = t.root_tol {
            if !(v > 0.0) {
                return Err(err("tolerances.root_tol", "must be positive"));
            }
            config.root_tol = v;
        }
        if let Some(v) = ov.max_quad_nodes.or(t.max_quad_nodes) {
            config.max_quad_nodes = v;
        }
        if let Some(v) = ov.seed.or(self.seed) {
            config.seed = v;
        }
        let agreement_tol = t.agreement_tol.unwrap_or(1e-6);

        let mut curves = BTreeMap::new();
        for (id, comps) in &self.curves {
            let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
            curves.insert(
                id.clone(),
                Curve::parse(&refs, &plane).map_err(|e| err(format!("curves.{id}"), e))?,
            );
        }
        let mut functions = BTreeMap::new();
        for (id, spec) in &self.functions {
            let f = MeromorphicFunction::parse(&spec.numerator, &spec.denominator, &plane)
                .map_err(|e| err(format!("functions.{id}"), e))?;
            functions.insert(id.clone(), f);
        }
        let mut targets = BTreeMap::new();
        for (id, spec) in &self.targets {
            let field = format!("targets.{id}");
            let target = match (&spec.hyperplane, &spec.hypersurface, spec.vars) {
                (Some(coeffs), None, None) => {
                    let cs = coeffs
                        .iter()
                        .map(|s| complex(&field, s))
                        .collect::<Result<Vec<_>, _>>()?;
                    Target::Hyperplane(Hyperplane::new(cs).map_err(|e| err(&field, e))?)
                }
                (None, Some(text), Some(vars)) => {
                    Target::Hypersurface(Hypersurface::parse(text, vars).map_err(|e| err(&field, e))?)
                }
                (None, Some(_), None) => return Err(err(&field, "a hypersurface needs `vars`")),
                _ => return Err(err(&field, "give either `hyperplane` or `hypersurface` with `vars`")),
            };
            targets.insert(id.clone(), target);
        }

        let resolved = Resolved {
            scenario: self.clone(),
            plane,
            r_grid: g.radii(),
            config,
            agreement_tol,
            curves,
            functions,
            targets,
        };
        for (i, check) in self.checks.iter().enumerate() {
            resolved.check_names(i, check)?;
        }
        if self.checks.is_empty() {
            return Err(err("checks", "scenario has no checks"));
        }
        Ok(resolved)
    }
}

impl Resolved {
    fn check_names(&self, i: usize, check: &CheckSpec) -> Result<(), ConfigError> {
        let field = |k: &str| format!("checks[{i}].{k}");
        let curve = |id: &String, k: &str| {
            self.curves
                .get(id)
                .map(|_| ())
                .ok_or_else(|| err(field(k), format!("unknown curve `{id}`")))
        };
        let function = |id: &String| {
            self.functions
                .get(id)
                .map(|_| ())
                .ok_or_else(|| err(field("function"), format!("unknown function `{id}`")))
        };
        match check {
            CheckSpec::Jensen { function: f } | CheckSpec::LogDerivative { function: f } => function(f),
            CheckSpec::FirstMain { curve: c, target } => {
                curve(c, "curve")?;
                self.target(target).map(|_| ()).map_err(|m| err(field("target"), m))
            }
            CheckSpec::SmtHyperplanes { curve: c, targets } | CheckSpec::Lemma31 { curve: c, targets } => {
                curve(c, "curve")?;
                self.hyperplanes(targets)
                    .map(|_| ())
                    .map_err(|m| err(field("targets"), m))
            }
            CheckSpec::SmtHypersurfaces {
                curve: c,
                targets,
                epsilon,
            } => {
                curve(c, "curve")?;
                if !(*epsilon > 0.0) {
                    return Err(err(field("epsilon"), "must be positive"));
                }
                self.hypersurfaces(targets)
                    .map(|_| ())
                    .map_err(|m| err(field("targets"), m))
            }
            CheckSpec::UniquenessInequality { curve: c, .. } => curve(c, "curve"),
            CheckSpec::UniquenessDecision { curve: c, other, .. } => {
                curve(c, "curve")?;
                curve(other, "other")
            }
        }
    }

    pub fn target(&self, id: &str) -> Result<&Target, String> {
        self.targets.get(id).ok_or_else(|| format!("unknown target `{id}`"))
    }

    pub fn hyperplanes(&self, ids: &[String]) -> Result<Vec<Hyperplane>, String> {
        ids.iter()
            .map(|id| match self.target(id)? {
                Target::Hyperplane(h) => Ok(h.clone()),
                Target::Hypersurface(_) => Err(format!("target `{id}` is not a hyperplane")),
            })
            .collect()
    }

    pub fn hypersurfaces(&self, ids: &[String]) -> Result<Vec<Hypersurface>, String> {
        ids.iter().map(|id| Ok(self.target(id)?.to_hypersurface())).collect()
    }
}

pub fn construction(spec: &ConstructionSpec) -> vdist::Result<UniquenessConstruction> {
    example2(spec.n_dim, spec.n, spec.d)
}

/// Built-in scenarios, in listing order.
pub const BUILTINS: [(&str, &str); 6] = [
    ("fmt-basic", include_str!("../scenarios/fmt-basic.toml")),
    ("jensen-suite", include_str!("../scenarios/jensen-suite.toml")),
    ("smt-hyperplanes", include_str!("../scenarios/smt-hyperplanes.toml")),
    ("smt-hypersurfaces", include_str!("../scenarios/smt-hypersurfaces.toml")),
    (
        "uniqueness-example2",
        include_str!("../scenarios/uniqueness-example2.toml"),
    ),
    (
        "essential-singularity-growth",
        include_str!("../scenarios/essential-singularity-growth.toml"),
    ),
];

pub fn builtin(id: &str) -> Option<Scenario> {
    BUILTINS
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| parse_scenario(text).expect("built-in scenarios parse"))
}
