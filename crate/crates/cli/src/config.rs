//! Run configuration documents.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use nofob::engine::{StoppingRule, DEFAULT_EPSILON};
use nofob::methods::{preset, Preset, PresetParams};
use nofob::problems::{generate, ProblemDocument};
use serde::Deserialize;

pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// Where the problem comes from: exactly one of `generator`, `path` or
/// `document`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSource {
    pub generator: Option<String>,
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
    pub document: Option<ProblemDocument>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub preset: String,
    #[serde(default)]
    pub params: PresetParams<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingConfig {
    pub max_iter: Option<usize>,
    pub step_tol: Option<f64>,
    pub residual_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub view: Option<String>,
    pub method: MethodConfig,
    #[serde(default)]
    pub stopping: StoppingConfig,
    #[serde(default = "yes")]
    pub enforce_certificate: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line overrides shared by `run` and `compare`.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub no_enforce: bool,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub view: Option<String>,
}

/// A validated configuration with its problem resolved.
pub struct Resolved {
    pub config: RunConfig,
    pub preset: &'static Preset,
    pub document: ProblemDocument,
    /// `generator:seed` or the canonical path, for sharing documents.
    pub problem_key: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // problem paths are relative to the config file
        if let (Some(p), Some(dir)) = (&config.problem.path, path.parent()) {
            if p.is_relative() {
                config.problem.path = Some(dir.join(p));
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.problem.seed = Some(seed);
        }
        if o.no_enforce {
            self.enforce_certificate = false;
        }
        if let Some(n) = o.max_iter {
            self.stopping.max_iter = Some(n);
        }
        if let Some(t) = o.tol {
            self.stopping.residual_tol = Some(t);
        }
        if let Some(v) = &o.view {
            self.view = Some(v.clone());
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.method.epsilon.unwrap_or(DEFAULT_EPSILON)
    }

    /// The stopping rule; with no tolerance given, the residual is driven
    /// to [`DEFAULT_RESIDUAL_TOL`].
    pub fn stopping_rule(&self) -> StoppingRule<f64> {
        let s = &self.stopping;
        let residual_tol = match (s.step_tol, s.residual_tol) {
            (None, None) => Some(DEFAULT_RESIDUAL_TOL),
            (_, r) => r,
        };
        StoppingRule {
            max_iter: s.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            step_tol: s.step_tol,
            residual_tol,
        }
    }

    /// Checks the preset and its parameter names without touching the
    /// problem.
    pub fn validate(&self) -> anyhow::Result<&'static Preset> {
        let p = preset(&self.method.preset)?;
        let params = serde_json::to_value(&self.method.params)?;
        if let Some(map) = params.as_object() {
            for name in map.keys() {
                if !p.params.iter().any(|spec| spec.name == name) {
                    bail!(
                        "preset `{}` does not take parameter `{name}` (accepted: {})",
                        p.name,
                        p.params.iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
                    );
                }
            }
        }
        if let Some(eps) = self.method.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                bail!("epsilon must be positive and finite, got {eps}");
            }
        }
        self.stopping_rule().validate()?;
        Ok(p)
    }

    pub fn problem_key(&self) -> anyhow::Result<String> {
        let src = &self.problem;
        match (&src.generator, &src.path, &src.document) {
            (Some(g), None, None) => Ok(format!("{g}:{}", src.seed.unwrap_or(0))),
            (None, Some(p), None) => {
                let canonical = fs::canonicalize(p).with_context(|| format!("problem file {}", p.display()))?;
                Ok(canonical.display().to_string())
            }
            (None, None, Some(d)) => Ok(format!("inline:{}", d.name)),
            _ => Err(anyhow!("problem needs exactly one of `generator`, `path` or `document`")),
        }
    }

    pub fn load_problem(&self) -> anyhow::Result<ProblemDocument> {
        let src = &self.problem;
        if let Some(g) = &src.generator {
            return Ok(generate(g, src.seed.unwrap_or(0))?);
        }
        if let Some(p) = &src.path {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            return Ok(ProblemDocument::from_json(&text)?);
        }
        src.document
            .clone()
            .ok_or_else(|| anyhow!("problem needs exactly one of `generator`, `path` or `document`"))
    }

    pub fn resolve(self) -> anyhow::Result<Resolved> {
        let preset = self.validate()?;
        let problem_key = self.problem_key()?;
        let document = self.load_problem()?;
        Ok(Resolved {
            config: self,
            preset,
            document,
            problem_key,
        })
    }
}
