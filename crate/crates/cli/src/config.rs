//! JSON problem files.
//!
//! ```json
//! {
//!   "T": 1.0, "n": 1, "m": 1, "N": 200,
//!   "f1": ["(2-1)*x1 + 1/(1+normx^2)*(normy^2*x1 + cos(6.283185307179586*t))"],
//!   "f2": ["1/(1+normy^2)*(normx^2*y1 + sin(6.283185307179586*t)) + (2-1)*y1"],
//!   "gamma": { "kind": "dirichlet" },
//!   "eta": { "kind": "antiperiodic" },
//!   "solver": { "tol": 1e-8 },
//!   "output": "out"
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mbvp_core::analysis::{FirstGrowth, GrowthConstants, SampleBox, SecondGrowth};
use mbvp_core::boundary::{build_boundary, BoundaryKind, BoundaryOperator, BoundaryParams, ConvexSet};
use mbvp_core::collocation::{Grid, NewtonOptions};
use mbvp_core::linsolve::LinearOptions;
use mbvp_core::nonlinear::{ExprForcing, SolveOptions, Strategy, SystemProblem};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N", default = "default_intervals")]
    pub intervals: usize,
    pub f1: Vec<String>,
    pub f2: Vec<String>,
    pub gamma: BoundarySpec,
    pub eta: BoundarySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub growth: Option<GrowthSpec>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub study: StudySpec,
    pub output: Option<PathBuf>,
}

fn default_intervals() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub kind: String,
    /// Row-major `2q x 2q` matrix for `linear_psd`.
    pub matrix: Option<Vec<f64>>,
    /// Convex set for `projection`.
    pub set: Option<SetSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { radius: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub theta: f64,
    pub max_fixed_point: usize,
    pub lambda: f64,
    pub continuation_steps: usize,
    /// `auto`, `fixed_point`, `newton` or `continuation`.
    pub strategy: String,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            tol: d.tol,
            theta: d.theta,
            max_fixed_point: d.max_fixed_point,
            lambda: d.linear.lambda,
            continuation_steps: d.continuation_steps,
            strategy: "auto".into(),
        }
    }
}

/// Growth constants; a missing `delta` is estimated from samples.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSpec {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        let d = SampleBox::default();
        Self { radius: d.radius, samples: d.samples, seed: d.seed }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySpec {
    pub levels: Vec<usize>,
    pub reference: usize,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self { levels: vec![50, 100, 200, 400], reference: 3200 }
    }
}

pub fn load(path: &Path) -> Result<ConfigDocument, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let doc: ConfigDocument =
        serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.into(), source })?;
    doc.validate()?;
    Ok(doc)
}

impl ConfigDocument {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("T", format!("must be positive, got {}", self.t_end)));
        }
        Grid::new(self.t_end, self.intervals).map_err(|e| invalid("N", e.to_string()))?;
        if self.n == 0 || self.m == 0 {
            return Err(invalid("n/m", "dimensions must be at least 1"));
        }
        if self.f1.len() != self.n {
            return Err(invalid("f1", format!("{} components for n = {}", self.f1.len(), self.n)));
        }
        if self.f2.len() != self.m {
            return Err(invalid("f2", format!("{} components for m = {}", self.f2.len(), self.m)));
        }
        self.strategy()?;
        let s = &self.solver;
        if !(s.tol > 0.0) || !(s.theta > 0.0 && s.theta <= 1.0) || !(s.lambda > 0.0) || s.continuation_steps == 0 {
            return Err(invalid("solver", "need tol > 0, 0 < theta <= 1, lambda > 0, continuation_steps >= 1"));
        }
        self.sample_box(None).validate().map_err(|e| invalid("sampling", e.to_string()))?;
        Ok(())
    }

    fn strategy(&self) -> Result<Option<Strategy>, ConfigError> {
        match self.solver.strategy.as_str() {
            "auto" => Ok(None),
            "fixed_point" => Ok(Some(Strategy::FixedPoint)),
            "newton" => Ok(Some(Strategy::Newton)),
            "continuation" => Ok(Some(Strategy::Continuation)),
            other => Err(invalid(
                "solver.strategy",
                format!("unknown strategy '{other}' (expected auto, fixed_point, newton or continuation)"),
            )),
        }
    }

    pub fn problem(&self) -> Result<SystemProblem, ConfigError> {
        let gamma = boundary("gamma", &self.gamma, self.n)?;
        let eta = boundary("eta", &self.eta, self.m)?;
        let f1 = forcing("f1", &self.f1)?;
        let f2 = forcing("f2", &self.f2)?;
        SystemProblem::new(self.t_end, Arc::new(f1), Arc::new(f2), gamma, eta)
            .map_err(|e| invalid("problem", e.to_string()))
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        let d = SolveOptions::default();
        SolveOptions {
            intervals: self.intervals,
            tol: s.tol,
            theta: s.theta,
            max_fixed_point: s.max_fixed_point,
            continuation_steps: s.continuation_steps,
            linear: LinearOptions { lambda: s.lambda, newton: NewtonOptions::default() },
            force: self.strategy().unwrap_or(None),
            ..d
        }
    }

    /// Sampling box, with `seed` replacing the configured seed when given.
    pub fn sample_box(&self, seed: Option<u64>) -> SampleBox {
        SampleBox { radius: self.sampling.radius, samples: self.sampling.samples, seed: seed.unwrap_or(self.sampling.seed) }
    }

    /// Constants as far as they are given; `delta` may still be missing.
    pub fn growth_partial(&self) -> Option<(GrowthConstants, bool)> {
        let g = self.growth.as_ref()?;
        let first = match (g.a, g.b) {
            (Some(a), Some(b)) => Some(FirstGrowth { a, b }),
            _ => None,
        };
        let second = match (g.c, g.d) {
            (Some(c), Some(d)) => Some(SecondGrowth { c, d }),
            _ => None,
        };
        Some((GrowthConstants { first, second, delta: g.delta.unwrap_or(0.0) }, g.delta.is_some()))
    }
}

fn forcing(key: &str, texts: &[String]) -> Result<ExprForcing, ConfigError> {
    let mut parts = Vec::with_capacity(texts.len());
    for (i, text) in texts.iter().enumerate() {
        let e = mbvp_core::expr::Expr::parse(text).map_err(|e| invalid(format!("{key}[{i}]"), e.to_string()))?;
        parts.push(e);
    }
    Ok(ExprForcing::new(parts))
}

fn boundary(key: &str, spec: &BoundarySpec, q: usize) -> Result<BoundaryOperator, ConfigError> {
    let kind = BoundaryKind::from_name(&spec.kind).ok_or_else(|| {
        let names: Vec<&str> = BoundaryKind::ALL.iter().map(|k| k.name()).collect();
        invalid(format!("{key}.kind"), format!("unknown boundary kind '{}' (expected one of {})", spec.kind, names.join(", ")))
    })?;
    let params = match kind {
        BoundaryKind::LinearPsd => BoundaryParams::Matrix(
            spec.matrix.clone().ok_or_else(|| invalid(format!("{key}.matrix"), "required for linear_psd"))?,
        ),
        BoundaryKind::ProjectionProx => {
            let set = spec.set.as_ref().ok_or_else(|| invalid(format!("{key}.set"), "required for projection"))?;
            BoundaryParams::Projection(match set {
                SetSpec::Box { lower, upper } => ConvexSet::Box { lower: lower.clone(), upper: upper.clone() },
                SetSpec::Ball { radius } => ConvexSet::Ball { radius: *radius },
            })
        }
        _ => BoundaryParams::None,
    };
    build_boundary(kind, q, params).map_err(|e| invalid(key, e.to_string()))
}
