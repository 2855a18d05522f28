//! Experiment configuration: one JSON document per run.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GroupKind, GroupSpec};
use crate::magnetic::Flux;
use crate::spectral::DensityMethod;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Eig,
    Heat,
    Theta,
    Ns,
    Density,
    Logdet,
    Groundstate,
    Decay,
    Verify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Eig,
        ExperimentKind::Heat,
        ExperimentKind::Theta,
        ExperimentKind::Ns,
        ExperimentKind::Density,
        ExperimentKind::Logdet,
        ExperimentKind::Groundstate,
        ExperimentKind::Decay,
        ExperimentKind::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Eig => "eig",
            ExperimentKind::Heat => "heat",
            ExperimentKind::Theta => "theta",
            ExperimentKind::Ns => "ns",
            ExperimentKind::Density => "density",
            ExperimentKind::Logdet => "logdet",
            ExperimentKind::Groundstate => "groundstate",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Verify => "verify",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown experiment kind `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Certified error budget for heat-kernel evaluations.
    pub err_budget: f64,
    /// Residual tolerance of eigenpairs.
    pub eig_tol: f64,
    /// Slack allowed in inequality checks.
    pub invariant: f64,
    /// Stopping tolerance of the ground-state exhaustion.
    pub convergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            err_budget: 1e-10,
            eig_tol: 1e-10,
            invariant: 1e-10,
            convergence: 1e-6,
        }
    }
}

/// Optional knobs used by a subset of the experiment kinds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KindParams {
    /// Fit or check window `[t1, t2]`; defaults to the ends of the time grid.
    pub window: Option<(f64, f64)>,
    pub method: Option<DensityMethod>,
    pub resolution: Option<usize>,
    pub eps_floor: Option<f64>,
    /// Riemann-sum refinement levels.
    pub ells: Option<Vec<u32>>,
    /// Random trials per row of the verification suite.
    pub trials: Option<usize>,
    /// Number of times sampled by the decay check.
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    pub group: GroupSpec,
    #[serde(default)]
    pub fluxes: Vec<Flux>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub radii: Vec<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: KindParams,
}

/// Line of the first occurrence of `"key"` in `text`, 1-based.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates; every error names the offending field and its line.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => {
                let field = msg.split(':').next().unwrap_or("");
                let leaf = field.rsplit('.').next().unwrap_or(field);
                let leaf = leaf.split('[').next().unwrap_or(leaf);
                match line_of(text, leaf) {
                    Some(n) => Error::Config(format!("line {n}: {msg}")),
                    None => Error::Config(msg),
                }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the invariants; messages start with the field path.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::Config(format!("{field}: {msg}")));
        if self.group.validate().is_err() {
            return bad("group", "rank must be positive");
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("tolerances.err_budget", tol.err_budget),
            ("tolerances.eig_tol", tol.eig_tol),
            ("tolerances.invariant", tol.invariant),
            ("tolerances.convergence", tol.convergence),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, &format!("must be positive, got {v}"));
            }
        }
        if self.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("t_grid", "times must be finite and nonnegative");
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("t_grid", "must be strictly increasing");
        }
        for (i, f) in self.fluxes.iter().enumerate() {
            match f {
                Flux::Rational { den, .. } if *den <= 0 => {
                    return bad(&format!("fluxes[{i}]"), "denominator must be positive");
                }
                Flux::Real(x) if !x.is_finite() => return bad(&format!("fluxes[{i}]"), "must be finite"),
                _ => {}
            }
        }
        if !self.fluxes.is_empty() && self.group.kind() != (GroupKind::FreeAbelian { rank: 2 }) {
            return bad("fluxes", "Harper fluxes need the group free_abelian with rank 2");
        }
        if self.radii.contains(&0) {
            return bad("radii", "radii must be positive");
        }
        let p = &self.params;
        if let Some((a, b)) = p.window {
            if !(a > 0.0 && b > a) {
                return bad("params.window", "must satisfy 0 < t1 < t2");
            }
        }
        if let Some(e) = p.eps_floor {
            if !(e > 0.0 && e < 0.25) {
                return bad("params.eps_floor", "must lie in (0, 1/4)");
            }
        }
        if let Some(ells) = &p.ells {
            if ells.iter().any(|&l| l == 0 || l > 20) {
                return bad("params.ells", "levels must lie in 1..=20");
            }
        }
        if p.resolution == Some(0) {
            return bad("params.resolution", "must be positive");
        }
        if matches!(p.trials, Some(0)) {
            return bad("params.trials", "must be positive");
        }
        if matches!(p.samples, Some(s) if s < 2) {
            return bad("params.samples", "need at least two samples");
        }
        Ok(())
    }

    /// Checks the fields a given kind needs.
    pub fn require_for(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(Error::Config(format!("kind: config is for `{k}` but `{kind}` was requested")));
            }
        }
        let needs_grid = matches!(kind, ExperimentKind::Heat | ExperimentKind::Theta | ExperimentKind::Ns);
        if needs_grid && self.t_grid.is_empty() {
            return Err(Error::Config(format!("t_grid: required for `{kind}`")));
        }
        if kind == ExperimentKind::Decay && self.t_grid.len() < 2 && self.params.window.is_none() {
            return Err(Error::Config("t_grid: decay needs a window or at least two times".into()));
        }
        Ok(())
    }

    /// Fit window, defaulting to the ends of the time grid.
    pub fn window(&self) -> Option<(f64, f64)> {
        self.params
            .window
            .or_else(|| Some((*self.t_grid.first()?, *self.t_grid.last()?)).filter(|w| w.1 > w.0))
    }
}
