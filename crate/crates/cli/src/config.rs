//! Flat JSON run configuration with dotted-key overrides.

use std::path::{Path, PathBuf};

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use rmcf_core::flow::{FlowConfig, Scheme};
use rmcf_core::manifold::ManifoldProblem;
use rmcf_core::spectral::{
    default_nodes, min_nodes, Layout, Mode, PathNormParams, SpectralField,
};

use crate::error::{CliError, Result};

/// Environment variable that overrides `out_dir`.
pub const OUT_DIR_ENV: &str = "RMCF_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: usize,
    /// Leading level for manifold and arrival commands.
    pub k: usize,
    #[serde(rename = "J_max")]
    pub j_max: usize,
    /// Quadrature nodes; the dimension default when absent.
    #[serde(rename = "M")]
    pub nodes: Option<usize>,
    pub dt: f64,
    pub s_end: f64,
    pub stride: usize,
    pub scheme: Scheme,
    /// Sobolev index and weight of the path norm; defaults depend on `(n, k)`.
    pub r: Option<i32>,
    pub sigma: Option<f64>,
    /// Coefficient of the unit-`L²` mode `(mode_j, mode_m)` in `u0`.
    pub amplitude: f64,
    /// Level of the initial mode; `k` when absent.
    pub mode_j: Option<usize>,
    pub mode_m: usize,
    /// Uniform random perturbation of every coefficient of `u0`, drawn from `seed`.
    pub noise: f64,
    /// Level-`k` coefficients of the prescribed limit; `amplitude · Y_{k, mode_m}` when absent.
    pub b: Option<Vec<f64>>,
    pub tol: f64,
    pub prescribe_tol: f64,
    pub max_iter: usize,
    pub s_max: Option<f64>,
    pub steps: usize,
    /// Levels whose decay rate `evolve` reports; the support of `u0` when absent.
    pub rate_levels: Option<Vec<usize>>,
    pub directions: Option<usize>,
    #[serde(rename = "T")]
    pub t_ext: f64,
    pub levelset: bool,
    pub cells: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 1,
            k: 2,
            j_max: 32,
            nodes: None,
            dt: 1e-3,
            s_end: 5.0,
            stride: 1,
            scheme: Scheme::ImexRk2,
            r: None,
            sigma: None,
            amplitude: 1e-5,
            mode_j: None,
            mode_m: 0,
            noise: 0.0,
            b: None,
            tol: 1e-10,
            prescribe_tol: 1e-9,
            max_iter: 50,
            s_max: None,
            steps: 600,
            rate_levels: None,
            directions: None,
            t_ext: 1.0,
            levelset: true,
            cells: rmcf_core::analysis::DEFAULT_CELLS,
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Sets `path` (dot-separated keys or array indices) in `root` to `value`.
pub fn apply_override(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cursor = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cursor = match cursor {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert(Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| CliError::Config(format!("{path}: {part:?} is not an index")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| {
                    CliError::Config(format!("{path}: index {idx} out of range ({len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("{path}: {part:?} is not a container"))),
        };
    }
    Err(CliError::Config("empty override key".into()))
}

/// Parses `key=value`; the value is read as JSON, falling back to a string.
pub fn parse_override(spec: &str) -> Result<(String, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override {spec:?} has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

impl RunConfig {
    /// Defaults, then `file`, then the output-directory environment variable,
    /// then `overrides` in order.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let from_file: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let Value::Object(entries) = from_file else {
                return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
            };
            for (k, v) in entries {
                apply_override(&mut value, &k, v)?;
            }
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                apply_override(&mut value, "out_dir", Value::String(dir))?;
            }
        }
        for spec in overrides {
            let (key, v) = parse_override(spec)?;
            apply_override(&mut value, &key, v)?;
        }
        let config: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn layout(&self) -> Result<Layout> {
        Ok(Layout::new(self.n, self.j_max)?)
    }

    pub fn mode(&self) -> Mode {
        Mode {
            j: self.mode_j.unwrap_or(self.k),
            m: self.mode_m,
        }
    }

    pub fn flow(&self) -> FlowConfig {
        FlowConfig {
            n: self.n,
            j_max: self.j_max,
            nodes: self.nodes.unwrap_or_else(|| default_nodes(self.n)),
            dt: self.dt,
            s_end: self.s_end,
            scheme: self.scheme,
            stride: self.stride,
        }
    }

    pub fn path_params(&self) -> PathNormParams {
        let default = PathNormParams::default_for(self.n, self.k);
        PathNormParams {
            r: self.r.unwrap_or(default.r),
            sigma: self.sigma.unwrap_or(default.sigma),
        }
    }

    pub fn direction_count(&self) -> usize {
        self.directions.unwrap_or(if self.n == 1 { 64 } else { 16 })
    }

    /// `amplitude · Y_mode`, plus seeded noise when `noise > 0`.
    pub fn initial_field(&self) -> Result<SpectralField> {
        let layout = self.layout()?;
        let mut u = SpectralField::unit_mode(layout, self.mode(), self.amplitude)?;
        if self.noise > 0.0 {
            info!("perturbing u0 with noise {:e} from seed {}", self.noise, self.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for c in u.coeffs_mut() {
                *c += rng.gen_range(-self.noise..=self.noise);
            }
        }
        Ok(u)
    }

    /// The prescribed limit `b` on level `k`.
    pub fn target(&self) -> Result<SpectralField> {
        let layout = self.layout()?;
        match &self.b {
            None => Ok(SpectralField::unit_mode(
                layout,
                Mode { j: self.k, m: self.mode_m },
                self.amplitude,
            )?),
            Some(coeffs) => {
                let mut b = SpectralField::zeros(layout);
                let range = layout.level_range(self.k);
                b.coeffs_mut()[range].copy_from_slice(coeffs);
                Ok(b)
            }
        }
    }

    /// Template problem on `F_k` with the configured horizon and tolerances.
    pub fn manifold_problem(&self, u0: SpectralField) -> Result<ManifoldProblem> {
        let mut problem = ManifoldProblem::new(self.k, u0)?.with_params(self.path_params())?;
        if let Some(nodes) = self.nodes {
            problem = problem.with_nodes(nodes)?;
        }
        let s_max = self.s_max.unwrap_or(problem.s_max);
        problem = problem.with_horizon(s_max, self.steps)?;
        problem.tol = self.tol;
        problem.prescribe_tol = self.prescribe_tol;
        problem.max_iter = self.max_iter;
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let layout = match Layout::new(self.n, self.j_max) {
            Ok(l) => l,
            Err(e) => return bad(e.to_string()),
        };
        if self.n > 3 {
            return bad(format!("n = {} is not supported (n <= 3)", self.n));
        }
        if self.k < 2 || self.k > self.j_max {
            return bad(format!("k = {} must lie in [2, J_max = {}]", self.k, self.j_max));
        }
        let mode = self.mode();
        if mode.j > self.j_max || layout.index(mode).is_none() {
            return bad(format!("mode ({}, {}) is not in the layout", mode.j, mode.m));
        }
        if let Some(m) = self.nodes {
            if m < min_nodes(layout) {
                return bad(format!("M = {m} below {} for J_max = {}", min_nodes(layout), self.j_max));
            }
        }
        self.flow().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.path_params()
            .validate(self.n, self.k)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !self.amplitude.is_finite() || !(self.noise >= 0.0) || !self.noise.is_finite() {
            return bad("amplitude and noise must be finite, noise >= 0".into());
        }
        if let Some(b) = &self.b {
            let len = layout.level_len(self.k);
            if b.len() != len || b.iter().any(|c| !c.is_finite()) {
                return bad(format!("b must hold {len} finite level-{} coefficients", self.k));
            }
        }
        if !(self.tol > 0.0) || !(self.prescribe_tol > 0.0) || self.max_iter == 0 {
            return bad("tolerances and max_iter must be positive".into());
        }
        if self.steps == 0 || self.s_max.is_some_and(|s| !(s > 0.0)) {
            return bad("steps and s_max must be positive".into());
        }
        if let Some(levels) = &self.rate_levels {
            if let Some(j) = levels.iter().find(|&&j| j > self.j_max) {
                return bad(format!("rate level {j} exceeds J_max"));
            }
        }
        if self.direction_count() < 3 || self.cells < 4 {
            return bad("need at least 3 directions and 4 grid cells".into());
        }
        if !self.t_ext.is_finite() {
            return bad("T must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_overrides() {
        let mut v = serde_json::json!({"a": 1, "b": [1, 2, 3]});
        apply_override(&mut v, "b.1", serde_json::json!(7)).unwrap();
        apply_override(&mut v, "a", serde_json::json!("x")).unwrap();
        assert_eq!(v, serde_json::json!({"a": "x", "b": [1, 7, 3]}));
        assert!(apply_override(&mut v, "b.9", Value::Null).is_err());
        assert!(apply_override(&mut v, "a.c", Value::Null).is_err());
    }

    #[test]
    fn override_values() {
        assert_eq!(parse_override("dt=0.01").unwrap().1, serde_json::json!(0.01));
        assert_eq!(parse_override("scheme=ETD-RK2").unwrap().1, serde_json::json!("ETD-RK2"));
        assert!(parse_override("dt").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::load(None, &["bogus=1".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::load(None, &["k=1".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn derived_settings() {
        let c = RunConfig::load(None, &["n=2".into(), "b=[0.001]".into()]).unwrap();
        assert_eq!(c.flow().nodes, default_nodes(2));
        assert_eq!(c.direction_count(), 16);
        assert_eq!(c.target().unwrap().support_levels(), vec![2]);
        assert!(RunConfig::load(None, &["b=[1, 2, 3]".into()]).is_err());
    }
}
