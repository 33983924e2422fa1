//! Experiment configuration: strict JSON with documented defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use crate::error::{Error, Result};
use crate::fem::DEFAULT_SOLVER_TOL;
use crate::functions::{ScalarFunction, VectorFunction};
use crate::geometry::GeometrySpec;
use crate::oned::Interval1DSpec;

/// Default relative-error target for counting terms.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default highest expansion order.
pub const DEFAULT_JMAX: usize = 25;
/// Default neighborhood widths of the localization sweep.
pub const DEFAULT_DELTAS: [f64; 11] = [0.001, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Physics {
    #[default]
    Pressure,
    Elastic,
}

/// Whether the inclusions are much stiffer (`η > 1`) or much softer (`ε < 1`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Stiff,
    Soft,
}

/// One experiment. Exactly one of `geometry` and `mesh` must be given, except for
/// the one-dimensional example, which needs neither.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    /// Path to a mesh JSON file, relative to the config file.
    #[serde(default)]
    pub mesh: Option<PathBuf>,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub mode: Mode,
    /// Contrast values `η` (stiff) or `ε` (soft).
    #[serde(default = "default_contrasts")]
    pub contrasts: Vec<f64>,
    /// Scalar source `f`.
    #[serde(default = "default_source")]
    pub source: ScalarFunction,
    /// Scalar outer boundary data `g`.
    #[serde(default = "ScalarFunction::zero")]
    pub boundary: ScalarFunction,
    #[serde(default = "default_body_force")]
    pub body_force: VectorFunction,
    #[serde(default = "VectorFunction::zero")]
    pub boundary_displacement: VectorFunction,
    #[serde(default = "default_poisson_ratio")]
    pub poisson_ratio: f64,
    #[serde(default = "default_jmax")]
    pub jmax: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Directory of the content-addressed cache, relative to the config file; caching is off when absent.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Bar for the one-dimensional example; the worked example when absent.
    #[serde(default)]
    pub interval: Option<Interval1DSpec>,
}

fn default_contrasts() -> Vec<f64> {
    vec![10.0, 100.0]
}

fn default_source() -> ScalarFunction {
    ScalarFunction::constant(1.0)
}

fn default_body_force() -> VectorFunction {
    VectorFunction::Components { x: ScalarFunction::zero(), y: ScalarFunction::constant(-1.0) }
}

fn default_poisson_ratio() -> f64 {
    0.3
}

fn default_jmax() -> usize {
    DEFAULT_JMAX
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_solver_tol() -> f64 {
    DEFAULT_SOLVER_TOL
}

fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub tol: Option<f64>,
    pub jmax: Option<usize>,
}

impl ExperimentConfig {
    /// Strict parse; type errors and unknown keys carry the JSON pointer of the offending value.
    pub fn from_json(text: &str) -> Result<Self> {
        let config = Self::parse(text)?;
        config.validate()?;
        Ok(config)
    }

    fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            Error::config(pointer, e.into_inner().to_string())
        })
    }

    /// Reads and parses `path`; relative mesh and cache paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("", format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            for p in [&mut config.mesh, &mut config.cache_dir].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        if let Some(out) = &overrides.output {
            self.output = Some(out.clone());
        }
        if let Some(t) = overrides.threads {
            self.threads = Some(t);
        }
        if let Some(t) = overrides.tol {
            self.tol = t;
        }
        if let Some(j) = overrides.jmax {
            self.jmax = j;
        }
        self.validate()
    }

    /// Checks value constraints, reporting the JSON pointer of the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.geometry.is_some() && self.mesh.is_some() {
            return Err(Error::config("/mesh", "give either geometry or mesh, not both"));
        }
        if let Some(mesh) = &self.mesh {
            if !mesh.exists() {
                return Err(Error::config("/mesh", format!("mesh file {} does not exist", mesh.display())));
            }
        }
        if self.contrasts.is_empty() {
            return Err(Error::config("/contrasts", "at least one contrast value is required"));
        }
        for (i, &c) in self.contrasts.iter().enumerate() {
            let ok = match self.mode {
                Mode::Stiff => c > 1.0 && c.is_finite(),
                Mode::Soft => c > 0.0 && c < 1.0,
            };
            if !ok {
                let need = match self.mode {
                    Mode::Stiff => "stiff mode needs contrast > 1",
                    Mode::Soft => "soft mode needs contrast in (0, 1)",
                };
                return Err(Error::config(format!("/contrasts/{i}"), format!("{need}, got {c}")));
            }
        }
        if self.mode == Mode::Soft && self.physics == Physics::Pressure {
            return Err(Error::config("/mode", "soft inclusions are only supported for elastic problems"));
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(Error::config(
                "/poisson_ratio",
                format!("Poisson ratio must lie in (0, 0.5), got {}", self.poisson_ratio),
            ));
        }
        if self.jmax == 0 {
            return Err(Error::config("/jmax", "jmax must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::config("/tol", format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Error::config("/solver_tol", format!("solver_tol must lie in (0, 1), got {}", self.solver_tol)));
        }
        for (i, &d) in self.deltas.iter().enumerate() {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config(format!("/deltas/{i}"), format!("widths must be positive, got {d}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::config("/threads", "thread count must be at least 1"));
        }
        if let Some(interval) = &self.interval {
            interval.validate().map_err(|e| Error::config("/interval", e.to_string()))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, used to name artifacts and cache entries.
    pub fn hash(&self) -> String {
        crate::harness::cache::digest(&[serde_json::to_vec(self).expect("config serializes").as_slice()])
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for segment in path.iter() {
        match segment {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pointer_of(text: &str) -> String {
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { pointer, .. }) => pointer,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c.tol, 1e-8);
        assert_eq!(c.jmax, 25);
        assert_eq!(c.contrasts, vec![10.0, 100.0]);
        assert_eq!(c.deltas.len(), 11);
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn stiff_contrast_below_one_is_rejected() {
        assert_eq!(pointer_of(r#"{"contrasts": [10, 0.5]}"#), "/contrasts/1");
    }

    #[test]
    fn soft_mode_needs_small_contrast() {
        let ok = r#"{"physics": "elastic", "mode": "soft", "contrasts": [0.1]}"#;
        ExperimentConfig::from_json(ok).unwrap();
        assert_eq!(pointer_of(r#"{"physics": "elastic", "mode": "soft", "contrasts": [2]}"#), "/contrasts/0");
        assert_eq!(pointer_of(r#"{"mode": "soft", "contrasts": [0.1]}"#), "/mode");
    }

    #[test]
    fn unknown_keys_and_bad_types_report_pointers() {
        let e = ExperimentConfig::from_json(r#"{"contrast": [10]}"#).unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
        assert_eq!(e.exit_code(), 2);
        assert_eq!(pointer_of(r#"{"jmax": "many"}"#), "/jmax");
        assert_eq!(pointer_of(r#"{"source": {"kind": "constant", "value": 1, "extra": 0}}"#), "/source");
        // tagged objects are buffered before dispatch, so the pointer stops at the object
        assert_eq!(
            pointer_of(r#"{"geometry": {"outer": {"kind": "disk", "cx": 0, "cy": 0, "r": "one"}, "target_h": 0.1}}"#),
            "/geometry/outer"
        );
        assert_eq!(pointer_of(r#"{"geometry": {"outer": {"kind": "disk", "cx": 0, "cy": 0, "r": 1}, "target_h": "x"}}"#), "/geometry/target_h");
    }

    #[test]
    fn overrides_are_validated() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides { tol: Some(1e-6), jmax: Some(4), ..Default::default() }).unwrap();
        assert_eq!((c.tol, c.jmax), (1e-6, 4));
        assert!(c.apply(&Overrides { threads: Some(0), ..Default::default() }).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.poisson_ratio = 0.25;
        assert_ne!(a.hash(), b.hash());
    }
}
