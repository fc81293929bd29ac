//! Experiment configuration: schema validation, then typed deserialization.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use rigidity_core::diffeo::{DiffeoLiteral, Manifold, ManifoldKind, DEFAULT_GRID};
use rigidity_core::presentation::{PresentationSpec, SemidirectPresentation};
use rigidity_core::representation::GallerySpec;
use serde::{Deserialize, Serialize};

/// The published schema every configuration is checked against.
pub const SCHEMA: &str = include_str!("../../../docs/config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub presentation: PresentationSource,
    #[serde(default)]
    pub manifold: ManifoldConfig,
    pub action: ActionConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PresentationSource {
    Inline(PresentationSpec),
    Matrix { matrix: Vec<Vec<i64>> },
    File { file: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    #[serde(default = "default_kind")]
    pub kind: ManifoldKind,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self { kind: default_kind(), grid: default_grid() }
    }
}

impl ManifoldConfig {
    pub fn manifold(&self) -> Manifold {
        let base = match self.kind {
            ManifoldKind::Interval => Manifold::interval(),
            ManifoldKind::Circle => Manifold::circle(),
        };
        base.with_grid(self.grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionConfig {
    Gallery { gallery: GallerySpec },
    Images { images: BTreeMap<String, DiffeoLiteral> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_defect_tol")]
    pub defect_tol: f64,
    #[serde(default = "default_p_max")]
    pub p_max: u32,
    #[serde(default)]
    pub eps_sweep: Vec<f64>,
    #[serde(default = "default_residual_point")]
    pub residual_point: f64,
    #[serde(default)]
    pub residual_word: String,
    #[serde(default = "default_plots")]
    pub plots: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all analysis fields have defaults")
    }
}

fn default_name() -> String {
    "experiment".into()
}
fn default_output() -> String {
    "runs/experiment".into()
}
fn default_kind() -> ManifoldKind {
    ManifoldKind::Interval
}
fn default_grid() -> usize {
    DEFAULT_GRID
}
fn default_eta() -> f64 {
    rigidity_core::certificate::DEFAULT_ETA
}
fn default_steps() -> usize {
    rigidity_core::certificate::DEFAULT_STEPS
}
fn default_defect_tol() -> f64 {
    rigidity_core::certificate::DEFAULT_DEFECT_TOL
}
fn default_p_max() -> u32 {
    rigidity_core::hyperbolic::DEFAULT_P_MAX
}
fn default_residual_point() -> f64 {
    0.25
}
fn default_plots() -> bool {
    true
}

/// A validated configuration with its presentation resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub presentation: SemidirectPresentation,
    pub manifold: Manifold,
}

/// Rejects `value` unless it satisfies the published schema; the error
/// names every offending JSON pointer.
pub fn validate(value: &serde_json::Value) -> Result<()> {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("bundled schema is JSON");
    let validator = jsonschema::validator_for(&schema).map_err(|e| anyhow!("bundled schema is invalid: {e}"))?;
    let mut errors: Vec<String> = Vec::new();
    for e in validator.iter_errors(value) {
        let at = e.instance_path.to_string();
        let line = format!("{}: {e}", if at.is_empty() { "/" } else { &at });
        if !errors.contains(&line) {
            errors.push(line);
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        bail!("configuration violates the schema:\n  {}", errors.join("\n  "))
    }
}

pub fn parse(text: &str, base_dir: &Path) -> Result<Experiment> {
    let value: serde_json::Value = serde_json::from_str(text).context("configuration is not valid JSON")?;
    validate(&value)?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(value)
        .map_err(|e| anyhow!("configuration field `{}`: {}", e.path(), e.inner()))?;
    let presentation = resolve_presentation(&config.presentation, base_dir)?;
    let manifold = config.manifold.manifold();
    Ok(Experiment { config, presentation, manifold })
}

pub fn load(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    parse(&text, &base).with_context(|| format!("in {}", path.display()))
}

fn resolve_presentation(source: &PresentationSource, base_dir: &Path) -> Result<SemidirectPresentation> {
    match source {
        PresentationSource::Inline(spec) => Ok(SemidirectPresentation::from_spec(spec)?),
        PresentationSource::Matrix { matrix } => {
            let d = matrix.len();
            if matrix.iter().any(|row| row.len() != d) {
                bail!("configuration field `presentation.matrix`: expected a square matrix");
            }
            let flat: Vec<i64> = matrix.iter().flatten().copied().collect();
            Ok(SemidirectPresentation::free_abelian_from_matrix(&DMatrix::from_row_slice(d, d, &flat))?)
        }
        PresentationSource::File { file } => {
            let path = base_dir.join(file);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let spec: PresentationSpec = serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(&text))
                .map_err(|e| anyhow!("{}: field `{}`: {}", path.display(), e.path(), e.inner()))?;
            Ok(SemidirectPresentation::from_spec(&spec)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIB: &str = r#"{
        "presentation": {"group_class": "free", "S0": ["a", "b"], "psi": {"a": "b", "b": "b a"}},
        "action": {"gallery": {"name": "trivial_H"}}
    }"#;

    #[test]
    fn defaults_are_filled() {
        let e = parse(FIB, Path::new(".")).unwrap();
        assert_eq!(e.config.analysis.eta, 0.3);
        assert_eq!(e.config.manifold.grid, 4096);
        assert_eq!(e.config.output, "runs/experiment");
        assert_eq!(e.presentation.derived.k, 10);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = FIB.replace(r#""action""#, r#""analysis": {"n_steps": 0}, "action""#);
        let err = format!("{:#}", parse(&bad, Path::new(".")).unwrap_err());
        assert!(err.contains("/analysis/n_steps"), "{err}");
        let typo = FIB.replace("group_class", "group_klass");
        let err = format!("{:#}", parse(&typo, Path::new(".")).unwrap_err());
        assert!(err.contains("/presentation"), "{err}");
    }

    #[test]
    fn matrix_presentation() {
        let text = r#"{"presentation": {"matrix": [[2, 1], [1, 1]]}, "action": {"gallery": {"name": "bump", "eps": 0.01}}}"#;
        let e = parse(text, Path::new(".")).unwrap();
        assert_eq!(e.presentation.d, 2);
        let ragged = text.replace("[1, 1]]", "[1]]");
        assert!(parse(&ragged, Path::new(".")).is_err());
    }

    #[test]
    fn bundled_schema_defaults_match_serde_defaults() {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        let a = &schema["properties"]["analysis"]["properties"];
        let d = AnalysisConfig::default();
        assert_eq!(a["eta"]["default"], serde_json::json!(d.eta));
        assert_eq!(a["n_steps"]["default"], serde_json::json!(d.n_steps));
        assert_eq!(a["defect_tol"]["default"], serde_json::json!(d.defect_tol));
        assert_eq!(a["p_max"]["default"], serde_json::json!(d.p_max));
        assert_eq!(a["residual_point"]["default"], serde_json::json!(d.residual_point));
        assert_eq!(schema["properties"]["manifold"]["properties"]["grid"]["default"], serde_json::json!(DEFAULT_GRID));
    }
}
