use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AppError;
use crate::dynamics::DegenerateRegion;
use crate::field::{Builtin, PlanarField, ScalarField, DOUBLE_WELL};
use crate::geometry::{Domain, Rect};
use crate::pde::{BoundarySpec, Scheme};
use crate::sparse::{EigenOptions, Precond};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { center: Point, radius: f64 },
    Rect { lo: Point, hi: Point },
    /// `{h < level}` inside the box `lo..hi`.
    Sublevel { h: String, level: f64, lo: Point, hi: Point },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain, AppError> {
        let d = match self {
            DomainSpec::Disk { center, radius } => Domain::disk(*center, *radius),
            DomainSpec::Rect { lo, hi } => Domain::rect(*lo, *hi),
            DomainSpec::Sublevel { h, level, lo, hi } => {
                let h = h.parse().map_err(|e| AppError::Config(format!("domain function: {e}")))?;
                Domain::sublevel(h, *level, Rect::new(*lo, *hi))
            }
        };
        d.map_err(|e| AppError::Config(format!("domain: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Builtin(Builtin),
    Exprs { b1: String, b2: String },
}

impl FieldSpec {
    /// The domain each builtin is meant for.
    fn default_domain(&self) -> Option<DomainSpec> {
        match self {
            FieldSpec::Builtin(Builtin::Corollary { .. }) => Some(DomainSpec::Sublevel {
                h: DOUBLE_WELL.into(),
                level: 1.0,
                lo: [-1.85, -1.62],
                hi: [1.85, 1.62],
            }),
            FieldSpec::Builtin(_) => Some(DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 }),
            FieldSpec::Exprs { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegenerateSpec {
    pub domain: DomainSpec,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub bc: BoundarySpec,
}

fn default_n() -> usize {
    129
}

fn default_solver() -> EigenOptions {
    EigenOptions { tol: 1e-8, precond: Precond::Ilu0, ..EigenOptions::refined() }
}

fn default_stations() -> usize {
    129
}

fn default_lattice() -> usize {
    8
}

/// How `--tol` / `gap_tol` is compared with the final gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    #[default]
    Absolute,
    /// Gap divided by `|predicted|`.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Defaults to the builtin's own domain.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    pub field: FieldSpec,
    pub c: String,
    #[serde(default)]
    pub a_list: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub bc: BoundarySpec,
    #[serde(default = "default_solver")]
    pub solver: EigenOptions,
    #[serde(default)]
    pub degenerate: Vec<DegenerateSpec>,
    /// Bound on the final gap; no final-gap verdict without it.
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub gap_mode: GapMode,
    /// Gaps above `gap_tol` but within this bound are reported as
    /// informational instead of failing.
    #[serde(default)]
    pub informational_tol: Option<f64>,
    #[serde(default = "default_stations")]
    pub family_stations: usize,
    #[serde(default = "default_lattice")]
    pub probe_lattice: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, AppError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if !(16..=2048).contains(&self.n) {
            return Err(AppError::Config(format!("grid n = {} outside [16, 2048]", self.n)));
        }
        if self.a_list.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(AppError::Config("drift rates must be positive and finite".into()));
        }
        if self.a_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AppError::Config("a_list must be strictly increasing".into()));
        }
        if let Some(t) = self.gap_tol {
            if !(t >= 0.0) {
                return Err(AppError::Config(format!("gap_tol = {t}")));
            }
        }
        if self.family_stations < 16 {
            return Err(AppError::Config(format!("family_stations = {} (need >= 16)", self.family_stations)));
        }
        if self.domain.is_none() && self.field.default_domain().is_none() {
            return Err(AppError::Config("a domain is required for expression fields".into()));
        }
        Ok(())
    }

    /// Parse expressions and build geometry.
    pub fn problem(&self) -> Result<Problem, AppError> {
        let domain_spec = self.domain.clone().or_else(|| self.field.default_domain()).expect("validated");
        let domain = domain_spec.build()?;
        let (field, builtin) = match &self.field {
            FieldSpec::Builtin(b) => (b.field(), Some(*b)),
            FieldSpec::Exprs { b1, b2 } => {
                (PlanarField::parse(b1, b2).map_err(|e| AppError::Config(format!("field: {e}")))?, None)
            }
        };
        let c = ScalarField::parse(&self.c).map_err(|e| AppError::Config(format!("c: {e}")))?;
        let degenerate = self
            .degenerate
            .iter()
            .enumerate()
            .map(|(k, s)| {
                Ok(DegenerateRegion {
                    domain: s.domain.build()?,
                    label: if s.label.is_empty() { format!("region{k}") } else { s.label.clone() },
                    bc: s.bc.clone(),
                })
            })
            .collect::<Result<Vec<_>, AppError>>()?;
        Ok(Problem { domain, field, builtin, c, degenerate })
    }
}

/// A config with its expressions parsed and geometry built.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: Domain,
    pub field: PlanarField,
    pub builtin: Option<Builtin>,
    pub c: ScalarField,
    pub degenerate: Vec<DegenerateRegion>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_builtin_and_expression_fields() {
        let cfg = RunConfig::from_json(r#"{"field": {"builtin": "corollary", "alpha": 0.5}, "c": "x1^2", "a_list": [25, 50]}"#)
            .unwrap();
        assert_eq!(cfg.field, FieldSpec::Builtin(Builtin::Corollary { alpha: 0.5 }));
        assert_eq!(cfg.n, 129);
        let p = cfg.problem().unwrap();
        assert!(matches!(p.domain, Domain::Sublevel { .. }));

        let cfg = RunConfig::from_json(
            r#"{"field": {"b1": "-x2", "b2": "x1"}, "c": "0", "domain": {"kind": "rect", "lo": [0, 0], "hi": [1, 1]},
                "bc": {"kind": "mixed", "center": [0.5, 0.5], "dirichlet": [{"from": 2.5, "to": -2.5}]}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.bc, BoundarySpec::Mixed { .. }));
        assert!(cfg.problem().unwrap().builtin.is_none());
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"field": {"builtin": "rotation"}, "c": "0", "a_list": [10, 5]}"#,
            r#"{"field": {"builtin": "rotation"}, "c": "0", "n": 8}"#,
            r#"{"field": {"b1": "x1", "b2": "x2"}, "c": "0"}"#,
            r#"{"field": {"builtin": "rotation"}, "c": "0", "colour": 1}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(AppError::Config(_))), "{text}");
        }
        let cfg = RunConfig::from_json(r#"{"field": {"builtin": "rotation"}, "c": "x1 +"}"#).unwrap();
        assert!(matches!(cfg.problem(), Err(AppError::Config(_))));
    }
}
