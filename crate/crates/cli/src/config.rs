//! Experiment configuration: a single JSON file, strictly validated.
//! Unknown fields are hard errors and the seed is mandatory, so a config
//! plus the tool version pins every number the run produces.

use serde::{Deserialize, Serialize};
use sclab_core::distortion::DistortionCriterion;
use sclab_core::prob::{ConditionalTable, ProbabilityTable};

pub const SCHEMA_TAG: &str = "sclab-config/v1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct LabConfig {
    /// Optional schema tag; when present it must match [`SCHEMA_TAG`].
    #[serde(rename = "$schema", default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub source: TableSpec,
    pub problem: Problem,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<DistortionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux1: Option<ConditionalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux2: Option<ConditionalSpec>,
    #[serde(default)]
    pub aux_spec: AuxSpecConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<EpsilonSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub d_targets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r2_budgets: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
}

fn default_order() -> usize {
    1
}

fn default_trials() -> usize {
    10_000
}

fn default_output() -> String {
    "out".into()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub enum Problem {
    Shannon,
    WynerZiv,
    SideInfo,
    BergerYeung,
    Joint,
    Partial,
    SlepianWolf,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Shannon => "shannon",
            Problem::WynerZiv => "wynerZiv",
            Problem::SideInfo => "sideInfo",
            Problem::BergerYeung => "bergerYeung",
            Problem::Joint => "joint",
            Problem::Partial => "partial",
            Problem::SlepianWolf => "slepianWolf",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub axes: Vec<usize>,
    pub mass: Vec<f64>,
}

impl TableSpec {
    pub fn build(&self) -> Result<ProbabilityTable, String> {
        ProbabilityTable::from_sizes(&self.axes, self.mass.clone())
            .map_err(|e| format!("source: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConditionalSpec {
    /// rows[cond][out], each row a pmf.
    pub rows: Vec<Vec<f64>>,
}

impl ConditionalSpec {
    pub fn build(&self, field: &str) -> Result<ConditionalTable, String> {
        let cond = self.rows.len();
        if cond == 0 {
            return Err(format!("{field}: needs at least one row"));
        }
        let out = self.rows[0].len();
        if self.rows.iter().any(|r| r.len() != out) {
            return Err(format!("{field}: ragged rows"));
        }
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        ConditionalTable::from_rows(cond, out, flat).map_err(|e| format!("{field}: {e}"))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub enum DistortionTarget {
    Joint,
    X1,
    X2,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct DistortionSpec {
    pub target: DistortionTarget,
    pub matrix: Vec<Vec<f64>>,
    pub d_max: f64,
}

impl DistortionSpec {
    pub fn build(&self, source: &ProbabilityTable) -> Result<DistortionCriterion, String> {
        let target_size = match (self.target, source.num_axes()) {
            (DistortionTarget::X1, _) => source.axis_size(0),
            (DistortionTarget::X2, 2) => source.axis_size(1),
            (DistortionTarget::Joint, 2) => source.axis_size(0) * source.axis_size(1),
            _ => return Err("distortion: target incompatible with a one-axis source".into()),
        };
        if self.matrix.len() != target_size {
            return Err(format!(
                "distortion: matrix has {} rows, target alphabet has {target_size}",
                self.matrix.len()
            ));
        }
        let estimate_size = self.matrix[0].len();
        if self.matrix.iter().any(|r| r.len() != estimate_size) {
            return Err("distortion: ragged matrix".into());
        }
        let flat: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        DistortionCriterion::new(target_size, estimate_size, flat, self.d_max)
            .map_err(|e| format!("distortion: {e}"))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct AuxSpecConfig {
    pub card_z1: Option<usize>,
    pub card_z2: Option<usize>,
    pub grid_step: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for AuxSpecConfig {
    fn default() -> Self {
        Self {
            card_z1: None,
            card_z2: None,
            grid_step: 0.05,
            restarts: 16,
            max_iterations: 4000,
            tolerance: 1e-10,
        }
    }
}

impl AuxSpecConfig {
    pub fn build(&self, source: &ProbabilityTable) -> sclab_core::region::AuxSpec {
        let x1 = source.axis_size(0);
        let x2 = if source.num_axes() > 1 { source.axis_size(1) } else { x1 };
        let mut aux = sclab_core::region::AuxSpec::for_source(x1, x2);
        if let Some(c) = self.card_z1 {
            aux.card_z1 = c;
        }
        if let Some(c) = self.card_z2 {
            aux.card_z2 = c;
        }
        aux.grid_step = self.grid_step;
        aux.restarts = self.restarts;
        aux.max_iterations = self.max_iterations;
        aux.tolerance = self.tolerance;
        aux
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct EpsilonSpec {
    pub typicality: f64,
    pub sizing1: Option<f64>,
    pub sizing4: Option<f64>,
}

impl EpsilonSpec {
    pub fn build(&self) -> sclab_core::codes::two_terminal::Epsilons {
        let mut eps = sclab_core::codes::two_terminal::Epsilons::from_typicality(self.typicality);
        if let Some(v) = self.sizing1 {
            eps.sizing1 = v;
        }
        if let Some(v) = self.sizing4 {
            eps.sizing4 = v;
        }
        eps
    }
}

/// Parse and fully validate a config; collects field-level messages.
pub fn parse_config(text: &str) -> Result<LabConfig, Vec<String>> {
    let config: LabConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => return Err(vec![format!("{e}")]),
    };
    let mut errors = Vec::new();
    if let Some(tag) = &config.schema {
        if tag != SCHEMA_TAG {
            errors.push(format!("$schema: expected {SCHEMA_TAG}, found {tag}"));
        }
    }
    let source = match config.source.build() {
        Ok(s) => Some(s),
        Err(e) => {
            errors.push(e);
            None
        }
    };
    if config.order == 0 {
        errors.push("order: must be >= 1".into());
    }
    if let Some(source) = &source {
        if let Some(d) = &config.distortion {
            if let Err(e) = d.build(source) {
                errors.push(e);
            }
        }
        for (field, spec, axis) in [("aux1", &config.aux1, 0usize), ("aux2", &config.aux2, 1)] {
            if let Some(spec) = spec {
                match spec.build(field) {
                    Ok(table) => {
                        if source.num_axes() > axis {
                            let expect = source.axis_size(axis).pow(config.order as u32);
                            if table.cond_cells() != expect {
                                errors.push(format!(
                                    "{field}: conditions on {} cells, block alphabet has {expect}",
                                    table.cond_cells()
                                ));
                            }
                        }
                    }
                    Err(e) => errors.push(e),
                }
            }
        }
    }
    if let Some(eps) = &config.epsilons {
        if eps.typicality <= 0.0 {
            errors.push("epsilons.typicality: must be positive".into());
        }
    }
    if config.trials == 0 {
        errors.push("trials: must be >= 1".into());
    }
    if config.schedule.iter().any(|&n| n == 0) {
        errors.push("schedule: block lengths must be >= 1".into());
    }
    if config.d_targets.iter().any(|&d| d < 0.0) {
        errors.push("dTargets: must be nonnegative".into());
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{
            "source": {"axes": [2, 2], "mass": [0.45, 0.05, 0.05, 0.45]},
            "problem": "slepianWolf",
            "seed": 7
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_and_round_trips() {
        let config = parse_config(&minimal()).unwrap();
        assert_eq!(config.problem, Problem::SlepianWolf);
        assert_eq!(config.trials, 10_000);
        let text = serde_json::to_string(&config).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(config, again);
        let text2 = serde_json::to_string(&again).unwrap();
        assert_eq!(text, text2, "serialization must be byte-stable");
    }

    #[test]
    fn bad_mass_is_named() {
        let text = r#"{
            "source": {"axes": [2], "mass": [0.5, 0.48]},
            "problem": "shannon",
            "seed": 1
        }"#;
        let errs = parse_config(text).unwrap_err();
        assert!(errs[0].contains("source"), "{errs:?}");
        assert!(errs[0].contains("deviation"), "{errs:?}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = r#"{
            "source": {"axes": [2, 2], "mass": [0.25, 0.25, 0.25, 0.25]},
            "problem": "joint",
            "epsilon2": 0.1,
            "seed": 1
        }"#;
        let errs = parse_config(text).unwrap_err();
        assert!(errs[0].contains("unknown field"), "{errs:?}");
    }

    #[test]
    fn missing_seed_is_rejected() {
        let text = r#"{
            "source": {"axes": [2, 2], "mass": [0.25, 0.25, 0.25, 0.25]},
            "problem": "joint"
        }"#;
        let errs = parse_config(text).unwrap_err();
        assert!(errs[0].contains("seed"), "{errs:?}");
    }
}
