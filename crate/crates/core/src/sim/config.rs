//! Scenario configuration: a TOML document where every field has a default.
//!
//! Loading reports every offending key at once: unknown keys, type errors
//! (each leaf is checked on its own) and out-of-range values.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::flow::SocialPlannerConfig;
use crate::forces::ForceParams;
use crate::geom::Vec2;
use crate::groups::LinearClassifier;
use crate::local::LibraryParams;
use crate::world::Arena;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NavMode {
    /// Group inference and flow following feed the local planner.
    #[serde(rename = "with", alias = "with_social_model")]
    WithSocialModel,
    /// The local planner tracks a straight-line waypoint to the goal.
    #[serde(rename = "without", alias = "without_social_model")]
    WithoutSocialModel,
}

impl NavMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NavMode::WithSocialModel => "with",
            NavMode::WithoutSocialModel => "without",
        }
    }
}

impl fmt::Display for NavMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArenaSpec {
    pub width: f64,
    pub height: f64,
}

impl Default for ArenaSpec {
    fn default() -> Self {
        Self {
            width: 10.0,
            height: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupSpec {
    pub members: usize,
    /// Lower-left corner of the spawn rectangle.
    pub spawn_min: Vec2,
    /// Upper-right corner of the spawn rectangle.
    pub spawn_max: Vec2,
    /// Goal of the group centroid; members keep their spawn offsets.
    pub goal: Vec2,
    pub desired_speed: f64,
    pub radius: f64,
}

impl Default for GroupSpec {
    fn default() -> Self {
        Self {
            members: 3,
            spawn_min: Vec2::new(1.0, 1.0),
            spawn_max: Vec2::new(2.0, 2.0),
            goal: Vec2::new(5.0, 10.0),
            desired_speed: 1.2,
            radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotSpec {
    pub start: Vec2,
    pub goal: Vec2,
    pub cruise_speed: f64,
    pub radius: f64,
    /// Drive no faster than the followed flow.
    pub match_flow_speed: bool,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            start: Vec2::new(5.0, 1.0),
            goal: Vec2::new(5.0, 19.0),
            cruise_speed: 1.0,
            radius: 0.4,
            match_flow_speed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSpec {
    pub weights: [f64; 3],
    pub bias: f64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        let c = LinearClassifier::default();
        Self {
            weights: c.weights,
            bias: c.bias,
        }
    }
}

impl From<&ClassifierSpec> for LinearClassifier {
    fn from(c: &ClassifierSpec) -> Self {
        LinearClassifier {
            weights: c.weights,
            bias: c.bias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub mode: NavMode,
    /// Integration step, s.
    pub dt: f64,
    /// Simulated time limit, s.
    pub max_duration: f64,
    /// Simulation steps per planner tick.
    pub planner_period: usize,
    pub v_max: f64,
    pub goal_tolerance: f64,
    /// Pedestrians feel repulsion from the robot.
    pub pedestrians_see_robot: bool,
    /// Minimum center distance between spawned agents, m.
    pub spawn_separation: f64,
    pub arena: ArenaSpec,
    pub robot: RobotSpec,
    pub groups: Vec<GroupSpec>,
    pub forces: ForceParams,
    pub planner: SocialPlannerConfig,
    pub classifier: ClassifierSpec,
    pub local: LibraryParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 0,
            mode: NavMode::WithSocialModel,
            dt: 0.1,
            max_duration: 120.0,
            planner_period: 4,
            v_max: crate::world::DEFAULT_V_MAX,
            goal_tolerance: 0.3,
            pedestrians_see_robot: true,
            spawn_separation: 0.7,
            arena: ArenaSpec::default(),
            robot: RobotSpec::default(),
            groups: Vec::new(),
            forces: ForceParams::default(),
            planner: SocialPlannerConfig::default(),
            classifier: ClassifierSpec::default(),
            local: LibraryParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid TOML: {0}")]
    Syntax(String),
    #[error("{} invalid key(s):\n{}", .0.len(), format_issues(.0))]
    Invalid(Vec<ConfigIssue>),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {}: {}", i.key, i.message))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

impl ScenarioConfig {
    pub fn arena(&self) -> Arena {
        Arena::new(self.arena.width, self.arena.height)
    }

    pub fn classifier(&self) -> LinearClassifier {
        (&self.classifier).into()
    }

    pub fn max_steps(&self) -> usize {
        (self.max_duration / self.dt).round() as usize
    }

    pub fn pedestrian_count(&self) -> usize {
        self.groups.iter().map(|g| g.members).sum()
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let doc: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let template = Value::try_from(ScenarioConfig::default()).expect("defaults serialize");
        let group_template = Value::try_from(GroupSpec::default()).expect("defaults serialize");

        let mut issues = Vec::new();
        unknown_keys(
            &doc,
            template.as_table().expect("table"),
            &group_template,
            "",
            &mut issues,
        );
        leaf_type_errors(&doc, &mut Vec::new(), &mut issues);
        if !issues.is_empty() {
            return Err(ConfigError::Invalid(issues));
        }
        let cfg: ScenarioConfig = Value::Table(doc).try_into().map_err(|e: toml::de::Error| {
            ConfigError::Invalid(vec![ConfigIssue {
                key: "<document>".into(),
                message: e.message().to_string(),
            }])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks; lists every violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut bad = |key: String, message: String| issues.push(ConfigIssue { key, message });
        let positive = |v: f64| v.is_finite() && v > 0.0;

        if !positive(self.dt) {
            bad("dt".into(), format!("must be positive, got {}", self.dt));
        }
        if !positive(self.max_duration) {
            bad(
                "max_duration".into(),
                format!("must be positive, got {}", self.max_duration),
            );
        }
        if self.planner_period == 0 {
            bad("planner_period".into(), "must be at least 1".into());
        }
        if !positive(self.v_max) {
            bad("v_max".into(), format!("must be positive, got {}", self.v_max));
        }
        if !positive(self.goal_tolerance) {
            bad(
                "goal_tolerance".into(),
                format!("must be positive, got {}", self.goal_tolerance),
            );
        }
        if !(self.spawn_separation.is_finite() && self.spawn_separation >= 0.0) {
            bad("spawn_separation".into(), "must be non-negative".into());
        }
        if !positive(self.arena.width) {
            bad(
                "arena.width".into(),
                format!("must be positive, got {}", self.arena.width),
            );
        }
        if !positive(self.arena.height) {
            bad(
                "arena.height".into(),
                format!("must be positive, got {}", self.arena.height),
            );
        }
        let arena = self.arena();
        let inside = |p: Vec2| p.is_finite() && arena.contains(p);

        if !inside(self.robot.start) {
            bad(
                "robot.start".into(),
                format!("{} lies outside the arena", self.robot.start),
            );
        }
        if !inside(self.robot.goal) {
            bad(
                "robot.goal".into(),
                format!("{} lies outside the arena", self.robot.goal),
            );
        }
        if !positive(self.robot.cruise_speed) || self.robot.cruise_speed > self.v_max {
            bad(
                "robot.cruise_speed".into(),
                format!("must be in (0, v_max], got {}", self.robot.cruise_speed),
            );
        }
        if !positive(self.robot.radius) {
            bad(
                "robot.radius".into(),
                format!("must be positive, got {}", self.robot.radius),
            );
        }
        for (k, g) in self.groups.iter().enumerate() {
            let key = |f: &str| format!("groups[{k}].{f}");
            if g.members == 0 {
                bad(key("members"), "must be at least 1".into());
            }
            if !inside(g.spawn_min) {
                bad(key("spawn_min"), format!("{} lies outside the arena", g.spawn_min));
            }
            if !inside(g.spawn_max) {
                bad(key("spawn_max"), format!("{} lies outside the arena", g.spawn_max));
            }
            if g.spawn_min.x > g.spawn_max.x || g.spawn_min.y > g.spawn_max.y {
                bad(key("spawn_max"), "must not be below spawn_min".into());
            }
            if !g.goal.is_finite() {
                bad(key("goal"), "must be finite".into());
            }
            if !(g.desired_speed.is_finite() && g.desired_speed >= 0.0) {
                bad(
                    key("desired_speed"),
                    format!("must be non-negative, got {}", g.desired_speed),
                );
            }
            if !positive(g.radius) {
                bad(key("radius"), format!("must be positive, got {}", g.radius));
            }
        }
        for f in self.forces.invalid_fields() {
            bad(format!("forces.{f}"), "must be positive".into());
        }
        let p = &self.planner;
        for (name, v) in [
            ("hidden_dim", p.hidden_dim),
            ("history_len", p.history_len),
            ("feature_window", p.feature_window),
            ("smoothing_window", p.smoothing_window),
        ] {
            if v == 0 {
                bad(format!("planner.{name}"), "must be at least 1".into());
            }
        }
        if !(p.weight_scale.is_finite() && p.weight_scale >= 0.0) {
            bad("planner.weight_scale".into(), "must be non-negative".into());
        }
        if !positive(p.flow.lookahead) {
            bad("planner.flow.lookahead".into(), "must be positive".into());
        }
        if !(p.flow.release_distance >= 0.0 && p.flow.release_distance.is_finite()) {
            bad("planner.flow.release_distance".into(), "must be non-negative".into());
        }
        if !(p.flow.min_flow_speed.is_finite() && p.flow.min_flow_speed >= 0.0) {
            bad("planner.flow.min_flow_speed".into(), "must be non-negative".into());
        }
        if !(p.flow.distance_weight.is_finite() && p.flow.distance_weight >= 0.0) {
            bad("planner.flow.distance_weight".into(), "must be non-negative".into());
        }
        if self
            .classifier
            .weights
            .iter()
            .chain([&self.classifier.bias])
            .any(|v| !v.is_finite())
        {
            bad("classifier".into(), "weights and bias must be finite".into());
        }
        let l = &self.local;
        if l.curvature_count < 3 || l.curvature_count.is_multiple_of(2) {
            bad(
                "local.curvature_count".into(),
                format!("must be odd and at least 3, got {}", l.curvature_count),
            );
        }
        if !positive(l.max_curvature) {
            bad("local.max_curvature".into(), "must be positive".into());
        }
        if !positive(l.length) {
            bad("local.length".into(), "must be positive".into());
        }
        if !(l.inflation.is_finite() && l.inflation >= 0.0) {
            bad("local.inflation".into(), "must be non-negative".into());
        }
        if !positive(l.sensing_radius) {
            bad("local.sensing_radius".into(), "must be positive".into());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn unknown_keys(doc: &Table, template: &Table, group_template: &Value, prefix: &str, issues: &mut Vec<ConfigIssue>) {
    for (key, value) in doc {
        let path = join(prefix, key);
        match template.get(key) {
            None => issues.push(ConfigIssue {
                key: path,
                message: "unknown key".into(),
            }),
            Some(Value::Table(sub)) => {
                if let Value::Table(t) = value {
                    unknown_keys(t, sub, group_template, &path, issues);
                }
            }
            Some(Value::Array(_)) if path == "groups" => {
                if let (Value::Array(items), Value::Table(gt)) = (value, group_template) {
                    for (k, item) in items.iter().enumerate() {
                        if let Value::Table(t) = item {
                            unknown_keys(t, gt, group_template, &format!("groups[{k}]"), issues);
                        }
                    }
                }
            }
            Some(_) => {}
        }
    }
}

/// Deserializes each leaf in isolation so every type error is reported.
fn leaf_type_errors(doc: &Table, path: &mut Vec<Step>, issues: &mut Vec<ConfigIssue>) {
    for (key, value) in doc {
        path.push(Step::Key(key.clone()));
        match value {
            Value::Table(t) => leaf_type_errors(t, path, issues),
            Value::Array(items) if key == "groups" && path.len() == 1 => {
                for (k, item) in items.iter().enumerate() {
                    match item {
                        Value::Table(t) => {
                            path.push(Step::Index(k));
                            leaf_type_errors(t, path, issues);
                            path.pop();
                        }
                        other => check_leaf(path, other, issues),
                    }
                }
            }
            leaf => check_leaf(path, leaf, issues),
        }
        path.pop();
    }
}

#[derive(Debug, Clone)]
enum Step {
    Key(String),
    Index(usize),
}

fn check_leaf(path: &[Step], leaf: &Value, issues: &mut Vec<ConfigIssue>) {
    // Rebuild a document holding only this leaf, innermost first.
    let mut value = leaf.clone();
    for step in path.iter().rev() {
        value = match step {
            Step::Key(k) => {
                let mut t = Table::new();
                t.insert(k.clone(), value);
                Value::Table(t)
            }
            Step::Index(_) => Value::Array(vec![value]),
        };
    }
    if let Err(e) = value.try_into::<ScenarioConfig>() {
        let key = path
            .iter()
            .map(|s| match s {
                Step::Key(k) => format!(".{k}"),
                Step::Index(i) => format!("[{i}]"),
            })
            .collect::<String>();
        issues.push(ConfigIssue {
            key: key.trim_start_matches('.').to_string(),
            message: e.message().to_string(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(ScenarioConfig::from_toml("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn roundtrip_through_toml() {
        let mut cfg = ScenarioConfig::default();
        cfg.groups.push(GroupSpec::default());
        cfg.mode = NavMode::WithoutSocialModel;
        cfg.forces.tau = 0.7;
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn mode_aliases() {
        let cfg = ScenarioConfig::from_toml("mode = \"without_social_model\"").unwrap();
        assert_eq!(cfg.mode, NavMode::WithoutSocialModel);
    }

    #[test]
    fn reports_every_offending_key() {
        let text = r#"
            dt = "fast"
            bogus = 1
            [forces]
            tau = -1.0
            beta_gaze = "x"
            unknown_force = 2
            [robot]
            start = [50.0, 1.0]
            [[groups]]
            members = 0
            colour = "red"
        "#;
        let err = ScenarioConfig::from_toml(text).unwrap_err();
        let keys: Vec<&str> = err.issues().iter().map(|i| i.key.as_str()).collect();
        for k in [
            "dt",
            "bogus",
            "forces.beta_gaze",
            "forces.unknown_force",
            "groups[0].colour",
        ] {
            assert!(keys.contains(&k), "missing {k} in {keys:?}");
        }
        // Range errors surface once the document is well-typed.
        let text = r#"
            dt = 0.0
            [forces]
            tau = -1.0
            [robot]
            start = [50.0, 1.0]
            [[groups]]
            members = 0
        "#;
        let err = ScenarioConfig::from_toml(text).unwrap_err();
        let keys: Vec<&str> = err.issues().iter().map(|i| i.key.as_str()).collect();
        assert_eq!(keys, vec!["dt", "robot.start", "groups[0].members", "forces.tau"]);
    }

    #[test]
    fn syntax_error() {
        assert!(matches!(
            ScenarioConfig::from_toml("dt = = 1"),
            Err(ConfigError::Syntax(_))
        ));
    }
}
