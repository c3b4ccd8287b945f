//! Scenario files: world generator, sensor, planner and simulation settings
//! as TOML, with dotted `key=value` overrides applied before validation.

use serde::{Deserialize, Serialize};

use super::episode::{run_episode, EpisodeResult, SimConfig};
use super::sensor::SensorModel;
use super::world::{Generator, World};
use crate::geom::Vec3;
use crate::replan::PlannerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub world: Generator,
    #[serde(default)]
    pub sensor: SensorModel,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub sim: SimConfig,
    /// Replaces the generator's goal when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{origin}: line {line}, column {column}: {msg}")]
pub struct ScenarioError {
    /// Where the offending text came from (file name or `--set`).
    pub origin: String,
    pub line: usize,
    pub column: usize,
    pub msg: String,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn toml_error(origin: &str, text: &str, e: &toml::de::Error) -> ScenarioError {
    let (line, column) = e.span().map_or((1, 1), |s| position(text, s.start));
    ScenarioError { origin: origin.into(), line, column, msg: e.message().trim().to_string() }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string (`planner.plan_space=free_only`).
fn override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut t = table;
    for p in parents {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| format!("`{p}` is not a table"))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

impl Scenario {
    /// Parses `text`; `origin` names it in diagnostics.
    pub fn parse(origin: &str, text: &str) -> Result<Self, ScenarioError> {
        Self::parse_with(origin, text, &[])
    }

    /// Parses `text` and applies `key=value` overrides (dotted keys).
    pub fn parse_with(origin: &str, text: &str, overrides: &[String]) -> Result<Self, ScenarioError> {
        let scenario: Scenario = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| toml_error(origin, text, &e))?
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_error(origin, text, &e))?;
            for (i, o) in overrides.iter().enumerate() {
                let err = |msg: String| ScenarioError { origin: "--set".into(), line: i + 1, column: 1, msg };
                let (key, raw) = o.split_once('=').ok_or_else(|| err(format!("expected key=value, found `{o}`")))?;
                let path: Vec<&str> = key.trim().split('.').collect();
                set_path(&mut table, &path, override_value(raw.trim())).map_err(err)?;
            }
            let merged = toml::to_string(&table).expect("tables serialise");
            toml::from_str(&merged).map_err(|e| {
                let mut e = toml_error("configuration after --set", &merged, &e);
                e.msg = format!("{} (merged document: {})", e.msg, merged.lines().nth(e.line - 1).unwrap_or("").trim());
                e
            })?
        };
        scenario.validate().map_err(|msg| ScenarioError { origin: origin.into(), line: 1, column: 1, msg })?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.planner.validate()?;
        self.sim.validate()?;
        self.sensor.validate()
    }

    /// Canonical TOML; parsing it yields an equal scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialise")
    }

    /// Same scenario with the generator reseeded (generators without a seed are unchanged).
    pub fn seeded(&self, seed: u64) -> Self {
        let mut s = self.clone();
        match &mut s.world {
            Generator::Forest { seed: s, .. } | Generator::Corner { seed: s, .. } | Generator::Rooms { seed: s, .. } => {
                *s = seed
            }
            Generator::Empty { .. } | Generator::Bugtrap { .. } => {}
        }
        s
    }

    pub fn build_world(&self) -> World {
        let mut w = World::generate(&self.world, self.sim.map.inflation_radius());
        if let Some(g) = self.goal {
            w.goal = g;
        }
        w
    }

    pub fn run(&self) -> EpisodeResult {
        let w = self.build_world();
        run_episode(&w, &self.planner, &self.sensor, w.goal, &self.sim)
    }
}
