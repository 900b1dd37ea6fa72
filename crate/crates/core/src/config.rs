//! World configuration: map parameters, agent defaults and item types.
//!
//! The on-disk form is a JSON document with top-level keys `version`, `map`,
//! `agent` and `items`. Item interactions are keyed by item name and default
//! to `Zero` when absent. See `docs/config.md` for the full schema.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action::ActionKind;
use crate::error::ConfigError;
use crate::functions::{IntensityFn, InteractionFn};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionPolicy {
    AllowOverlap,
    #[default]
    FirstComeFirstServe,
    RandomWinner,
}

/// Distance used by the `Explore` reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExploreMetric {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl ExploreMetric {
    pub fn distance(self, dx: i64, dy: i64) -> f64 {
        match self {
            ExploreMetric::Euclidean => ((dx * dx + dy * dy) as f64).sqrt(),
            ExploreMetric::Manhattan => (dx.abs() + dy.abs()) as f64,
            ExploreMetric::Chebyshev => dx.abs().max(dy.abs()) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub scent_dims: usize,
    pub color_dims: usize,
    pub patch_size: u32,
    pub mh_iterations: u32,
    pub scent_decay: f64,
    pub scent_diffusion: f64,
    #[serde(default)]
    pub collision_policy: CollisionPolicy,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub color: Vec<f64>,
    pub scent: Vec<f64>,
    pub action_space: Vec<ActionKind>,
    pub visual_range: u32,
    pub field_of_view: f64,
    #[serde(default)]
    pub explore_metric: ExploreMetric,
}

impl AgentConfig {
    pub fn allows(&self, kind: ActionKind) -> bool {
        self.action_space.contains(&kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemSection {
    name: String,
    scent: Vec<f64>,
    color: Vec<f64>,
    #[serde(default)]
    occlusion: f64,
    #[serde(default)]
    blocks_movement: bool,
    #[serde(default = "zero_intensity")]
    intensity: IntensityFn,
    #[serde(default)]
    interactions: BTreeMap<String, InteractionFn>,
    #[serde(default)]
    collect_requirements: BTreeMap<String, u32>,
    #[serde(default)]
    collect_costs: BTreeMap<String, u32>,
}

fn zero_intensity() -> IntensityFn {
    IntensityFn::Zero
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    version: u32,
    map: MapSection,
    agent: AgentConfig,
    items: Vec<ItemSection>,
}

/// A resolved item type. Per-type tables are indexed by item type id.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemType {
    pub name: String,
    pub scent: Vec<f64>,
    pub color: Vec<f64>,
    pub occlusion: f64,
    pub blocks_movement: bool,
    pub intensity: IntensityFn,
    /// `interactions[t]` is `g(self, t)`.
    pub interactions: Vec<InteractionFn>,
    pub collect_requirements: Vec<u32>,
    pub collect_costs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub scent_dims: usize,
    pub color_dims: usize,
    pub patch_size: u32,
    pub mh_iterations: u32,
    pub scent_decay: f64,
    pub scent_diffusion: f64,
    pub collision_policy: CollisionPolicy,
    pub seed: u64,
    pub agent: AgentConfig,
    pub item_types: Vec<ItemType>,
}

impl WorldConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn from_file(file: ConfigFile) -> Result<Self, ConfigError> {
        if file.version != CONFIG_VERSION {
            return Err(ConfigError::Version(file.version));
        }
        let names: Vec<String> = file.items.iter().map(|i| i.name.clone()).collect();
        let index = |name: &str| names.iter().position(|n| n == name).ok_or_else(|| ConfigError::UnknownItem(name.to_string()));
        let n = names.len();
        let mut item_types = Vec::with_capacity(n);
        for item in &file.items {
            let mut interactions = vec![InteractionFn::Zero; n];
            for (other, g) in &item.interactions {
                interactions[index(other)?] = *g;
            }
            let mut requirements = vec![0; n];
            for (other, &count) in &item.collect_requirements {
                requirements[index(other)?] = count;
            }
            let mut costs = vec![0; n];
            for (other, &count) in &item.collect_costs {
                costs[index(other)?] = count;
            }
            item_types.push(ItemType {
                name: item.name.clone(),
                scent: item.scent.clone(),
                color: item.color.clone(),
                occlusion: item.occlusion,
                blocks_movement: item.blocks_movement,
                intensity: item.intensity,
                interactions,
                collect_requirements: requirements,
                collect_costs: costs,
            });
        }
        let config = WorldConfig {
            scent_dims: file.map.scent_dims,
            color_dims: file.map.color_dims,
            patch_size: file.map.patch_size,
            mh_iterations: file.map.mh_iterations,
            scent_decay: file.map.scent_decay,
            scent_diffusion: file.map.scent_diffusion,
            collision_policy: file.map.collision_policy,
            seed: file.map.seed,
            agent: file.agent,
            item_types,
        };
        config.validate()?;
        Ok(config)
    }

    fn to_file(&self) -> ConfigFile {
        let name = |t: usize| self.item_types[t].name.clone();
        let sparse = |counts: &[u32]| -> BTreeMap<String, u32> {
            counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(t, &c)| (name(t), c)).collect()
        };
        ConfigFile {
            version: CONFIG_VERSION,
            map: MapSection {
                scent_dims: self.scent_dims,
                color_dims: self.color_dims,
                patch_size: self.patch_size,
                mh_iterations: self.mh_iterations,
                scent_decay: self.scent_decay,
                scent_diffusion: self.scent_diffusion,
                collision_policy: self.collision_policy,
                seed: self.seed,
            },
            agent: self.agent.clone(),
            items: self
                .item_types
                .iter()
                .map(|it| ItemSection {
                    name: it.name.clone(),
                    scent: it.scent.clone(),
                    color: it.color.clone(),
                    occlusion: it.occlusion,
                    blocks_movement: it.blocks_movement,
                    intensity: it.intensity,
                    interactions: it
                        .interactions
                        .iter()
                        .enumerate()
                        .filter(|(_, g)| !matches!(g, InteractionFn::Zero))
                        .map(|(t, g)| (name(t), *g))
                        .collect(),
                    collect_requirements: sparse(&it.collect_requirements),
                    collect_costs: sparse(&it.collect_costs),
                })
                .collect(),
        }
    }

    /// Canonical JSON encoding (stable field and key order).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.scent_dims == 0 || self.color_dims == 0 {
            return bad("scent_dims and color_dims must be positive".into());
        }
        if self.patch_size == 0 || self.mh_iterations == 0 {
            return bad("patch_size and mh_iterations must be positive".into());
        }
        if self.patch_size > 4096 {
            return bad(format!("patch_size {} is too large", self.patch_size));
        }
        let (decay, diffusion) = (self.scent_decay, self.scent_diffusion);
        if !(0.0..1.0).contains(&decay) {
            return bad(format!("scent_decay {decay} must lie in [0, 1)"));
        }
        if diffusion.is_nan() || diffusion < 0.0 {
            return bad(format!("scent_diffusion {diffusion} must be non-negative"));
        }
        if decay + 4.0 * diffusion >= 1.0 {
            return bad(format!("scent_decay + 4 * scent_diffusion = {} must be < 1", decay + 4.0 * diffusion));
        }
        if self.item_types.is_empty() {
            return bad("at least one item type is required".into());
        }
        for (i, it) in self.item_types.iter().enumerate() {
            if self.item_types[..i].iter().any(|o| o.name == it.name) {
                return bad(format!("duplicate item type `{}`", it.name));
            }
            if it.scent.len() != self.scent_dims {
                return bad(format!("item `{}` scent has {} dims, expected {}", it.name, it.scent.len(), self.scent_dims));
            }
            if it.color.len() != self.color_dims {
                return bad(format!("item `{}` color has {} dims, expected {}", it.name, it.color.len(), self.color_dims));
            }
            if !(0.0..=1.0).contains(&it.occlusion) {
                return bad(format!("item `{}` occlusion {} outside [0, 1]", it.name, it.occlusion));
            }
        }
        let agent = &self.agent;
        if agent.color.len() != self.color_dims || agent.scent.len() != self.scent_dims {
            return bad("agent color/scent dimensionality does not match the map".into());
        }
        if agent.visual_range == 0 || agent.visual_range > 256 {
            return bad(format!("visual_range {} must lie in 1..=256", agent.visual_range));
        }
        if !(agent.field_of_view > 0.0 && agent.field_of_view <= 360.0) {
            return bad(format!("field_of_view {} must lie in (0, 360]", agent.field_of_view));
        }
        if agent.action_space.is_empty() {
            return bad("action_space must not be empty".into());
        }
        Ok(())
    }

    pub fn item_index(&self, name: &str) -> Option<usize> {
        self.item_types.iter().position(|t| t.name == name)
    }

    pub fn item_count(&self) -> usize {
        self.item_types.len()
    }

    pub fn interaction(&self, first: usize, second: usize) -> &InteractionFn {
        &self.item_types[first].interactions[second]
    }

    /// Collection happens implicitly on entering a cell when the action
    /// space has no explicit `Collect`.
    pub fn auto_collect(&self) -> bool {
        !self.agent.allows(ActionKind::Collect)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SMALL: &str = r#"{
        "version": 1,
        "map": {"scent_dims": 3, "color_dims": 3, "patch_size": 8, "mh_iterations": 100,
                "scent_decay": 0.4, "scent_diffusion": 0.14},
        "agent": {"color": [0,0,0], "scent": [0,0,0], "action_space": ["MoveForward", "TurnLeft", "TurnRight"],
                  "visual_range": 4, "field_of_view": 360},
        "items": [
            {"name": "A", "scent": [1,0,0], "color": [1,0,0], "intensity": "Constant[-2]",
             "interactions": {"B": "PiecewiseBox[10,100,2,-100]"}},
            {"name": "B", "scent": [0,1,0], "color": [0,1,0], "blocks_movement": true,
             "collect_requirements": {"A": 1}, "collect_costs": {"A": 1}}
        ]
    }"#;

    #[test]
    fn missing_interactions_default_to_zero() {
        let c = WorldConfig::from_json(SMALL).unwrap();
        assert_eq!(*c.interaction(0, 1), "PiecewiseBox[10,100,2,-100]".parse().unwrap());
        assert_eq!(*c.interaction(1, 0), InteractionFn::Zero);
        assert_eq!(*c.interaction(0, 0), InteractionFn::Zero);
        assert_eq!(c.item_types[1].intensity, IntensityFn::Zero);
        assert_eq!(c.item_types[1].collect_requirements, vec![1, 0]);
        assert_eq!(c.collision_policy, CollisionPolicy::FirstComeFirstServe);
    }

    #[test]
    fn canonical_json_round_trips() {
        let c = WorldConfig::from_json(SMALL).unwrap();
        let again = WorldConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_json(), again.to_json());
        assert_eq!(c.digest(), again.digest());
    }

    #[test]
    fn rejects_unstable_scent() {
        let text = SMALL.replace("\"scent_diffusion\": 0.14", "\"scent_diffusion\": 0.15");
        assert!(matches!(WorldConfig::from_json(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn rejects_dimension_mismatch_and_unknown_names() {
        let text = SMALL.replace("\"color\": [1,0,0]", "\"color\": [1,0]");
        assert!(WorldConfig::from_json(&text).is_err());
        let text = SMALL.replace("{\"B\": \"PiecewiseBox", "{\"C\": \"PiecewiseBox");
        assert!(matches!(WorldConfig::from_json(&text), Err(ConfigError::UnknownItem(_))));
        let text = SMALL.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(WorldConfig::from_json(&text), Err(ConfigError::Version(2))));
    }
}
