//! Small world configurations for tests and examples.

use crate::config::WorldConfig;
use crate::presets;

pub fn table_2_3() -> WorldConfig {
    WorldConfig::from_json(presets::TABLE_2_3).expect("preset parses")
}

/// A world whose generator produces (almost surely) no items, for
/// hand-built scenarios. Item types mirror the jelly bean / wall pair.
pub fn empty_world(patch_size: u32, action_space: &str, fov: f64) -> WorldConfig {
    let text = format!(
        r#"{{
        "version": 1,
        "map": {{"scent_dims": 3, "color_dims": 3, "patch_size": {patch_size}, "mh_iterations": 10,
                "scent_decay": 0.4, "scent_diffusion": 0.14}},
        "agent": {{"color": [0,0,0], "scent": [0,0,0], "action_space": {action_space},
                  "visual_range": 8, "field_of_view": {fov}}},
        "items": [
            {{"name": "JellyBean", "scent": [1.64,0.54,0.40], "color": [0.82,0.27,0.20], "intensity": "Constant[-1000]"}},
            {{"name": "Onion", "scent": [0.68,0.01,0.99], "color": [0.68,0.01,0.99], "intensity": "Constant[-1000]"}},
            {{"name": "Wall", "scent": [0,0,0], "color": [0.20,0.47,0.67], "occlusion": 1.0, "blocks_movement": true,
              "intensity": "Constant[-1000]"}}
        ]
    }}"#
    );
    WorldConfig::from_json(&text).expect("test config parses")
}
