//! The example configurations shipped in `configs/`, embedded at build time.

use crate::config::WorldConfig;
use crate::error::ConfigError;

pub const TABLE_2_3: &str = include_str!("../../../configs/table2_3.json");
pub const TABLE_2_3_OCCLUSION: &str = include_str!("../../../configs/table2_3_occlusion.json");
pub const TABLE_4_5: &str = include_str!("../../../configs/table4_5.json");
pub const TABLE_6_7: &str = include_str!("../../../configs/table6_7.json");
pub const TABLE_6_7_OCCLUSION: &str = include_str!("../../../configs/table6_7_occlusion.json");

/// Preset names accepted wherever a config path is expected.
pub const NAMES: [&str; 5] = ["table2_3", "table2_3_occlusion", "table4_5", "table6_7", "table6_7_occlusion"];

pub fn by_name(name: &str) -> Option<Result<WorldConfig, ConfigError>> {
    let text = match name {
        "table2_3" => TABLE_2_3,
        "table2_3_occlusion" => TABLE_2_3_OCCLUSION,
        "table4_5" => TABLE_4_5,
        "table6_7" => TABLE_6_7,
        "table6_7_occlusion" => TABLE_6_7_OCCLUSION,
        _ => return None,
    };
    Some(WorldConfig::from_json(text))
}

/// Loads either a preset name or a JSON file path.
pub fn load(name_or_path: &str) -> Result<WorldConfig, ConfigError> {
    match by_name(name_or_path) {
        Some(config) => config,
        None => WorldConfig::load(name_or_path),
    }
}
