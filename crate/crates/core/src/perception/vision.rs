use serde::{Deserialize, Serialize};

use crate::config::WorldConfig;
use crate::error::SimError;
use crate::geom::{egocentric_to_world, Direction, Position};
use crate::procgen::WorldMap;

use super::{fov_factor_egocentric, occlusion_factor};

/// Egocentric color image: `(2R+1) x (2R+1) x color_dims`, forward is up.
/// Row `R - f`, column `R + r` holds the cell `f` steps ahead and `r` steps
/// to the right; the observer sits at `(R, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionTensor {
    pub range: u32,
    pub dims: usize,
    pub data: Vec<f64>,
}

impl VisionTensor {
    pub fn zeros(range: u32, dims: usize) -> Self {
        let side = 2 * range as usize + 1;
        VisionTensor { range, dims, data: vec![0.0; side * side * dims] }
    }

    pub fn side(&self) -> usize {
        2 * self.range as usize + 1
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let i = (row * self.side() + col) * self.dims;
        &self.data[i..i + self.dims]
    }

    fn cell_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let i = (row * self.side() + col) * self.dims;
        &mut self.data[i..i + self.dims]
    }

    /// Cell at egocentric offset (`forward`, `right`).
    pub fn at(&self, forward: i64, right: i64) -> &[f64] {
        let r = self.range as i64;
        self.cell((r - forward) as usize, (r + right) as usize)
    }
}

/// Renders what an agent at `position` facing `direction` sees. Cell color
/// is the sum of item and agent colors there, scaled by the field-of-view
/// and occlusion factors. `agents` lists every agent position (including
/// the observer). Fails if any visible cell lies in a non-fixed patch.
pub fn render_vision(map: &WorldMap, config: &WorldConfig, agents: &[Position], position: Position, direction: Direction) -> Result<VisionTensor, SimError> {
    let range = config.agent.visual_range;
    let r = range as i64;
    let min = Position::new(position.x - r, position.y - r);
    let max = Position::new(position.x + r, position.y + r);
    if !map.region_fixed(min, max) {
        return Err(SimError::UngeneratedRegion(position));
    }
    let dims = config.color_dims;
    let mut out = VisionTensor::zeros(range, dims);

    let mut occluders = Vec::new();
    for patch in map.fixed_patches_in(min, max) {
        for item in patch.items() {
            let off = item.position - position;
            if off.x.abs() <= r && off.y.abs() <= r {
                let o = config.item_types[item.item_type as usize].occlusion;
                if o > 0.0 {
                    occluders.push((off, o));
                }
            }
        }
    }

    let fov = config.agent.field_of_view;
    let mut color = vec![0.0; dims];
    for f in -r..=r {
        for rt in -r..=r {
            let world = position + egocentric_to_world(direction, f, rt);
            color.fill(0.0);
            let mut any = false;
            if let Some(item) = map.fixed_item_at(world) {
                for (c, v) in color.iter_mut().zip(&config.item_types[item.item_type as usize].color) {
                    *c += v;
                }
                any = true;
            }
            for _ in agents.iter().filter(|&&a| a == world) {
                for (c, v) in color.iter_mut().zip(&config.agent.color) {
                    *c += v;
                }
                any = true;
            }
            if !any {
                continue;
            }
            let factor = fov_factor_egocentric(fov, f, rt) * if occluders.is_empty() { 1.0 } else { occlusion_factor(world - position, &occluders) };
            if factor == 0.0 {
                continue;
            }
            let cell = out.cell_mut((r - f) as usize, (r + rt) as usize);
            for (o, c) in cell.iter_mut().zip(&color) {
                *o = c * factor;
            }
        }
    }
    Ok(out)
}
