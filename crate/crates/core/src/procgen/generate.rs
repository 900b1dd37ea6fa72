use crate::config::WorldConfig;
use crate::geom::{PatchCoord, Position};
use crate::rng::Pcg32;

use super::{Item, Patch, PatchSampler, PatchStatus, WorldMap};

/// Copies the items of a uniformly chosen fixed patch, translated to `coord`.
fn copy_initial_items(map: &WorldMap, coord: PatchCoord, rng: &mut Pcg32) -> Vec<Item> {
    let fixed = map.fixed_order();
    if fixed.is_empty() {
        return Vec::new();
    }
    let source = fixed[rng.below(fixed.len() as u32) as usize];
    let p = map.patch_size();
    let from = source.origin(p);
    let to = coord.origin(p);
    map.patch(source)
        .expect("fixed patch present")
        .items()
        .iter()
        .map(|it| Item::new(it.position - from + to, it.item_type, 0))
        .collect()
}

/// Samples the patch at `coord` and marks it fixed.
///
/// Missing neighbors are created as speculative patches and sampled jointly
/// with the target (one transition per patch per sweep, target first); their
/// own missing neighbors count as empty. The target and every new neighbor
/// start from a copy of a uniformly chosen fixed patch. Existing neighbors,
/// fixed or speculative, are context only. No-op if `coord` is already fixed.
pub fn generate_patch(map: &mut WorldMap, coord: PatchCoord, rng: &mut Pcg32, config: &WorldConfig) {
    if map.is_fixed(coord) {
        return;
    }
    let p = config.patch_size;
    let mut to_sample = vec![coord];
    to_sample.extend(coord.neighbors().filter(|n| map.patch(*n).is_none()));

    let mut sampler = PatchSampler::new(config, coord, 2);
    for dy in -2..=2 {
        for dx in -2..=2 {
            let c = coord.offset(dx, dy);
            if let Some(existing) = map.patch(c) {
                if !to_sample.contains(&c) {
                    sampler.add_context_patch(existing);
                }
            }
        }
    }
    for &c in &to_sample {
        let items = copy_initial_items(map, c, rng);
        let patch = Patch::with_items(c, p, PatchStatus::Speculative, items).expect("copied items are disjoint");
        sampler.add_sampled_patch(&patch);
    }

    sampler.run(config.mh_iterations, rng);

    for (k, &c) in to_sample.iter().enumerate() {
        let patch = Patch::with_items(c, p, PatchStatus::Speculative, sampler.items(k)).expect("sampler keeps one item per cell");
        map.insert_patch(patch);
    }
    map.mark_fixed(coord);
}

/// Patches overlapping the Chebyshev ball of `radius` around `center`, in
/// row-major order (south to north, west to east).
pub fn patches_in_radius(center: Position, radius: i64, patch_size: u32) -> Vec<PatchCoord> {
    let lo = Position::new(center.x - radius, center.y - radius).patch(patch_size);
    let hi = Position::new(center.x + radius, center.y + radius).patch(patch_size);
    (lo.y..=hi.y).flat_map(|py| (lo.x..=hi.x).map(move |px| PatchCoord::new(px, py))).collect()
}

/// Fixes every patch overlapping the Chebyshev ball; returns the patches
/// newly fixed, in generation order.
pub fn ensure_generated(map: &mut WorldMap, center: Position, radius: i64, rng: &mut Pcg32, config: &WorldConfig) -> Vec<PatchCoord> {
    let mut generated = Vec::new();
    for c in patches_in_radius(center, radius, config.patch_size) {
        if !map.is_fixed(c) {
            generate_patch(map, c, rng, config);
            generated.push(c);
        }
    }
    generated
}
