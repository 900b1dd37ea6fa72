//! Patch generation throughput.

use std::time::Instant;

use serde::Serialize;

use crate::config::WorldConfig;
use crate::geom::PatchCoord;
use crate::procgen::{generate_patch, WorldMap};
use crate::rng::Pcg32;

/// The first `n` patches of the square spiral `(0,0), (1,0), (1,1), (0,1),
/// (-1,1), (-1,0), (-1,-1), (0,-1), (1,-1), (2,-1), ...`.
pub fn spiral(n: usize) -> Vec<PatchCoord> {
    let mut out = Vec::with_capacity(n);
    let (mut x, mut y) = (0i64, 0i64);
    let dirs = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let (mut leg, mut d) = (1usize, 0usize);
    while out.len() < n {
        for _ in 0..2 {
            for _ in 0..leg {
                if out.len() == n {
                    return out;
                }
                out.push(PatchCoord::new(x, y));
                x += dirs[d].0;
                y += dirs[d].1;
            }
            d = (d + 1) % 4;
        }
        leg += 1;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemStats {
    pub name: String,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub patches: usize,
    pub seconds: f64,
    pub patches_per_second: f64,
    /// Per item type, over the benchmarked patches.
    pub items_per_patch: Vec<ItemStats>,
}

/// Fixes `n` patches along the spiral, single-threaded, with the config's
/// seed and MH iteration count. Everything but the timing is deterministic.
pub fn bench_generation(config: &WorldConfig, n: usize) -> BenchReport {
    let mut map = WorldMap::new(config.patch_size);
    let mut rng = Pcg32::from_seed(config.seed);
    let coords = spiral(n);
    let start = Instant::now();
    for &c in &coords {
        generate_patch(&mut map, c, &mut rng, config);
    }
    let seconds = start.elapsed().as_secs_f64();

    let types = config.item_count();
    let mut counts = vec![vec![0f64; coords.len()]; types];
    for (k, &c) in coords.iter().enumerate() {
        for item in map.patch(c).expect("generated").items() {
            counts[item.item_type as usize][k] += 1.0;
        }
    }
    let items_per_patch = config
        .item_types
        .iter()
        .zip(&counts)
        .map(|(t, c)| {
            let n = c.len().max(1) as f64;
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            ItemStats { name: t.name.clone(), mean, std_dev: var.sqrt() }
        })
        .collect();
    BenchReport { patches: n, seconds, patches_per_second: n as f64 / seconds.max(f64::MIN_POSITIVE), items_per_patch }
}
