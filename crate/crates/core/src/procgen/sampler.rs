//! Metropolis-Hastings sampling of patch contents.
//!
//! Proposals: with probability 1/2 add an item uniform over the `P^2 |T|`
//! (cell, type) pairs, otherwise remove one of the `m` current items
//! uniformly. The Hastings correction makes the chain reversible with
//! respect to `exp(log_density)`; adds onto occupied cells are rejected.
//!
//! Items of all loaded patches live in a per-type bucket grid so the change
//! in log density of a proposal only visits items within the interaction
//! support of the proposed type.

use crate::config::WorldConfig;
use crate::functions::{IntensityFn, InteractionFn};
use crate::geom::{PatchCoord, Position};
use crate::rng::Pcg32;

use super::{Item, Patch};

const BUCKET: i64 = 8;
const EMPTY: u16 = u16::MAX;

#[derive(Debug, Clone)]
struct SampledPatch {
    coord: PatchCoord,
    // local cell coordinates of the patch origin within the region
    origin: (i64, i64),
    items: Vec<(i32, i32, u16)>,
}

/// Joint sampler over one or more patches sharing a rectangular region of
/// context.
pub struct PatchSampler<'c> {
    config: &'c WorldConfig,
    patch_size: i64,
    types: usize,
    region_origin: Position,
    region_min_patch: PatchCoord,
    width: i64,
    occupancy: Vec<u16>,
    buckets_per_side: i64,
    buckets: Vec<Vec<(i32, i32)>>,
    intensity: Vec<IntensityFn>,
    interactions: Vec<InteractionFn>,
    radius: Vec<i64>,
    partners: Vec<Vec<usize>>,
    log_space: f64,
    sampled: Vec<SampledPatch>,
}

impl<'c> PatchSampler<'c> {
    /// Region spanning `ring` patches on each side of `center`.
    pub fn new(config: &'c WorldConfig, center: PatchCoord, ring: i64) -> Self {
        let p = config.patch_size as i64;
        let types = config.item_count();
        assert!(types < EMPTY as usize, "too many item types");
        let span = 2 * ring + 1;
        let width = span * p;
        let region_min_patch = center.offset(-ring, -ring);
        let buckets_per_side = (width + BUCKET - 1) / BUCKET;
        let mut interactions = Vec::with_capacity(types * types);
        let mut radius = vec![-1; types * types];
        for a in 0..types {
            for b in 0..types {
                interactions.push(*config.interaction(a, b));
            }
        }
        for a in 0..types {
            for b in 0..types {
                let r = config.interaction(a, b).support_radius(p).max(config.interaction(b, a).support_radius(p));
                radius[a * types + b] = r;
            }
        }
        let partners = (0..types).map(|a| (0..types).filter(|&b| radius[a * types + b] >= 0).collect()).collect();
        PatchSampler {
            config,
            patch_size: p,
            types,
            region_origin: region_min_patch.origin(config.patch_size),
            region_min_patch,
            width,
            occupancy: vec![EMPTY; (width * width) as usize],
            buckets_per_side,
            buckets: vec![Vec::new(); types * (buckets_per_side * buckets_per_side) as usize],
            intensity: config.item_types.iter().map(|t| t.intensity).collect(),
            interactions,
            radius,
            partners,
            log_space: ((p * p) as f64 * types as f64).ln(),
            sampled: Vec::new(),
        }
    }

    fn local(&self, pos: Position) -> Option<(i64, i64)> {
        let lx = pos.x - self.region_origin.x;
        let ly = pos.y - self.region_origin.y;
        ((0..self.width).contains(&lx) && (0..self.width).contains(&ly)).then_some((lx, ly))
    }

    fn bucket_index(&self, t: usize, lx: i64, ly: i64) -> usize {
        let per_type = (self.buckets_per_side * self.buckets_per_side) as usize;
        t * per_type + ((ly / BUCKET) * self.buckets_per_side + lx / BUCKET) as usize
    }

    fn place(&mut self, lx: i64, ly: i64, t: usize) -> bool {
        let cell = (ly * self.width + lx) as usize;
        if self.occupancy[cell] != EMPTY {
            return false;
        }
        self.occupancy[cell] = t as u16;
        let b = self.bucket_index(t, lx, ly);
        self.buckets[b].push((lx as i32, ly as i32));
        true
    }

    fn unplace(&mut self, lx: i64, ly: i64, t: usize) {
        let cell = (ly * self.width + lx) as usize;
        self.occupancy[cell] = EMPTY;
        let b = self.bucket_index(t, lx, ly);
        let bucket = &mut self.buckets[b];
        let at = bucket.iter().position(|&(x, y)| x as i64 == lx && y as i64 == ly).expect("item present in bucket");
        bucket.swap_remove(at);
    }

    /// Adds a context item (not resampled). Items outside the region are ignored.
    pub fn add_context_item(&mut self, item: &Item) {
        if let Some((lx, ly)) = self.local(item.position) {
            self.place(lx, ly, item.item_type as usize);
        }
    }

    pub fn add_context_patch(&mut self, patch: &Patch) {
        for item in patch.items() {
            self.add_context_item(item);
        }
    }

    /// Registers a patch to be resampled, seeded with its current items.
    /// Returns its sampler slot.
    pub fn add_sampled_patch(&mut self, patch: &Patch) -> usize {
        let origin = patch.coord().origin(self.config.patch_size);
        let (ox, oy) = self.local(origin).expect("sampled patch inside region");
        let mut slot = SampledPatch { coord: patch.coord(), origin: (ox, oy), items: Vec::with_capacity(patch.items().len()) };
        for item in patch.items() {
            let (lx, ly) = self.local(item.position).expect("item inside its patch");
            if self.place(lx, ly, item.item_type as usize) {
                slot.items.push((lx as i32, ly as i32, item.item_type as u16));
            }
        }
        self.sampled.push(slot);
        self.sampled.len() - 1
    }

    /// Log-density contribution of an item of type `t` at local `(lx, ly)`
    /// belonging to the patch whose local origin is `origin`: its intensity,
    /// plus both directions of every pair within the same patch and the
    /// outgoing direction towards context items.
    fn energy(&self, lx: i64, ly: i64, t: usize, origin: (i64, i64)) -> f64 {
        let abs = Position::new(self.region_origin.x + lx, self.region_origin.y + ly);
        let mut total = self.intensity[t].eval(abs);
        let p = self.patch_size;
        for &other in &self.partners[t] {
            let r = self.radius[t * self.types + other];
            let x0 = (lx - r).max(0) / BUCKET;
            let x1 = (lx + r).min(self.width - 1) / BUCKET;
            let y0 = (ly - r).max(0) / BUCKET;
            let y1 = (ly + r).min(self.width - 1) / BUCKET;
            let outgoing = &self.interactions[t * self.types + other];
            let incoming = &self.interactions[other * self.types + t];
            for by in y0..=y1 {
                for bx in x0..=x1 {
                    let per_type = (self.buckets_per_side * self.buckets_per_side) as usize;
                    let b = other * per_type + (by * self.buckets_per_side + bx) as usize;
                    for &(ox, oy) in &self.buckets[b] {
                        let (ox, oy) = (ox as i64, oy as i64);
                        if (ox - lx).abs() > r || (oy - ly).abs() > r || (ox == lx && oy == ly) {
                            continue;
                        }
                        let other_abs = Position::new(self.region_origin.x + ox, self.region_origin.y + oy);
                        total += outgoing.eval(abs, other_abs);
                        let same_patch = (ox - origin.0) >= 0 && (ox - origin.0) < p && (oy - origin.1) >= 0 && (oy - origin.1) < p;
                        if same_patch {
                            total += incoming.eval(other_abs, abs);
                        }
                    }
                }
            }
        }
        total
    }

    /// Log acceptance ratio of adding type `t` at absolute `pos` to slot `k`;
    /// `None` if the cell is occupied or outside the patch.
    pub fn add_log_ratio(&self, k: usize, pos: Position, t: usize) -> Option<f64> {
        let slot = &self.sampled[k];
        if !slot.coord.contains(pos, self.config.patch_size) {
            return None;
        }
        let (lx, ly) = self.local(pos)?;
        if self.occupancy[(ly * self.width + lx) as usize] != EMPTY {
            return None;
        }
        let m = slot.items.len() as f64;
        Some(self.energy(lx, ly, t, slot.origin) + self.log_space - (m + 1.0).ln())
    }

    /// Log acceptance ratio of removing the `i`-th item of slot `k`.
    pub fn remove_log_ratio(&self, k: usize, i: usize) -> f64 {
        let slot = &self.sampled[k];
        let (lx, ly, t) = slot.items[i];
        let m = slot.items.len() as f64;
        -self.energy(lx as i64, ly as i64, t as usize, slot.origin) + m.ln() - self.log_space
    }

    fn accept(log_ratio: f64, rng: &mut Pcg32) -> bool {
        log_ratio >= 0.0 || rng.next_f64() < log_ratio.exp()
    }

    /// One Metropolis-Hastings transition on slot `k`. Returns whether the
    /// proposal was accepted.
    pub fn step(&mut self, k: usize, rng: &mut Pcg32) -> bool {
        let p = self.patch_size;
        if rng.next_f64() < 0.5 {
            let cell = rng.below((p * p) as u32) as i64;
            let t = rng.below(self.types as u32) as usize;
            let slot = &self.sampled[k];
            let (lx, ly) = (slot.origin.0 + cell % p, slot.origin.1 + cell / p);
            if self.occupancy[(ly * self.width + lx) as usize] != EMPTY {
                return false;
            }
            let m = slot.items.len() as f64;
            let log_ratio = self.energy(lx, ly, t, slot.origin) + self.log_space - (m + 1.0).ln();
            if Self::accept(log_ratio, rng) {
                self.place(lx, ly, t);
                self.sampled[k].items.push((lx as i32, ly as i32, t as u16));
                return true;
            }
            false
        } else {
            let m = self.sampled[k].items.len();
            if m == 0 {
                return false;
            }
            let i = rng.below(m as u32) as usize;
            let log_ratio = self.remove_log_ratio(k, i);
            if Self::accept(log_ratio, rng) {
                let (lx, ly, t) = self.sampled[k].items.swap_remove(i);
                self.unplace(lx as i64, ly as i64, t as usize);
                return true;
            }
            false
        }
    }

    /// Runs `iterations` sweeps; each sweep performs one transition on every
    /// sampled patch in slot order.
    pub fn run(&mut self, iterations: u32, rng: &mut Pcg32) {
        for _ in 0..iterations {
            for k in 0..self.sampled.len() {
                self.step(k, rng);
            }
        }
    }

    pub fn slot_count(&self) -> usize {
        self.sampled.len()
    }

    pub fn slot_coord(&self, k: usize) -> PatchCoord {
        self.sampled[k].coord
    }

    pub fn item_count(&self, k: usize) -> usize {
        self.sampled[k].items.len()
    }

    /// Current items of slot `k` (generated items carry `created_at = 0`).
    pub fn items(&self, k: usize) -> Vec<Item> {
        self.sampled[k]
            .items
            .iter()
            .map(|&(lx, ly, t)| Item::new(Position::new(self.region_origin.x + lx as i64, self.region_origin.y + ly as i64), t as u32, 0))
            .collect()
    }

    /// Bitmask of occupied cells of slot `k` (row-major, patches up to 8x8),
    /// one type per cell encoded as `type + 1` in base `|T| + 1`.
    pub fn configuration_code(&self, k: usize) -> u64 {
        let slot = &self.sampled[k];
        let p = self.patch_size;
        let base = self.types as u64 + 1;
        let mut code = 0u64;
        for cell in (0..p * p).rev() {
            let (lx, ly) = (slot.origin.0 + cell % p, slot.origin.1 + cell / p);
            let occ = self.occupancy[(ly * self.width + lx) as usize];
            let digit = if occ == EMPTY { 0 } else { occ as u64 + 1 };
            code = code * base + digit;
        }
        code
    }

    pub fn region_min_patch(&self) -> PatchCoord {
        self.region_min_patch
    }
}

/// Single Metropolis-Hastings transition on `patch` with the given context
/// items. Convenience wrapper; bulk sampling should reuse a [`PatchSampler`].
pub fn mh_step(patch: &mut Patch, context: &[Item], rng: &mut Pcg32, config: &WorldConfig) -> bool {
    let mut sampler = PatchSampler::new(config, patch.coord(), 1);
    for item in context {
        if !patch.coord().contains(item.position, config.patch_size) {
            sampler.add_context_item(item);
        }
    }
    let k = sampler.add_sampled_patch(patch);
    let accepted = sampler.step(k, rng);
    if accepted {
        patch.replace_items(sampler.items(k));
    }
    accepted
}
