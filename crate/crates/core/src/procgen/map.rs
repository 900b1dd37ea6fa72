use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{PatchCoord, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub position: Position,
    pub item_type: u32,
    /// Simulation time at which the item started emitting scent. Generated
    /// items are treated as present since time 0.
    pub created_at: u64,
}

impl Item {
    pub fn new(position: Position, item_type: u32, created_at: u64) -> Self {
        Self { position, item_type, created_at }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchStatus {
    Fixed,
    Speculative,
}

const EMPTY: u32 = u32::MAX;

/// A `P x P` tile. Holds at most one item per cell.
#[derive(Debug, Clone)]
pub struct Patch {
    coord: PatchCoord,
    size: u32,
    status: PatchStatus,
    items: Vec<Item>,
    // cell -> index into `items`
    cells: Vec<u32>,
}

impl PartialEq for Patch {
    fn eq(&self, other: &Self) -> bool {
        self.coord == other.coord && self.size == other.size && self.status == other.status && self.items == other.items
    }
}

impl Patch {
    pub fn new(coord: PatchCoord, size: u32, status: PatchStatus) -> Self {
        Patch { coord, size, status, items: Vec::new(), cells: vec![EMPTY; (size * size) as usize] }
    }

    /// Builds a patch from items; fails if two items share a cell or an item
    /// lies outside the patch.
    pub fn with_items(coord: PatchCoord, size: u32, status: PatchStatus, items: Vec<Item>) -> Option<Self> {
        let mut patch = Patch::new(coord, size, status);
        for item in items {
            if !patch.insert(item) {
                return None;
            }
        }
        Some(patch)
    }

    pub fn coord(&self) -> PatchCoord {
        self.coord
    }

    pub fn status(&self) -> PatchStatus {
        self.status
    }

    pub fn is_fixed(&self) -> bool {
        self.status == PatchStatus::Fixed
    }

    pub(crate) fn set_status(&mut self, status: PatchStatus) {
        self.status = status;
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    fn cell_index(&self, pos: Position) -> Option<usize> {
        let origin = self.coord.origin(self.size);
        let lx = pos.x - origin.x;
        let ly = pos.y - origin.y;
        let p = self.size as i64;
        if (0..p).contains(&lx) && (0..p).contains(&ly) {
            Some((ly * p + lx) as usize)
        } else {
            None
        }
    }

    pub fn item_at(&self, pos: Position) -> Option<&Item> {
        let idx = self.cells[self.cell_index(pos)?];
        (idx != EMPTY).then(|| &self.items[idx as usize])
    }

    /// Inserts an item; returns false if the cell is occupied or outside the patch.
    pub fn insert(&mut self, item: Item) -> bool {
        let Some(cell) = self.cell_index(item.position) else { return false };
        if self.cells[cell] != EMPTY {
            return false;
        }
        self.cells[cell] = self.items.len() as u32;
        self.items.push(item);
        true
    }

    pub fn remove_at(&mut self, pos: Position) -> Option<Item> {
        let cell = self.cell_index(pos)?;
        let idx = self.cells[cell];
        if idx == EMPTY {
            return None;
        }
        self.cells[cell] = EMPTY;
        let removed = self.items.swap_remove(idx as usize);
        if let Some(moved) = self.items.get(idx as usize) {
            let moved_cell = self.cell_index(moved.position).expect("item inside patch");
            self.cells[moved_cell] = idx;
        }
        Some(removed)
    }

    pub(crate) fn replace_items(&mut self, items: Vec<Item>) {
        self.items.clear();
        self.cells.iter_mut().for_each(|c| *c = EMPTY);
        for item in items {
            let inserted = self.insert(item);
            debug_assert!(inserted, "sampler produced overlapping items");
        }
    }
}

/// Sparse infinite map of patches.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    patch_size: u32,
    patches: BTreeMap<PatchCoord, Patch>,
    /// Fixed patches in the order they were fixed; copy-initialization draws
    /// uniformly from this list.
    fixed_order: Vec<PatchCoord>,
}

impl WorldMap {
    pub fn new(patch_size: u32) -> Self {
        WorldMap { patch_size, patches: BTreeMap::new(), fixed_order: Vec::new() }
    }

    pub(crate) fn from_parts(patch_size: u32, patches: Vec<Patch>, fixed_order: Vec<PatchCoord>) -> Self {
        WorldMap { patch_size, patches: patches.into_iter().map(|p| (p.coord, p)).collect(), fixed_order }
    }

    pub fn patch_size(&self) -> u32 {
        self.patch_size
    }

    pub fn patch(&self, coord: PatchCoord) -> Option<&Patch> {
        self.patches.get(&coord)
    }

    pub(crate) fn insert_patch(&mut self, patch: Patch) {
        self.patches.insert(patch.coord, patch);
    }

    pub(crate) fn mark_fixed(&mut self, coord: PatchCoord) {
        if let Some(p) = self.patches.get_mut(&coord) {
            if !p.is_fixed() {
                p.set_status(PatchStatus::Fixed);
                self.fixed_order.push(coord);
            }
        }
    }

    pub fn is_fixed(&self, coord: PatchCoord) -> bool {
        self.patches.get(&coord).is_some_and(Patch::is_fixed)
    }

    pub fn patches(&self) -> impl Iterator<Item = &Patch> {
        self.patches.values()
    }

    pub fn fixed_order(&self) -> &[PatchCoord] {
        &self.fixed_order
    }

    pub fn fixed_count(&self) -> usize {
        self.fixed_order.len()
    }

    pub fn item_at(&self, pos: Position) -> Option<&Item> {
        self.patches.get(&pos.patch(self.patch_size))?.item_at(pos)
    }

    /// Item at a cell of a fixed patch. Speculative items are not part of
    /// the observable world.
    pub fn fixed_item_at(&self, pos: Position) -> Option<&Item> {
        let patch = self.patches.get(&pos.patch(self.patch_size))?;
        if patch.is_fixed() {
            patch.item_at(pos)
        } else {
            None
        }
    }

    pub(crate) fn remove_item(&mut self, pos: Position) -> Option<Item> {
        self.patches.get_mut(&pos.patch(self.patch_size))?.remove_at(pos)
    }

    pub(crate) fn insert_item(&mut self, item: Item) -> bool {
        match self.patches.get_mut(&item.position.patch(self.patch_size)) {
            Some(p) => p.insert(item),
            None => false,
        }
    }

    /// Fixed patches overlapping the inclusive cell rectangle, in key order.
    pub fn fixed_patches_in(&self, min: Position, max: Position) -> impl Iterator<Item = &Patch> {
        let lo = min.patch(self.patch_size);
        let hi = max.patch(self.patch_size);
        (lo.y..=hi.y)
            .flat_map(move |py| (lo.x..=hi.x).map(move |px| PatchCoord::new(px, py)))
            .filter_map(move |c| self.patches.get(&c))
            .filter(|p| p.is_fixed())
    }

    /// True if every patch overlapping the rectangle is fixed.
    pub fn region_fixed(&self, min: Position, max: Position) -> bool {
        let lo = min.patch(self.patch_size);
        let hi = max.patch(self.patch_size);
        (lo.y..=hi.y).all(|py| (lo.x..=hi.x).all(|px| self.is_fixed(PatchCoord::new(px, py))))
    }

    pub fn total_items(&self) -> usize {
        self.patches.values().filter(|p| p.is_fixed()).map(|p| p.items.len()).sum()
    }
}
