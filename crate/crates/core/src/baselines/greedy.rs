use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::action::Action;
use crate::config::WorldConfig;
use crate::perception::{fov_factor_egocentric, VisionTensor};
use crate::rng::Pcg32;

/// Relative tolerance for color-ray matching, and the smallest accepted scale.
pub const RAY_TOLERANCE: f64 = 1e-6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// True when `cell` is `γ·color` for some `γ > 0`, up to [`RAY_TOLERANCE`].
/// Partially occluded items keep their hue but lose brightness, so only the
/// direction is compared.
pub fn matches_ray(cell: &[f64], color: &[f64]) -> bool {
    let cc = dot(color, color);
    if cc == 0.0 {
        return false;
    }
    let gamma = dot(cell, color) / cc;
    if gamma <= RAY_TOLERANCE {
        return false;
    }
    let residual: f64 = cell.iter().zip(color).map(|(x, c)| (x - gamma * c).powi(2)).sum::<f64>().sqrt();
    residual <= RAY_TOLERANCE * dot(cell, cell).sqrt()
}

// Egocentric headings: 0 forward, 1 right, 2 back, 3 left.
const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Fewest-action path from the agent (centre, facing forward) to any cell
/// colored along `goal`, through cells inside the field of view that match
/// none of `blocked`. `None` when no such cell is reachable.
pub fn shortest_path(vision: &VisionTensor, fov: f64, goal: &[f64], blocked: &[&[f64]]) -> Option<Vec<Action>> {
    let r = vision.range as i64;
    let side = vision.side();
    let cell_index = |f: i64, rt: i64| (f + r) as usize * side + (rt + r) as usize;
    let mut open = vec![false; side * side];
    let mut target = vec![false; side * side];
    for f in -r..=r {
        for rt in -r..=r {
            if f == 0 && rt == 0 {
                continue;
            }
            let c = vision.at(f, rt);
            let obstacle = blocked.iter().any(|b| matches_ray(c, b));
            let i = cell_index(f, rt);
            open[i] = !obstacle && fov_factor_egocentric(fov, f, rt) > 0.0;
            target[i] = open[i] && matches_ray(c, goal);
        }
    }
    if !target.iter().any(|&t| t) {
        return None;
    }
    open[cell_index(0, 0)] = true;

    let states = side * side * 4;
    let mut dist = vec![u32::MAX; states];
    let mut prev: Vec<Option<(usize, Action)>> = vec![None; states];
    let start = cell_index(0, 0) * 4;
    dist[start] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u32, start)));
    while let Some(Reverse((d, s))) = heap.pop() {
        if d > dist[s] {
            continue;
        }
        let (cell, heading) = (s / 4, s % 4);
        if target[cell] {
            let mut path = Vec::with_capacity(d as usize);
            let mut at = s;
            while let Some((p, a)) = prev[at] {
                path.push(a);
                at = p;
            }
            path.reverse();
            return Some(path);
        }
        let (f, rt) = ((cell / side) as i64 - r, (cell % side) as i64 - r);
        let (df, dr) = STEPS[heading];
        let (nf, nr) = (f + df, rt + dr);
        let forward = (nf.abs() <= r && nr.abs() <= r && open[cell_index(nf, nr)]).then(|| cell_index(nf, nr) * 4 + heading);
        let edges = [
            (forward, Action::MoveForward),
            (Some(cell * 4 + (heading + 3) % 4), Action::TurnLeft),
            (Some(cell * 4 + (heading + 1) % 4), Action::TurnRight),
        ];
        for (next, action) in edges {
            let Some(n) = next else { continue };
            if d + 1 < dist[n] {
                dist[n] = d + 1;
                prev[n] = Some((s, action));
                heap.push(Reverse((d + 1, n)));
            }
        }
    }
    None
}

/// The greedy vision policy: follow the shortest visible path to a reward
/// item, switching only to strictly shorter paths; with nothing in sight,
/// wander: forward with probability 19/20 when the cell ahead is clear, a
/// random turn otherwise.
#[derive(Debug, Clone)]
pub struct GreedyAgent {
    reward_color: Vec<f64>,
    obstacle_colors: Vec<Vec<f64>>,
    avoid_colors: Vec<Vec<f64>>,
    field_of_view: f64,
    best_path: Option<VecDeque<Action>>,
    rng: Pcg32,
}

impl GreedyAgent {
    pub fn new(reward_color: Vec<f64>, obstacle_colors: Vec<Vec<f64>>, avoid_colors: Vec<Vec<f64>>, field_of_view: f64, seed: u64) -> Self {
        GreedyAgent { reward_color, obstacle_colors, avoid_colors, field_of_view, best_path: None, rng: Pcg32::from_seed(seed) }
    }

    /// Targets `reward` items, treats movement-blocking types as obstacles and
    /// additionally steers around the types named in `avoid`.
    pub fn for_config(config: &WorldConfig, reward: &str, avoid: &[&str], seed: u64) -> Option<Self> {
        let color = |name: &str| config.item_index(name).map(|i| config.item_types[i].color.clone());
        let obstacles = config.item_types.iter().filter(|t| t.blocks_movement).map(|t| t.color.clone()).collect();
        let avoid = avoid.iter().map(|n| color(n)).collect::<Option<Vec<_>>>()?;
        Some(Self::new(color(reward)?, obstacles, avoid, config.agent.field_of_view, seed))
    }

    pub fn best_path(&self) -> Option<&VecDeque<Action>> {
        self.best_path.as_ref()
    }

    pub fn plan(&self, vision: &VisionTensor) -> Option<Vec<Action>> {
        let blocked: Vec<&[f64]> = self.obstacle_colors.iter().chain(&self.avoid_colors).map(Vec::as_slice).collect();
        shortest_path(vision, self.field_of_view, &self.reward_color, &blocked)
    }

    pub fn act(&mut self, vision: &VisionTensor) -> Action {
        let shortest = self.plan(vision);
        let adopt = match (&self.best_path, &shortest) {
            (None, _) => true,
            (Some(best), Some(new)) => new.len() < best.len(),
            (Some(_), None) => false,
        };
        if adopt {
            self.best_path = shortest.map(VecDeque::from).filter(|p| !p.is_empty());
        }
        match self.best_path.as_mut() {
            None => {
                // Persistent random walk: mostly forward while the way ahead
                // is clear, otherwise a random turn. Turning in place with a
                // full field of view never reveals anything new, and only
                // turning at dead ends never leaves a narrow corridor.
                let ahead = vision.at(1, 0);
                let clear = !self.obstacle_colors.iter().chain(&self.avoid_colors).any(|c| matches_ray(ahead, c));
                if clear && self.rng.below(20) != 0 {
                    Action::MoveForward
                } else if self.rng.below(2) == 0 {
                    Action::TurnLeft
                } else {
                    Action::TurnRight
                }
            }
            Some(path) => {
                let next = path.pop_front().expect("stored paths are non-empty");
                if path.is_empty() {
                    self.best_path = None;
                }
                next
            }
        }
    }
}
