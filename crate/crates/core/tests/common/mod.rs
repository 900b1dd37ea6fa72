//! Oracles shared by the integration tests.
#![allow(dead_code)]

use jbw_core::perception::{scent_dense_reference, ScentEvent};
use jbw_core::procgen::{Item, Patch, PatchSampler, PatchStatus};
use jbw_core::testing::empty_world;
use jbw_core::{Action, Direction, PatchCoord, Pcg32, Position, Simulator, WorldConfig};

pub fn tiny_config(patch_size: u32, items: &str) -> WorldConfig {
    let text = format!(
        r#"{{"version": 1,
        "map": {{"scent_dims": 1, "color_dims": 1, "patch_size": {patch_size}, "mh_iterations": 1,
                "scent_decay": 0.0, "scent_diffusion": 0.0}},
        "agent": {{"color": [0], "scent": [0], "action_space": ["MoveForward"], "visual_range": 1, "field_of_view": 360}},
        "items": {items}}}"#
    );
    WorldConfig::from_json(&text).unwrap()
}

/// Squared-distance box: `near` below `inner`, `far` below `outer`.
pub fn piecewise_box(a: Position, b: Position, inner: f64, outer: f64, near: f64, far: f64) -> f64 {
    let d = ((a.x - b.x).pow(2) + (a.y - b.y).pow(2)) as f64;
    if d < inner {
        near
    } else if d < outer {
        far
    } else {
        0.0
    }
}

/// Exact distribution over all configurations of a `p x p` patch at the
/// origin, indexed like `PatchSampler::configuration_code`.
pub fn enumerate(p: u32, types: u32, energy: impl Fn(&[(Position, u32)]) -> f64) -> Vec<f64> {
    let cells = (p * p) as usize;
    let base = types as usize + 1;
    let total = base.pow(cells as u32);
    let mut weights = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let mut items = Vec::new();
        for cell in 0..cells {
            let digit = c % base;
            c /= base;
            if digit > 0 {
                items.push((Position::new((cell as u32 % p) as i64, (cell as u32 / p) as i64), digit as u32 - 1));
            }
        }
        weights.push(energy(&items).exp());
    }
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

pub fn sample_histogram(config: &WorldConfig, context: &[Item], samples: usize, burn: usize, thin: usize, seed: u64) -> Vec<f64> {
    let coord = PatchCoord::new(0, 0);
    let mut sampler = PatchSampler::new(config, coord, 1);
    for item in context {
        sampler.add_context_item(item);
    }
    let k = sampler.add_sampled_patch(&Patch::new(coord, config.patch_size, PatchStatus::Speculative));
    let mut rng = Pcg32::from_seed(seed);
    sampler.run(burn as u32, &mut rng);
    let size = (config.item_count() + 1).pow(config.patch_size * config.patch_size);
    let mut hist = vec![0.0; size];
    for _ in 0..samples {
        for _ in 0..thin {
            sampler.step(k, &mut rng);
        }
        hist[sampler.configuration_code(k) as usize] += 1.0;
    }
    hist.iter().map(|h| h / samples as f64).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub const SCENT_STEPS: u64 = 100;

/// Runs a random scripted schedule (item placements, moves, collections)
/// and checks the simulator's scent against literal grid iteration.
pub fn check_scent_schedule(seed: u64) {
    let mut config = empty_world(32, r#"["MoveForward","TurnLeft","TurnRight"]"#, 360.0);
    config.agent.scent = vec![0.3, 0.1, 0.9];
    let mut sim = Simulator::new(config.clone());
    let id = sim.spawn_agent_at(Position::new(0, 0), Direction::North).unwrap();
    sim.generate_around(Position::new(0, 0), 140);
    let mut rng = Pcg32::from_seed(seed);
    let mut events = vec![ScentEvent { position: Position::new(0, 0), scent: config.agent.scent.clone(), sign: 1, time: 0 }];
    let mut checks = Vec::new();

    for t in 0..SCENT_STEPS {
        let action = [Action::MoveForward, Action::MoveForward, Action::TurnLeft, Action::TurnRight][rng.below(4) as usize];
        let tr = sim.request_action(id, action).unwrap().unwrap().remove(0);
        if tr.moved {
            events.push(ScentEvent { position: tr.previous_position, scent: config.agent.scent.clone(), sign: -1, time: t + 1 });
            events.push(ScentEvent { position: tr.position, scent: config.agent.scent.clone(), sign: 1, time: t + 1 });
        }
        for (ty, &n) in tr.items_collected.iter().enumerate() {
            if n > 0 {
                events.push(ScentEvent { position: tr.position, scent: config.item_types[ty].scent.clone(), sign: -1, time: t + 1 });
            }
        }
        let here = sim.agent(id).unwrap().position;
        for _ in 0..rng.below(3) {
            let ahead = sim.agent(id).unwrap().direction.forward();
            let pos = if rng.below(3) == 0 {
                Position::new(here.x + ahead.x, here.y + ahead.y)
            } else {
                Position::new(here.x + rng.below(21) as i64 - 10, here.y + rng.below(21) as i64 - 10)
            };
            let ty = rng.below(2);
            if pos != here && sim.place_item(pos, ty) {
                events.push(ScentEvent { position: pos, scent: config.item_types[ty as usize].scent.clone(), sign: 1, time: t + 1 });
            }
        }
        let p = sim.agent(id).unwrap().position;
        for _ in 0..4 {
            let q = Position::new(p.x + rng.below(31) as i64 - 15, p.y + rng.below(31) as i64 - 15);
            checks.push((t + 1, q, sim.scent_at(q).unwrap()));
        }
    }

    let extent = SCENT_STEPS as i64 + 60;
    let dense = scent_dense_reference(extent, &events, SCENT_STEPS, config.scent_decay, config.scent_diffusion, config.scent_dims);
    for (t, q, got) in checks {
        let want = dense[t as usize].at(q);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "seed {seed} t {t} at {q}: {g} vs {w}");
        }
    }
}
